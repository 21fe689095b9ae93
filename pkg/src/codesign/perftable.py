"""Complete arch-by-accel performance tables with CSV persistence.

The table is the dominant cost of a full-scale experiment, so it is
computed once, written as a long-format CSV (arch_id, accel_id,
latency_cycles, energy_nj), and reloaded by downstream commands.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .accel import HwSpaceSample
from .archspace import ArchSpaceSample, stable_hash64
from .costmodel import AnalyticalCostModel, CostModel, TableCostModel
from .errors import MissingCellsError
from .fileio import atomic_write_csv

log = logging.getLogger(__name__)


def arch_id(arch) -> str:
    return f"{stable_hash64(arch.canonical_json()):016x}"


@dataclass(frozen=True)
class PerfTable:
    """Latency (int64) and energy (float64) arrays, arch-major."""

    arch_ids: tuple[str, ...]
    accel_ids: tuple[str, ...]
    latency: np.ndarray
    energy: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.arch_ids), len(self.accel_ids))


def build_perf_table(space: ArchSpaceSample, hw: HwSpaceSample,
                     cost_model: CostModel | None = None,
                     workers: int = 1) -> PerfTable:
    """Evaluate every (architecture, accelerator) pair."""
    model = cost_model if cost_model is not None else AnalyticalCostModel()
    m, n = space.size, hw.size
    latency = np.empty((m, n), dtype=np.int64)
    energy = np.empty((m, n), dtype=np.float64)

    def fill(j: int) -> None:
        lat, en = model.estimate_many(space.architectures, hw.accelerators[j])
        latency[:, j] = lat
        energy[:, j] = en
        if (j + 1) % 25 == 0 or j + 1 == n:
            log.info("performance table: %d/%d accelerators done", j + 1, n)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, range(n)))
    else:
        for j in range(n):
            fill(j)
    return PerfTable(
        arch_ids=tuple(arch_id(a) for a in space.architectures),
        accel_ids=tuple(a.accel_id for a in hw.accelerators),
        latency=latency,
        energy=energy,
    )


def write_table_csv(table: PerfTable, path: Path) -> None:
    rows = (
        (table.arch_ids[i], table.accel_ids[j],
         int(table.latency[i, j]), repr(float(table.energy[i, j])))
        for i in range(len(table.arch_ids))
        for j in range(len(table.accel_ids))
    )
    atomic_write_csv(path, ("arch_id", "accel_id", "latency_cycles", "energy_nj"), rows)


def read_table_csv(path: Path) -> PerfTable:
    """Load a long-format table; incomplete coverage raises MissingCellsError."""
    arch_order: dict[str, int] = {}
    accel_order: dict[str, int] = {}
    cells: dict[tuple[int, int], tuple[int, float]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            i = arch_order.setdefault(row["arch_id"], len(arch_order))
            j = accel_order.setdefault(row["accel_id"], len(accel_order))
            cells[(i, j)] = (int(row["latency_cycles"]), float(row["energy_nj"]))
    m, n = len(arch_order), len(accel_order)
    if not cells:
        raise MissingCellsError(f"{path} holds no table rows")
    arch_ids = tuple(arch_order)
    accel_ids = tuple(accel_order)
    missing = [
        (arch_ids[i], accel_ids[j])
        for i in range(m) for j in range(n) if (i, j) not in cells
    ]
    if missing:
        shown = ", ".join(f"{a}/{b}" for a, b in missing[:20])
        more = f" (+{len(missing) - 20} more)" if len(missing) > 20 else ""
        raise MissingCellsError(f"table {path} is missing {len(missing)} cells: {shown}{more}")
    latency = np.empty((m, n), dtype=np.int64)
    energy = np.empty((m, n), dtype=np.float64)
    for (i, j), (lat, en) in cells.items():
        latency[i, j] = lat
        energy[i, j] = en
    return PerfTable(arch_ids=arch_ids, accel_ids=accel_ids, latency=latency, energy=energy)


def table_cost_model(table: PerfTable, space: ArchSpaceSample,
                     hw: HwSpaceSample) -> TableCostModel:
    """Replay a persisted table as a cost model for the given spaces.

    Verifies the table's identifiers match the regenerated spaces.
    """
    want_archs = tuple(arch_id(a) for a in space.architectures)
    want_accels = tuple(a.accel_id for a in hw.accelerators)
    if want_archs != table.arch_ids or want_accels != table.accel_ids:
        raise MissingCellsError("table identifiers do not match the configured spaces")
    return TableCostModel(space.architectures, hw.accelerators, table.latency, table.energy)
