"""Cost-model interface, the evaluation counter, and table-backed models.

An *evaluation* is one cost-model invocation on an (architecture,
accelerator) pair; it is the unit of search cost.  Search strategies charge
evaluations through ``CountingCostModel`` so their accounting is exact
regardless of how estimates are produced underneath.
"""

from __future__ import annotations

import numpy as np

from . import accel as accel_mod
from .accel import Accelerator, PerfEstimate


class CostModel:
    """Interface: estimate one pair, or one accelerator against many archs."""

    def estimate(self, arch, accelerator: Accelerator) -> PerfEstimate:
        raise NotImplementedError

    def estimate_many(self, archs, accelerator: Accelerator) -> tuple[np.ndarray, np.ndarray]:
        """Default: loop ``estimate``; returns (latency int64, energy float64)."""
        lat = np.empty(len(archs), dtype=np.int64)
        en = np.empty(len(archs), dtype=np.float64)
        for i, arch in enumerate(archs):
            est = self.estimate(arch, accelerator)
            lat[i] = est.latency_cycles
            en[i] = est.energy_nj
        return lat, en


class AnalyticalCostModel(CostModel):
    """The roofline model over real architectures."""

    def estimate(self, arch, accelerator: Accelerator) -> PerfEstimate:
        return accel_mod.estimate_model(arch, accelerator)

    def estimate_many(self, archs, accelerator: Accelerator) -> tuple[np.ndarray, np.ndarray]:
        return accel_mod.estimate_archs(tuple(archs), accelerator)


class TableCostModel(CostModel):
    """Estimates served from a precomputed arch-by-accel table.

    Useful both for replaying a persisted performance table and for
    constructing synthetic cost structures in tests.
    """

    def __init__(self, archs, accelerators, latency, energy):
        self._arch_index = {a.canonical_json(): i for i, a in enumerate(archs)}
        self._accel_index = {a.canonical_json(): j for j, a in enumerate(accelerators)}
        self._latency = np.asarray(latency, dtype=np.int64)
        self._energy = np.asarray(energy, dtype=np.float64)
        expected = (len(self._arch_index), len(self._accel_index))
        if self._latency.shape != expected or self._energy.shape != expected:
            raise ValueError(f"table shape mismatch: want {expected}")

    def _lookup(self, arch, accelerator) -> tuple[int, int]:
        try:
            i = self._arch_index[arch.canonical_json()]
            j = self._accel_index[accelerator.canonical_json()]
        except KeyError as exc:
            raise KeyError(f"pair not present in table: {exc}") from exc
        return i, j

    def estimate(self, arch, accelerator: Accelerator) -> PerfEstimate:
        i, j = self._lookup(arch, accelerator)
        return PerfEstimate(latency_cycles=int(self._latency[i, j]),
                            energy_nj=float(self._energy[i, j]))

    def estimate_many(self, archs, accelerator: Accelerator) -> tuple[np.ndarray, np.ndarray]:
        j = self._accel_index[accelerator.canonical_json()]
        rows = np.asarray([self._arch_index[a.canonical_json()] for a in archs], dtype=np.intp)
        return self._latency[rows, j].copy(), self._energy[rows, j].copy()


class CountingCostModel(CostModel):
    """Wrapper charging one evaluation per (arch, accel) estimate."""

    def __init__(self, inner: CostModel | None = None):
        self.inner = inner if inner is not None else AnalyticalCostModel()
        self.evaluations = 0

    def reset(self) -> None:
        self.evaluations = 0

    def estimate(self, arch, accelerator: Accelerator) -> PerfEstimate:
        self.evaluations += 1
        return self.inner.estimate(arch, accelerator)

    def estimate_many(self, archs, accelerator: Accelerator) -> tuple[np.ndarray, np.ndarray]:
        self.evaluations += len(archs)
        return self.inner.estimate_many(archs, accelerator)
