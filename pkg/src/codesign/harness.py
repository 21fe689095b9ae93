"""Configuration-driven experiment harness producing reproducible bundles.

A single declarative JSON config describes the whole experiment (spaces,
hardware sample, proxy, budget grid size, constraint triples, mixed-dataflow
settings).  Every seed is explicit, so any bundle can be regenerated from
its manifest alone; output files are written atomically and the expensive
performance table is reused across commands when its manifest hash matches.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .accel import (
    Accelerator,
    DATAFLOWS,
    HwSpaceSample,
    MIXED_PLAN_SEGMENTS,
    _layer_table,
    filter_supported,
    sample_hardware,
    sample_mixed_plans,
    segment_costs,
    support_rule_for_space,
)
from .archspace import (
    ArchSpaceSample,
    canonical_json,
    generate_cell_space,
    generate_mobile_space,
    stable_hash64,
)
from .costmodel import CostModel
from .errors import ConfigValidationError
from .fileio import atomic_write_csv, atomic_write_json
from .pareto import build_constraint_grid, build_optimal_set
from .perftable import (
    PerfTable,
    arch_id,
    build_perf_table,
    read_table_csv,
    table_cost_model,
    write_table_csv,
)
from .rankcorr import SrccMatrix, avg_srcc_cdf, srcc_matrix
from .search import DesignConstraints, run_comparison, semi_decoupled

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    space_kind: str
    space_seed: int
    space_count: int
    hw_seed: int
    hw_counts: tuple[tuple[str, int], ...]
    support_ratio: int
    apply_support_filter: bool
    proxy_index: int | None
    proxy_random_seed: int | None
    k: int
    constraints: tuple[DesignConstraints, ...]
    mixed_enabled: bool
    mixed_plan_count: int
    mixed_plan_seed: int
    output_dir: str

    def to_dict(self) -> dict:
        return {
            "space": {"kind": self.space_kind, "seed": self.space_seed,
                      "count": self.space_count},
            "hardware": {"seed": self.hw_seed,
                         "counts": dict(self.hw_counts),
                         "support_ratio": self.support_ratio,
                         "apply_support_filter": self.apply_support_filter},
            "proxy": ({"index": self.proxy_index} if self.proxy_index is not None
                      else {"random_seed": self.proxy_random_seed}),
            "k": self.k,
            "constraints": [asdict(c) for c in self.constraints],
            "mixed": {"enabled": self.mixed_enabled,
                      "plan_count": self.mixed_plan_count,
                      "plan_seed": self.mixed_plan_seed},
            "output_dir": self.output_dir,
        }

    @property
    def config_hash(self) -> str:
        return f"{stable_hash64(canonical_json(self.to_dict())):016x}"


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Validate a raw config mapping, reporting every violation at once."""
    problems: list[str] = []

    def need(section: dict, key: str, kind, where: str, default=None, required=True):
        if key not in section:
            if required:
                problems.append(f"{where}.{key} is required")
            return default
        value = section[key]
        if kind is int and isinstance(value, bool):
            problems.append(f"{where}.{key} must be {kind.__name__}")
            return default
        if not isinstance(value, kind):
            problems.append(f"{where}.{key} must be {kind.__name__}")
            return default
        return value

    space = raw.get("space", {})
    kind = need(space, "kind", str, "space", default="cell")
    if kind not in ("cell", "mobile"):
        problems.append(f"space.kind must be cell or mobile, got {kind!r}")
    space_seed = need(space, "seed", int, "space", default=0)
    space_count = need(space, "count", int, "space", default=1)
    if isinstance(space_count, int) and space_count < 1:
        problems.append("space.count must be >= 1")

    hardware = raw.get("hardware", {})
    hw_seed = need(hardware, "seed", int, "hardware", default=0)
    counts_raw = need(hardware, "counts", dict, "hardware", default={})
    counts: list[tuple[str, int]] = []
    for df, cnt in (counts_raw or {}).items():
        if df not in DATAFLOWS:
            problems.append(f"hardware.counts has unknown dataflow {df!r}")
        elif not isinstance(cnt, int) or cnt < 1:
            problems.append(f"hardware.counts[{df!r}] must be a positive integer")
        else:
            counts.append((df, cnt))
    if not counts and "counts" in hardware:
        problems.append("hardware.counts must name at least one dataflow")
    support_ratio = need(hardware, "support_ratio", int, "hardware", default=8,
                         required=False)
    if isinstance(support_ratio, int) and support_ratio < 1:
        problems.append("hardware.support_ratio must be >= 1")
    apply_filter = need(hardware, "apply_support_filter", bool, "hardware",
                        default=True, required=False)

    proxy = raw.get("proxy", {})
    proxy_index = need(proxy, "index", int, "proxy", required=False)
    proxy_seed = need(proxy, "random_seed", int, "proxy", required=False)
    if proxy_index is None and proxy_seed is None:
        problems.append("proxy needs either index or random_seed")
    if proxy_index is not None and proxy_seed is not None:
        problems.append("proxy.index and proxy.random_seed are mutually exclusive")

    k = raw.get("k")
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        problems.append("k must be a positive integer")
        k = 1

    constraints: list[DesignConstraints] = []
    raw_constraints = raw.get("constraints", [])
    if not isinstance(raw_constraints, list) or not raw_constraints:
        problems.append("constraints must be a nonempty list of budget triples")
    else:
        for i, c in enumerate(raw_constraints):
            try:
                constraints.append(DesignConstraints(
                    latency_budget=float(c["latency_budget"]),
                    energy_budget=float(c["energy_budget"]),
                    resource_budget=float(c["resource_budget"]),
                ))
            except (KeyError, TypeError, ValueError) as exc:
                problems.append(f"constraints[{i}] invalid: {exc}")

    mixed = raw.get("mixed", {"enabled": False, "plan_count": 0, "plan_seed": 0})
    mixed_enabled = need(mixed, "enabled", bool, "mixed", default=False, required=False)
    mixed_count = need(mixed, "plan_count", int, "mixed", default=0,
                       required=bool(mixed_enabled))
    mixed_seed = need(mixed, "plan_seed", int, "mixed", default=0,
                      required=bool(mixed_enabled))
    if mixed_enabled and isinstance(mixed_count, int) and mixed_count < 1:
        problems.append("mixed.plan_count must be >= 1 when mixed is enabled")

    output_dir = raw.get("output_dir")
    if not isinstance(output_dir, str) or not output_dir:
        problems.append("output_dir must be a nonempty string")
        output_dir = "."

    if problems:
        raise ConfigValidationError(problems)
    return ExperimentConfig(
        space_kind=kind, space_seed=space_seed, space_count=space_count,
        hw_seed=hw_seed, hw_counts=tuple(counts), support_ratio=support_ratio,
        apply_support_filter=bool(apply_filter), proxy_index=proxy_index,
        proxy_random_seed=proxy_seed, k=k, constraints=tuple(constraints),
        mixed_enabled=bool(mixed_enabled), mixed_plan_count=mixed_count or 0,
        mixed_plan_seed=mixed_seed or 0, output_dir=output_dir,
    )


def load_config(path: Path) -> ExperimentConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Space / hardware resolution
# ---------------------------------------------------------------------------


def resolve_space(config: ExperimentConfig) -> ArchSpaceSample:
    gen = generate_cell_space if config.space_kind == "cell" else generate_mobile_space
    return gen(config.space_seed, config.space_count)


def resolve_hardware(config: ExperimentConfig, space: ArchSpaceSample) -> HwSpaceSample:
    merged: list[Accelerator] = []
    for df, count in config.hw_counts:
        merged.extend(sample_hardware(config.hw_seed, count, (df,)).accelerators)
    if config.apply_support_filter:
        rule = support_rule_for_space(space, ratio=config.support_ratio)
        merged = list(filter_supported(merged, rule))
    return HwSpaceSample(accelerators=tuple(merged), seed=config.hw_seed)


def resolve_proxy(config: ExperimentConfig, hw: HwSpaceSample) -> Accelerator:
    if config.proxy_index is not None:
        if not 0 <= config.proxy_index < hw.size:
            raise ConfigValidationError(
                [f"proxy.index {config.proxy_index} out of range for {hw.size} accelerators"]
            )
        return hw.accelerators[config.proxy_index]
    rng = random.Random(stable_hash64(f"proxy|{config.proxy_random_seed}"))
    return hw.accelerators[rng.randrange(hw.size)]


def resolve_all(config: ExperimentConfig) -> tuple[ArchSpaceSample, HwSpaceSample, Accelerator]:
    space = resolve_space(config)
    hw = resolve_hardware(config, space)
    proxy = resolve_proxy(config, hw)
    return space, hw, proxy


# ---------------------------------------------------------------------------
# Bundle plumbing
# ---------------------------------------------------------------------------


def _manifest_path(out: Path) -> Path:
    return out / "manifest.json"


def _write_manifest(config: ExperimentConfig, out: Path, new_artifacts) -> None:
    manifest = {"engine_version": __version__, "config": config.to_dict(),
                "config_hash": config.config_hash, "artifacts": []}
    path = _manifest_path(out)
    if path.exists():
        try:
            existing = json.loads(path.read_text())
            if existing.get("config_hash") == config.config_hash:
                manifest["artifacts"] = existing.get("artifacts", [])
        except json.JSONDecodeError:
            pass
    manifest["artifacts"] = sorted(set(manifest["artifacts"]) | set(new_artifacts))
    atomic_write_json(path, manifest)


def _manifest_matches(config: ExperimentConfig, out: Path) -> bool:
    path = _manifest_path(out)
    if not path.exists():
        return False
    try:
        return json.loads(path.read_text()).get("config_hash") == config.config_hash
    except json.JSONDecodeError:
        return False


def ensure_table(config: ExperimentConfig, space: ArchSpaceSample, hw: HwSpaceSample,
                 out: Path, workers: int = 1) -> PerfTable:
    """Load the bundle's persisted table when valid, else compute and persist."""
    table_path = out / "perf_table.csv"
    if table_path.exists() and _manifest_matches(config, out):
        log.info("reusing persisted performance table %s", table_path)
        table = read_table_csv(table_path)
        if (table.arch_ids == tuple(arch_id(a) for a in space.architectures)
                and table.accel_ids == tuple(a.accel_id for a in hw.accelerators)):
            return table
        log.warning("persisted table does not match config; recomputing")
    table = build_perf_table(space, hw, workers=workers)
    write_table_csv(table, table_path)
    return table


def _dump_spaces(space: ArchSpaceSample, hw: HwSpaceSample, out: Path) -> list[str]:
    archs = [{"arch_id": arch_id(a), "architecture": json.loads(a.canonical_json())}
             for a in space.architectures]
    accels = [{"accel_id": a.accel_id, "accelerator": json.loads(a.canonical_json())}
              for a in hw.accelerators]
    atomic_write_json(out / "architectures.json", archs)
    atomic_write_json(out / "accelerators.json", accels)
    return ["architectures.json", "accelerators.json"]


def _write_matrix_csv(matrix: SrccMatrix, path: Path) -> None:
    header = ("accel_id", *matrix.accel_ids)
    rows = []
    for i, row_id in enumerate(matrix.accel_ids):
        vals = ["NaN" if not np.isfinite(v) else repr(float(v)) for v in matrix.values[i]]
        rows.append((row_id, *vals))
    atomic_write_csv(path, header, rows)


def _write_cdf_csv(points, path: Path) -> None:
    atomic_write_csv(path, ("avg_srcc", "cumulative_fraction"),
                     ((repr(v), repr(f)) for v, f in points))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_table(config: ExperimentConfig, workers: int = 1) -> Path:
    """Build the full performance table and dump the sampled spaces."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    space, hw, _ = resolve_all(config)
    ensure_table(config, space, hw, out, workers=workers)
    artifacts = _dump_spaces(space, hw, out) + ["perf_table.csv"]
    _write_manifest(config, out, artifacts)
    return out / "perf_table.csv"


def _srcc_outputs(table: PerfTable, out: Path, prefix: str = "") -> list[str]:
    names = []
    for metric in ("latency", "energy"):
        matrix = srcc_matrix(table, metric)
        if matrix.hole_columns:
            log.warning("%s SRCC matrix has %d degenerate columns: %s",
                        metric, len(matrix.hole_columns), list(matrix.hole_columns))
        _write_matrix_csv(matrix, out / f"{prefix}srcc_{metric}.csv")
        _write_cdf_csv(avg_srcc_cdf(matrix), out / f"{prefix}cdf_{metric}.csv")
        names += [f"{prefix}srcc_{metric}.csv", f"{prefix}cdf_{metric}.csv"]
    return names


def cmd_srcc(config: ExperimentConfig, table_path: Path | None = None,
             workers: int = 1) -> Path:
    """Pairwise SRCC matrices and average-SRCC CDFs for both metrics."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if table_path is not None:
        table = read_table_csv(table_path)
    else:
        space, hw, _ = resolve_all(config)
        table = ensure_table(config, space, hw, out, workers=workers)
    artifacts = _srcc_outputs(table, out)
    _write_manifest(config, out, artifacts + ["perf_table.csv"])
    return out / "srcc_latency.csv"


def cmd_stage1(config: ExperimentConfig) -> Path:
    """Build and persist the configured proxy's optimal-architecture set."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    space, hw, proxy = resolve_all(config)
    grid = build_constraint_grid(space, proxy, config.k)
    optimal = build_optimal_set(space, proxy, grid)
    payload = {
        "proxy": {"accel_id": proxy.accel_id,
                  "accelerator": json.loads(proxy.canonical_json())},
        "constraint_grid": [asdict(p) for p in optimal.constraint_grid],
        "entries": [
            {
                "arch_id": arch_id(e.arch),
                "architecture": json.loads(e.arch.canonical_json()),
                "latency_cycles": e.latency_cycles,
                "energy_nj": e.energy_nj,
                "accuracy": e.accuracy,
            }
            for e in optimal.entries
        ],
    }
    name = f"optimal_set_{proxy.accel_id}.json"
    atomic_write_json(out / name, payload)
    _write_manifest(config, out, [name])
    return out / name


def _comparison_rows(report, constraint_index: int):
    for row in report.rows:
        yield (
            constraint_index, row.strategy,
            "" if row.error else repr(row.accuracy),
            row.evaluations,
            "" if row.error else repr(row.gap_vs_oracle),
            repr(row.wall_time_s),
            row.best_arch_id or "", row.best_accel_id or "", row.error or "",
        )


def cmd_codesign(config: ExperimentConfig, workers: int = 1,
                 sweep_all_proxies: bool = True) -> Path:
    """Strategy comparison per constraint triple plus the all-proxies sweep."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    space, hw, proxy = resolve_all(config)
    table = ensure_table(config, space, hw, out, workers=workers)
    model: CostModel = table_cost_model(table, space, hw)
    lat_matrix = srcc_matrix(table, "latency")
    en_matrix = srcc_matrix(table, "energy")

    comparison_rows = []
    sweep_rows = []
    artifacts = ["perf_table.csv"]
    for ci, constraints in enumerate(config.constraints):
        report = run_comparison(space, hw, constraints, proxy, config.k, cost_model=model)
        atomic_write_json(
            out / f"comparison_{ci}.json",
            {
                "constraint_index": ci,
                "constraints": asdict(constraints),
                "proxy": proxy.accel_id,
                "rows": [asdict(r) for r in report.rows],
            },
        )
        artifacts.append(f"comparison_{ci}.json")
        comparison_rows.extend(_comparison_rows(report, ci))

        if not sweep_all_proxies:
            continue
        oracle_row = report.row("coupled")
        target_idx = (table.accel_ids.index(oracle_row.best_accel_id)
                      if oracle_row.best_accel_id else None)
        for p_idx, p in enumerate(hw.accelerators):
            outcome = semi_decoupled(space, hw, constraints, p, config.k, cost_model=model)
            gap = oracle_row.accuracy - outcome.accuracy
            if target_idx is None:
                srcc_lat = srcc_en = float("nan")
            else:
                srcc_lat = float(lat_matrix.values[p_idx, target_idx])
                srcc_en = float(en_matrix.values[p_idx, target_idx])
            sweep_rows.append((
                ci, p.accel_id, repr(srcc_lat), repr(srcc_en),
                repr(outcome.accuracy), repr(gap), outcome.evaluations,
            ))
        log.info("constraint %d: comparison and %d-proxy sweep done", ci, hw.size)

    atomic_write_csv(
        out / "comparison.csv",
        ("constraint_index", "strategy", "accuracy", "evaluations",
         "gap_vs_oracle", "wall_time_s", "best_arch_id", "best_accel_id", "error"),
        comparison_rows,
    )
    artifacts.append("comparison.csv")
    if sweep_all_proxies:
        atomic_write_csv(
            out / "proxy_sweep.csv",
            ("constraint_index", "proxy_id", "srcc_latency_vs_target",
             "srcc_energy_vs_target", "accuracy", "gap_vs_oracle", "evaluations"),
            sweep_rows,
        )
        artifacts.append("proxy_sweep.csv")
    _write_manifest(config, out, artifacts)
    return out / "comparison.csv"


def cmd_mixed(config: ExperimentConfig, workers: int = 1) -> Path:
    """Layer-wise mixed-dataflow tables and SRCC outputs over the plan axis."""
    if not config.mixed_enabled:
        raise ConfigValidationError(["mixed.enabled must be true for the mixed command"])
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    space, hw, _ = resolve_all(config)
    plans = sample_mixed_plans(config.mixed_plan_seed, config.mixed_plan_count,
                               hw.accelerators)

    feasible = [a for a in space.architectures
                if _layer_table(a).shape[0] >= MIXED_PLAN_SEGMENTS]
    skipped = space.size - len(feasible)
    if skipped:
        log.warning("skipping %d architectures with fewer than %d layers",
                    skipped, MIXED_PLAN_SEGMENTS)
    archs = tuple(feasible)

    accel_index = {a.accel_id: j for j, a in enumerate(hw.accelerators)}
    seg_lat = []
    seg_en = []
    for accel in hw.accelerators:
        lat, en = segment_costs(archs, accel)
        seg_lat.append(lat)
        seg_en.append(en)
    seg_lat = np.stack(seg_lat)  # (n_accel, n_arch, 22)
    seg_en = np.stack(seg_en)

    n_plans = len(plans)
    lat_table = np.empty((len(archs), n_plans), dtype=np.int64)
    en_table = np.empty((len(archs), n_plans), dtype=np.float64)
    seg_range = np.arange(MIXED_PLAN_SEGMENTS)
    for p, plan in enumerate(plans):
        idx = np.asarray([accel_index[a.accel_id] for a in plan.segments], dtype=np.intp)
        lat_table[:, p] = seg_lat[idx, :, seg_range].sum(axis=0)
        en_table[:, p] = seg_en[idx, :, seg_range].sum(axis=0)

    plan_ids = tuple(f"plan{p:05d}" for p in range(n_plans))
    table = PerfTable(
        arch_ids=tuple(arch_id(a) for a in archs),
        accel_ids=plan_ids,
        latency=lat_table,
        energy=en_table,
    )
    write_table_csv(table, out / "mixed_table.csv")
    atomic_write_json(
        out / "mixed_plans.json",
        [{"plan_id": plan_ids[p], "segments": [a.accel_id for a in plan.segments]}
         for p, plan in enumerate(plans)],
    )
    artifacts = ["mixed_table.csv", "mixed_plans.json"]
    artifacts += _srcc_outputs(table, out, prefix="mixed_")
    _write_manifest(config, out, artifacts)
    return out / "mixed_table.csv"


def cmd_report(config: ExperimentConfig) -> str:
    """Summarize an existing bundle as human-readable text."""
    out = Path(config.output_dir)
    manifest = _manifest_path(out)
    lines = [f"bundle: {out}"]
    if not manifest.exists():
        lines.append("no manifest found; run a command first")
        return "\n".join(lines)
    data = json.loads(manifest.read_text())
    lines.append(f"engine version: {data.get('engine_version')}")
    lines.append(f"config hash: {data.get('config_hash')}")
    match = "matches" if data.get("config_hash") == config.config_hash else "DOES NOT match"
    lines.append(f"manifest {match} the supplied config")
    lines.append("artifacts:")
    for name in data.get("artifacts", []):
        path = out / name
        size = path.stat().st_size if path.exists() else None
        lines.append(f"  {name}: {'missing' if size is None else f'{size} bytes'}")
    comparison = out / "comparison.csv"
    if comparison.exists():
        lines.append("strategy comparison:")
        for row in comparison.read_text().strip().splitlines()[1:]:
            lines.append(f"  {row}")
    report_text = "\n".join(lines) + "\n"
    from .fileio import atomic_write_text

    atomic_write_text(out / "report.txt", report_text)
    return report_text
