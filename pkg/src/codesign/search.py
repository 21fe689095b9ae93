"""The three co-design search strategies and their instrumented comparison.

* ``fully_coupled_exhaustive`` scans every (architecture, accelerator) pair
  and serves as the optimality oracle at O(M*N) evaluations.
* ``fully_decoupled`` picks one architecture on a proxy, then the best
  accelerator for it, at O(M+N).
* ``semi_decoupled`` builds the proxy's constraint-indexed optimal set once
  and reuses it across the hardware scan, at O(M + (N-1)*|set|).

All strategies share one tie-break (accuracy, then latency, then energy,
then canonical serialization; accelerator ties keep the earlier accelerator
in hardware-sample order) so exact-equality comparisons are meaningful, and
all charge evaluations through a counting cost model so the reported search
cost is exact.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

from .accel import Accelerator, HwSpaceSample, hardware_resource
from .archspace import ArchSpaceSample
from .costmodel import CostModel, CountingCostModel
from .errors import EmptyOptimalSetError
from .pareto import (
    OptimalSet,
    grid_from_costs,
    optimal_set_from_costs,
    select_from_set,
    selection_key,
    _accuracies,
    _argmax_from_costs,
)


@dataclass(frozen=True)
class DesignConstraints:
    """Latency, energy, and hardware-resource budgets."""

    latency_budget: float
    energy_budget: float
    resource_budget: float

    def __post_init__(self):
        for name in ("latency_budget", "energy_budget", "resource_budget"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite")


@dataclass(frozen=True)
class CoDesignOutcome:
    """Result of one strategy run; accuracy is NaN when infeasible."""

    best_arch: object | None
    best_accel: Accelerator | None
    accuracy: float
    evaluations: int
    strategy: str

    @property
    def feasible(self) -> bool:
        return self.best_arch is not None


def _infeasible(strategy: str, evaluations: int) -> CoDesignOutcome:
    return CoDesignOutcome(best_arch=None, best_accel=None, accuracy=float("nan"),
                           evaluations=evaluations, strategy=strategy)


def _resource_feasible(hw: HwSpaceSample, budget: float) -> list[Accelerator]:
    return [h for h in hw.accelerators if hardware_resource(h) <= budget]


def fully_coupled_exhaustive(space: ArchSpaceSample, hw: HwSpaceSample,
                             constraints: DesignConstraints,
                             cost_model: CostModel | None = None) -> CoDesignOutcome:
    """Ground-truth nested scan over all pairs passing the resource filter."""
    counter = CountingCostModel(cost_model)
    acc = _accuracies(space)
    best = None
    best_accel = None
    for h in _resource_feasible(hw, constraints.resource_budget):
        lat, en = counter.estimate_many(space.architectures, h)
        entry = _argmax_from_costs(space, acc, lat, en,
                                   constraints.latency_budget, constraints.energy_budget)
        if entry is None:
            continue
        if best is None or entry.accuracy > best.accuracy:
            best, best_accel = entry, h
    if best is None:
        return _infeasible("coupled", counter.evaluations)
    return CoDesignOutcome(best_arch=best.arch, best_accel=best_accel,
                           accuracy=best.accuracy, evaluations=counter.evaluations,
                           strategy="coupled")


def fully_decoupled(space: ArchSpaceSample, hw: HwSpaceSample,
                    constraints: DesignConstraints, proxy: Accelerator,
                    cost_model: CostModel | None = None,
                    accelerator_first: bool = False) -> CoDesignOutcome:
    """Siloed two-stage search: one architecture, then one accelerator.

    The default order is architecture-first on the proxy; with
    ``accelerator_first`` the hardware is fixed first (best accelerator for
    a probe architecture, the space's first element) and the architecture
    search runs on it.  Either order charges |space| + |hw| evaluations.
    """
    if proxy not in hw.accelerators:
        raise ValueError("proxy must be a member of the hardware sample")
    counter = CountingCostModel(cost_model)
    acc = _accuracies(space)
    feasible_hw = set(map(id, _resource_feasible(hw, constraints.resource_budget)))

    def best_accel_for(arch) -> tuple[Accelerator | None, object]:
        chosen = None
        chosen_key = None
        for h in hw.accelerators:
            est = counter.estimate(arch, h)
            if id(h) not in feasible_hw:
                continue
            if (est.latency_cycles > constraints.latency_budget
                    or est.energy_nj > constraints.energy_budget):
                continue
            key = (est.latency_cycles, est.energy_nj)
            if chosen_key is None or key < chosen_key:
                chosen, chosen_key = h, key
        return chosen, chosen_key

    if accelerator_first:
        probe = space.architectures[0]
        target, _ = best_accel_for(probe)
        if target is None:
            return _infeasible("decoupled", counter.evaluations)
        lat, en = counter.estimate_many(space.architectures, target)
        entry = _argmax_from_costs(space, acc, lat, en,
                                   constraints.latency_budget, constraints.energy_budget)
        if entry is None:
            return _infeasible("decoupled", counter.evaluations)
        return CoDesignOutcome(best_arch=entry.arch, best_accel=target,
                               accuracy=entry.accuracy, evaluations=counter.evaluations,
                               strategy="decoupled")

    lat, en = counter.estimate_many(space.architectures, proxy)
    entry = _argmax_from_costs(space, acc, lat, en,
                               constraints.latency_budget, constraints.energy_budget)
    if entry is None:
        return _infeasible("decoupled", counter.evaluations)
    target, _ = best_accel_for(entry.arch)
    if target is None:
        return _infeasible("decoupled", counter.evaluations)
    return CoDesignOutcome(best_arch=entry.arch, best_accel=target,
                           accuracy=entry.accuracy, evaluations=counter.evaluations,
                           strategy="decoupled")


def semi_decoupled(space: ArchSpaceSample, hw: HwSpaceSample,
                   constraints: DesignConstraints, proxy: Accelerator, k: int,
                   cost_model: CostModel | None = None,
                   slack: float = 0.0) -> CoDesignOutcome:
    """Two-stage search over the proxy's optimal set.

    Stage 1 scans the space once on the proxy (|space| evaluations) and
    collects the argmax at ``k`` budget points.  Stage 2 walks the
    resource-feasible hardware; every non-proxy accelerator re-costs just
    the set (|set| evaluations each), the proxy reuses its stored costs.
    """
    if proxy not in hw.accelerators:
        raise ValueError("proxy must be a member of the hardware sample")
    if k < 1:
        raise ValueError("K must be >= 1")
    counter = CountingCostModel(cost_model)
    lat, en = counter.estimate_many(space.architectures, proxy)
    grid = grid_from_costs(lat, en, k)
    try:
        optimal_set = optimal_set_from_costs(space, proxy, grid, lat, en, slack=slack)
    except EmptyOptimalSetError:
        return _infeasible("semi-decoupled", counter.evaluations)

    best = None
    best_accel = None
    for h in _resource_feasible(hw, constraints.resource_budget):
        if h == proxy:
            candidate = _select_stored(optimal_set, constraints)
        else:
            candidate = select_from_set(optimal_set, h, constraints.latency_budget,
                                        constraints.energy_budget, cost_model=counter)
        if candidate is None:
            continue
        if best is None or candidate.accuracy > best.accuracy:
            best, best_accel = candidate, h
    if best is None:
        return _infeasible("semi-decoupled", counter.evaluations)
    return CoDesignOutcome(best_arch=best.arch, best_accel=best_accel,
                           accuracy=best.accuracy, evaluations=counter.evaluations,
                           strategy="semi-decoupled")


def _select_stored(optimal_set: OptimalSet, constraints: DesignConstraints):
    """Proxy-side selection from stored stage-1 costs; charges nothing."""
    best_key = None
    best = None
    for entry in optimal_set.entries:
        if (entry.latency_cycles > constraints.latency_budget
                or entry.energy_nj > constraints.energy_budget):
            continue
        key = selection_key(entry.accuracy, entry.latency_cycles, entry.energy_nj,
                            entry.arch.canonical_json())
        if best_key is None or key < best_key:
            best_key, best = key, entry
    return best


@dataclass(frozen=True)
class StrategyRow:
    """One strategy's result inside a comparison report."""

    strategy: str
    accuracy: float
    evaluations: int
    gap_vs_oracle: float
    wall_time_s: float
    best_arch_id: str | None
    best_accel_id: str | None
    error: str | None = None


@dataclass(frozen=True)
class ComparisonReport:
    """All three strategies on identical inputs, gaps taken vs the oracle."""

    rows: tuple[StrategyRow, ...]

    def row(self, strategy: str) -> StrategyRow:
        for r in self.rows:
            if r.strategy == strategy:
                return r
        raise KeyError(strategy)


def _arch_id(arch) -> str:
    from .archspace import stable_hash64

    return f"{stable_hash64(arch.canonical_json()):016x}"


def run_comparison(space: ArchSpaceSample, hw: HwSpaceSample,
                   constraints: DesignConstraints, proxy: Accelerator, k: int,
                   cost_model: CostModel | None = None) -> ComparisonReport:
    """Run decoupled, coupled, and semi-decoupled on identical inputs.

    A strategy failure is captured in its row; the other rows still run.
    """
    runs = (
        ("coupled", lambda: fully_coupled_exhaustive(space, hw, constraints,
                                                     cost_model=cost_model)),
        ("decoupled", lambda: fully_decoupled(space, hw, constraints, proxy,
                                              cost_model=cost_model)),
        ("semi-decoupled", lambda: semi_decoupled(space, hw, constraints, proxy, k,
                                                  cost_model=cost_model)),
    )
    outcomes: dict[str, CoDesignOutcome | None] = {}
    errors: dict[str, str | None] = {}
    timings: dict[str, float] = {}
    for name, fn in runs:
        start = time.perf_counter()
        try:
            outcomes[name] = fn()
            errors[name] = None
        except Exception as exc:  # propagate per-row, keep other rows alive
            outcomes[name] = None
            errors[name] = f"{type(exc).__name__}: {exc}"
        timings[name] = time.perf_counter() - start

    oracle = outcomes.get("coupled")
    oracle_acc = oracle.accuracy if oracle is not None else float("nan")
    rows = []
    for name, _ in runs:
        out = outcomes[name]
        if out is None:
            rows.append(StrategyRow(strategy=name, accuracy=float("nan"), evaluations=0,
                                    gap_vs_oracle=float("nan"), wall_time_s=timings[name],
                                    best_arch_id=None, best_accel_id=None,
                                    error=errors[name]))
            continue
        gap = oracle_acc - out.accuracy
        rows.append(StrategyRow(
            strategy=name,
            accuracy=out.accuracy,
            evaluations=out.evaluations,
            gap_vs_oracle=gap,
            wall_time_s=timings[name],
            best_arch_id=_arch_id(out.best_arch) if out.feasible else None,
            best_accel_id=out.best_accel.accel_id if out.feasible else None,
            error=None,
        ))
    return ComparisonReport(rows=tuple(rows))
