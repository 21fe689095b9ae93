"""Constraint-indexed optimal-architecture sets on a proxy accelerator.

Stage 1 of the semi-decoupled search: scan the architecture space once on
one proxy accelerator, build a grid of latency/energy budget points spanning
the observed cost range, and collect the accuracy-argmax at every point.
Stage 2 then retrieves designs from this small set instead of re-searching
the whole space per accelerator.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .accel import Accelerator
from .archspace import ArchSpaceSample, Architecture, accuracy_oracle
from .costmodel import AnalyticalCostModel, CostModel
from .errors import EmptyOptimalSetError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConstraintPoint:
    """One latency/energy budget pair of the stage-1 grid."""

    latency_budget: float
    energy_budget: float

    def __post_init__(self):
        for v in (self.latency_budget, self.energy_budget):
            if not (math.isfinite(v) and v > 0):
                raise ValueError("budgets must be positive and finite")


@dataclass(frozen=True)
class OptimalSetEntry:
    """An architecture with its measured cost and oracle accuracy."""

    arch: Architecture
    latency_cycles: int
    energy_nj: float
    accuracy: float


@dataclass(frozen=True)
class OptimalSet:
    """Deduplicated union of per-constraint-point argmax architectures."""

    entries: tuple[OptimalSetEntry, ...]
    proxy: Accelerator
    constraint_grid: tuple[ConstraintPoint, ...]

    @property
    def size(self) -> int:
        return len(self.entries)


def selection_key(accuracy: float, latency: int | float, energy: float, canonical: str):
    """Shared tie-break: max accuracy, then min latency, energy, canonical order.

    Produces a sort key; the best design is the minimum.
    """
    return (-accuracy, latency, energy, canonical)


def _accuracies(space: ArchSpaceSample) -> np.ndarray:
    return np.asarray([accuracy_oracle(a) for a in space.architectures], dtype=np.float64)


def _argmax_from_costs(space: ArchSpaceSample, acc: np.ndarray,
                       lat: np.ndarray, en: np.ndarray,
                       latency_budget: float, energy_budget: float) -> OptimalSetEntry | None:
    feasible = np.flatnonzero((lat <= latency_budget) & (en <= energy_budget))
    if feasible.size == 0:
        return None
    best_acc = acc[feasible].max()
    tied = feasible[acc[feasible] == best_acc]
    best_i = min(
        (int(i) for i in tied),
        key=lambda i: (lat[i], en[i], space.architectures[i].canonical_json()),
    )
    return OptimalSetEntry(arch=space.architectures[best_i],
                           latency_cycles=int(lat[best_i]),
                           energy_nj=float(en[best_i]),
                           accuracy=float(best_acc))


def constrained_argmax(space: ArchSpaceSample, accelerator: Accelerator,
                       latency_budget: float, energy_budget: float,
                       cost_model: CostModel | None = None) -> OptimalSetEntry | None:
    """Most accurate architecture meeting both budgets on ``accelerator``.

    Returns ``None`` when nothing is feasible; infeasibility is a value,
    not an error.
    """
    model = cost_model if cost_model is not None else AnalyticalCostModel()
    lat, en = model.estimate_many(space.architectures, accelerator)
    return _argmax_from_costs(space, _accuracies(space), lat, en,
                              latency_budget, energy_budget)


def grid_from_costs(lat: np.ndarray, en: np.ndarray, k: int) -> tuple[ConstraintPoint, ...]:
    """Quantile-spaced budget pairs over observed proxy costs.

    Point ``i`` pairs the latency and energy upper quantiles at fraction
    ``(i+1)/k``; the last point is the observed maximum.  Duplicate points
    are collapsed (with a warning), so the grid may shrink.
    """
    if k < 1:
        raise ValueError("K must be >= 1")
    lat_sorted = np.sort(np.asarray(lat, dtype=np.float64))
    en_sorted = np.sort(np.asarray(en, dtype=np.float64))
    n = lat_sorted.size
    points: list[ConstraintPoint] = []
    for i in range(k):
        # nearest-rank upper quantile at fraction (i+1)/k, in exact integer math
        idx = max(0, -(-(i + 1) * n // k) - 1)
        point = ConstraintPoint(latency_budget=float(lat_sorted[idx]),
                                energy_budget=float(en_sorted[idx]))
        if not points or points[-1] != point:
            points.append(point)
    if len(points) < k:
        log.warning("constraint grid shrank from %d to %d points (duplicate quantiles)",
                    k, len(points))
    return tuple(points)


def build_constraint_grid(space: ArchSpaceSample, proxy: Accelerator, k: int,
                          cost_model: CostModel | None = None) -> tuple[ConstraintPoint, ...]:
    """Evaluate the space on the proxy and derive the K-point budget grid."""
    model = cost_model if cost_model is not None else AnalyticalCostModel()
    lat, en = model.estimate_many(space.architectures, proxy)
    return grid_from_costs(lat, en, k)


def optimal_set_from_costs(space: ArchSpaceSample, proxy: Accelerator,
                           grid, lat: np.ndarray, en: np.ndarray,
                           slack: float = 0.0) -> OptimalSet:
    """Union of per-grid-point argmaxes given precomputed proxy costs.

    With ``slack > 0`` each point also admits near-optimal architectures
    whose accuracy is within ``slack`` points of that point's argmax.
    """
    entries: list[OptimalSetEntry] = []
    seen: set[str] = set()
    feasible_points = 0
    acc = _accuracies(space)
    for point in grid:
        best = _argmax_from_costs(space, acc, lat, en,
                                  point.latency_budget, point.energy_budget)
        if best is None:
            continue
        feasible_points += 1
        candidates = [best]
        if slack > 0.0:
            for i, arch in enumerate(space.architectures):
                if lat[i] > point.latency_budget or en[i] > point.energy_budget:
                    continue
                if acc[i] >= best.accuracy - slack and arch is not best.arch:
                    candidates.append(OptimalSetEntry(arch, int(lat[i]), float(en[i]),
                                                      float(acc[i])))
        for entry in candidates:
            key = entry.arch.canonical_json()
            if key not in seen:
                seen.add(key)
                entries.append(entry)
    if feasible_points == 0:
        raise EmptyOptimalSetError("every grid point is infeasible on the proxy")
    return OptimalSet(entries=tuple(entries), proxy=proxy, constraint_grid=tuple(grid))


def build_optimal_set(space: ArchSpaceSample, proxy: Accelerator, grid,
                      cost_model: CostModel | None = None,
                      slack: float = 0.0) -> OptimalSet:
    """One exhaustive proxy scan (|space| evaluations) shared by all grid points."""
    model = cost_model if cost_model is not None else AnalyticalCostModel()
    lat, en = model.estimate_many(space.architectures, proxy)
    return optimal_set_from_costs(space, proxy, grid, lat, en, slack=slack)


def select_from_set(optimal_set: OptimalSet, target: Accelerator,
                    latency_budget: float, energy_budget: float,
                    cost_model: CostModel | None = None) -> OptimalSetEntry | None:
    """Best set member on ``target`` under the budgets (|set| evaluations).

    The returned entry carries the target-measured latency and energy.
    """
    if not optimal_set.entries:
        raise EmptyOptimalSetError("cannot select from an empty optimal set")
    model = cost_model if cost_model is not None else AnalyticalCostModel()
    archs = [entry.arch for entry in optimal_set.entries]
    lat, en = model.estimate_many(archs, target)
    best_key = None
    best = None
    for entry, l, e in zip(optimal_set.entries, lat, en):
        if l > latency_budget or e > energy_budget:
            continue
        key = selection_key(entry.accuracy, l, e, entry.arch.canonical_json())
        if best_key is None or key < best_key:
            best_key = key
            best = OptimalSetEntry(arch=entry.arch, latency_cycles=int(l),
                                   energy_nj=float(e), accuracy=entry.accuracy)
    return best
