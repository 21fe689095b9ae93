"""Spearman rank correlation over performance tables.

Ranks use the average-rank convention for ties (integer cycle counts tie
often), and the coefficient is the Pearson correlation of the two rank
vectors, which reduces to the classic ``1 - 6*sum(d^2)/(n(n^2-1))`` form
when both inputs are tie-free.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, InvalidInputError


def ranks(values) -> np.ndarray:
    """Average ranks of ``values``; rank 1 is the smallest entry."""
    vals = np.asarray(values, dtype=np.float64)
    if vals.ndim != 1 or vals.size == 0:
        raise InvalidInputError("ranks needs a nonempty 1-D list of values")
    if not np.all(np.isfinite(vals)):
        raise InvalidInputError("ranks needs finite values")
    return _rank_columns(vals.reshape(-1, 1))[:, 0]


def _rank_columns(mat: np.ndarray) -> np.ndarray:
    """Column-wise average ranks of a 2-D float array."""
    n = mat.shape[0]
    order = np.argsort(mat, axis=0, kind="stable")
    out = np.empty_like(mat)
    for j in range(mat.shape[1]):
        sv = mat[order[:, j], j]
        # Average the positional ranks within each tie group.
        starts = np.flatnonzero(np.r_[True, sv[1:] != sv[:-1]])
        ends = np.r_[starts[1:], n]
        group_rank = (starts + ends - 1) / 2.0 + 1.0
        ranked = np.repeat(group_rank, ends - starts)
        col = np.empty(n, dtype=np.float64)
        col[order[:, j]] = ranked
        out[:, j] = col
    return out


def srcc(x, y) -> float:
    """Spearman coefficient in [-1, 1]; exactly 1 for identical orderings."""
    xv = np.asarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    if xv.shape != yv.shape:
        raise DegenerateInputError(f"length mismatch: {xv.size} vs {yv.size}")
    if xv.size < 3:
        raise DegenerateInputError("need at least 3 paired values")
    if not (np.all(np.isfinite(xv)) and np.all(np.isfinite(yv))):
        raise InvalidInputError("srcc needs finite values")
    rx = ranks(xv)
    ry = ranks(yv)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    vx = float(dx @ dx)
    vy = float(dy @ dy)
    if vx == 0.0 or vy == 0.0:
        raise DegenerateInputError("zero rank variance: constant input carries no ordering")
    r = float(dx @ dy) / float(np.sqrt(vx * vy))
    return min(1.0, max(-1.0, r))


@dataclass(frozen=True)
class SrccMatrix:
    """Pairwise Spearman matrix over accelerator performance columns.

    Degenerate (constant) columns appear as NaN holes; ``hole_columns``
    lists the offending accelerator indices.
    """

    values: np.ndarray
    metric: str
    accel_ids: tuple[str, ...]
    hole_columns: tuple[int, ...] = field(default=())

    @property
    def size(self) -> int:
        return len(self.accel_ids)


def srcc_matrix(perf_table, metric: str) -> SrccMatrix:
    """Pairwise SRCC of accelerator columns for ``metric``.

    ``perf_table`` is any object exposing ``latency``/``energy`` arch-by-accel
    arrays and an ``accel_ids`` sequence (see ``perftable.PerfTable``).
    """
    if metric not in ("latency", "energy"):
        raise ValueError(f"metric must be latency or energy, got {metric!r}")
    values = np.asarray(getattr(perf_table, metric), dtype=np.float64)
    if values.ndim != 2 or values.shape[0] < 3:
        raise InvalidInputError("need a 2-D table with at least 3 architectures")
    if not np.all(np.isfinite(values)):
        raise InvalidInputError("performance table contains non-finite entries")
    rank_mat = _rank_columns(values)
    centered = rank_mat - rank_mat.mean(axis=0)
    norms = np.sqrt((centered * centered).sum(axis=0))
    holes = np.flatnonzero(norms == 0.0)
    safe = np.where(norms == 0.0, 1.0, norms)
    unit = centered / safe
    corr = np.clip(unit.T @ unit, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    if holes.size:
        corr[holes, :] = np.nan
        corr[:, holes] = np.nan
    return SrccMatrix(
        values=corr,
        metric=metric,
        accel_ids=tuple(perf_table.accel_ids),
        hole_columns=tuple(int(h) for h in holes),
    )


def avg_srcc_cdf(matrix: SrccMatrix) -> list[tuple[float, float]]:
    """Empirical CDF of each accelerator's mean SRCC with all others.

    Returns ascending ``(value, cumulative fraction)`` points, duplicates
    collapsed, ending at fraction 1.0.  Hole columns are excluded.
    """
    n = matrix.size
    if n < 2:
        raise InvalidInputError("need at least two accelerators for a CDF")
    vals = matrix.values
    averages = []
    for i in range(n):
        if i in matrix.hole_columns:
            continue
        row = np.delete(vals[i], i)
        row = row[np.isfinite(row)]
        if row.size:
            averages.append(float(row.mean()))
    if not averages:
        raise DegenerateInputError("all columns are degenerate; CDF undefined")
    averages.sort()
    total = len(averages)
    points: list[tuple[float, float]] = []
    for k, v in enumerate(averages, start=1):
        if points and points[-1][0] == v:
            points[-1] = (v, k / total)
        else:
            points.append((v, k / total))
    return points
