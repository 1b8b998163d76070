"""Inter-rater agreement statistics for multi-judge score matrices.

Two-way random-effects ANOVA backs the ICC figures; Cronbach's alpha treats
raters as parallel test forms. Correlations return None instead of dividing
by a zero variance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class DegenerateVariance(ValueError):
    """A statistic's denominator vanished because the scores do not vary."""


@dataclass(frozen=True)
class RatingsMatrix:
    """Subjects x raters scores; each row is one rated item."""

    values: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if len(self.values) < 2:
            raise ValueError("need at least 2 subjects (rows)")
        width = len(self.values[0])
        if width < 2:
            raise ValueError("need at least 2 raters (columns)")
        for i, row in enumerate(self.values):
            if len(row) != width:
                raise ValueError(f"row {i} has {len(row)} scores, expected {width}")
            for j, score in enumerate(row):
                if not math.isfinite(score):
                    raise ValueError(f"score at ({i}, {j}) is not finite")

    @property
    def n_subjects(self) -> int:
        return len(self.values)

    @property
    def n_raters(self) -> int:
        return len(self.values[0])

    def to_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def from_rows(rows: Sequence[Sequence[float]]) -> RatingsMatrix:
    return RatingsMatrix(values=tuple(tuple(float(x) for x in row) for row in rows))


def cronbach_alpha(matrix: RatingsMatrix) -> float:
    a = matrix.to_array()
    k = matrix.n_raters
    sum_variance = float(a.sum(axis=1).var(ddof=1))
    if sum_variance == 0.0:
        raise DegenerateVariance("row sums do not vary; alpha is undefined")
    rater_variances = float(a.var(axis=0, ddof=1).sum())
    return (k / (k - 1)) * (1.0 - rater_variances / sum_variance)


def icc2(matrix: RatingsMatrix) -> tuple[float, float]:
    """Single-rater and k-rater ICC under the two-way random-effects model."""
    a = matrix.to_array()
    n, k = matrix.n_subjects, matrix.n_raters
    msr = k * float(a.mean(axis=1).var(ddof=1))
    msc = n * float(a.mean(axis=0).var(ddof=1))
    ss_total = float(((a - a.mean()) ** 2).sum())
    sse = ss_total - msr * (n - 1) - msc * (k - 1)
    # SSE is a sum of squared residuals; only float noise can push it negative.
    mse = max(sse / ((n - 1) * (k - 1)), 0.0)
    denom_single = msr + (k - 1) * mse + k * (msc - mse) / n
    denom_average = msr + (msc - mse) / n
    if abs(denom_single) < 1e-12 or abs(denom_average) < 1e-12:
        raise DegenerateVariance("scores do not vary; ICC is undefined")
    return (msr - mse) / denom_single, (msr - mse) / denom_average


def pearson(x: Sequence[float], y: Sequence[float]) -> float | None:
    vx, vy = _paired(x, y)
    dx = vx - vx.mean()
    dy = vy - vy.mean()
    sx = float((dx ** 2).sum())
    sy = float((dy ** 2).sum())
    if sx == 0.0 or sy == 0.0:
        return None
    return float((dx * dy).sum() / math.sqrt(sx * sy))


def spearman(x: Sequence[float], y: Sequence[float]) -> float | None:
    vx, vy = _paired(x, y)
    return pearson(average_ranks(vx), average_ranks(vy))


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the mean of their rank span."""
    arr = np.asarray(values, dtype=float)
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(len(arr), dtype=float)
    i = 0
    while i < len(arr):
        j = i
        while j + 1 < len(arr) and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def agreement_summary(matrix: RatingsMatrix) -> dict[str, float | None]:
    """Alpha plus both ICC forms; None where the scores are degenerate."""
    out: dict[str, float | None] = {}
    try:
        out["cronbach_alpha"] = cronbach_alpha(matrix)
    except DegenerateVariance:
        out["cronbach_alpha"] = None
    try:
        icc21, icc2k = icc2(matrix)
    except DegenerateVariance:
        out["icc_2_1"] = None
        out["icc_2_k"] = None
    else:
        out["icc_2_1"] = icc21
        out["icc_2_k"] = icc2k
    return out


def _paired(x: Sequence[float], y: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    vx = np.asarray(x, dtype=float)
    vy = np.asarray(y, dtype=float)
    if vx.ndim != 1 or vy.ndim != 1 or len(vx) != len(vy):
        raise ValueError("x and y must be one-dimensional and the same length")
    if len(vx) < 2:
        raise ValueError("need at least 2 paired observations")
    if not (np.isfinite(vx).all() and np.isfinite(vy).all()):
        raise ValueError("observations must be finite")
    return vx, vy
