"""Edit distance over action sequences and Welch's two-sample t-test."""

from __future__ import annotations

import math
from typing import Sequence

from scipy.special import stdtr

from .core import Plan


class DegenerateSamplesError(ValueError):
    pass


def _as_tokens(seq) -> tuple:
    if isinstance(seq, Plan):
        return seq.keys()
    return tuple(seq)


def levenshtein(a, b) -> int:
    """Minimal insert/delete/substitute count between two sequences.

    Accepts Plans (compared by grounded-action key) or any token sequences.
    Two-row dynamic program, O(len(a) * len(b)) time, O(len(b)) space.
    """
    xs, ys = _as_tokens(a), _as_tokens(b)
    if len(xs) < len(ys):
        xs, ys = ys, xs
    prev = list(range(len(ys) + 1))
    for i, x in enumerate(xs, start=1):
        cur = [i] + [0] * len(ys)
        for j, y in enumerate(ys, start=1):
            cost = 0 if x == y else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return prev[len(ys)]


def _mean_var(xs: Sequence[float]) -> tuple[float, float]:
    n = len(xs)
    mean = sum(xs) / n
    var = sum((x - mean) ** 2 for x in xs) / (n - 1)
    return mean, var


def ttest_ind(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Welch's independent two-sample t-test, two-sided.

    The statistic and the Welch-Satterthwaite degrees of freedom are computed
    directly; only the Student-t CDF comes from scipy.
    """
    nx, ny = len(xs), len(ys)
    if nx < 2 or ny < 2:
        raise DegenerateSamplesError("each sample needs at least two values")
    mx, vx = _mean_var(xs)
    my, vy = _mean_var(ys)
    if vx == 0.0 and vy == 0.0:
        raise DegenerateSamplesError("both samples have zero variance")
    se2 = vx / nx + vy / ny
    statistic = (mx - my) / math.sqrt(se2)
    df = se2 * se2 / ((vx / nx) ** 2 / (nx - 1) + (vy / ny) ** 2 / (ny - 1))
    p_value = 2.0 * float(stdtr(df, -abs(statistic)))
    return statistic, p_value
