"""Rank statistics shared by every test in the package.

The pairwise "win" of Y over X is ``I(X < Y)`` in strict mode and the
Heaviside step ``H(Y - X)`` in midrank mode, where an exact tie scores 0.5.
"""

from __future__ import annotations

import enum
import math
from collections import namedtuple
from typing import Sequence

import numpy as np
from scipy import stats

__all__ = [
    "TieMode",
    "MWWMethod",
    "SampleSizeError",
    "as_sample",
    "heaviside",
    "u_statistic",
    "win_matrix",
    "win_summary",
    "mww_null_variance",
    "mww_exact_null",
    "mww_test",
    "MWWResult",
]

EXACT_MAX_N = 12


class TieMode(str, enum.Enum):
    STRICT = "strict"
    MIDRANK = "midrank"


class MWWMethod(str, enum.Enum):
    NORMAL = "normal"
    EXACT = "exact"


class SampleSizeError(ValueError):
    """Requested computation is too expensive for the given sample sizes."""


MWWResult = namedtuple("MWWResult", ("p_value", "decision", "statistic"))

# Win counts needed by the closed-form posterior moments.
WinSummary = namedtuple("WinSummary", ("u", "sum_sq", "row_sums", "col_sums"))


def as_sample(values: Sequence[float] | np.ndarray, name: str = "sample") -> np.ndarray:
    """Validate a sample and return it as a 1-d float array."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        arr = arr.ravel()
    if arr.size == 0:
        raise ValueError(f"{name} must contain at least one observation")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite values")
    return arr


def heaviside(z: float) -> float:
    if not math.isfinite(z):
        raise ValueError("heaviside argument must be finite")
    if z > 0:
        return 1.0
    if z < 0:
        return 0.0
    return 0.5


def win_matrix(x, y, ties: TieMode = TieMode.MIDRANK) -> np.ndarray:
    """Matrix ``a[j, k]`` scoring whether ``y[k]`` beats ``x[j]``."""
    x = as_sample(x, "x")
    y = as_sample(y, "y")
    ties = TieMode(ties)
    if ties is TieMode.STRICT:
        return (x[:, None] < y[None, :]).astype(float)
    return np.heaviside(y[None, :] - x[:, None], 0.5)


def win_summary(x, y, ties: TieMode = TieMode.MIDRANK) -> WinSummary:
    """U, the sum of squared entries, and the row/column sums of the win matrix.

    Computed from sorted copies in O((n1 + n2) log(n1 + n2)) so that large
    samples never materialize the full matrix.
    """
    x = as_sample(x, "x")
    y = as_sample(y, "y")
    ties = TieMode(ties)
    tie_weight = 0.5 if ties is TieMode.MIDRANK else 0.0

    ys = np.sort(y)
    lo = np.searchsorted(ys, x, side="left")
    hi = np.searchsorted(ys, x, side="right")
    row_sums = (y.size - hi) + tie_weight * (hi - lo)

    xs = np.sort(x)
    lo = np.searchsorted(xs, y, side="left")
    hi = np.searchsorted(xs, y, side="right")
    col_sums = lo + tie_weight * (hi - lo)

    n_ties = float(np.sum(hi - lo))
    n_wins = float(np.sum(lo))
    u = n_wins + tie_weight * n_ties
    sum_sq = n_wins + tie_weight**2 * n_ties
    return WinSummary(u, sum_sq, row_sums.astype(float), col_sums.astype(float))


def u_statistic(x, y, ties: TieMode = TieMode.MIDRANK) -> float:
    """Number of pairs with ``x < y`` (plus half the tied pairs in midrank mode)."""
    return win_summary(x, y, ties).u


def mww_null_variance(n1: int, n2: int) -> float:
    """Null variance of ``U / (n1 n2)`` under ``F_X = F_Y``."""
    return (n1 + n2) / (12.0 * n1 * n2)


def _doubled_midranks(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ranks = stats.rankdata(np.concatenate([x, y]))
    doubled = np.rint(2 * ranks).astype(np.int64)
    return doubled[: x.size], doubled[x.size :]


def mww_exact_null(x, y) -> tuple[np.ndarray, np.ndarray]:
    """Exact permutation distribution of the midrank U statistic.

    Returns ``(support, probabilities)``. The observed midranks (doubled, so
    they are integers) are fixed and every size-``n2`` subset is equally
    likely to be the Y group; the subset-sum DP counts how many subsets reach
    each rank sum. Ties are handled exactly because the DP works on the pooled
    midranks themselves.
    """
    x = as_sample(x, "x")
    y = as_sample(y, "y")
    n1, n2 = x.size, y.size
    if n1 > EXACT_MAX_N or n2 > EXACT_MAX_N:
        raise SampleSizeError(
            f"exact permutation distribution limited to n1, n2 <= {EXACT_MAX_N}"
        )
    rx, ry = _doubled_midranks(x, y)
    pooled = np.concatenate([rx, ry])
    max_sum = int(pooled.sum())
    # counts[k, t]: number of k-subsets of the items seen so far with doubled rank sum t
    counts = np.zeros((n2 + 1, max_sum + 1), dtype=float)
    counts[0, 0] = 1.0
    for r in pooled:
        counts[1:, r:] += counts[:-1, : max_sum + 1 - r].copy()
    dist = counts[n2]
    total = dist.sum()
    sums = np.nonzero(dist)[0]
    # U = (rank sum of Y) - n2 (n2 + 1) / 2
    support = sums / 2.0 - n2 * (n2 + 1) / 2.0
    return support, dist[sums] / total


def mww_test(
    x,
    y,
    gamma: float = 0.05,
    method: MWWMethod = MWWMethod.NORMAL,
    ties: TieMode = TieMode.MIDRANK,
    continuity: bool = False,
) -> MWWResult:
    """One-sided Mann-Whitney-Wilcoxon test of ``P(X <= Y) > 0.5``.

    The normal approximation standardizes ``U / (n1 n2)`` with mean 1/2 and
    variance ``(n1 + n2) / (12 n1 n2)``, without tie correction. The null
    hypothesis is rejected (``decision=True``) when ``p_value < gamma``.

    ``continuity=True`` subtracts 1/2 from U and uses the finite-sample
    variance ``n1 n2 (n1 + n2 + 1) / 12`` instead.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    x = as_sample(x, "x")
    y = as_sample(y, "y")
    n1, n2 = x.size, y.size
    method = MWWMethod(method)
    u = u_statistic(x, y, ties)

    if method is MWWMethod.EXACT:
        support, probs = mww_exact_null(x, y)
        p = float(probs[support >= u - 1e-9].sum())
        p = min(p, 1.0)
    elif continuity:
        sd = math.sqrt(n1 * n2 * (n1 + n2 + 1) / 12.0)
        z = (u - 0.5 - n1 * n2 / 2.0) / sd
        p = float(stats.norm.sf(z))
    else:
        z = (u / (n1 * n2) - 0.5) / math.sqrt(mww_null_variance(n1, n2))
        p = float(stats.norm.sf(z))
    return MWWResult(p, p < gamma, u)
