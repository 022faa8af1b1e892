"""Imprecise Dirichlet process rank-sum test for ``P(X <= Y)``.

The prior set contains every Dirichlet process with strength ``s``. The
lower and upper posteriors of ``P(X <= Y)`` come from two extreme base
measures that put all prior mass on a single extra atom per sample. That
atom loses every comparison under the lower prior and wins every comparison
under the upper one. Under those extremes a posterior draw of ``P(X <= Y)``
reduces to

    g_low = sum_jk w1j w2k a_jk
    g_up  = g_low + w10 w20 + w10 sum_k w2k + w20 sum_j w1j

with ``(w_i0, w_i1, ...) ~ Dir(s, 1, ..., 1)`` and ``a`` the win matrix.
"""

from __future__ import annotations

import enum
import math
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .dirichlet import WeightVector, sample_weight_pair
from .ranks import TieMode, as_sample, win_matrix, win_summary
from .streams import SeedLike, as_seed_sequence, child

__all__ = [
    "DEFAULT_S",
    "MC_BLOCK",
    "Approx",
    "Outcome",
    "TestConfig",
    "PosteriorBounds",
    "Decision",
    "ProbEstimate",
    "predictive_bounds",
    "posterior_mean_bounds",
    "interval_width",
    "moments_lower",
    "moments_upper",
    "g_values",
    "lower_prob",
    "upper_prob",
    "posterior_probs",
    "normal_approx_prob",
    "choose_s",
    "imprecision_after_one_pair",
    "classify",
    "idp_decide",
    "posterior_samples",
]

DEFAULT_S = math.sqrt(2.0) - 1.0
MC_BLOCK = 4096

ProbEstimate = namedtuple("ProbEstimate", ("estimate", "se"))


class Approx(str, enum.Enum):
    MONTE_CARLO = "mc"
    NORMAL = "normal"


class Outcome(str, enum.Enum):
    GREATER = "greater"
    NOT_GREATER = "not_greater"
    INDETERMINATE = "indeterminate"

    @property
    def action(self) -> bool | None:
        """Action ``a`` (True for a=1), or None when indeterminate."""
        if self is Outcome.INDETERMINATE:
            return None
        return self is Outcome.GREATER


@dataclass(frozen=True)
class TestConfig:
    s: float = DEFAULT_S
    gamma: float = 0.05
    c: float = 0.5
    mc_samples: int = 20000
    seed: int = 0
    ties: TieMode = TieMode.MIDRANK
    approx: Approx = Approx.MONTE_CARLO

    __test__ = False  # not a pytest class

    def __post_init__(self):
        object.__setattr__(self, "ties", TieMode(self.ties))
        object.__setattr__(self, "approx", Approx(self.approx))
        if not (math.isfinite(self.s) and self.s >= 0.0):
            raise ValueError("s must be a finite non-negative number")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0.0 <= self.c <= 1.0:
            raise ValueError("c must lie in [0, 1]")
        if int(self.mc_samples) != self.mc_samples or self.mc_samples < 100:
            raise ValueError("mc_samples must be an integer >= 100")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError("seed must be a non-negative integer")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ties"] = self.ties.value
        d["approx"] = self.approx.value
        return d


@dataclass(frozen=True)
class PosteriorBounds:
    lower_mean: float
    upper_mean: float
    lower_var: float
    upper_var: float
    lower_prob: float
    upper_prob: float
    lower_prob_se: float = 0.0
    upper_prob_se: float = 0.0


@dataclass(frozen=True)
class Decision:
    outcome: Outcome
    bounds: PosteriorBounds
    config: TestConfig = field(default_factory=TestConfig)

    @property
    def action(self) -> bool | None:
        return self.outcome.action


# --------------------------------------------------------------------------
# Closed forms
# --------------------------------------------------------------------------


def predictive_bounds(
    data: Sequence[float],
    s: float,
    f_values: Sequence[float],
    f_inf: float,
    f_sup: float,
) -> tuple[float, float]:
    """Lower and upper posterior expectation of a bounded function ``f``.

    ``f_values`` holds ``f`` evaluated at each observation and
    ``[f_inf, f_sup]`` is its range. With no data the interval is the
    vacuous prior one.
    """
    if f_inf > f_sup:
        raise ValueError("f_inf must not exceed f_sup")
    if s < 0:
        raise ValueError("s must be non-negative")
    f = np.asarray(f_values, dtype=float)
    n = len(data)
    if f.size != n:
        raise ValueError("f_values must have one entry per observation")
    if n == 0:
        return float(f_inf), float(f_sup)
    if f.min() < f_inf or f.max() > f_sup:
        raise ValueError("f_values must lie within [f_inf, f_sup]")
    total = float(f.sum())
    return (s * f_inf + total) / (s + n), (s * f_sup + total) / (s + n)


def interval_width(s: float, n1: int, n2: int) -> float:
    """Gap between upper and lower posterior means of ``P(X <= Y)``."""
    return s * (s + n1 + n2) / ((s + n1) * (s + n2))


def posterior_mean_bounds(x, y, s: float = DEFAULT_S, ties: TieMode = TieMode.MIDRANK) -> tuple[float, float]:
    x = as_sample(x, "x")
    y = as_sample(y, "y")
    if s < 0:
        raise ValueError("s must be non-negative")
    n1, n2 = x.size, y.size
    lower = win_summary(x, y, ties).u / ((s + n1) * (s + n2))
    return lower, lower + interval_width(s, n1, n2)


def _g_moments(summary, n1: int, n2: int, s: float, upper: bool) -> tuple[float, float]:
    # E[W]'AE[V] and trace(A' E[WW'] A E[VV']) with E[ww'] = (diag(al) + al al') / (al0 (al0 + 1)),
    # expanded over row sums r and column sums c of A; the augmented parts vanish at s = 0.
    t = s if upper else 0.0
    u = summary.u + (s * (s + n1 + n2) if upper else 0.0)
    sum_sq = summary.sum_sq + (s * s + s * (n1 + n2) if upper else 0.0)
    rows = float(np.sum((t + summary.row_sums) ** 2)) + (s * (s + n2) ** 2 if upper else 0.0)
    cols = float(np.sum((t + summary.col_sums) ** 2)) + (s * (s + n1) ** 2 if upper else 0.0)
    d1 = (s + n1) * (s + n1 + 1.0)
    d2 = (s + n2) * (s + n2 + 1.0)
    mu = u / ((s + n1) * (s + n2))
    var = (sum_sq + rows + cols + u * u) / (d1 * d2) - mu * mu
    if var < 0.0:
        if var < -1e-12:
            raise ArithmeticError(f"negative posterior variance {var!r}")
        var = 0.0
    return mu, var


def moments_lower(x, y, s: float = DEFAULT_S, ties: TieMode = TieMode.MIDRANK) -> tuple[float, float]:
    """Exact mean and variance of the lower posterior of ``P(X <= Y)``."""
    x = as_sample(x, "x")
    y = as_sample(y, "y")
    return _g_moments(win_summary(x, y, ties), x.size, y.size, s, upper=False)


def moments_upper(x, y, s: float = DEFAULT_S, ties: TieMode = TieMode.MIDRANK) -> tuple[float, float]:
    """Exact mean and variance of the upper posterior of ``P(X <= Y)``."""
    x = as_sample(x, "x")
    y = as_sample(y, "y")
    return _g_moments(win_summary(x, y, ties), x.size, y.size, s, upper=True)


def choose_s(rho: float) -> float:
    """Prior strength whose imprecision after one pair of observations is ``rho``."""
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    return (1.0 - rho) ** -0.5 - 1.0


def imprecision_after_one_pair(s: float) -> float:
    return (s * s + 2.0 * s) / (s + 1.0) ** 2


# --------------------------------------------------------------------------
# Monte Carlo
# --------------------------------------------------------------------------


def g_values(a: np.ndarray, w1: WeightVector, w2: WeightVector) -> tuple[np.ndarray, np.ndarray]:
    """Lower and upper ``g`` for batched weights of the X and Y samples."""
    low = np.einsum("nj,nj->n", w1.w @ a, w2.w)
    s1 = w1.w.sum(axis=-1)
    s2 = w2.w.sum(axis=-1)
    up = low + w1.w0 * w2.w0 + w1.w0 * s2 + w2.w0 * s1
    return low, up


def _block_sizes(total: int) -> list[int]:
    full, rest = divmod(int(total), MC_BLOCK)
    return [MC_BLOCK] * full + ([rest] if rest else [])


def _block_draws(a, s, seq, index, size):
    rng = np.random.Generator(np.random.PCG64(child(seq, index)))
    w1, w2 = sample_weight_pair(s, a.shape[0], a.shape[1], rng, size)
    return g_values(a, w1, w2)


def _shard_blocks(n_blocks: int, shards: int) -> list[list[int]]:
    if shards < 1:
        raise ValueError("shards must be >= 1")
    return [list(chunk) for chunk in np.array_split(np.arange(n_blocks), shards)]


def _map_blocks(fn, n_blocks: int, shards: int) -> list:
    """Apply ``fn`` to groups of block indices, one group per shard."""
    groups = _shard_blocks(n_blocks, shards)
    if shards == 1:
        return [fn(g) for g in groups]
    with ThreadPoolExecutor(max_workers=shards) as pool:
        return list(pool.map(fn, groups))


def _mc_counts(a, s, c, mc_samples, seq, shards=1) -> tuple[int, int]:
    sizes = _block_sizes(mc_samples)

    def count(indices):
        lo = up = 0
        for i in indices:
            low, upp = _block_draws(a, s, seq, i, sizes[i])
            lo += int(np.count_nonzero(low > c))
            up += int(np.count_nonzero(upp > c))
        return lo, up

    parts = _map_blocks(count, len(sizes), shards)
    return sum(p[0] for p in parts), sum(p[1] for p in parts)


def _estimate(count: int, total: int) -> ProbEstimate:
    p = count / total
    return ProbEstimate(p, math.sqrt(p * (1.0 - p) / total))


def posterior_probs(x, y, config: TestConfig, rng: SeedLike = None, shards: int = 1) -> tuple[ProbEstimate, ProbEstimate]:
    """Monte Carlo lower and upper ``P[P(X <= Y) > c]`` from shared weight draws.

    ``rng`` defaults to ``config.seed``. Draws are made in fixed blocks of
    ``MC_BLOCK`` with one stream per block, so the estimate does not depend
    on ``shards``.
    """
    x = as_sample(x, "x")
    y = as_sample(y, "y")
    seq = as_seed_sequence(rng, config.seed)
    a = win_matrix(x, y, config.ties)
    lo, up = _mc_counts(a, config.s, config.c, config.mc_samples, seq, shards)
    return _estimate(lo, config.mc_samples), _estimate(up, config.mc_samples)


def lower_prob(x, y, config: TestConfig, rng: SeedLike = None, shards: int = 1) -> ProbEstimate:
    return posterior_probs(x, y, config, rng, shards)[0]


def upper_prob(x, y, config: TestConfig, rng: SeedLike = None, shards: int = 1) -> ProbEstimate:
    return posterior_probs(x, y, config, rng, shards)[1]


def posterior_samples(x, y, config: TestConfig, rng: SeedLike = None, shards: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Paired draws of ``g_low`` and ``g_up`` (same weights for both)."""
    x = as_sample(x, "x")
    y = as_sample(y, "y")
    seq = as_seed_sequence(rng, config.seed)
    a = win_matrix(x, y, config.ties)
    sizes = _block_sizes(config.mc_samples)

    def draw(indices):
        return [_block_draws(a, config.s, seq, i, sizes[i]) for i in indices]

    blocks = [b for part in _map_blocks(draw, len(sizes), shards) for b in part]
    return np.concatenate([b[0] for b in blocks]), np.concatenate([b[1] for b in blocks])


# --------------------------------------------------------------------------
# Normal approximation and decision
# --------------------------------------------------------------------------


def _gauss_exceed(mu: float, var: float, c: float) -> float:
    if var <= 0.0:
        return 1.0 if mu > c else 0.0
    return float(stats.norm.sf((c - mu) / math.sqrt(var)))


def normal_approx_prob(x, y, config: TestConfig) -> tuple[float, float]:
    """Gaussian approximation of the lower and upper ``P[P(X <= Y) > c]``."""
    x = as_sample(x, "x")
    y = as_sample(y, "y")
    summary = win_summary(x, y, config.ties)
    lo = _g_moments(summary, x.size, y.size, config.s, upper=False)
    up = _g_moments(summary, x.size, y.size, config.s, upper=True)
    return _gauss_exceed(*lo, config.c), _gauss_exceed(*up, config.c)


def classify(lower: float, upper: float, gamma: float) -> Outcome:
    threshold = 1.0 - gamma
    above_low = lower > threshold
    above_up = upper > threshold
    if above_low and above_up:
        return Outcome.GREATER
    if not above_low and not above_up:
        return Outcome.NOT_GREATER
    return Outcome.INDETERMINATE


def idp_decide(x, y, config: TestConfig | None = None, rng: SeedLike = None, shards: int = 1) -> Decision:
    """Run the IDP rank-sum test and return the three-way decision."""
    config = config or TestConfig()
    x = as_sample(x, "x")
    y = as_sample(y, "y")
    summary = win_summary(x, y, config.ties)
    lo_mu, lo_var = _g_moments(summary, x.size, y.size, config.s, upper=False)
    up_mu, up_var = _g_moments(summary, x.size, y.size, config.s, upper=True)

    if config.approx is Approx.NORMAL:
        p_lo = _gauss_exceed(lo_mu, lo_var, config.c)
        p_up = _gauss_exceed(up_mu, up_var, config.c)
        se_lo = se_up = 0.0
    else:
        (p_lo, se_lo), (p_up, se_up) = posterior_probs(x, y, config, rng, shards)

    bounds = PosteriorBounds(lo_mu, up_mu, lo_var, up_var, p_lo, p_up, se_lo, se_up)
    return Decision(classify(p_lo, p_up, config.gamma), bounds, config)
