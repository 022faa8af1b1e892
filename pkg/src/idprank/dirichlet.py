"""Posterior weight vectors ``(w0, w1, ..., wn) ~ Dir(s, 1, ..., 1)``.

A posterior draw of a distribution function whose prior base measure is a
point mass lives on the ``n`` observations plus one extra atom, so sampling
it only needs Dirichlet weights; no stick-breaking is involved. ``w0`` is the
weight of the extra (prior) atom.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "WeightVector",
    "WeightMoments",
    "sample_weights",
    "sample_weight_pair",
    "weight_moments",
]


@dataclass(frozen=True)
class WeightVector:
    """Dirichlet weights; batched draws carry a leading sample axis."""

    w0: np.ndarray
    w: np.ndarray

    @property
    def n(self) -> int:
        return self.w.shape[-1]

    def augmented(self) -> np.ndarray:
        """Weights with ``w0`` prepended as column 0."""
        return np.concatenate([np.asarray(self.w0)[..., None], self.w], axis=-1)


@dataclass(frozen=True)
class WeightMoments:
    mean: np.ndarray
    second: np.ndarray
    augmented: bool


def _check(s: float, n: int) -> None:
    if not s >= 0.0:
        raise ValueError("prior strength s must be non-negative")
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")


def _normalize(g0: np.ndarray, e: np.ndarray) -> WeightVector:
    total = g0 + e.sum(axis=-1)
    return WeightVector(g0 / total, e / total[..., None])


def _prior_gamma(s: float, size, rng: np.random.Generator) -> np.ndarray:
    # s == 0 is the Bayesian-bootstrap limit: the prior atom carries no mass.
    if s == 0.0:
        return np.zeros(size)
    # numpy's standard_gamma is valid for shape < 1 (Marsaglia-Tsang with boosting).
    return rng.standard_gamma(s, size)


def sample_weights(s: float, n: int, rng: np.random.Generator, size: int | None = None) -> WeightVector:
    """Draw from ``Dir(s, 1, ..., 1)`` by normalizing independent Gamma variates.

    With ``size`` given, returns ``size`` independent draws stacked along
    axis 0.
    """
    _check(s, n)
    shape = () if size is None else (int(size),)
    e = rng.standard_exponential(shape + (int(n),))
    g0 = _prior_gamma(s, shape, rng)
    return _normalize(np.asarray(g0, dtype=float), e)


def sample_weight_pair(
    s: float, n1: int, n2: int, rng: np.random.Generator, size: int
) -> tuple[WeightVector, WeightVector]:
    """Independent batches of weights for two samples.

    The observation-atom variates for both samples are drawn before the
    prior-atom variates. A given stream therefore yields the same
    observation variates for every ``s``, which couples the ``s = 0`` draw
    to the ``s > 0`` one.
    """
    _check(s, n1)
    _check(s, n2)
    e1 = rng.standard_exponential((size, int(n1)))
    e2 = rng.standard_exponential((size, int(n2)))
    g1 = _prior_gamma(s, size, rng)
    g2 = _prior_gamma(s, size, rng)
    return _normalize(g1, e1), _normalize(g2, e2)


def weight_moments(s: float, n: int, augmented: bool = False) -> WeightMoments:
    """Closed-form first and second moments of the Dirichlet weights.

    Non-augmented arrays cover ``w1..wn`` only; the augmented ones put ``w0``
    at index 0.
    """
    _check(s, n)
    denom = (s + n) * (s + n + 1.0)
    second = (np.ones((n, n)) + np.eye(n)) / denom
    mean = np.full(n, 1.0 / (s + n))
    if not augmented:
        return WeightMoments(mean, second, False)
    aug_second = np.empty((n + 1, n + 1))
    aug_second[1:, 1:] = second
    aug_second[0, 1:] = aug_second[1:, 0] = s / denom
    aug_second[0, 0] = s * (s + 1.0) / denom
    aug_mean = np.concatenate([[s / (s + n)], mean])
    return WeightMoments(aug_mean, aug_second, True)
