"""Comparison tests: the Bayesian-bootstrap DP test and "50/50 when indeterminate"."""

from __future__ import annotations

import enum
from collections import namedtuple

import numpy as np

from .idp import Decision, Outcome, TestConfig, lower_prob
from .ranks import TieMode
from .streams import SeedLike

__all__ = ["BaselineKind", "BBResult", "bb_test", "fifty_fifty"]

BBResult = namedtuple("BBResult", ("prob", "decision", "se"))


class BaselineKind(str, enum.Enum):
    BBDP = "BBDP"
    FIFTY_FIFTY = "FiftyFifty"
    MWW = "MWW"


def bb_test(
    x,
    y,
    gamma: float = 0.05,
    c: float = 0.5,
    mc_samples: int = 20000,
    rng: SeedLike = None,
    ties: TieMode = TieMode.MIDRANK,
    shards: int = 1,
) -> BBResult:
    """Bayesian-bootstrap rank-sum test, i.e. the IDP machinery at ``s = 0``.

    At ``s = 0`` the lower and upper posteriors coincide, so a single
    probability drives the decision ``prob > 1 - gamma``.
    """
    config = TestConfig(s=0.0, gamma=gamma, c=c, mc_samples=mc_samples, ties=ties)
    prob, se = lower_prob(x, y, config, rng, shards)
    return BBResult(prob, prob > 1.0 - gamma, se)


def fifty_fifty(idp: Decision, rng: np.random.Generator) -> bool:
    """IDP action when determinate, a fair coin flip otherwise."""
    if idp.outcome is Outcome.INDETERMINATE:
        return bool(rng.random() < 0.5)
    return idp.outcome is Outcome.GREATER
