"""Imprecise Dirichlet process rank-sum test."""

from .baselines import BaselineKind, bb_test, fifty_fifty
from .dirichlet import WeightMoments, WeightVector, sample_weight_pair, sample_weights, weight_moments
from .idp import (
    DEFAULT_S,
    Approx,
    Decision,
    Outcome,
    PosteriorBounds,
    TestConfig,
    choose_s,
    classify,
    g_values,
    idp_decide,
    interval_width,
    lower_prob,
    moments_lower,
    moments_upper,
    normal_approx_prob,
    posterior_mean_bounds,
    posterior_probs,
    posterior_samples,
    predictive_bounds,
    upper_prob,
)
from .ranks import MWWMethod, SampleSizeError, TieMode, heaviside, mww_test, u_statistic, win_matrix
from .simulation import (
    ExperimentResult,
    ExperimentSpec,
    GaussianScale,
    GaussianShift,
    StudentTShift,
    TestKind,
    emit_tables,
    load_json,
    loss_eval,
    run_experiment,
    true_hypothesis,
)

__version__ = "0.1.0"
