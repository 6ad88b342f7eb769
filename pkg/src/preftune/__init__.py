"""Preference-based Bayesian optimization over discretized parameter grids.

Learns the optimum of an unmeasurable utility function from pairwise
preferences alone: candidate parameter vectors are proposed by Thompson
sampling over random line subspaces of the grid, executed on an external
system, and judged in pairs by an operator (or a simulated judge). A
Gaussian-process preference posterior over everything executed so far
tracks the incumbent best action.
"""

from .actions import Action, ActionSpace, DimensionSpec, new_action_space
from .learner import (
    IterationRecord,
    LearnerConfig,
    PendingProposal,
    PreferenceLearner,
    sample_mvn,
    thompson_select,
)
from .posterior import (
    KernelHyperparams,
    NoiseParam,
    PosteriorEstimate,
    PreferenceRecord,
    kernel_eval,
    laplace_posterior,
    log_likelihood,
    prior_covariance,
    sigmoid_link,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ActionSpace",
    "DimensionSpec",
    "IterationRecord",
    "KernelHyperparams",
    "LearnerConfig",
    "NoiseParam",
    "PendingProposal",
    "PosteriorEstimate",
    "PreferenceLearner",
    "PreferenceRecord",
    "kernel_eval",
    "laplace_posterior",
    "log_likelihood",
    "new_action_space",
    "prior_covariance",
    "sample_mvn",
    "sigmoid_link",
    "thompson_select",
    "__version__",
]
