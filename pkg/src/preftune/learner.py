"""Preference-learning iteration loop.

Each iteration proposes a batch of actions, waits for them to be executed
on the target system, ingests pairwise preferences about the outcomes,
and refreshes the incumbent best action. The first batch is uniform
random; every later batch is chosen by Thompson sampling over the union
of a random line through the incumbent and everything executed so far,
so the posterior only ever has to be computed over a small subset of the
grid. The incumbent is the argmax of the posterior mean over executed
actions, which requires a second posterior computation per iteration.

The propose / record_execution / record_preferences handshake makes the
executor boundary explicit: a proposal stays pending until its execution
and its (possibly empty) preference feedback have both been recorded.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .actions import Action, ActionSpace
from .errors import (
    InvalidConfig,
    NoPendingProposal,
    NonSymmetricCovariance,
    PendingProposalExists,
    ProposalMismatch,
    UnknownAction,
)
from .posterior import (
    KernelHyperparams,
    NoiseParam,
    PosteriorEstimate,
    PreferenceRecord,
    laplace_posterior,
)

SYMMETRY_TOL = 1e-8


@dataclass(frozen=True)
class LearnerConfig:
    space: ActionSpace
    n_per_iteration: int
    hp: KernelHyperparams
    noise: NoiseParam
    seed: int
    max_newton: int = 100
    grad_tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.n_per_iteration < 2:
            raise InvalidConfig(
                "n_per_iteration must be >= 2: pairwise comparison needs two actions"
            )
        if len(self.hp.lengthscales) != self.space.ndim:
            raise InvalidConfig(
                f"{len(self.hp.lengthscales)} lengthscales for a "
                f"{self.space.ndim}-dimensional space"
            )


@dataclass(frozen=True)
class PendingProposal:
    """A proposed batch awaiting execution and preference feedback."""

    iteration: int
    actions: tuple[Action, ...]
    anchor: Action | None
    line: tuple[Action, ...] | None
    subset: tuple[Action, ...] | None
    executed: bool = False


@dataclass(frozen=True)
class IterationRecord:
    """Audit record of one completed iteration."""

    iteration: int
    proposals: tuple[Action, ...]
    anchor: Action | None
    line: tuple[Action, ...] | None
    subset_size: int
    posterior_evals: int


def sample_mvn(
    mean: np.ndarray, covariance: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """One draw from N(mean, covariance) via a symmetric factorization.

    Cholesky when the covariance is positive definite; otherwise an
    eigendecomposition with negative eigenvalues clipped to zero, so a
    zero covariance returns the mean exactly.
    """
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(covariance, dtype=float)
    if cov.shape != (mean.size, mean.size):
        raise ValueError(f"covariance shape {cov.shape} for mean of size {mean.size}")
    asym = float(np.max(np.abs(cov - cov.T))) if cov.size else 0.0
    if asym > SYMMETRY_TOL:
        raise NonSymmetricCovariance(f"covariance asymmetry {asym:g}")
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(0.5 * (cov + cov.T))
        L = V * np.sqrt(np.clip(w, 0.0, None))
    return mean + L @ rng.standard_normal(mean.size)


def thompson_select(
    posterior: PosteriorEstimate, n: int, rng: np.random.Generator
) -> list[Action]:
    """Draw n utility samples from the posterior and take each argmax.

    Ties break toward the lowest index in the posterior's action order.
    Duplicate selections across the n draws are allowed.
    """
    picks = []
    for _ in range(n):
        f = sample_mvn(posterior.mean, posterior.covariance, rng)
        picks.append(posterior.actions[int(np.argmax(f))])
    return picks


class PreferenceLearner:
    """Stateful driver of the preference-optimization loop.

    Single-owner mutable object: callers must serialize operations on one
    instance. ``iteration`` counts completed iterations; a proposal opens
    iteration ``iteration + 1`` and record_preferences closes it.
    """

    def __init__(self, config: LearnerConfig):
        self.config = config
        self.iteration = 0
        self.executed: list[Action] = []
        self.dataset: list[PreferenceRecord] = []
        self.incumbent: Action | None = None
        self.incumbent_posterior: PosteriorEstimate | None = None
        self.pending: PendingProposal | None = None
        self.history: list[IterationRecord] = []
        self.posterior_evals_total = 0
        self._executed_set: set[Action] = set()
        self._rng = np.random.default_rng(config.seed)
        self._evals_this_iteration = 0

    # -- iteration protocol -------------------------------------------------

    def propose(self) -> list[Action]:
        """Select the next batch of n actions and mark them pending."""
        if self.pending is not None:
            raise PendingProposalExists(
                f"iteration {self.pending.iteration} proposal still unjudged"
            )
        cfg = self.config
        n = cfg.n_per_iteration
        if self.iteration == 0:
            self.pending = PendingProposal(
                iteration=1,
                actions=tuple(cfg.space.uniform_random(n, self._rng)),
                anchor=None,
                line=None,
                subset=None,
            )
        else:
            anchor = self.incumbent
            assert anchor is not None  # set by update_best after iteration 1
            line = cfg.space.random_line(anchor, self._rng)
            subset = list(line)
            members = set(line)
            for a in self.executed:
                if a not in members:
                    subset.append(a)
                    members.add(a)
            post = self._posterior(subset)
            self.pending = PendingProposal(
                iteration=self.iteration + 1,
                actions=tuple(thompson_select(post, n, self._rng)),
                anchor=anchor,
                line=tuple(line),
                subset=tuple(subset),
            )
        return list(self.pending.actions)

    def record_execution(self, executed_actions: Sequence[Action]) -> None:
        """Confirm the pending batch ran; extend the executed set (dedup)."""
        if self.pending is None:
            raise NoPendingProposal("no proposal awaiting execution")
        if self.pending.executed:
            raise ProposalMismatch("pending proposal already executed")
        if tuple(executed_actions) != self.pending.actions:
            raise ProposalMismatch(
                "executed actions differ from the pending proposal"
            )
        for a in executed_actions:
            if a not in self._executed_set:
                self.executed.append(a)
                self._executed_set.add(a)
        self.pending = replace(self.pending, executed=True)

    def record_preferences(self, prefs: Sequence[PreferenceRecord]) -> None:
        """Append preference feedback (possibly empty), close the iteration,
        and recompute the incumbent."""
        if self.pending is None or not self.pending.executed:
            raise NoPendingProposal("no executed proposal awaiting preferences")
        allowed = set(self.pending.actions)
        for p in prefs:
            if p.preferred not in allowed or p.rejected not in allowed:
                raise UnknownAction(
                    "preference references an action outside the pending batch"
                )
        closing = self.pending
        self.dataset.extend(prefs)
        self.pending = None
        self.iteration = closing.iteration
        self.update_best()
        self.history.append(
            IterationRecord(
                iteration=closing.iteration,
                proposals=closing.actions,
                anchor=closing.anchor,
                line=closing.line,
                subset_size=len(closing.subset) if closing.subset else 0,
                posterior_evals=self._evals_this_iteration,
            )
        )
        self._evals_this_iteration = 0

    def update_best(self) -> None:
        """Posterior over all executed actions; incumbent = argmax of its
        mean, ties broken by earliest execution order."""
        if not self.executed:
            raise ValueError("update_best requires at least one executed action")
        post = self._posterior(self.executed)
        self.incumbent_posterior = post
        self.incumbent = post.actions[int(np.argmax(post.mean))]

    # -- helpers -------------------------------------------------------------

    def _posterior(self, actions: Sequence[Action]) -> PosteriorEstimate:
        post = laplace_posterior(
            actions,
            self.dataset,
            self.config.hp,
            self.config.noise,
            max_newton=self.config.max_newton,
            grad_tol=self.config.grad_tol,
        )
        self.posterior_evals_total += 1
        self._evals_this_iteration += 1
        return post

    def snapshot(self) -> dict:
        """JSON-compatible dump of the full learner state, used for replay
        verification and session export."""
        post = self.incumbent_posterior
        return {
            "iteration": self.iteration,
            "executed": [list(a.coords) for a in self.executed],
            "dataset": [
                {
                    "preferred": list(p.preferred.coords),
                    "rejected": list(p.rejected.coords),
                    "iteration": p.iteration,
                    "timestamp": p.timestamp,
                }
                for p in self.dataset
            ],
            "incumbent": list(self.incumbent.coords) if self.incumbent else None,
            "posterior": None
            if post is None
            else {
                "actions": [list(a.coords) for a in post.actions],
                "mean": post.mean.tolist(),
                "covariance": post.covariance.tolist(),
                "map_converged": post.map_converged,
                "newton_iterations": post.newton_iterations,
            },
            "pending": None
            if self.pending is None
            else {
                "iteration": self.pending.iteration,
                "actions": [list(a.coords) for a in self.pending.actions],
                "executed": self.pending.executed,
            },
            "rng_state": _jsonable(self._rng.bit_generator.state),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj
