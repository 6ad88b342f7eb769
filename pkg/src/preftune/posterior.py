"""Gaussian-process preference model with a Laplace-approximated posterior.

Latent utilities over a finite action set get a zero-mean GP prior with a
squared-exponential kernel. Each pairwise preference contributes a
sigmoid likelihood term g((U(preferred) - U(rejected)) / c_p). The
posterior over utilities is approximated by a Gaussian centered at the
MAP utility vector, with covariance from the inverse Hessian of the
negative log posterior (Laplace approximation).

The log posterior is strictly concave (log-concave likelihood times a
Gaussian prior), so a damped Newton iteration started from zero finds
the unique MAP.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import expit

from .actions import Action
from .errors import (
    DimensionMismatch,
    PreferenceBetweenIdenticalActions,
    SingularPrior,
    UnknownAction,
)


@dataclass(frozen=True)
class KernelHyperparams:
    """Squared-exponential kernel parameters: one lengthscale per dimension."""

    lengthscales: tuple[float, ...]
    signal_variance: float
    jitter: float = 1e-6

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "lengthscales", tuple(float(l) for l in self.lengthscales)
        )
        if any(l <= 0 for l in self.lengthscales):
            raise ValueError("all lengthscales must be positive")
        if self.signal_variance <= 0:
            raise ValueError("signal_variance must be positive")
        if self.jitter <= 0:
            raise ValueError("jitter must be positive")


@dataclass(frozen=True)
class NoiseParam:
    """Preference noise scale: larger c_p models a less reliable judge."""

    c_p: float

    def __post_init__(self) -> None:
        if self.c_p <= 0:
            raise ValueError("c_p must be positive")


@dataclass(frozen=True)
class PreferenceRecord:
    """One pairwise judgment: ``preferred`` beat ``rejected``."""

    preferred: Action
    rejected: Action
    iteration: int
    timestamp: float

    def __post_init__(self) -> None:
        if self.preferred == self.rejected:
            raise PreferenceBetweenIdenticalActions(
                "a preference must name two distinct actions"
            )


@dataclass
class PosteriorEstimate:
    """Gaussian approximation N(mean, covariance) over a finite action set."""

    actions: tuple[Action, ...]
    mean: np.ndarray
    covariance: np.ndarray
    map_converged: bool
    newton_iterations: int

    def marginal_variances(self) -> np.ndarray:
        return np.diag(self.covariance).copy()

    def index_of(self, action: Action) -> int:
        try:
            return self.actions.index(action)
        except ValueError:
            raise UnknownAction(f"{action} not in posterior support") from None


def sigmoid_link(x):
    """Monotone link g(x) = 1 / (1 + exp(-x)), numerically stable."""
    return expit(x)


def kernel_eval(x: Action, y: Action, hp: KernelHyperparams) -> float:
    """Squared-exponential kernel:
    signal_variance * exp(-0.5 * sum(((x_j - y_j) / lengthscale_j)^2)).
    """
    if len(x) != len(hp.lengthscales) or len(y) != len(hp.lengthscales):
        raise DimensionMismatch(
            f"kernel got {len(x)}- and {len(y)}-dim actions for "
            f"{len(hp.lengthscales)} lengthscales"
        )
    d = (x.as_array() - y.as_array()) / np.asarray(hp.lengthscales)
    return float(hp.signal_variance * np.exp(-0.5 * np.dot(d, d)))


def prior_covariance(actions: Sequence[Action], hp: KernelHyperparams) -> np.ndarray:
    """Kernel Gram matrix over the actions plus jitter on the diagonal."""
    if len(actions) < 1:
        raise ValueError("need at least one action")
    ls = np.asarray(hp.lengthscales)
    X = np.stack([a.as_array() for a in actions])
    if X.shape[1] != ls.shape[0]:
        raise DimensionMismatch(
            f"actions have {X.shape[1]} dims for {ls.shape[0]} lengthscales"
        )
    scaled = X / ls
    sq = ((scaled[:, None, :] - scaled[None, :, :]) ** 2).sum(axis=-1)
    return hp.signal_variance * np.exp(-0.5 * sq) + hp.jitter * np.eye(len(actions))


def _pref_index_pairs(
    actions: Sequence[Action], prefs: Sequence[PreferenceRecord]
) -> np.ndarray:
    """Map each preference to (preferred_idx, rejected_idx); shape (m, 2)."""
    lookup = {a: i for i, a in enumerate(actions)}
    pairs = np.empty((len(prefs), 2), dtype=int)
    for m, p in enumerate(prefs):
        try:
            pairs[m, 0] = lookup[p.preferred]
            pairs[m, 1] = lookup[p.rejected]
        except KeyError as exc:
            raise UnknownAction(
                f"preference references action {exc.args[0]} outside the action set"
            ) from None
    return pairs


def log_likelihood(
    utilities: Sequence[float],
    actions: Sequence[Action],
    prefs: Sequence[PreferenceRecord],
    noise: NoiseParam,
) -> float:
    """Sum over preferences of log g((U(preferred) - U(rejected)) / c_p).

    Zero for an empty preference list (empty product), and invariant
    under adding a constant to all utilities.
    """
    u = np.asarray(utilities, dtype=float)
    if len(prefs) == 0:
        return 0.0
    pairs = _pref_index_pairs(actions, prefs)
    z = (u[pairs[:, 0]] - u[pairs[:, 1]]) / noise.c_p
    # log g(z) = -log(1 + exp(-z)), computed without overflow
    return float(-np.logaddexp(0.0, -z).sum())


def _loglik_grad_lambda(
    u: np.ndarray, pairs: np.ndarray, c_p: float, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of the log likelihood and Hessian Lambda of its negation.

    Each preference contributes g(-z)/c_p to the preferred entry and its
    negation to the rejected entry; the curvature weight is
    g(z) g(-z) / c_p^2 on the (preferred - rejected) difference vector,
    so Lambda is positive semidefinite by construction.
    """
    grad = np.zeros(k)
    lam = np.zeros((k, k))
    if pairs.shape[0] == 0:
        return grad, lam
    z = (u[pairs[:, 0]] - u[pairs[:, 1]]) / c_p
    w1 = expit(-z) / c_p
    np.add.at(grad, pairs[:, 0], w1)
    np.add.at(grad, pairs[:, 1], -w1)
    w2 = expit(z) * expit(-z) / c_p**2
    D = np.zeros((pairs.shape[0], k))
    D[np.arange(pairs.shape[0]), pairs[:, 0]] = 1.0
    D[np.arange(pairs.shape[0]), pairs[:, 1]] -= 1.0
    lam = (D.T * w2) @ D
    return grad, lam


def log_posterior(
    utilities: Sequence[float],
    actions: Sequence[Action],
    prefs: Sequence[PreferenceRecord],
    hp: KernelHyperparams,
    noise: NoiseParam,
) -> float:
    """Unnormalized log posterior: log likelihood minus the prior quadratic
    form, up to an additive constant."""
    u = np.asarray(utilities, dtype=float)
    K, _ = _factorized_prior(actions, hp)
    alpha = cho_solve(K.cho, u)
    return log_likelihood(u, actions, prefs, noise) - 0.5 * float(u @ alpha)


def log_posterior_grad(
    utilities: Sequence[float],
    actions: Sequence[Action],
    prefs: Sequence[PreferenceRecord],
    hp: KernelHyperparams,
    noise: NoiseParam,
) -> np.ndarray:
    """Analytic gradient of log_posterior with respect to the utilities."""
    u = np.asarray(utilities, dtype=float)
    K, _ = _factorized_prior(actions, hp)
    pairs = _pref_index_pairs(actions, prefs)
    grad_ll, _ = _loglik_grad_lambda(u, pairs, noise.c_p, len(u))
    return grad_ll - cho_solve(K.cho, u)


def log_posterior_hess(
    utilities: Sequence[float],
    actions: Sequence[Action],
    prefs: Sequence[PreferenceRecord],
    hp: KernelHyperparams,
    noise: NoiseParam,
) -> np.ndarray:
    """Analytic Hessian of log_posterior: -(prior inverse + Lambda)."""
    u = np.asarray(utilities, dtype=float)
    K, _ = _factorized_prior(actions, hp)
    pairs = _pref_index_pairs(actions, prefs)
    _, lam = _loglik_grad_lambda(u, pairs, noise.c_p, len(u))
    return -(K.inverse + lam)


@dataclass
class _PriorFactor:
    matrix: np.ndarray
    cho: tuple
    inverse: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        inv = cho_solve(self.cho, np.eye(self.matrix.shape[0]))
        self.inverse = 0.5 * (inv + inv.T)


def _factorized_prior(
    actions: Sequence[Action], hp: KernelHyperparams
) -> tuple[_PriorFactor, KernelHyperparams]:
    """Cholesky-factorized prior covariance, escalating jitter on failure."""
    jitter = hp.jitter
    for _ in range(7):
        K = prior_covariance(actions, KernelHyperparams(hp.lengthscales, hp.signal_variance, jitter))
        try:
            cho = cho_factor(K, lower=True)
        except np.linalg.LinAlgError:
            jitter *= 10.0
            continue
        return _PriorFactor(K, cho), KernelHyperparams(
            hp.lengthscales, hp.signal_variance, jitter
        )
    raise SingularPrior(
        f"prior covariance not positive definite after jitter escalation to {jitter:g}"
    )


def _clip_psd(matrix: np.ndarray) -> np.ndarray:
    """Symmetrize and clip negative eigenvalues at zero."""
    sym = 0.5 * (matrix + matrix.T)
    w, V = np.linalg.eigh(sym)
    if w.min() >= 0.0:
        return sym
    return (V * np.clip(w, 0.0, None)) @ V.T


def laplace_posterior(
    actions: Sequence[Action],
    prefs: Sequence[PreferenceRecord],
    hp: KernelHyperparams,
    noise: NoiseParam,
    max_newton: int = 100,
    grad_tol: float = 1e-6,
) -> PosteriorEstimate:
    """Laplace approximation of the preference posterior over ``actions``.

    The mean is the MAP of the log posterior, found by damped Newton
    iteration from zero (step halved until the log posterior does not
    decrease). The covariance is (prior_inverse + Lambda)^-1 with Lambda
    the likelihood curvature at the MAP, symmetrized and clipped to PSD.

    Non-convergence within the iteration budget is not an error: the
    result is returned with ``map_converged`` False.
    """
    actions = tuple(actions)
    if len(set(actions)) != len(actions):
        raise ValueError("posterior actions must be distinct")
    k = len(actions)
    prior, _ = _factorized_prior(actions, hp)

    if len(prefs) == 0:
        # MAP of a zero-mean Gaussian prior: the prior itself, exactly.
        return PosteriorEstimate(
            actions=actions,
            mean=np.zeros(k),
            covariance=prior.matrix.copy(),
            map_converged=True,
            newton_iterations=0,
        )

    pairs = _pref_index_pairs(actions, prefs)
    c_p = noise.c_p

    def objective(u: np.ndarray) -> float:
        z = (u[pairs[:, 0]] - u[pairs[:, 1]]) / c_p
        return float(-np.logaddexp(0.0, -z).sum() - 0.5 * (u @ cho_solve(prior.cho, u)))

    u = np.zeros(k)
    value = objective(u)
    converged = False
    iterations = 0
    for iterations in range(1, max_newton + 1):
        grad_ll, lam = _loglik_grad_lambda(u, pairs, c_p, k)
        grad = grad_ll - cho_solve(prior.cho, u)
        if np.linalg.norm(grad, ord=np.inf) < grad_tol:
            iterations -= 1
            converged = True
            break
        H = prior.inverse + lam
        delta = np.linalg.solve(H, grad)
        step = 1.0
        moved = False
        for _ in range(60):
            candidate = u + step * delta
            candidate_value = objective(candidate)
            if candidate_value >= value:
                u, value = candidate, candidate_value
                moved = True
                break
            step *= 0.5
        if not moved:
            break  # numerics exhausted; report non-convergence below
    else:
        iterations = max_newton

    if not converged:
        grad_ll, _ = _loglik_grad_lambda(u, pairs, c_p, k)
        grad = grad_ll - cho_solve(prior.cho, u)
        converged = bool(np.linalg.norm(grad, ord=np.inf) < grad_tol)

    _, lam = _loglik_grad_lambda(u, pairs, c_p, k)
    lam = _clip_psd(lam)
    precision = prior.inverse + lam
    covariance = _invert_spd(precision)
    return PosteriorEstimate(
        actions=actions,
        mean=u,
        covariance=covariance,
        map_converged=converged,
        newton_iterations=iterations,
    )


def _invert_spd(matrix: np.ndarray) -> np.ndarray:
    """Invert a symmetric positive-definite matrix, symmetrizing the result."""
    ridge = 0.0
    scale = float(np.mean(np.diag(matrix)))
    for _ in range(6):
        try:
            cho = cho_factor(matrix + ridge * np.eye(matrix.shape[0]), lower=True)
        except np.linalg.LinAlgError:
            ridge = max(ridge * 10.0, 1e-12 * scale)
            continue
        inv = cho_solve(cho, np.eye(matrix.shape[0]))
        return 0.5 * (inv + inv.T)
    raise SingularPrior("posterior precision matrix could not be inverted")
