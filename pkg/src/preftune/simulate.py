"""Synthetic utility landscapes, a simulated preference judge, and batch
experiment execution with regret reporting.

The judge stands in for the human operator: given two executed actions it
answers which one it prefers, either noiselessly (higher true utility
wins, ties yield no preference) or by sampling from the same sigmoid
preference model the learner assumes. Execution itself is a no-op stub
behind the ActionExecutor boundary, where a real deployment would run
the actions on the target system.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, replace
from itertools import combinations
from typing import Literal, Protocol, Sequence

import numpy as np

from .actions import Action, ActionSpace
from .errors import IdenticalActions, InvalidConfig
from .learner import LearnerConfig, PreferenceLearner
from .posterior import NoiseParam, PreferenceRecord, sigmoid_link

JudgeNoise = Literal["noiseless", "noisy"]
PreferenceOutcome = Literal["prefer_a", "prefer_b", "no_preference"]

# Seed-stream offset separating the judge's randomness from the learner's.
_JUDGE_STREAM = 7919


def normalized_distance(space: ActionSpace, a: Action, b: Action) -> float:
    """L2 distance after dividing each coordinate by its dimension range."""
    return float(np.linalg.norm((a.as_array() - b.as_array()) / space.ranges))


def max_normalized_distance(space: ActionSpace, origin: Action) -> float:
    """Largest normalized distance from ``origin`` to any grid point.

    Attained at a corner, so it is exact without enumerating the grid.
    """
    o = origin.as_array()
    per_dim = np.maximum(o - space.lower, space.upper - o) / space.ranges
    return float(np.linalg.norm(per_dim))


@dataclass(frozen=True)
class SyntheticUtility:
    """Ground-truth utility over a grid, with a known optimum."""

    space: ActionSpace
    kind: Literal["negdistance", "quadratic", "multimodal"]
    optimum: Action
    params: dict


def negdistance_utility(space: ActionSpace, optimum: Action) -> SyntheticUtility:
    """U(a) = -normalized_distance(a, optimum); unique argmax at the optimum."""
    space.validate(optimum)
    return SyntheticUtility(space, "negdistance", optimum, {})


def quadratic_utility(
    space: ActionSpace, optimum: Action, weights: Sequence[float] | None = None
) -> SyntheticUtility:
    """U(a) = -(a - optimum)^T W (a - optimum) with diagonal positive W.

    Defaults to W = diag(1 / range^2), the normalized squared distance.
    """
    space.validate(optimum)
    w = (
        np.asarray(weights, dtype=float)
        if weights is not None
        else 1.0 / space.ranges**2
    )
    if w.shape != (space.ndim,) or np.any(w <= 0):
        raise InvalidConfig("quadratic weights must be positive, one per dimension")
    return SyntheticUtility(space, "quadratic", optimum, {"weights": tuple(w)})


def multimodal_utility(
    space: ActionSpace,
    optimum: Action,
    second_center: Action,
    heights: tuple[float, float] = (1.0, 0.6),
    widths: tuple[float, float] = (0.6, 0.35),
) -> SyntheticUtility:
    """Two truncated-cone bumps built from normalized distance:
    U(a) = sum_b h_b * max(0, 1 - d_b(a) / w_b). The first bump is taller,
    so the declared optimum is the global argmax; the second center
    creates a distinct local maximum.
    """
    space.validate(optimum)
    space.validate(second_center)
    if optimum == second_center:
        raise InvalidConfig("multimodal centers must be distinct")
    h1, h2 = heights
    w1, w2 = widths
    if not (h1 > h2 > 0 and w1 > 0 and w2 > 0):
        raise InvalidConfig("multimodal needs h1 > h2 > 0 and positive widths")
    sep = normalized_distance(space, optimum, second_center)
    if sep <= max(w1, w2):
        raise InvalidConfig(
            f"bump centers are {sep:.3f} apart but widths reach {max(w1, w2):.3f}; "
            "overlapping bumps would merge into one mode"
        )
    return SyntheticUtility(
        space,
        "multimodal",
        optimum,
        {"second_center": second_center, "heights": heights, "widths": widths},
    )


def eval_utility(u: SyntheticUtility, a: Action) -> float:
    """Ground-truth utility of a grid action (OffGrid if it is not one)."""
    u.space.validate(a)
    if u.kind == "negdistance":
        return -normalized_distance(u.space, a, u.optimum)
    if u.kind == "quadratic":
        d = a.as_array() - u.optimum.as_array()
        return float(-(d * np.asarray(u.params["weights"])) @ d)
    h1, h2 = u.params["heights"]
    w1, w2 = u.params["widths"]
    d1 = normalized_distance(u.space, a, u.optimum)
    d2 = normalized_distance(u.space, a, u.params["second_center"])
    return float(h1 * max(0.0, 1.0 - d1 / w1) + h2 * max(0.0, 1.0 - d2 / w2))


def simulated_preference(
    u: SyntheticUtility,
    a: Action,
    b: Action,
    noise: NoiseParam,
    noiseless: bool,
    rng: np.random.Generator,
) -> PreferenceOutcome:
    """Judge one pair. Noiseless mode prefers the higher true utility
    (no preference on an exact tie); noisy mode prefers ``a`` with
    probability g((U(a) - U(b)) / c_p)."""
    if a == b:
        raise IdenticalActions("judge needs two distinct actions")
    ua, ub = eval_utility(u, a), eval_utility(u, b)
    if noiseless:
        if ua > ub:
            return "prefer_a"
        if ub > ua:
            return "prefer_b"
        return "no_preference"
    p = float(sigmoid_link((ua - ub) / noise.c_p))
    return "prefer_a" if rng.random() < p else "prefer_b"


@dataclass(frozen=True)
class ExecutionOutcome:
    """Per-action result from the executor boundary."""

    success: bool = True
    tags: tuple[str, ...] = ()


class ActionExecutor(Protocol):
    """Boundary to the system that realizes actions (robot, solver, ...)."""

    def execute(self, actions: Sequence[Action]) -> list[ExecutionOutcome]: ...


class StubExecutor:
    """Synthetic setting has no plant: every action trivially succeeds."""

    def execute(self, actions: Sequence[Action]) -> list[ExecutionOutcome]:
        return [ExecutionOutcome() for _ in actions]


@dataclass
class ExperimentReport:
    seed: int
    iterations: int
    regret_curve: list[float]
    incumbents: list[Action]
    unique_actions: int
    final_incumbent: Action
    wall_time: float


def run_experiment(
    config: LearnerConfig,
    utility: SyntheticUtility,
    iterations: int,
    judge_noise: JudgeNoise = "noiseless",
    executor: ActionExecutor | None = None,
) -> ExperimentReport:
    """Drive the learner through propose/execute/judge cycles.

    All C(n,2) distinct pairs in each batch are judged. Instantaneous
    regret U(optimum) - U(incumbent) is recorded after every incumbent
    update. Fully deterministic given the config seed.
    """
    if iterations < 1:
        raise InvalidConfig("iterations must be >= 1")
    executor = executor or StubExecutor()
    judge_rng = np.random.default_rng([config.seed, _JUDGE_STREAM])
    learner = PreferenceLearner(config)
    best = eval_utility(utility, utility.optimum)
    regret_curve: list[float] = []
    incumbents: list[Action] = []
    t0 = time.perf_counter()
    for i in range(1, iterations + 1):
        batch = learner.propose()
        executor.execute(batch)
        learner.record_execution(batch)
        prefs: list[PreferenceRecord] = []
        for a, b in combinations(batch, 2):
            if a == b:
                continue  # identical-pair duels carry no information
            verdict = simulated_preference(
                utility, a, b, config.noise, judge_noise == "noiseless", judge_rng
            )
            if verdict == "prefer_a":
                prefs.append(PreferenceRecord(a, b, i, float(i)))
            elif verdict == "prefer_b":
                prefs.append(PreferenceRecord(b, a, i, float(i)))
        learner.record_preferences(prefs)
        assert learner.incumbent is not None
        regret_curve.append(best - eval_utility(utility, learner.incumbent))
        incumbents.append(learner.incumbent)
    return ExperimentReport(
        seed=config.seed,
        iterations=iterations,
        regret_curve=regret_curve,
        incumbents=incumbents,
        unique_actions=len(learner.executed),
        final_incumbent=learner.incumbent,
        wall_time=time.perf_counter() - t0,
    )


@dataclass
class BatchSummary:
    repeats: int
    base_seed: int
    iterations: int
    median_final_regret: float
    q10_final_regret: float
    q90_final_regret: float
    success_threshold: float
    success_fraction: float
    mean_unique_actions: float


def batch_runs(
    config: LearnerConfig,
    utility: SyntheticUtility,
    iterations: int,
    repeats: int,
    base_seed: int,
    judge_noise: JudgeNoise = "noiseless",
    success_threshold: float = 0.15,
) -> tuple[list[ExperimentReport], BatchSummary]:
    """Independent seeded runs (seeds base_seed .. base_seed + repeats - 1)
    plus aggregate statistics. Success means the final incumbent's
    normalized distance to the optimum, scaled by the largest possible
    normalized distance from that optimum, is at or below the threshold.
    """
    if repeats < 1:
        raise InvalidConfig("repeats must be >= 1")
    reports = [
        run_experiment(
            replace(config, seed=base_seed + r), utility, iterations, judge_noise
        )
        for r in range(repeats)
    ]
    finals = np.array([rep.regret_curve[-1] for rep in reports])
    d_max = max_normalized_distance(utility.space, utility.optimum)
    dists = np.array(
        [
            normalized_distance(utility.space, rep.final_incumbent, utility.optimum)
            / d_max
            for rep in reports
        ]
    )
    summary = BatchSummary(
        repeats=repeats,
        base_seed=base_seed,
        iterations=iterations,
        median_final_regret=float(np.median(finals)),
        q10_final_regret=float(np.quantile(finals, 0.1)),
        q90_final_regret=float(np.quantile(finals, 0.9)),
        success_threshold=success_threshold,
        success_fraction=float(np.mean(dists <= success_threshold)),
        mean_unique_actions=float(np.mean([rep.unique_actions for rep in reports])),
    )
    return reports, summary


def write_regret_csv(report: ExperimentReport, space: ActionSpace) -> str:
    """Render the regret curve as CSV text.

    Schema: ``seed,iteration,regret,<one column per dimension name>``;
    the coordinate columns hold the incumbent after that iteration.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["seed", "iteration", "regret"] + [d.name for d in space.dims])
    for i, (regret, inc) in enumerate(
        zip(report.regret_curve, report.incumbents), start=1
    ):
        writer.writerow([report.seed, i, regret] + list(inc.coords))
    return buf.getvalue()
