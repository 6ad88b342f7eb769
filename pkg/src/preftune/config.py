"""Declarative configuration documents.

A config document is a JSON object:

    {
      "dimensions": [{"name": ..., "lower": ..., "upper": ..., "step": ...}, ...],
      "n_per_iteration": 2,
      "c_p": ...,
      "lengthscales": [...],
      "signal_variance": ...,
      "jitter": ...,
      "seed": ...
    }

Everything except "dimensions" may be omitted; defaults are filled in.
The built-in default document describes the five-dimensional gait
essential-constraint space this engine was calibrated on.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Mapping

from .actions import ActionSpace, DimensionSpec
from .errors import InvalidConfig, PreftuneError
from .learner import LearnerConfig
from .posterior import KernelHyperparams, NoiseParam

DEFAULT_SIGNAL_VARIANCE = 1e-4
# Pilot-calibrated: fraction of each dimension's range used as its lengthscale.
DEFAULT_LENGTHSCALE_FRACTION = 0.45
# Pilot-calibrated: preference noise as a fraction of the prior utility std.
DEFAULT_CP_FRACTION = 0.2
DEFAULT_JITTER = 1e-6
DEFAULT_N_PER_ITERATION = 2
DEFAULT_SEED = 0

# Canonical gait essential-constraint space: bounds and discretization per
# dimension (velocities in m/s, clearances and lengths in m, phase unitless).
DEFAULT_DIMENSIONS: tuple[dict[str, Any], ...] = (
    {"name": "forward_velocity_mps", "lower": 0.3, "upper": 0.6, "step": 0.05},
    {"name": "clearance_phase", "lower": 0.4, "upper": 0.7, "step": 0.1},
    {"name": "foot_clearance_m", "lower": 0.05, "upper": 0.19, "step": 0.02},
    {"name": "impact_velocity_mps", "lower": -0.8, "upper": -0.2, "step": 0.1},
    {"name": "step_length_m", "lower": 0.2, "upper": 0.4, "step": 0.05},
)


def default_config_document() -> dict[str, Any]:
    """Fully-populated default document (the canonical gait space)."""
    return normalize_config_document({"dimensions": [dict(d) for d in DEFAULT_DIMENSIONS]})


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidConfig(message)


def normalize_config_document(doc: Mapping[str, Any]) -> dict[str, Any]:
    """Validate a document and fill every omitted field with its default.

    The returned document is self-contained: parsing it never depends on
    default values changing later, which keeps persisted sessions
    replayable.
    """
    _require(isinstance(doc, Mapping), "config document must be a JSON object")
    unknown = set(doc) - {
        "dimensions",
        "n_per_iteration",
        "c_p",
        "lengthscales",
        "signal_variance",
        "jitter",
        "seed",
    }
    _require(not unknown, f"unknown config fields: {sorted(unknown)}")
    dims_raw = doc.get("dimensions")
    _require(
        isinstance(dims_raw, (list, tuple)) and len(dims_raw) >= 1,
        "config needs a non-empty 'dimensions' list",
    )
    dims: list[dict[str, Any]] = []
    for i, d in enumerate(dims_raw):
        _require(isinstance(d, Mapping), f"dimension {i} must be an object")
        missing = {"name", "lower", "upper", "step"} - set(d)
        _require(not missing, f"dimension {i} missing fields: {sorted(missing)}")
        dims.append(
            {
                "name": str(d["name"]),
                "lower": float(d["lower"]),
                "upper": float(d["upper"]),
                "step": float(d["step"]),
            }
        )

    sv = float(doc.get("signal_variance", DEFAULT_SIGNAL_VARIANCE))
    _require(sv > 0 and math.isfinite(sv), "signal_variance must be positive")
    jitter = float(doc.get("jitter", DEFAULT_JITTER))
    _require(jitter > 0 and math.isfinite(jitter), "jitter must be positive")
    c_p = float(doc.get("c_p", DEFAULT_CP_FRACTION * math.sqrt(sv)))
    _require(c_p > 0 and math.isfinite(c_p), "c_p must be positive")
    n = int(doc.get("n_per_iteration", DEFAULT_N_PER_ITERATION))
    seed = int(doc.get("seed", DEFAULT_SEED))

    if "lengthscales" in doc:
        ls = [float(x) for x in doc["lengthscales"]]
        _require(
            len(ls) == len(dims),
            f"{len(ls)} lengthscales for {len(dims)} dimensions",
        )
    else:
        ls = [
            DEFAULT_LENGTHSCALE_FRACTION * (d["upper"] - d["lower"]) for d in dims
        ]
    _require(all(x > 0 and math.isfinite(x) for x in ls), "lengthscales must be positive")

    return {
        "dimensions": dims,
        "n_per_iteration": n,
        "c_p": c_p,
        "lengthscales": ls,
        "signal_variance": sv,
        "jitter": jitter,
        "seed": seed,
    }


def parse_config(doc: Mapping[str, Any]) -> LearnerConfig:
    """Build a validated LearnerConfig from a (possibly partial) document."""
    norm = normalize_config_document(doc)
    try:
        space = ActionSpace(
            [
                DimensionSpec(d["name"], d["lower"], d["upper"], d["step"])
                for d in norm["dimensions"]
            ]
        )
        hp = KernelHyperparams(
            tuple(norm["lengthscales"]), norm["signal_variance"], norm["jitter"]
        )
        noise = NoiseParam(norm["c_p"])
        return LearnerConfig(
            space=space,
            n_per_iteration=norm["n_per_iteration"],
            hp=hp,
            noise=noise,
            seed=norm["seed"],
        )
    except InvalidConfig:
        raise
    except (PreftuneError, ValueError) as exc:
        raise InvalidConfig(str(exc)) from exc


def default_config() -> LearnerConfig:
    return parse_config(default_config_document())


def load_config_document(path: str | Path) -> dict[str, Any]:
    """Read and normalize a JSON config file."""
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise InvalidConfig(f"cannot read config file {path}: {exc}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"config file {path} is not valid JSON: {exc}") from exc
    return normalize_config_document(doc)
