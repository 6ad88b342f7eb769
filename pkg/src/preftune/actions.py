"""Discretized action space: grid definition, validation, and line subspaces.

An action is a point on a finite rectangular grid. Each dimension carries
its own bounds and step, so the grid is the Cartesian product of per-
dimension ladders ``lower, lower + step, ..., lower + (count-1)*step``.
Candidate actions are proposed either uniformly over the whole grid or
along a random one-dimensional line through an anchor point, which keeps
posterior computation tractable when the grid is large.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidDimension, OffGrid, OutOfBounds

# Relative tolerance for deciding that a coordinate sits on a grid rung.
GRID_RTOL = 1e-9
# Absolute tolerance for bounds checks when snapping raw coordinates.
BOUNDS_TOL = 1e-9


@dataclass(frozen=True)
class DimensionSpec:
    """One search dimension: bounds plus discretization step."""

    name: str
    lower: float
    upper: float
    step: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise InvalidDimension(f"{self.name}: non-finite bounds")
        if self.lower >= self.upper:
            raise InvalidDimension(
                f"{self.name}: lower ({self.lower}) must be < upper ({self.upper})"
            )
        if not (self.step > 0):
            raise InvalidDimension(f"{self.name}: step must be positive, got {self.step}")
        if self.step > (self.upper - self.lower):
            raise InvalidDimension(
                f"{self.name}: step {self.step} exceeds range {self.upper - self.lower}"
            )
        if self.count < 2:
            raise InvalidDimension(f"{self.name}: fewer than 2 grid points")

    @property
    def count(self) -> int:
        """Number of grid points along this dimension."""
        return int(math.floor((self.upper - self.lower) / self.step + GRID_RTOL)) + 1

    @property
    def range(self) -> float:
        return self.upper - self.lower

    def value(self, k: int) -> float:
        """Coordinate of the k-th rung. All grid coordinates are materialized
        through this formula so equal grid points are bitwise equal."""
        return self.lower + k * self.step

    def index_of(self, coord: float) -> int:
        """Rung index of an on-grid coordinate; raises OffGrid-style errors
        via snap_index when the coordinate is off the ladder."""
        k = self.snap_index(coord)
        if abs(coord - self.value(k)) > GRID_RTOL * self.step:
            raise OffGrid(f"{self.name}: {coord} is not on the grid")
        return k

    def snap_index(self, raw: float) -> int:
        """Nearest rung index for a raw coordinate; ties round toward lower."""
        if raw < self.lower - BOUNDS_TOL or raw > self.upper + BOUNDS_TOL:
            raise OutOfBounds(
                f"{self.name}: {raw} outside [{self.lower}, {self.upper}]"
            )
        x = (raw - self.lower) / self.step
        k = int(math.ceil(x - 0.5))
        return min(max(k, 0), self.count - 1)


@dataclass(frozen=True)
class Action:
    """A grid point of the action space: one coordinate per dimension.

    Immutable and hashable, so executed-action sets deduplicate by value.
    Coordinates are always produced by DimensionSpec.value, which makes
    float equality exact for points constructed through this module.
    """

    coords: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)

    def __len__(self) -> int:
        return len(self.coords)


class ActionSpace:
    """Finite rectangular grid over which preferences are learned."""

    def __init__(self, dims: Sequence[DimensionSpec]):
        dims = tuple(dims)
        if len(dims) < 1:
            raise InvalidDimension("action space needs at least one dimension")
        self.dims = dims

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def lower(self) -> np.ndarray:
        return np.array([d.lower for d in self.dims])

    @property
    def upper(self) -> np.ndarray:
        return np.array([d.upper for d in self.dims])

    @property
    def ranges(self) -> np.ndarray:
        return np.array([d.range for d in self.dims])

    def grid_size(self) -> int:
        """Total number of grid points (product of per-dimension counts),
        computed without materializing the grid."""
        return math.prod(d.count for d in self.dims)

    def action_from_indices(self, indices: Sequence[int]) -> Action:
        return Action(tuple(d.value(int(k)) for d, k in zip(self.dims, indices)))

    def validate(self, action: Action) -> Action:
        """Check dimensionality, bounds, and grid membership."""
        if len(action) != self.ndim:
            raise DimensionMismatch(
                f"action has {len(action)} coords, space has {self.ndim} dims"
            )
        for d, c in zip(self.dims, action.coords):
            d.index_of(c)
        return action

    def contains(self, action: Action) -> bool:
        try:
            self.validate(action)
        except Exception:
            return False
        return True

    def snap(self, raw: Sequence[float]) -> Action:
        """Round a raw vector to the nearest grid point (ties toward lower).

        Raises OutOfBounds if any coordinate exceeds the bounds by more
        than the clamping tolerance.
        """
        raw = np.asarray(raw, dtype=float)
        if raw.shape != (self.ndim,):
            raise DimensionMismatch(
                f"raw vector has shape {raw.shape}, expected ({self.ndim},)"
            )
        return self.action_from_indices(
            [d.snap_index(float(c)) for d, c in zip(self.dims, raw)]
        )

    def uniform_random(self, n: int, rng: np.random.Generator) -> list[Action]:
        """n independent uniform draws over the full grid (duplicates allowed)."""
        if n < 1:
            raise ValueError("n must be >= 1")
        counts = [d.count for d in self.dims]
        return [
            self.action_from_indices([rng.integers(0, c) for c in counts])
            for _ in range(n)
        ]

    def random_line(self, anchor: Action, rng: np.random.Generator) -> list[Action]:
        """Grid points along a random axis-aligned line through ``anchor``.

        A direction vector is drawn from the random source and collapsed
        onto its dominant coordinate axis; the line through the anchor
        along that axis is traced in both directions until it leaves the
        bounding box, sampling at arc-length increments equal to the
        smallest dimension step and snapping each sample to the grid.
        The result is deduplicated, ordered along the line, and always
        contains the anchor.

        Axis-aligned lines sweep one full coordinate ladder per call,
        which on coarse grids reaches the optimum far more reliably than
        oblique chords (oblique lines cross only a handful of cells
        before exiting the box and almost never pass through a specific
        nearby grid point).
        """
        self.validate(anchor)
        v = self.ndim
        draw = rng.standard_normal(v)
        norm = float(np.linalg.norm(draw))
        while norm < 1e-12:
            draw = rng.standard_normal(v)
            norm = float(np.linalg.norm(draw))
        axis = int(np.argmax(np.abs(draw)))
        direction = np.zeros(v)
        direction[axis] = 1.0 if draw[axis] >= 0 else -1.0

        a = anchor.as_array()
        lo, hi = self.lower, self.upper
        # Parameter range [t_lo, t_hi] keeping a + t*direction inside the box.
        t_lo, t_hi = -math.inf, math.inf
        for j in range(v):
            dj = direction[j]
            if abs(dj) < 1e-15:
                continue
            t_a = (lo[j] - a[j]) / dj
            t_b = (hi[j] - a[j]) / dj
            t_lo = max(t_lo, min(t_a, t_b))
            t_hi = min(t_hi, max(t_a, t_b))
        h = min(d.step for d in self.dims)
        k_lo = math.ceil(t_lo / h - GRID_RTOL)
        k_hi = math.floor(t_hi / h + GRID_RTOL)

        seen: dict[Action, None] = {}
        for k in range(k_lo, k_hi + 1):
            point = a + (k * h) * direction
            # Guard against float excursions marginally past the box faces.
            point = np.clip(point, lo, hi)
            seen.setdefault(self.snap(point), None)
        seen.setdefault(anchor, None)
        return list(seen)

    def iter_grid(self) -> Iterator[Action]:
        """Enumerate every grid point. Suitable for small spaces only."""
        ladders = [[d.value(k) for k in range(d.count)] for d in self.dims]
        for combo in itertools.product(*ladders):
            yield Action(combo)

    def __repr__(self) -> str:
        inner = ", ".join(f"{d.name}[{d.lower}:{d.upper}:{d.step}]" for d in self.dims)
        return f"ActionSpace({inner})"


def new_action_space(dims: Sequence[DimensionSpec]) -> ActionSpace:
    """Build and validate an action space from per-dimension specs."""
    return ActionSpace(dims)
