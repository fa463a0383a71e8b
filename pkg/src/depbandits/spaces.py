"""Compact parameter spaces shared by the arms of a cluster.

A space is immutable and hashable so instances can be shared freely
across threads. Out-of-space inputs are hard errors everywhere: nothing
in this module clamps.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError

DEFAULT_SCALAR_RESOLUTION = 1e-3
DEFAULT_POINTS_PER_AXIS = 31

# Absolute slack on the simplex mass constraint, absorbs float noise in
# grid coordinates without admitting genuinely infeasible points.
_SUM_TOL = 1e-12


def as_theta(theta, dim: int) -> tuple[float, ...]:
    """Normalise a scalar or sequence parameter to a float tuple."""
    if isinstance(theta, (int, float, np.integer, np.floating)):
        out = (float(theta),)
    else:
        out = tuple(float(x) for x in theta)
    if len(out) != dim:
        raise DomainError(f"expected a {dim}-dimensional parameter, got {theta!r}")
    return out


@dataclass(frozen=True)
class ParameterSpace:
    """A compact subset of R^d with an evaluation grid attached.

    kind is one of "interval", "box", "simplex-interior". lower/upper
    give the bounding box; for the simplex kind the additional
    constraint sum(theta) <= 1 - floor applies, with floor also the
    per-coordinate lower bound.
    """

    kind: str
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    grid_resolution: float
    floor: float = 0.0

    def __post_init__(self):
        if self.kind not in ("interval", "box", "simplex-interior"):
            raise ConfigurationError(f"unknown space kind {self.kind!r}")
        if len(self.lower) != len(self.upper) or not self.lower:
            raise ConfigurationError("lower/upper bounds must be non-empty and match")
        for lo, hi in zip(self.lower, self.upper):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ConfigurationError("space bounds must be finite")
            if not lo < hi:
                raise ConfigurationError(f"empty axis: lower {lo} must be < upper {hi}")
        if not (self.grid_resolution > 0 and math.isfinite(self.grid_resolution)):
            raise ConfigurationError("grid_resolution must be positive and finite")
        if self.kind == "interval" and len(self.lower) != 1:
            raise ConfigurationError("interval spaces are one-dimensional")
        if self.kind == "simplex-interior" and self.floor <= 0:
            raise ConfigurationError("simplex-interior requires a positive floor")

    # -- constructors -------------------------------------------------

    @classmethod
    def interval(cls, lower: float, upper: float,
                 grid_resolution: float = DEFAULT_SCALAR_RESOLUTION) -> "ParameterSpace":
        return cls("interval", (float(lower),), (float(upper),), float(grid_resolution))

    @classmethod
    def box(cls, bounds: Sequence[tuple[float, float]],
            grid_resolution: float | None = None) -> "ParameterSpace":
        lower = tuple(float(b[0]) for b in bounds)
        upper = tuple(float(b[1]) for b in bounds)
        if grid_resolution is None:
            if len(lower) == 1:
                grid_resolution = DEFAULT_SCALAR_RESOLUTION
            else:
                span = max(u - l for l, u in zip(lower, upper))
                grid_resolution = span / (DEFAULT_POINTS_PER_AXIS - 1)
        kind = "interval" if len(lower) == 1 else "box"
        return cls(kind, lower, upper, float(grid_resolution))

    @classmethod
    def simplex_interior(cls, dim: int, floor: float = 0.01,
                         grid_resolution: float | None = None) -> "ParameterSpace":
        if dim < 1:
            raise ConfigurationError("simplex dimension must be >= 1")
        if floor <= 0 or floor * (dim + 1) >= 1:
            raise ConfigurationError("floor must satisfy 0 < floor*(dim+1) < 1")
        lower = (float(floor),) * dim
        upper = (1.0 - dim * float(floor),) * dim
        if grid_resolution is None:
            if dim == 1:
                grid_resolution = DEFAULT_SCALAR_RESOLUTION
            else:
                grid_resolution = (upper[0] - lower[0]) / (DEFAULT_POINTS_PER_AXIS - 1)
        return cls("simplex-interior", lower, upper, float(grid_resolution), float(floor))

    # -- geometry ------------------------------------------------------

    @property
    def dim(self) -> int:
        return len(self.lower)

    def span(self) -> tuple[float, ...]:
        return tuple(u - l for l, u in zip(self.lower, self.upper))

    def diameter(self) -> float:
        return math.sqrt(sum(s * s for s in self.span()))

    def contains(self, theta) -> bool:
        try:
            th = as_theta(theta, self.dim)
        except DomainError:
            return False
        for x, lo, hi in zip(th, self.lower, self.upper):
            if not (lo <= x <= hi) or not math.isfinite(x):
                return False
        if self.kind == "simplex-interior":
            if math.fsum(th) > 1.0 - self.floor + _SUM_TOL:
                return False
        return True

    def require(self, theta) -> tuple[float, ...]:
        """Normalise theta and raise DomainError if it lies outside."""
        th = as_theta(theta, self.dim)
        for k, (x, lo, hi) in enumerate(zip(th, self.lower, self.upper)):
            if not math.isfinite(x) or not (lo <= x <= hi):
                raise DomainError(
                    f"coordinate {k} of theta={th} violates {lo} <= x <= {hi}")
        if self.kind == "simplex-interior":
            if math.fsum(th) > 1.0 - self.floor + _SUM_TOL:
                raise DomainError(
                    f"theta={th} leaves residual mass below the floor {self.floor}")
        return th

    # -- grids ---------------------------------------------------------

    def axis_points(self, axis: int) -> np.ndarray:
        lo, hi = self.lower[axis], self.upper[axis]
        n = max(2, int(round((hi - lo) / self.grid_resolution)) + 1)
        return np.linspace(lo, hi, n)

    def grid(self) -> np.ndarray:
        """Evaluation grid: shape (n,) when dim == 1, else (n, dim).

        For simplex-interior spaces the mesh is filtered down to the
        feasible points, so every returned row is a member.
        """
        if self.dim == 1:
            return self.axis_points(0)
        axes = [self.axis_points(k) for k in range(self.dim)]
        mesh = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
        if self.kind == "simplex-interior":
            mesh = mesh[mesh.sum(axis=1) <= 1.0 - self.floor + _SUM_TOL]
        return mesh

    def vertices(self) -> np.ndarray:
        """Extreme points, shape (n_vertices, dim).

        Box kinds return the 2^d corners; the simplex kind returns its
        d + 1 vertices. Linear constraints can be certified exactly by
        checking them here.
        """
        if self.kind == "simplex-interior":
            d = self.dim
            out = np.full((d + 1, d), self.floor)
            top = 1.0 - d * self.floor
            for k in range(d):
                out[k + 1, k] = top
            return out
        corners = list(itertools.product(*zip(self.lower, self.upper)))
        return np.asarray(corners, dtype=float)


def common_space(spaces: Iterable[ParameterSpace]) -> ParameterSpace:
    """Return the single space shared by all entries or raise."""
    it = iter(spaces)
    first = next(it, None)
    if first is None:
        raise ConfigurationError("no spaces given")
    for other in it:
        if other != first:
            raise ConfigurationError("arms of one cluster must share a parameter space")
    return first
