"""Uniform square chart, node-valued fields, stencils and quadrature.

The chart is a vertex-centered Cartesian grid on the square
``|x - cx| <= L``, ``|y - cy| <= L`` with an odd number ``n`` of nodes per
side.  Node ``(j, k)`` sits at ``center + (-L + j*h) + i*(-L + k*h)`` with
spacing ``h = 2L/(n-1)``; field values are stored as ``(n, n)`` arrays
indexed ``[k, j]`` (row = y, column = x).  The outermost ring of nodes is
the Dirichlet boundary; every differential operator reports values on the
interior only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import RegionOutOfBounds, SampleOutOfBounds

__all__ = [
    "Grid2D",
    "ScalarField",
    "ComplexField",
    "WholeInterior",
    "Disk",
    "Annulus",
    "laplacian",
    "gradient",
    "integrate_region",
    "circle_integral",
    "bilinear_sample",
    "default_circle_samples",
]


@dataclass(frozen=True)
class Grid2D:
    """Square chart: center, half-width L and odd node count n per side."""

    center: complex = 0j
    half_width: float = 6.0
    n: int = 257

    def __post_init__(self):
        if self.n % 2 == 0 or self.n < 33:
            raise ValueError(f"n must be odd and >= 33, got {self.n}")
        if not (self.half_width > 0):
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "half_width", float(self.half_width))

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / (self.n - 1)

    @property
    def xs(self) -> np.ndarray:
        return self.center.real - self.half_width + self.h * np.arange(self.n)

    @property
    def ys(self) -> np.ndarray:
        return self.center.imag - self.half_width + self.h * np.arange(self.n)

    def nodes(self) -> np.ndarray:
        """Complex node positions as an (n, n) array indexed [k, j]."""
        X, Y = np.meshgrid(self.xs, self.ys, indexing="xy")
        return X + 1j * Y

    def interior(self) -> tuple[slice, slice]:
        return (slice(1, -1), slice(1, -1))

    def boundary_mask(self) -> np.ndarray:
        m = np.zeros((self.n, self.n), dtype=bool)
        m[0, :] = m[-1, :] = m[:, 0] = m[:, -1] = True
        return m

    def contains(self, z: complex) -> bool:
        return (
            abs(z.real - self.center.real) <= self.half_width + 1e-12 * self.h
            and abs(z.imag - self.center.imag) <= self.half_width + 1e-12 * self.h
        )


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ScalarField:
    """Real node values on a grid. Immutable after construction."""

    grid: Grid2D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"field shape {v.shape} does not match grid n={self.grid.n}")
        object.__setattr__(self, "values", _freeze(v))

    @classmethod
    def from_function(cls, grid: Grid2D, f: Callable[[np.ndarray], np.ndarray]) -> "ScalarField":
        return cls(grid, np.asarray(f(grid.nodes()), dtype=float))

    def interior_abs_max(self) -> float:
        v = self.values[1:-1, 1:-1]
        return float(np.nanmax(np.abs(v)))


@dataclass(frozen=True)
class ComplexField:
    """Complex node values on a grid. Immutable after construction."""

    grid: Grid2D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"field shape {v.shape} does not match grid n={self.grid.n}")
        object.__setattr__(self, "values", _freeze(v))

    @classmethod
    def from_function(cls, grid: Grid2D, f: Callable[[np.ndarray], np.ndarray]) -> "ComplexField":
        return cls(grid, np.asarray(f(grid.nodes()), dtype=complex))

    def interior_abs_max(self) -> float:
        v = self.values[1:-1, 1:-1]
        return float(np.nanmax(np.abs(v)))


# ---------------------------------------------------------------------------
# Regions


@dataclass(frozen=True)
class WholeInterior:
    """All interior nodes of the grid."""

    def contains(self, z: np.ndarray, grid: Grid2D) -> np.ndarray:
        return np.ones_like(z, dtype=bool)

    def check_inside(self, grid: Grid2D) -> None:
        pass


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def contains(self, z: np.ndarray, grid: Grid2D) -> np.ndarray:
        return np.abs(z - self.center) < self.radius

    def check_inside(self, grid: Grid2D) -> None:
        c, r = complex(self.center), self.radius
        lim = grid.half_width - grid.h
        if (
            abs(c.real - grid.center.real) + r > lim + 1e-12 * grid.h
            or abs(c.imag - grid.center.imag) + r > lim + 1e-12 * grid.h
        ):
            raise RegionOutOfBounds(f"disk(center={c}, radius={r}) exceeds the grid interior")


@dataclass(frozen=True)
class Annulus:
    center: complex
    r_inner: float
    r_outer: float

    def contains(self, z: np.ndarray, grid: Grid2D) -> np.ndarray:
        d = np.abs(z - self.center)
        return (d >= self.r_inner) & (d < self.r_outer)

    def check_inside(self, grid: Grid2D) -> None:
        Disk(self.center, self.r_outer).check_inside(grid)


Region = WholeInterior | Disk | Annulus


# ---------------------------------------------------------------------------
# Stencils


def laplacian(f: ScalarField) -> ScalarField:
    """5-point Laplacian at interior nodes; boundary ring is NaN."""
    v = f.values
    h2 = f.grid.h ** 2
    out = np.full_like(v, np.nan)
    out[1:-1, 1:-1] = (
        v[1:-1, 2:] + v[1:-1, :-2] + v[2:, 1:-1] + v[:-2, 1:-1] - 4.0 * v[1:-1, 1:-1]
    ) / h2
    return ScalarField(f.grid, out)


def _gradient_arrays(v: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    fx = np.empty_like(v)
    fy = np.empty_like(v)
    fx[:, 1:-1] = (v[:, 2:] - v[:, :-2]) / (2 * h)
    fy[1:-1, :] = (v[2:, :] - v[:-2, :]) / (2 * h)
    # one-sided second order at the ring
    fx[:, 0] = (-3 * v[:, 0] + 4 * v[:, 1] - v[:, 2]) / (2 * h)
    fx[:, -1] = (3 * v[:, -1] - 4 * v[:, -2] + v[:, -3]) / (2 * h)
    fy[0, :] = (-3 * v[0, :] + 4 * v[1, :] - v[2, :]) / (2 * h)
    fy[-1, :] = (3 * v[-1, :] - 4 * v[-2, :] + v[-3, :]) / (2 * h)
    return fx, fy


def gradient(f: ScalarField) -> tuple[ScalarField, ScalarField]:
    """Central differences inside, one-sided second order on the ring."""
    fx, fy = _gradient_arrays(f.values, f.grid.h)
    return ScalarField(f.grid, fx), ScalarField(f.grid, fy)


# ---------------------------------------------------------------------------
# Quadrature


def region_mask(
    grid: Grid2D,
    region: Region,
    exclusions: Sequence[Disk] = (),
) -> np.ndarray:
    """Boolean node mask: interior nodes inside region, outside all exclusions."""
    region.check_inside(grid)
    z = grid.nodes()
    mask = region.contains(z, grid)
    mask &= ~grid.boundary_mask()
    for ex in exclusions:
        mask &= ~(np.abs(z - ex.center) < ex.radius)
    return mask


def integrate_region(
    density: ScalarField,
    region: Region,
    exclusions: Sequence[Disk] = (),
) -> float:
    """h^2-weighted node sum over the region.

    Nodes enter whole (no partial cells); summation order is the fixed
    row-major order of the masked array, so results are bitwise reproducible.
    """
    mask = region_mask(density.grid, region, exclusions)
    return float(density.grid.h ** 2 * np.sum(density.values[mask]))


def default_circle_samples(grid: Grid2D, rho: float) -> int:
    return max(64, int(math.ceil(2 * math.pi * rho / grid.h)))


def circle_integral(
    sampler: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
    center: complex,
    rho: float,
    m: int,
    grid: Grid2D | None = None,
) -> float:
    """Trapezoid rule for the line integral of a 1-form over a circle.

    ``sampler(z)`` returns the 1-form components ``(w_x, w_y)`` at an array of
    complex points.  On the closed circle the trapezoid rule is the uniform
    m-point sum; it is spectrally accurate for smooth integrands.
    """
    if m < 16:
        raise ValueError(f"need m >= 16 circle samples, got {m}")
    if grid is not None:
        Disk(center, rho).check_inside(grid)
    theta = 2 * np.pi * np.arange(m) / m
    z = center + rho * np.exp(1j * theta)
    wx, wy = sampler(z)
    dx = -rho * np.sin(theta)
    dy = rho * np.cos(theta)
    return float((2 * np.pi / m) * np.sum(wx * dx + wy * dy))


def bilinear_sample(f: ScalarField | ComplexField, z: complex | np.ndarray):
    """Bilinear interpolation on the containing cell(s).

    Accepts a scalar or an array of points; raises SampleOutOfBounds if any
    point leaves the grid hull.
    """
    g = f.grid
    zs = np.asarray(z, dtype=complex)
    x = (zs.real - (g.center.real - g.half_width)) / g.h
    y = (zs.imag - (g.center.imag - g.half_width)) / g.h
    eps = 1e-12
    if np.any(x < -eps) or np.any(x > g.n - 1 + eps) or np.any(y < -eps) or np.any(y > g.n - 1 + eps):
        raise SampleOutOfBounds("interpolation point outside grid hull")
    j = np.clip(np.floor(x).astype(int), 0, g.n - 2)
    k = np.clip(np.floor(y).astype(int), 0, g.n - 2)
    s = x - j
    t = y - k
    v = f.values
    out = (
        (1 - s) * (1 - t) * v[k, j]
        + s * (1 - t) * v[k, j + 1]
        + (1 - s) * t * v[k + 1, j]
        + s * t * v[k + 1, j + 1]
    )
    if np.isscalar(z) or zs.ndim == 0:
        return complex(out) if np.iscomplexobj(v) else float(out)
    return out
