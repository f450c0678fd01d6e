"""Complex-variation equation and the holomorphic-variation solution.

The complex variation F (metric variation and gauge scalar packaged as one
complex function) satisfies the linear inhomogeneous equation

    (Delta - 8(e^{2u} + e^{-2u}|P|^2)) F = -8 e^{-2u} conj(P) Pdot

with Dirichlet data F = (1/2) Pdot / P on the ring.  Real and imaginary
parts decouple into two SPD systems solved by the same preconditioned CG as
the u-solver.  For a holomorphic vector field chi d/dz the explicit field
F_X = chi_z + 2 chi u_z solves the same equation with Pdot = chi P_z + 2 chi_z P.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .grid import ComplexField, Grid2D, ScalarField, gradient
from .quaddiff import PolynomialQD, PolynomialVF
from .selfduality import SolveConfig, pcg_helmholtz, validate_nodes_off_zeros

__all__ = [
    "semiflat_F",
    "solve_F",
    "F_from_vectorfield",
    "residual_F",
    "u_z_field",
]


def semiflat_F(P: PolynomialQD, Pdot: PolynomialQD, grid: Grid2D) -> ComplexField:
    """Node values of the semiflat approximation (1/2) Pdot / P."""
    validate_nodes_off_zeros(P, grid, 1e-3)
    z = grid.nodes()
    return ComplexField(grid, 0.5 * Pdot(z) / P(z))


def _boundary_contribution(g: np.ndarray, h2: float) -> np.ndarray:
    """Ring values entering the 5-point stencil of interior unknowns."""
    ringed = g.copy()
    ringed[1:-1, 1:-1] = 0.0
    return (
        ringed[1:-1, 2:] + ringed[1:-1, :-2] + ringed[2:, 1:-1] + ringed[:-2, 1:-1]
    ) / h2


def solve_F(
    P: PolynomialQD,
    Pdot: PolynomialQD,
    u: ScalarField,
    config: SolveConfig | None = None,
    boundary: ComplexField | None = None,
) -> ComplexField:
    """Solve the complex-variation equation for a converged density u.

    ``boundary`` overrides the semiflat Dirichlet data (used by the maximum
    principle checks); only its ring values are read.
    """
    cfg = config or SolveConfig()
    grid = u.grid
    h2 = grid.h ** 2
    z = grid.nodes()
    uv = u.values
    absP2 = np.abs(P(z)) ** 2
    c = 8.0 * (np.exp(2.0 * uv) + np.exp(-2.0 * uv) * absP2)

    bc = boundary.values if boundary is not None else semiflat_F(P, Pdot, grid).values
    rhs_c = 8.0 * np.exp(-2.0 * uv) * np.conj(P(z)) * Pdot(z)

    out = np.zeros((grid.n, grid.n), dtype=complex)
    out[0, :], out[-1, :], out[:, 0], out[:, -1] = bc[0, :], bc[-1, :], bc[:, 0], bc[:, -1]
    c_int = c[1:-1, 1:-1]
    iters = cfg.cg_iters(grid.n)
    for part in (np.real, np.imag):
        rhs = part(rhs_c)[1:-1, 1:-1] + _boundary_contribution(part(bc), h2)
        sol = pcg_helmholtz(c_int, rhs, h2, cfg.cg_rel_tol, iters)
        if part is np.real:
            out[1:-1, 1:-1] += sol
        else:
            out[1:-1, 1:-1] += 1j * sol
    return ComplexField(grid, out)


def u_z_field(u: ScalarField) -> ComplexField:
    """u_z = (u_x - i u_y)/2 by central differences of the solved density."""
    ux, uy = gradient(u)
    return ComplexField(u.grid, 0.5 * (ux.values - 1j * uy.values))


def F_from_vectorfield(
    chi: PolynomialVF,
    u: ScalarField,
    grid: Grid2D | None = None,
    u_z: ComplexField | None = None,
) -> ComplexField:
    """F_X = chi_z + 2 chi u_z, the holomorphic-variation solution.

    chi_z is exact polynomial arithmetic; u_z comes from central differences
    of the solved u unless a precomputed field is supplied.
    """
    g = grid or u.grid
    if g is not u.grid and (g.n != u.grid.n or g.half_width != u.grid.half_width):
        raise ValidationError("u is not defined on the supplied grid")
    uz = u_z.values if u_z is not None else u_z_field(u).values
    z = g.nodes()
    chi_z = _vf_derivative(chi)(z)
    return ComplexField(g, chi_z + 2.0 * chi(z) * uz)


def _vf_derivative(chi: PolynomialVF):
    dc = tuple(k * b for k, b in enumerate(chi.coeffs))[1:] or (0j,)

    def ev(z):
        acc = np.zeros_like(np.asarray(z, dtype=complex))
        for a in reversed(dc):
            acc = acc * z + a
        return acc

    return ev


def residual_F(
    F: ComplexField,
    u: ScalarField,
    P: PolynomialQD,
    Pdot: PolynomialQD,
) -> ComplexField:
    """(Delta_h - 8(e^{2u}+e^{-2u}|P|^2)) F + 8 e^{-2u} conj(P) Pdot, interior."""
    grid = F.grid
    h2 = grid.h ** 2
    z = grid.nodes()
    uv = u.values
    v = F.values
    lap = (
        v[1:-1, 2:] + v[1:-1, :-2] + v[2:, 1:-1] + v[:-2, 1:-1] - 4.0 * v[1:-1, 1:-1]
    ) / h2
    c = 8.0 * (np.exp(2.0 * uv) + np.exp(-2.0 * uv) * np.abs(P(z)) ** 2)
    src = 8.0 * np.exp(-2.0 * uv) * np.conj(P(z)) * Pdot(z)
    out = np.full_like(v, np.nan, dtype=complex)
    out[1:-1, 1:-1] = lap - c[1:-1, 1:-1] * v[1:-1, 1:-1] + src[1:-1, 1:-1]
    return ComplexField(grid, out)
