"""Scalar self-duality equation on a square chart.

Solves Delta u = 4 (e^{2u} - e^{-2u} |P|^2) with Dirichlet data
u = (1/2) log|P| (the semiflat log density) on the outer ring, by damped
Newton iteration on the convex discrete energy

    E[u] = h^2 sum( |grad_h u|^2 / 2 + 2 e^{2u} + 2 e^{-2u} |P|^2 ),

whose Euler-Lagrange equation is the 5-point discretization of the PDE.
Each Newton step solves the SPD linearized system with Jacobi-preconditioned
conjugate gradients; Armijo backtracking guarantees monotone energy descent,
so the iteration is globally convergent from the clamped semiflat start.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, ValidationError
from .grid import Grid2D, ScalarField
from .quaddiff import PolynomialQD, find_zeros

__all__ = [
    "SolveConfig",
    "SolveReport",
    "SelfDualityProblem",
    "semiflat_logdensity",
    "semiflat_gap",
    "solve_u",
    "residual_u",
    "energy",
]


@dataclass(frozen=True)
class SolveConfig:
    newton_tol: float = 1e-10
    max_newton: int = 50
    cg_rel_tol: float = 1e-12
    cg_max_iters: int | None = None  # None -> 10 n^2
    armijo_c1: float = 1e-4
    armijo_backtrack: float = 0.5
    armijo_max_halvings: int = 40

    def __post_init__(self):
        for name in ("newton_tol", "cg_rel_tol", "armijo_c1", "armijo_backtrack"):
            if not (getattr(self, name) > 0):
                raise ValidationError(f"{name} must be positive")
        for name in ("max_newton", "armijo_max_halvings"):
            if not (getattr(self, name) > 0):
                raise ValidationError(f"{name} must be positive")
        if self.cg_max_iters is not None and self.cg_max_iters <= 0:
            raise ValidationError("cg_max_iters must be positive")

    def cg_iters(self, n: int) -> int:
        return self.cg_max_iters if self.cg_max_iters is not None else 10 * n * n


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    final_residual_inf: float
    energy: float
    converged: bool


@dataclass(frozen=True)
class SelfDualityProblem:
    """P, grid and the (semiflat-Dirichlet) boundary condition."""

    P: PolynomialQD
    grid: Grid2D

    def __post_init__(self):
        if self.P.is_zero:
            raise ValidationError("the zero differential is rejected by PDE operations")
        validate_nodes_off_zeros(self.P, self.grid, 1e-3)


def validate_nodes_off_zeros(P: PolynomialQD, grid: Grid2D, tol_h: float) -> list[tuple[complex, bool]]:
    """Check no node sits within tol_h * h of a zero; in-hull zeros are simple."""
    if P.degree == 0:
        return []
    zeros = find_zeros(P)
    nodes = grid.nodes()
    inside = []
    for z, simple in zeros:
        if not grid.contains(z):
            continue
        if not simple:
            raise ValidationError(f"zero at {z} is not simple; the theory requires simple zeros")
        if np.min(np.abs(nodes - z)) < tol_h * grid.h:
            raise ValidationError(f"grid node within {tol_h}*h of the zero at {z}")
        inside.append((z, simple))
    return inside


def semiflat_logdensity(P: PolynomialQD, grid: Grid2D) -> ScalarField:
    """Node values of the semiflat log density (1/2) log|P|."""
    if P.is_zero:
        raise ValidationError("the zero differential has no log density")
    validate_nodes_off_zeros(P, grid, 1e-3)
    return ScalarField(grid, 0.5 * np.log(np.abs(P(grid.nodes()))))


def semiflat_gap(u: ScalarField, P: PolynomialQD) -> ScalarField:
    """w = u - (1/2) log|P|, the deviation from the semiflat density."""
    return ScalarField(u.grid, u.values - 0.5 * np.log(np.abs(P(u.grid.nodes()))))


# ---------------------------------------------------------------------------
# Discrete operators on interior unknowns (zero Dirichlet)


def _neg_laplacian_apply(v: np.ndarray, h2: float) -> np.ndarray:
    out = 4.0 * v.copy()
    out[:, 1:] -= v[:, :-1]
    out[:, :-1] -= v[:, 1:]
    out[1:, :] -= v[:-1, :]
    out[:-1, :] -= v[1:, :]
    return out / h2


def pcg_helmholtz(
    c: np.ndarray,
    rhs: np.ndarray,
    h2: float,
    rel_tol: float,
    max_iters: int,
) -> np.ndarray:
    """Jacobi-preconditioned CG for (-Delta_h + c) x = rhs, zero Dirichlet.

    c >= 0 makes the operator SPD; the diagonal 4/h^2 + c varies over orders
    of magnitude across the chart, which is exactly what the Jacobi scaling
    absorbs.  Fully deterministic: fixed evaluation order, no threading.
    """
    diag = 4.0 / h2 + c
    x = np.zeros_like(rhs)
    r = rhs.copy()
    z = r / diag
    p = z.copy()
    rz = float(np.sum(r * z))
    target = rel_tol * math.sqrt(float(np.sum(rhs * rhs)))
    if target == 0.0:
        return x
    for _ in range(max_iters):
        Ap = _neg_laplacian_apply(p, h2) + c * p
        alpha = rz / float(np.sum(p * Ap))
        x += alpha * p
        r -= alpha * Ap
        if math.sqrt(float(np.sum(r * r))) <= target:
            return x
        z = r / diag
        rz_new = float(np.sum(r * z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise ConvergenceFailure(f"CG did not reach rel_tol={rel_tol} in {max_iters} iterations")


# ---------------------------------------------------------------------------
# Energy, residual, Newton


def _energy_arrays(u: np.ndarray, absP2: np.ndarray, h: float) -> float:
    with np.errstate(over="ignore"):
        dx = (u[:, 1:] - u[:, :-1]) / h
        dy = (u[1:, :] - u[:-1, :]) / h
        grad_part = 0.5 * (np.sum(dx * dx) + np.sum(dy * dy))
        point_part = np.sum(2.0 * np.exp(2.0 * u) + 2.0 * np.exp(-2.0 * u) * absP2)
    return float(h * h * (grad_part + point_part))


def energy(u: ScalarField, P: PolynomialQD) -> float:
    """Discrete convex energy whose Euler-Lagrange equation is the PDE."""
    absP2 = np.abs(P(u.grid.nodes())) ** 2
    return _energy_arrays(u.values, absP2, u.grid.h)


def _residual_interior(u: np.ndarray, absP2: np.ndarray, h2: float) -> np.ndarray:
    lap = (
        u[1:-1, 2:] + u[1:-1, :-2] + u[2:, 1:-1] + u[:-2, 1:-1] - 4.0 * u[1:-1, 1:-1]
    ) / h2
    ui = u[1:-1, 1:-1]
    return lap - 4.0 * (np.exp(2.0 * ui) - np.exp(-2.0 * ui) * absP2[1:-1, 1:-1])


def residual_u(u: ScalarField, P: PolynomialQD) -> ScalarField:
    """PDE residual Delta_h u - 4(e^{2u} - e^{-2u}|P|^2) at interior nodes."""
    absP2 = np.abs(P(u.grid.nodes())) ** 2
    out = np.full_like(u.values, np.nan)
    out[1:-1, 1:-1] = _residual_interior(u.values, absP2, u.grid.h ** 2)
    return ScalarField(u.grid, out)


def solve_u(
    problem: SelfDualityProblem,
    config: SolveConfig | None = None,
) -> tuple[ScalarField, SolveReport]:
    """Damped Newton on the discrete energy; returns (u, report).

    Raises ConvergenceFailure (with .u and .report attached) if the infinity
    norm of the residual does not reach newton_tol within max_newton steps.
    """
    cfg = config or SolveConfig()
    grid = problem.grid
    h = grid.h
    h2 = h * h
    absP2 = np.abs(problem.P(grid.nodes())) ** 2

    bvals = semiflat_logdensity(problem.P, grid).values
    u = bvals.copy()
    bmask = grid.boundary_mask()
    clamp = float(np.min(bvals[bmask])) - 5.0
    u[~bmask] = np.maximum(u[~bmask], clamp)

    E = _energy_arrays(u, absP2, h)
    resid = _residual_interior(u, absP2, h2)
    res_inf = float(np.max(np.abs(resid)))
    iters = 0
    converged = res_inf <= cfg.newton_tol

    while not converged and iters < cfg.max_newton:
        ui = u[1:-1, 1:-1]
        c = 8.0 * np.exp(2.0 * ui) + 8.0 * np.exp(-2.0 * ui) * absP2[1:-1, 1:-1]
        delta = pcg_helmholtz(c, resid, h2, cfg.cg_rel_tol, cfg.cg_iters(grid.n))
        # directional derivative of E along delta (descent by SPD-ness)
        dE = -h2 * float(np.sum(resid * delta))
        lam = 1.0
        accepted = False
        # near the residual floor energy differences sink below float
        # resolution of E; the slack keeps the test from rejecting noise
        slack = 16.0 * np.finfo(float).eps * abs(E)
        for _ in range(cfg.armijo_max_halvings):
            trial = u.copy()
            trial[1:-1, 1:-1] += lam * delta
            E_trial = _energy_arrays(trial, absP2, h)
            if math.isfinite(E_trial) and E_trial <= E + cfg.armijo_c1 * lam * dE + slack:
                u, E = trial, E_trial
                accepted = True
                break
            lam *= cfg.armijo_backtrack
        iters += 1
        if not accepted:
            break
        resid = _residual_interior(u, absP2, h2)
        res_inf = float(np.max(np.abs(resid)))
        converged = res_inf <= cfg.newton_tol

    report = SolveReport(
        iterations=iters,
        final_residual_inf=res_inf,
        energy=E,
        converged=converged,
    )
    field = ScalarField(grid, u)
    if not converged:
        raise ConvergenceFailure(
            f"Newton stalled at residual {res_inf:.3e} after {iters} iterations",
            u=field,
            report=report,
        )
    return field, report
