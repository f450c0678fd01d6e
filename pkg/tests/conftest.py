"""Shared fixtures: the expensive reference solves are done once per session."""

from __future__ import annotations

import time

import pytest

from hslab import (
    Grid2D,
    PolynomialQD,
    SelfDualityProblem,
    radius_field,
    solve_F,
    solve_u,
)


def offset_grid(L: float, n: int) -> Grid2D:
    """Chart with the half-cell x-offset that keeps origin zeros off nodes."""
    h = 2.0 * L / (n - 1)
    return Grid2D(center=complex(h / 2.0, 0.0), half_width=L, n=n)


@pytest.fixture(scope="session")
def pz() -> PolynomialQD:
    return PolynomialQD((0, 1))


@pytest.fixture(scope="session")
def pdot1() -> PolynomialQD:
    return PolynomialQD((1,))


@pytest.fixture(scope="session")
def timings() -> dict:
    return {}


@pytest.fixture(scope="session")
def solve_z_513(pz, timings):
    grid = offset_grid(6.0, 513)
    t0 = time.monotonic()
    u, report = solve_u(SelfDualityProblem(pz, grid))
    timings["solve_513"] = time.monotonic() - t0
    return grid, u, report


@pytest.fixture(scope="session")
def solve_z_257(pz):
    grid = offset_grid(6.0, 257)
    u, report = solve_u(SelfDualityProblem(pz, grid))
    return grid, u, report


@pytest.fixture(scope="session")
def radius_z_513(pz, solve_z_513, timings):
    grid, _, _ = solve_z_513
    t0 = time.monotonic()
    r = radius_field(pz, grid, 16)
    timings["radius_513"] = time.monotonic() - t0
    return r


@pytest.fixture(scope="session")
def F_z_513(pz, pdot1, solve_z_513, timings):
    grid, u, _ = solve_z_513
    t0 = time.monotonic()
    F = solve_F(pz, pdot1, u)
    timings["solve_F_513"] = time.monotonic() - t0
    return F
