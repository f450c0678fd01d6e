"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest -v -rA tests/test_acceptance.py`` to see every line.  The
criteria are model-domain analogues of the compact-surface statements; each
asserts its stated tolerance.
"""

import math
import time

import numpy as np

from hslab import (
    ComplexField,
    Disk,
    Grid2D,
    PolynomialQD,
    PolynomialVF,
    RayGeometry,
    ScalarField,
    SelfDualityProblem,
    SolveConfig,
    WholeInterior,
    boundary_max_check,
    delta_field,
    delta_holo,
    envelope_fit,
    gradient,
    i0,
    i0_scaled,
    lie_derivative,
    near_slope_fit,
    pairing_g,
    pairing_gsf,
    ray_scan,
    residual_F,
    semiflat_F,
    semiflat_gap,
    solve_F,
    solve_u,
    stokes_report,
    threshold,
)
from hslab.metrics import F_from_vectorfield
from hslab.variation import u_z_field

from conftest import offset_grid


def _line(num: int, name: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {num:02d} {name}: {'PASS' if ok else 'FAIL'} ({detail})")


def test_criterion_01_flat_exactness():
    t0 = time.monotonic()
    P = PolynomialQD((1,))
    Pd = PolynomialQD((1,))
    g = Grid2D(center=0j, half_width=2.0, n=129)
    u, rep = solve_u(SelfDualityProblem(P, g))
    F = solve_F(P, Pd, u)
    u_inf = float(np.max(np.abs(u.values)))
    f_err = float(np.max(np.abs(F.values - 0.5)))
    pg = pairing_g(P, Pd, u, F, WholeInterior())
    pgsf = pairing_gsf(P, Pd, WholeInterior(), g)
    rel = abs(pg - pgsf) / pgsf
    dt = time.monotonic() - t0
    ok = u_inf <= 1e-8 and f_err <= 1e-8 and rel <= 1e-8 and dt < 5.0
    _line(1, "flat exactness", ok, f"|u|={u_inf:.2e} |F-1/2|={f_err:.2e} rel={rel:.2e} {dt:.1f}s")
    assert u_inf <= 1e-8
    assert f_err <= 1e-8
    assert rel <= 1e-8
    assert dt < 5.0


def test_criterion_02_lower_bound(solve_z_513, pz, timings):
    grid, u, _ = solve_z_513
    w = semiflat_gap(u, pz)
    wmin = float(np.min(w.values[1:-1, 1:-1]))
    dt = timings["solve_513"]
    ok = wmin >= -1e-8 and dt < 60.0
    _line(2, "lower bound", ok, f"min w = {wmin:.3e} vs -1e-8, solve {dt:.1f}s")
    assert dt < 60.0
    assert wmin >= -1e-8, (
        f"min w = {wmin:.3e}: the exact discrete solution of the 5-point scheme "
        "dips to O(-h^2/(32|z|^5)) against the singular comparison density; "
        "at n=513 this floor is ~-3.4e-8 (passes at n=1025, measured -6.1e-9)"
    )


def test_criterion_03_u_decay(solve_z_513, radius_z_513, pz):
    grid, u, _ = solve_z_513
    w_abs = ScalarField(grid, np.abs(semiflat_gap(u, pz).values))
    fit = envelope_fit(w_abs, radius_z_513, (1.2, 3.0), 16)
    ok = 3.0 <= fit.gamma <= 4.3 and fit.rms_log_residual <= 0.5
    _line(3, "u-decay", ok, f"gamma={fit.gamma:.3f} in [3.0,4.3], rms={fit.rms_log_residual:.3f}")
    assert 3.0 <= fit.gamma <= 4.3
    assert fit.rms_log_residual <= 0.5


def test_criterion_04_c1_decay(solve_z_513, radius_z_513, pz):
    grid, u, _ = solve_z_513
    w = semiflat_gap(u, pz)
    wx, wy = gradient(w)
    graded = np.hypot(wx.values, wy.values) / np.sqrt(np.abs(pz(grid.nodes())))
    fit = envelope_fit(ScalarField(grid, graded), radius_z_513, (1.2, 3.0), 16)
    ok = 2.8 <= fit.gamma <= 4.3
    _line(4, "C1 decay", ok, f"gamma={fit.gamma:.3f} in [2.8,4.3]")
    assert 2.8 <= fit.gamma <= 4.3


def test_criterion_05_F_decay(solve_z_513, radius_z_513, F_z_513, pz, pdot1):
    grid, u, _ = solve_z_513
    gap = np.abs(F_z_513.values - semiflat_F(pz, pdot1, grid).values)
    fit = envelope_fit(ScalarField(grid, gap), radius_z_513, (1.2, 3.0), 16)
    ok = 3.0 <= fit.gamma <= 4.3
    _line(5, "F-decay", ok, f"gamma={fit.gamma:.3f} in [3.0,4.3]")
    assert 3.0 <= fit.gamma <= 4.3


def test_criterion_06_holo_variation_residual(solve_z_257, solve_z_513, pz):
    chi = PolynomialVF((1,))
    psi = lie_derivative(chi, pz)
    norms = []
    for grid, u, _ in (solve_z_257, solve_z_513):
        FX = F_from_vectorfield(chi, u)
        res = residual_F(FX, u, pz, psi)
        norms.append(float(np.nanmax(np.abs(res.values[3:-3, 3:-3]))))
    ratio = norms[0] / norms[1]
    ok = ratio >= 3.0
    _line(6, "holo-variation residual", ok, f"257->513 ratio = {ratio:.2f} >= 3")
    assert ratio >= 3.0


def test_criterion_07_stokes(solve_z_257, solve_z_513, pz):
    chi = PolynomialVF((1,))
    reports = []
    for grid, u, _ in (solve_z_257, solve_z_513):
        reports.append(stokes_report(pz, chi, u, Disk(0j, 4.0)))
    rel = reports[1].relative
    ratio = abs(reports[0].residual) / abs(reports[1].residual)
    ok = rel <= 1e-2 and 2.5 <= ratio <= 5.0
    _line(
        7,
        "exactness/Stokes",
        ok,
        f"relative={rel:.3e} vs 1e-2, refinement ratio={ratio:.2f} in [2.5,5]",
    )
    assert 2.5 <= ratio <= 5.0
    assert rel <= 1e-2, (
        f"relative residual {rel:.3e}: the disk integral carries the O(h^2) "
        "central-difference u_z bias (~2e-3 at n=513) while the true integrals "
        "are ~5e-9 at rho=4, so the ratio-to-scale cannot reach 1e-2 at this grid"
    )


def test_criterion_08_algebraic_identity(solve_z_257, pz):
    grid, u, _ = solve_z_257
    uz = u_z_field(u)
    z = grid.nodes()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(5):
        chi = PolynomialVF(
            tuple(complex(rng.standard_normal(), rng.standard_normal()) for _ in range(4))
        )
        dh = delta_holo(pz, chi, u, uz)
        psi = lie_derivative(chi, pz)
        FX = F_from_vectorfield(chi, u, u_z=uz)
        df = delta_field(pz, psi, u, FX)
        scale = (
            2.0 * np.abs(psi(z)) ** 2 / np.abs(pz(z))
            + 4.0 * np.exp(-2.0 * u.values)
            * (np.abs(psi(z)) ** 2 + np.abs(FX.values * pz(z) * np.conj(psi(z))))
        )
        worst = max(worst, float(np.max(np.abs(dh.values - df.values) / scale)))
    ok = worst <= 1e-12
    _line(8, "algebraic identity", ok, f"max pointwise rel = {worst:.2e} <= 1e-12")
    assert worst <= 1e-12


def test_criterion_09_near_region_cancellation(pz, pdot1):
    t0 = time.monotonic()
    geo = RayGeometry(L=6.0, n=513)
    rows = ray_scan(pz, pdot1, [1.0, 2.0, 4.0, 8.0], geo)
    dt = time.monotonic() - t0
    nears = [abs(r.near_integral) for r in rows]
    decreasing = all(a > b for a, b in zip(nears, nears[1:]))
    slope = near_slope_fit(rows, geo.r0_value(1.0))
    ok = decreasing and -4.3 <= slope <= -3.0 and dt < 600.0
    _line(
        9,
        "near-region cancellation",
        ok,
        f"|near| decreasing={decreasing}, slope={slope:.3f} vs [-4.3,-3.0], {dt:.0f}s",
    )
    assert dt < 600.0
    assert decreasing
    assert -4.3 <= slope <= -3.0, (
        f"slope {slope:.3f}: with the tangent vector held fixed the boundary "
        "form scales as (8 pi rho0 / t) w(sqrt(t) r0), and the algebraic 1/t "
        "prefactor steepens the fitted slope by ~1 below the bare decay rate"
    )


def test_criterion_10_hermitian(solve_z_257, pz):
    grid, u, _ = solve_z_257
    worst = 0.0
    for coeffs in ((1,), (1, 0.5j), (0.3, 0, 1j)):
        Pd = PolynomialQD(coeffs)
        F = solve_F(pz, Pd, u)
        v1 = pairing_g(pz, Pd, u, F, WholeInterior())
        v2 = pairing_g(pz, Pd.scaled(1j), u, ComplexField(grid, 1j * F.values), WholeInterior())
        worst = max(worst, abs(v2 - v1) / abs(v1))
    ok = worst <= 1e-9
    _line(10, "Hermitian symmetry", ok, f"max rel = {worst:.2e} <= 1e-9")
    assert worst <= 1e-9


def test_criterion_11_maximum_principle(solve_z_257, pz):
    grid, u, _ = solve_z_257
    rng = np.random.default_rng(99)
    ok_all = True
    for k, coeffs in enumerate(((1,), (1, 0.5), (0.2, 0, 1j))):
        Pd = PolynomialQD(coeffs)
        base = semiflat_F(pz, Pd, grid)
        phase = np.exp(2j * np.pi * rng.random((grid.n, grid.n)))
        pert = ComplexField(grid, base.values + 1e-3 * phase)
        F1 = solve_F(pz, Pd, u)
        F2 = solve_F(pz, Pd, u, boundary=pert)
        mu = ScalarField(grid, np.abs(F1.values - F2.values))
        disk = (Disk(3.5 + 0j, 1.5), Disk(-2.0 + 2.5j, 2.0), Disk(0.5 - 3.5j, 1.5))[k]
        ok_all &= boundary_max_check(mu, disk)
    _line(11, "maximum principle", ok_all, "3 perturbed-boundary configurations")
    assert ok_all


def test_criterion_12_bessel():
    t0 = time.monotonic()
    exact_zero = i0(0.0) == 1.0
    err2 = abs(i0(2.0) - 2.2795853023360673)
    v40 = i0_scaled(40.0) * math.sqrt(2 * math.pi * 40.0)
    dt = time.monotonic() - t0
    ok = exact_zero and err2 <= 1e-10 and 1.0025 <= v40 <= 1.0040 and dt < 1.0
    _line(12, "Bessel", ok, f"i0(0)=1 {exact_zero}, |di0(2)|={err2:.1e}, scaled40={v40:.6f}, {dt:.2f}s")
    assert exact_zero
    assert err2 <= 1e-10
    assert 1.0025 <= v40 <= 1.0040
    assert dt < 1.0


def test_criterion_13_geometry():
    g = offset_grid(2.0, 257)
    P = PolynomialQD((-1, 0, 1))
    th = threshold(P, g, 16)
    rel = abs(th - math.pi / 2) / (math.pi / 2)
    th4 = threshold(P.scaled(4.0), g, 16)
    hom = abs(th4 / th - 2.0) / 2.0
    ok = rel <= 0.05 and hom <= 0.02
    _line(13, "geometry", ok, f"threshold rel err={rel:.4f} <= 5%, homogeneity err={hom:.2e} <= 2%")
    assert rel <= 0.05
    assert hom <= 0.02


def test_criterion_14_linearity(solve_z_257, pz):
    grid, u, _ = solve_z_257
    rng = np.random.default_rng(5)
    cfg = SolveConfig()
    worst = 0.0
    for _ in range(3):
        Pd1 = PolynomialQD(tuple(complex(*rng.standard_normal(2)) for _ in range(2)))
        Pd2 = PolynomialQD(tuple(complex(*rng.standard_normal(2)) for _ in range(2)))
        a, b = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
        F1 = solve_F(pz, Pd1, u, cfg)
        F2 = solve_F(pz, Pd2, u, cfg)
        comb = PolynomialQD(tuple(a * x + b * y for x, y in zip(Pd1.coeffs, Pd2.coeffs)))
        F = solve_F(pz, comb, u, cfg)
        scale = (1 + abs(a) + abs(b)) * max(
            np.max(np.abs(F.values)), np.max(np.abs(F1.values)), np.max(np.abs(F2.values))
        )
        worst = max(worst, float(np.max(np.abs(F.values - a * F1.values - b * F2.values)) / scale))
    bound = 10 * cfg.cg_rel_tol
    ok = worst <= bound
    _line(14, "linearity", ok, f"max rel = {worst:.2e} <= {bound:.0e}")
    assert worst <= bound
