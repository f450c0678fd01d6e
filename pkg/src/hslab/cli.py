"""Command line entry point: solve / decay / stokes / ray / bessel.

Usage: ``hslab <subcommand> --config <path> --out <dir> [--quiet]``

Each run writes, into the output directory:

* ``report.csv``  -- one row per result record, with a stable column set per
  subcommand; every float is printed with 17 significant digits so binary64
  values round-trip losslessly.
* ``field_<name>.csv`` -- optional node dumps (requested via
  ``output.fields``): header ``# n=<n>, L=<L>, center=<re>,<im>`` then n rows
  of n comma-separated values (row k holds y-index k).  Complex fields dump
  as ``_re``/``_im`` pairs.
* ``meta.txt``    -- artifact version plus the full effective config.
* ``fig_<subcommand>.png`` -- rendered summary figure (when ``png`` is among
  ``output.formats``).

Exit codes: 0 success, 1 config error, 2 solver convergence failure,
3 validation failure.  All computation happens before any file is written,
and per-row arithmetic never depends on the worker count, so identical
inputs produce byte-identical report files.  ``HSLAB_THREADS`` overrides
``experiment.workers`` at runtime.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import __version__
from .analysis import default_window, envelope_bins, envelope_fit
from .bessel import i0, i0_scaled
from .config import RunSpec, parse_config, serialize_config
from .errors import ConfigError, ConvergenceFailure, HslabError
from .grid import Disk, Grid2D, ScalarField, bilinear_sample, gradient
from .metrics import (
    RayGeometry,
    near_slope_fit,
    ray_scan,
    stokes_report,
)
from .quaddiff import PolynomialQD, PolynomialVF, radius_field
from .selfduality import SelfDualityProblem, SolveConfig, semiflat_gap, solve_u
from .variation import semiflat_F, solve_F

SUBCOMMANDS = ("solve", "decay", "stokes", "ray", "bessel")


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17e}"


def _solve_config(spec: RunSpec) -> SolveConfig:
    return SolveConfig(
        newton_tol=spec.newton_tol,
        max_newton=spec.max_newton,
        cg_rel_tol=spec.cg_rel_tol,
        cg_max_iters=spec.cg_max_iters,
        armijo_c1=spec.armijo_c1,
        armijo_backtrack=spec.armijo_backtrack,
        armijo_max_halvings=spec.armijo_max_halvings,
    )


def _grid(spec: RunSpec) -> Grid2D:
    return Grid2D(center=spec.effective_center(), half_width=spec.grid_l, n=spec.grid_n)


def _problem(spec: RunSpec) -> tuple[PolynomialQD, PolynomialQD, Grid2D]:
    P = PolynomialQD(spec.p, spec.chart)
    Pdot = PolynomialQD(spec.pdot, spec.chart)
    return P, Pdot, _grid(spec)


def _workers(spec: RunSpec) -> int:
    env = os.environ.get("HSLAB_THREADS")
    if env is None:
        return spec.workers
    try:
        w = int(env)
    except ValueError:
        raise ConfigError(f"HSLAB_THREADS must be a positive integer, got {env!r}") from None
    if w <= 0:
        raise ConfigError(f"HSLAB_THREADS must be a positive integer, got {env!r}")
    return w


# ---------------------------------------------------------------------------
# output writers


def _write_report(out_dir: str, header: list[str], rows: list[list]) -> None:
    path = os.path.join(out_dir, "report.csv")
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else _fmt(v) for v in row) + "\n")


def _write_meta(out_dir: str, spec: RunSpec, subcommand: str) -> None:
    with open(os.path.join(out_dir, "meta.txt"), "w", newline="\n") as fh:
        fh.write(f"hslab {__version__}\n")
        fh.write(f"subcommand = {subcommand}\n")
        fh.write(serialize_config(spec))


def _write_field(out_dir: str, name: str, field: ScalarField) -> None:
    g = field.grid
    path = os.path.join(out_dir, f"field_{name}.csv")
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# n={g.n}, L={_fmt(g.half_width)}, center={_fmt(g.center.real)},{_fmt(g.center.imag)}\n")
        for k in range(g.n):
            fh.write(",".join(_fmt(v) for v in field.values[k, :]) + "\n")


def _dump_fields(out_dir: str, spec: RunSpec, P, Pdot, grid, u, config) -> None:
    wanted = tuple(f.lower() for f in spec.fields)
    if "u" in wanted:
        _write_field(out_dir, "u", u)
    if "w" in wanted:
        _write_field(out_dir, "w", semiflat_gap(u, P))
    if "r" in wanted:
        _write_field(out_dir, "r", radius_field(P, grid, spec.stencil))
    if "f" in wanted:
        F = solve_F(P, Pdot, u, config)
        _write_field(out_dir, "F_re", ScalarField(grid, F.values.real))
        _write_field(out_dir, "F_im", ScalarField(grid, F.values.imag))


def _png(spec: RunSpec) -> bool:
    return "png" in tuple(f.lower() for f in spec.formats)


# ---------------------------------------------------------------------------
# subcommand handlers


def _run_solve(spec: RunSpec, out_dir: str, quiet: bool) -> int:
    P, Pdot, grid = _problem(spec)
    config = _solve_config(spec)
    code = 0
    try:
        u, report = solve_u(SelfDualityProblem(P, grid), config)
    except ConvergenceFailure as exc:
        u, report = exc.u, exc.report
        code = 2
    u_origin = (
        bilinear_sample(u, 0j) if grid.contains(0j) else bilinear_sample(u, grid.center)
    )
    header = ["iterations", "final_residual_inf", "energy", "converged", "u_origin"]
    rows = [[report.iterations, report.final_residual_inf, report.energy, report.converged, u_origin]]
    _write_report(out_dir, header, rows)
    _write_meta(out_dir, spec, "solve")
    _dump_fields(out_dir, spec, P, Pdot, grid, u, config)
    if _png(spec):
        from .figures import render_field

        render_field(u, "solved log density u", os.path.join(out_dir, "fig_solve.png"))
    if not quiet:
        print(
            f"solve: converged={report.converged} iterations={report.iterations} "
            f"residual={report.final_residual_inf:.3e} u(0)={u_origin:.12g}"
        )
    return code


def _run_decay(spec: RunSpec, out_dir: str, quiet: bool) -> int:
    P, Pdot, grid = _problem(spec)
    config = _solve_config(spec)
    u, report = solve_u(SelfDualityProblem(P, grid), config)
    r = radius_field(P, grid, spec.stencil)
    r_max = float(np.max(r.values[1:-1, 1:-1]))
    window = default_window(r_max)
    window = (
        spec.fit_rmin if spec.fit_rmin is not None else window[0],
        spec.fit_rmax if spec.fit_rmax is not None else window[1],
    )
    z = grid.nodes()
    w = semiflat_gap(u, P)
    wx, wy = gradient(w)
    sqrtP = np.sqrt(np.abs(P(z)))
    F = solve_F(P, Pdot, u, config)
    targets = [
        ("w_c0", ScalarField(grid, np.abs(w.values))),
        ("w_c1", ScalarField(grid, np.hypot(wx.values, wy.values) / sqrtP)),
        ("f", ScalarField(grid, np.abs(F.values - semiflat_F(P, Pdot, grid).values))),
    ]
    header = ["target", "gamma", "log_amplitude", "r_min", "r_max", "bins_used", "rms_log_residual"]
    rows = []
    curves = []
    for name, field in targets:
        fit = envelope_fit(field, r, window, spec.bins)
        rows.append([name, fit.gamma, fit.log_amplitude, fit.window[0], fit.window[1], fit.samples, fit.rms_log_residual])
        centers, maxima = envelope_bins(field, r, window, spec.bins)
        curves.append((name, centers, maxima, fit))
        if not quiet:
            print(f"decay {name}: gamma={fit.gamma:.4f} rms={fit.rms_log_residual:.4f}")
    _write_report(out_dir, header, rows)
    _write_meta(out_dir, spec, "decay")
    _dump_fields(out_dir, spec, P, Pdot, grid, u, config)
    if _png(spec):
        from .figures import render_decay

        render_decay(curves, os.path.join(out_dir, "fig_decay.png"))
    return 0


def _run_stokes(spec: RunSpec, out_dir: str, quiet: bool) -> int:
    P, Pdot, grid = _problem(spec)
    config = _solve_config(spec)
    chi = PolynomialVF(spec.chi, spec.chart)
    rho = spec.rho if spec.rho is not None else (2.0 / 3.0) * spec.grid_l
    u, report = solve_u(SelfDualityProblem(P, grid), config)
    radii = [rho * s for s in (0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)]
    header = ["rho", "disk_integral", "boundary_integral", "residual", "scale", "relative"]
    rows = []
    disk_vals, beta_vals, residuals = [], [], []
    for rr in radii:
        rep = stokes_report(P, chi, u, Disk(spec.disk_center, rr), grid, spec.circle_samples)
        rows.append([rr, rep.disk_integral, rep.boundary_integral, rep.residual, rep.scale, rep.relative])
        disk_vals.append(rep.disk_integral)
        beta_vals.append(rep.boundary_integral)
        residuals.append(rep.residual)
        if not quiet and rr == radii[-1]:
            print(
                f"stokes rho={rr:g}: disk={rep.disk_integral:.6e} boundary={rep.boundary_integral:.6e} "
                f"residual={rep.residual:.3e} relative={rep.relative:.3e}"
            )
    _write_report(out_dir, header, rows)
    _write_meta(out_dir, spec, "stokes")
    _dump_fields(out_dir, spec, P, Pdot, grid, u, config)
    if _png(spec):
        from .figures import render_stokes

        render_stokes(radii, disk_vals, beta_vals, residuals, os.path.join(out_dir, "fig_stokes.png"))
    return 0


def _run_ray(spec: RunSpec, out_dir: str, quiet: bool) -> int:
    P0 = PolynomialQD(spec.p, spec.chart)
    Pdot = PolynomialQD(spec.pdot, spec.chart)
    geometry = RayGeometry(
        L=spec.grid_l,
        n=spec.grid_n,
        r0=spec.r0,
        center=spec.grid_center,
        m=spec.circle_samples,
    )
    config = _solve_config(spec)
    rows_data = ray_scan(P0, Pdot, spec.t_list, geometry, config, workers=_workers(spec))
    r0 = geometry.r0_value(abs(P0.coeffs[1]))
    try:
        slope = near_slope_fit(rows_data, r0)
    except HslabError:
        slope = float("nan")
    header = [
        "t", "R", "g_value", "gsf_value", "diff", "near_integral", "beta_boundary",
        "stokes_residual", "mu_max", "solve_iterations", "solve_residual", "converged",
    ]
    rows: list[list] = []
    for row in rows_data:
        rows.append([
            row.t, row.R, row.g_value, row.gsf_value, row.diff, row.near_integral,
            row.beta_boundary, row.stokes_residual, row.mu_max, row.solve_iterations,
            row.solve_residual, row.solve_converged,
        ])
    rows.append(["slope", slope] + [""] * (len(header) - 2))
    _write_report(out_dir, header, rows)
    _write_meta(out_dir, spec, "ray")
    if _png(spec):
        from .figures import render_ray

        render_ray(rows_data, r0, slope if math.isfinite(slope) else None,
                   os.path.join(out_dir, "fig_ray.png"))
    if not quiet:
        for row in rows_data:
            print(
                f"ray t={row.t:g}: near={row.near_integral:.6e} beta={row.beta_boundary:.6e} "
                f"diff={row.diff:.6e} converged={row.solve_converged}"
            )
        print(f"ray slope: {slope:.6g}")
    return 0 if all(r.solve_converged for r in rows_data) else 2


def _run_bessel(spec: RunSpec, out_dir: str, quiet: bool) -> int:
    header = ["x", "i0", "i0_scaled"]
    rows = []
    xs, scaled = [], []
    for x in spec.x_list:
        v_scaled = i0_scaled(x)
        v = i0(x) if abs(x) <= 700 else float("nan")
        rows.append([x, v, v_scaled])
        xs.append(x)
        scaled.append(v_scaled)
    _write_report(out_dir, header, rows)
    _write_meta(out_dir, spec, "bessel")
    if _png(spec):
        from .figures import render_bessel

        render_bessel(xs, scaled, os.path.join(out_dir, "fig_bessel.png"))
    if not quiet:
        print(f"bessel: wrote {len(rows)} rows")
    return 0


_HANDLERS = {
    "solve": _run_solve,
    "decay": _run_decay,
    "stokes": _run_stokes,
    "ray": _run_ray,
    "bessel": _run_bessel,
}


def run(subcommand: str, spec: RunSpec, out_dir: str | None = None, quiet: bool = False) -> int:
    """Execute one subcommand; returns the process exit code."""
    if subcommand not in _HANDLERS:
        raise ConfigError(f"unknown subcommand {subcommand!r}; choose from {', '.join(SUBCOMMANDS)}")
    target = out_dir if out_dir is not None else spec.out_dir
    os.makedirs(target, exist_ok=True)
    try:
        return _HANDLERS[subcommand](spec, target, quiet)
    except ConvergenceFailure:
        return 2
    except ConfigError:
        raise
    except HslabError as exc:
        if not quiet:
            print(f"validation failure: {exc}", file=sys.stderr)
        return 3


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hslab", description=__doc__.splitlines()[0])
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="path to the run config")
    parser.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    args = parser.parse_args(argv)
    try:
        with open(args.config) as fh:
            spec = parse_config(fh.read())
        code = run(args.subcommand, spec, args.out, args.quiet)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    return code


if __name__ == "__main__":
    sys.exit(main())
