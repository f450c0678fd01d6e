"""Figure rendering for the CLI report path.

Every subcommand that writes report.csv can also render a PNG summary next
to it (enabled by ``output.formats`` containing ``png``).  Figures are
diagnostic companions to the delimited output, never a data source; all
numbers shown are read back from the same values the CSV carries.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import DecayFit
from .grid import ScalarField

__all__ = [
    "render_field",
    "render_decay",
    "render_ray",
    "render_stokes",
    "render_bessel",
]

_DPI = 130


def render_field(field: ScalarField, title: str, path: str) -> None:
    g = field.grid
    fig, ax = plt.subplots(figsize=(5.4, 4.6))
    extent = (
        g.center.real - g.half_width,
        g.center.real + g.half_width,
        g.center.imag - g.half_width,
        g.center.imag + g.half_width,
    )
    im = ax.imshow(field.values, origin="lower", extent=extent, cmap="viridis")
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def render_decay(
    curves: list[tuple[str, np.ndarray, np.ndarray, DecayFit]],
    path: str,
) -> None:
    """Semilog envelope data with fitted lines; one curve per fit target."""
    fig, ax = plt.subplots(figsize=(6.0, 4.4))
    for label, r_bins, maxima, fit in curves:
        good = maxima > 0
        ax.semilogy(r_bins[good], maxima[good], "o", ms=4, label=f"{label}: gamma={fit.gamma:.2f}")
        rr = np.linspace(fit.window[0], fit.window[1], 64)
        ax.semilogy(rr, np.exp(fit.log_amplitude - fit.gamma * rr), "-", lw=1)
    ax.set_xlabel("flat-metric radius r")
    ax.set_ylabel("per-bin envelope max")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def render_ray(rows, r0: float, slope: float | None, path: str) -> None:
    xs = [math.sqrt(row.t) * r0 for row in rows if not row.failed]
    near = [abs(row.near_integral) for row in rows if not row.failed]
    beta = [abs(row.beta_boundary) for row in rows if not row.failed]
    fig, ax = plt.subplots(figsize=(6.0, 4.4))
    ax.semilogy(xs, near, "o-", label="|near-disk integral|")
    ax.semilogy(xs, beta, "s--", label="|boundary form|")
    if slope is not None and len(xs) >= 2 and min(near) > 0:
        x0 = np.linspace(min(xs), max(xs), 32)
        c = math.log(near[0]) - slope * xs[0]
        ax.semilogy(x0, np.exp(c + slope * x0), "k:", lw=1, label=f"slope {slope:.2f}")
    ax.set_xlabel(r"$\sqrt{t}\, r_0$")
    ax.set_ylabel("integral magnitude")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def render_stokes(radii, disk_vals, beta_vals, residuals, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.4))
    ax.semilogy(radii, np.abs(disk_vals), "o-", label="|disk integral|")
    ax.semilogy(radii, np.abs(beta_vals), "s--", label="|boundary form|")
    ax.semilogy(radii, np.abs(residuals), "^:", label="|residual|")
    ax.set_xlabel("disk radius")
    ax.set_ylabel("magnitude")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def render_bessel(xs, scaled, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    xs = np.asarray(xs)
    scaled = np.asarray(scaled)
    ax.loglog(xs[xs > 0], scaled[xs > 0], "o-", label="e^{-x} I0(x)")
    ref = 1.0 / np.sqrt(2 * np.pi * xs[xs > 0])
    ax.loglog(xs[xs > 0], ref, "k:", lw=1, label="(2 pi x)^{-1/2}")
    ax.set_xlabel("x")
    ax.set_ylabel("scaled I0")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
