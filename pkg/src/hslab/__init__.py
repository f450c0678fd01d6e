"""Numerical laboratory for the self-duality and complex-variation equations
of SL(2) Higgs bundles on planar model charts."""

from .analysis import DecayFit, boundary_max_check, comparison_check, envelope_fit
from .bessel import envelope, i0, i0_scaled
from .grid import (
    Annulus,
    ComplexField,
    Disk,
    Grid2D,
    ScalarField,
    WholeInterior,
    bilinear_sample,
    circle_integral,
    gradient,
    integrate_region,
    laplacian,
)
from .metrics import (
    RayGeometry,
    RayRow,
    StokesBreakdown,
    beta_circle,
    delta_field,
    delta_holo,
    delta_shifted,
    integrate_delta,
    near_slope_fit,
    pairing_g,
    pairing_gsf,
    ray_scan,
    stokes_report,
    stokes_residual,
)
from .quaddiff import (
    PolynomialQD,
    PolynomialVF,
    chi_for_variation,
    eval_qd,
    find_zeros,
    lie_derivative,
    radius_field,
    threshold,
)
from .selfduality import (
    SelfDualityProblem,
    SolveConfig,
    SolveReport,
    energy,
    residual_u,
    semiflat_gap,
    semiflat_logdensity,
    solve_u,
)
from .variation import F_from_vectorfield, residual_F, semiflat_F, solve_F, u_z_field

__version__ = "0.1.0"
