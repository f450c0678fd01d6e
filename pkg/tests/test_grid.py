import math

import numpy as np
import pytest

from hslab import (
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
from hslab.errors import RegionOutOfBounds, SampleOutOfBounds


def _grid(n=65, L=1.0, center=0j):
    return Grid2D(center=center, half_width=L, n=n)


def test_grid_invariants():
    with pytest.raises(ValueError):
        Grid2D(n=64)
    with pytest.raises(ValueError):
        Grid2D(n=31)
    with pytest.raises(ValueError):
        Grid2D(half_width=-1.0)
    g = _grid()
    assert g.h == pytest.approx(2.0 / 64)
    assert g.nodes()[0, 0] == pytest.approx(-1 - 1j)


def test_laplacian_exact_on_quadratics():
    g = _grid()
    z = g.nodes()
    f = ScalarField(g, z.real**2 + z.imag**2)
    lap = laplacian(f).values
    assert np.allclose(lap[1:-1, 1:-1], 4.0, atol=1e-11)
    assert np.all(np.isnan(lap[0, :]))
    lin = laplacian(ScalarField(g, z.real)).values
    assert np.allclose(lin[1:-1, 1:-1], 0.0, atol=1e-12)


def test_laplacian_quartic_closed_form():
    g = _grid()
    z = g.nodes()
    lap = laplacian(ScalarField(g, z.real**4)).values
    want = 12.0 * z.real[1:-1, 1:-1] ** 2 + 2.0 * g.h**2
    assert np.allclose(lap[1:-1, 1:-1], want, atol=1e-10)


def test_gradient_examples():
    g = _grid()
    z = g.nodes()
    fx, fy = gradient(ScalarField(g, z.real))
    assert np.allclose(fx.values, 1.0, atol=1e-13)
    assert np.allclose(fy.values, 0.0, atol=1e-13)
    fx2, _ = gradient(ScalarField(g, z.real**2))
    assert np.allclose(fx2.values[:, 1:-1], 2.0 * z.real[:, 1:-1], atol=1e-11)
    fx3, _ = gradient(ScalarField(g, z.real**3))
    want = 3.0 * z.real[:, 1:-1] ** 2 + g.h**2
    assert np.allclose(fx3.values[:, 1:-1], want, atol=1e-10)


@pytest.mark.parametrize("op", ["laplacian", "gradient"])
def test_stencils_second_order(op):
    errs = []
    for n in (65, 129):
        g = _grid(n=n)
        z = g.nodes()
        f = ScalarField(g, np.sin(z.real) * np.cos(z.imag))
        if op == "laplacian":
            got = laplacian(f).values[1:-1, 1:-1]
            want = -2.0 * np.sin(z.real[1:-1, 1:-1]) * np.cos(z.imag[1:-1, 1:-1])
        else:
            got = gradient(f)[0].values[1:-1, 1:-1]
            want = np.cos(z.real[1:-1, 1:-1]) * np.cos(z.imag[1:-1, 1:-1])
        errs.append(np.max(np.abs(got - want)))
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_integrate_region_disk_refinement():
    errs = []
    for n in (65, 129, 257):
        g = _grid(n=n)
        one = ScalarField(g, np.ones((n, n)))
        val = integrate_region(one, Disk(0j, 0.6))
        errs.append(abs(val - math.pi * 0.36))
    assert errs[2] < errs[0]
    assert errs[2] <= 0.05 * math.pi * 0.36


def test_integrate_region_zero_and_odd_symmetry():
    g = _grid()
    zero = ScalarField(g, np.zeros((g.n, g.n)))
    assert integrate_region(zero, WholeInterior()) == 0.0
    x = ScalarField(g, g.nodes().real)
    assert integrate_region(x, Disk(0j, 0.7)) == 0.0


def test_integrate_region_additive_and_monotone():
    g = _grid(n=129)
    z = g.nodes()
    dens = ScalarField(g, 1.0 + z.real**2)
    inner = integrate_region(dens, Disk(0j, 0.3))
    ring = integrate_region(dens, Annulus(0j, 0.3, 0.7))
    outer = integrate_region(dens, Disk(0j, 0.7))
    assert inner + ring == pytest.approx(outer, rel=1e-14)
    assert inner <= outer


def test_integrate_region_exclusions_and_bounds():
    g = _grid(n=65)
    one = ScalarField(g, np.ones((g.n, g.n)))
    full = integrate_region(one, Disk(0j, 0.6))
    holed = integrate_region(one, Disk(0j, 0.6), exclusions=[Disk(0j, 0.2)])
    assert holed < full
    with pytest.raises(RegionOutOfBounds):
        integrate_region(one, Disk(0.9 + 0j, 0.3))


def test_circle_integral_examples():
    g = _grid(n=65)

    def area_form(z):
        return -z.imag, z.real  # x dy - y dx has (w_x, w_y) = (-y, x)

    rho = 0.5
    val = circle_integral(area_form, 0j, rho, 64, g)
    assert val == pytest.approx(2 * math.pi * rho**2, abs=1e-12)

    val = circle_integral(lambda z: (np.ones_like(z.real), np.zeros_like(z.real)), 0j, rho, 64)
    assert abs(val) < 1e-12

    def angle_form(z):
        r2 = np.abs(z) ** 2
        return -z.imag / r2, z.real / r2

    assert circle_integral(angle_form, 0j, rho, 64) == pytest.approx(2 * math.pi, abs=1e-12)


def test_circle_integral_of_exact_differential_vanishes():
    # samplers built from gradients of sampled smooth fields circulate to
    # zero at rounding level (well beyond the required second order)
    for n in (65, 129):
        g = _grid(n=n)
        z = g.nodes()
        f = ScalarField(g, np.sin(2 * z.real) * z.imag**2)
        fx, fy = gradient(f)

        def sampler(pts):
            return bilinear_sample(fx, pts), bilinear_sample(fy, pts)

        assert abs(circle_integral(sampler, 0.1 + 0j, 0.55, 256, g)) <= 5e-13


def test_circle_integral_bounds_and_m():
    g = _grid(n=65)
    with pytest.raises(RegionOutOfBounds):
        circle_integral(lambda z: (z.real, z.imag), 0.8 + 0j, 0.5, 64, g)
    with pytest.raises(ValueError):
        circle_integral(lambda z: (z.real, z.imag), 0j, 0.3, 8)


def test_bilinear_sample_examples():
    g = _grid(n=65)
    z = g.nodes()
    fx = ScalarField(g, z.real)
    assert bilinear_sample(fx, 0.123 + 0.456j) == pytest.approx(0.123, abs=1e-14)
    assert bilinear_sample(fx, z[3, 5]) == pytest.approx(z[3, 5].real, abs=1e-14)
    fq = ScalarField(g, z.real**2)
    x0 = z[0, 10].real
    mid = x0 + g.h / 2
    want = mid**2 + g.h**2 / 4
    assert bilinear_sample(fq, complex(mid, 0.0)) == pytest.approx(want, abs=1e-13)
    cf = ComplexField(g, z)
    assert bilinear_sample(cf, 0.2 + 0.3j) == pytest.approx(0.2 + 0.3j, abs=1e-14)
    with pytest.raises(SampleOutOfBounds):
        bilinear_sample(fx, 1.5 + 0j)


def test_fields_immutable_and_shape_checked():
    g = _grid(n=65)
    f = ScalarField(g, np.zeros((g.n, g.n)))
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0
    with pytest.raises(ValueError):
        ScalarField(g, np.zeros((3, 3)))
