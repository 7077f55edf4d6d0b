import numpy as np
import pytest
from scipy.integrate import quad

from fockinterp.contours import Contour, build_contour
from fockinterp.quadrature import (
    NormalizedFunction,
    QuadratureError,
    QuadratureSpec,
    contour_integral,
    disc_integral,
    gaussian_disc_integral,
    partial_norms_sq,
    region_norm_sq,
    submeanvalue_check,
    weighted_norm,
    weighted_norm_sq,
)
from fockinterp.weights import ModifiedWeight, RadialWeight

W2 = RadialWeight.power(2.0)
MW0 = ModifiedWeight(W2, 0.0)


def monomial_u(n, a=2.0):
    return NormalizedFunction(lambda z: z**n * np.exp(-np.abs(z) ** a), (n / a + 40) ** (1 / a))


def test_zero_function():
    u = NormalizedFunction(lambda z: np.zeros_like(z), 1.0)
    assert weighted_norm(u, MW0) == 0.0


def test_constant_and_monomial_norms():
    assert weighted_norm_sq(monomial_u(0), MW0, QuadratureSpec()) == pytest.approx(np.pi / 2, rel=1e-10)
    assert weighted_norm_sq(monomial_u(1), MW0, QuadratureSpec()) == pytest.approx(np.pi / 4, rel=1e-10)
    # against scipy's adaptive radial quadrature for a = 1
    ref = 2 * np.pi * quad(lambda r: r ** 7 * np.exp(-2 * r), 0, np.inf)[0]
    mw1 = ModifiedWeight(RadialWeight.power(1.0), 0.0)
    assert weighted_norm_sq(monomial_u(3, 1.0), mw1, QuadratureSpec()) == pytest.approx(ref, rel=1e-8)


def test_homogeneity():
    u = monomial_u(2)
    c = 3.0 - 4.0j
    assert weighted_norm(u.scaled(c), MW0) == pytest.approx(5.0 * weighted_norm(u, MW0), rel=1e-12)


def test_beta_monotone():
    u = monomial_u(4)
    vals = [weighted_norm(u, ModifiedWeight(W2, b)) for b in (0.0, 0.25, 0.75, 1.5)]
    assert all(x > y for x, y in zip(vals, vals[1:]))
    ref = 2 * np.pi * quad(lambda r: r**9 * np.exp(-2 * r * r) * (1 + r) ** -1.5, 0, np.inf)[0]
    assert vals[2] ** 2 == pytest.approx(ref, rel=1e-8)


def test_tail_check_enforced():
    u = NormalizedFunction(lambda z: np.exp(-0.01 * np.abs(z)), 5.0)
    with pytest.raises(QuadratureError):
        weighted_norm_sq(u, MW0, QuadratureSpec())


def test_partial_norms_accumulate():
    u = monomial_u(0)
    radii = [0.5, 1.0, 2.0, 7.0]
    p = partial_norms_sq(u, MW0, radii)
    ref = [np.pi / 2 * (1 - np.exp(-2 * R * R)) for R in radii]
    np.testing.assert_allclose(p, ref, rtol=1e-10)


def test_region_norm_on_circle_is_disc():
    u = monomial_u(1)
    c = Contour.circle(1.5)
    ref = 2 * np.pi * quad(lambda r: r**3 * np.exp(-2 * r * r), 0, 1.5)[0]
    assert region_norm_sq(u, MW0, c) == pytest.approx(ref, rel=1e-9)


def test_region_norm_on_bumped_contour(lattice24):
    c = build_contour(lattice24, 13)
    u = monomial_u(0)
    # reference: polar integral of the radial profile, exact in r
    th = np.linspace(0, 2 * np.pi, 20001)[:-1]
    rr = c.R * c.r(th)
    ref = np.mean(np.pi / 2 * (1 - np.exp(-2 * rr * rr)))
    assert region_norm_sq(u, MW0, c) == pytest.approx(ref, rel=1e-8)


def test_contour_integral_basics(lattice24):
    c = build_contour(lattice24, 29)
    assert contour_integral(lambda z: 1 / z, c).to_complex() == pytest.approx(1.0, abs=1e-10)
    assert abs(contour_integral(lambda z: np.ones_like(z), c).to_complex()) < 1e-10
    p = (c.R + 2 * 0.5 + 0.5) * np.exp(0.7j)
    assert abs(contour_integral(lambda z: 1 / (z - p), c).to_complex()) < 1e-10


def test_contour_integral_log_form_large_values():
    c = Contour.circle(3.0)
    # (1/2 pi i) int e^{z^2 + 500}/z dz = e^500, far outside double range before rescaling
    v = contour_integral(lambda z: z * z + 500 - np.log(z), c, log_form=True)
    assert v.logmag == pytest.approx(500.0, abs=1e-10)


def test_contour_integral_parameterization_invariance(lattice24):
    c = build_contour(lattice24, 13)
    h = lambda z: np.exp(z) / (z - 0.3)
    a = contour_integral(h, c).to_complex()
    rot = Contour(c.R, np.mod(c.centers + 0.37, 2 * np.pi), c.signs, c.halfwidth, c.N, c.delta, c.rho_N)
    # rotating the curve and the integrand together is a re-parameterization
    b = contour_integral(lambda z: h(z * np.exp(-0.37j)) * np.exp(-0.37j), rot).to_complex()
    assert abs(a - b) < 1e-10 * abs(a)
    assert a == pytest.approx(np.exp(0.3), rel=1e-10)


def test_gaussian_disc_oracle():
    for c0 in (0.0, 1.0 + 0.5j):
        u = lambda z: np.exp(-np.abs(z) ** 2)
        assert disc_integral(u, c0, 0.5) == pytest.approx(gaussian_disc_integral(c0, 0.5), rel=1e-9)


def test_submeanvalue():
    const = lambda z: np.exp(-np.abs(z) ** 2)
    res = submeanvalue_check([const], W2, 1.0, [(0, 2.0 + 1.0j)])
    ref = np.exp(-2 * 5.0) * 0.25 / gaussian_disc_integral(2 + 1j, 0.5)
    assert res["max"] == pytest.approx(ref, rel=1e-8)
    with_zero = lambda z: (z - 1.0) * np.exp(-np.abs(z) ** 2)
    assert submeanvalue_check([with_zero], W2, 1.0, [(0, 1.0 + 0j)])["max"] == 0.0
    with pytest.raises(ValueError):
        submeanvalue_check([const], W2, 0.0, [(0, 1.0)])


def test_submeanvalue_stable_under_refinement(rng):
    funcs = [lambda z, n=n, w=w: z**n * np.exp(2 * np.conj(w) * z - np.abs(z) ** 2)
             for n, w in [(1, 0.5), (3, 1j), (5, -0.7 + 0.2j)]]
    samples = [(int(rng.integers(3)), complex(rng.uniform(-3, 3), rng.uniform(-3, 3))) for _ in range(100)]
    a = submeanvalue_check(funcs, W2, 1.0, samples)["max"]
    b = submeanvalue_check(funcs, W2, 1.0, samples, QuadratureSpec(panels_per_rho=4, gl_order=12))["max"]
    assert np.isfinite(a) and a == pytest.approx(b, rel=0.05)
