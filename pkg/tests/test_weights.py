import mpmath
import numpy as np
import pytest

from fockinterp.weights import (
    LOGSQUARE_R0,
    ModifiedWeight,
    RadialWeight,
    WeightDomainError,
    d_rho,
    dphi,
    laplacian_fd,
    phi,
    phi_beta,
    rho,
    rho_at,
)

A2, A1 = RadialWeight.power(2.0), RadialWeight.power(1.0)
LOG2 = RadialWeight.logsquare()


def test_phi_values():
    assert phi(A2, 0.0) == 0.0
    assert phi(A2, 3.0) == 9.0
    e2 = float(mpmath.e**2)
    assert phi(LOG2, e2) == pytest.approx(float(mpmath.log(mpmath.e**2) ** 2), rel=1e-14)


def test_phi_rejects_negative_radius():
    with pytest.raises(WeightDomainError):
        phi(A2, -1.0)


@pytest.mark.parametrize("a", [0.5, 1.0, 1.5, 2.0])
def test_power_phi_monotone(a):
    r = np.linspace(0, 50, 2001)
    assert np.all(np.diff(phi(RadialWeight.power(a), r)) > 0)


def test_logsquare_extension_is_c1_and_nonnegative():
    r = np.linspace(0, 10, 5001)
    v = phi(LOG2, r)
    assert np.all(v >= 0)
    assert np.all(np.diff(v) >= -1e-15)
    h = 1e-7
    left = phi(LOG2, LOGSQUARE_R0 - h)
    right = phi(LOG2, LOGSQUARE_R0 + h)
    assert abs(right - left) < 1e-6
    assert dphi(LOG2, LOGSQUARE_R0 - 1e-9) == pytest.approx(dphi(LOG2, LOGSQUARE_R0 + 1e-9), rel=1e-6)


def test_rho_closed_forms():
    assert rho(A2, 7.3) == 0.5
    assert rho(A1, 4.0) == pytest.approx(2.0)
    assert rho(LOG2, 10.0) == pytest.approx(10 / np.sqrt(2), rel=1e-14)


@pytest.mark.parametrize("w, r", [(A2, 3.0), (A1, 4.0), (LOG2, 10.0), (RadialWeight.power(1.5), 7.0)])
def test_rho_against_finite_difference_laplacian(w, r):
    h = 1e-3 * max(r, 1.0)
    assert rho(w, r) * np.sqrt(laplacian_fd(w, r, h)) == pytest.approx(1.0, rel=1e-6)


@pytest.mark.parametrize("a", [0.5, 1.0, 1.5, 2.0])
def test_power_rho_identity(a):
    r = np.linspace(0.5, 50, 200)
    w = RadialWeight.power(a)
    np.testing.assert_allclose(rho(w, r) * a * r ** (a / 2 - 1), 1.0, rtol=1e-14)
    fd = np.array([laplacian_fd(w, x, 1e-3 * x) for x in r])
    np.testing.assert_allclose(rho(w, r) * np.sqrt(fd), 1.0, rtol=1e-6)


def test_rho_domain():
    with pytest.raises(WeightDomainError):
        rho(A2, 0.0)
    assert rho_at(A2, 0) == 0.5
    assert rho_at(A1, 0) == 0.0


@pytest.mark.parametrize("w", [A1, A2, RadialWeight.power(0.5), LOG2])
def test_doubling_property(w):
    x = np.linspace(1, 200, 400)
    for C in (0.5, 1.0, 2.0):
        q = rho(w, x + C * rho(w, x)) / rho(w, x)
        assert 0.2 < q.min() and q.max() < 5


def test_phi_beta():
    mw = ModifiedWeight(A2, 0.75)
    assert phi_beta(mw, 1.0) == pytest.approx(1 + 0.75 * np.log(2))
    assert phi_beta(ModifiedWeight(A2, 0.25), 0.0) == 0.0
    r = np.linspace(0, 20, 50)
    np.testing.assert_array_equal(phi_beta(ModifiedWeight(A2, 0.0), r), phi(A2, r))
    np.testing.assert_allclose(phi_beta(mw, r) - phi(A2, r), 0.75 * np.log1p(r), rtol=0, atol=1e-13)
    with pytest.raises(WeightDomainError):
        ModifiedWeight(A2, -0.1)


def test_d_rho_examples():
    assert d_rho(A2, 1 + 1j, 1 + 1j) == 0.0
    assert d_rho(A2, 0, 1) == pytest.approx(2.0)
    assert d_rho(A1, 1, 4) == pytest.approx(3.0)
    # both densities vanish at a single point only, so distinct points stay apart
    assert d_rho(A1, 0, 0) == 0.0


def test_d_rho_symmetric(rng):
    z = rng.normal(size=50) * 5 + 1j * rng.normal(size=50) * 5
    v = rng.normal(size=50) * 5 + 1j * rng.normal(size=50) * 5
    for w in (A1, A2, LOG2):
        np.testing.assert_array_equal(d_rho(w, z, v), d_rho(w, v, z))


def test_invalid_weights():
    with pytest.raises(WeightDomainError):
        RadialWeight.power(2.5)
    with pytest.raises(WeightDomainError):
        RadialWeight("cubic")
