import mpmath
import numpy as np
import pytest
from scipy.special import gamma as Gamma

from fockinterp.genfun import (
    AnnularGrid,
    SineType,
    TruncationError,
    certify_sinetype,
    eval_log_S,
    eval_log_Sprime_at_zero,
    eval_log_Sprime_sigma,
    log_sigma,
    sigma_lattice,
    sigma_over_linear,
    sigma_product,
    taylor_coeffs,
)
from fockinterp.lattice import CRITICAL_OMEGA as OM
from fockinterp.weights import rho_at

mpmath.mp.dps = 40
_Q = mpmath.exp(-mpmath.pi)
_T1P0 = mpmath.jtheta(1, 0, _Q, 1)


def sigma_mp(z):
    """Theta-function representation evaluated directly in multiprecision (no cell reduction)."""
    z = mpmath.mpc(z)
    return (OM / mpmath.pi) * mpmath.exp(z * z) * mpmath.jtheta(1, mpmath.pi * z / OM, _Q) / _T1P0


@pytest.mark.parametrize("z", [0.3 + 0.1j, 2.2 - 1.7j, -4.1 + 3.3j, 6.5 + 0.2j, -2.0 - 7.9j])
def test_sigma_matches_multiprecision_theta(z):
    ref = complex(mpmath.log(sigma_mp(z)))
    got = complex(log_sigma(z))
    assert got.real == pytest.approx(ref.real, abs=1e-10)
    assert np.exp(1j * (got.imag - ref.imag)) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("z", [1.1 + 0.4j, 3.0 - 2.5j, -4.4 + 0.9j])
def test_sigma_matches_product_oracle(z):
    assert np.exp(complex(log_sigma(z)) - sigma_product(z)) == pytest.approx(1.0, abs=1e-9)


def test_zeros_are_zeros(sigma24):
    lam = sigma24.zeros.points[:60]
    assert np.all(np.isneginf(eval_log_S(sigma24, lam).logmag))


def test_sigma_near_origin():
    assert log_sigma(1e-6).real == pytest.approx(np.log(1e-6), abs=1e-9)


def test_periodicity_of_normalized_modulus(rng):
    z = rng.uniform(-7, 7, 200) + 1j * rng.uniform(-7, 7, 200)
    base = log_sigma(z, normalized=True).real
    for shift in (OM, 1j * OM):
        np.testing.assert_allclose(log_sigma(z + shift, normalized=True).real, base, atol=1e-8)
    c = OM * (1 + 1j) / 2
    assert log_sigma(c, normalized=True).real == pytest.approx(log_sigma(c + OM, normalized=True).real, abs=1e-8)


def test_zero_dip(sigma24):
    for lam in sigma24.zeros.points[:40]:
        r = float(rho_at(sigma24.weight, lam))
        deep = sigma24.log_eval(lam + 1e-8).real
        near = sigma24.log_eval(lam + 1e-2 * r).real
        assert deep <= near - 10


def test_truncation_guard():
    s = sigma_lattice(10.0)
    with pytest.raises(TruncationError):
        s.log_eval(9.5)


def test_sprime_closed_form_and_cauchy(sigma24):
    assert complex(eval_log_Sprime_sigma(0.0)) == 0
    sp0 = eval_log_Sprime_at_zero(sigma24, 1)
    assert sp0.logmag == pytest.approx(0.0, abs=1e-12)
    assert np.cos(sp0.phase) == pytest.approx(1.0)
    for k in (2, 7, 30, 111):
        lam = sigma24.zeros[k]
        c = eval_log_Sprime_at_zero(sigma24, k).log()
        ref = eval_log_Sprime_sigma(lam)
        assert np.exp(c - ref) == pytest.approx(1.0, abs=1e-11)


def test_sprime_first_order_taylor(sigma24):
    # sigma(lam + h) = eps e^{|lam|^2} e^{2 conj(lam) h} sigma(h), so the first-order
    # relation is exact up to e^{2 conj(lam) h} (1 + O(h^4))
    lam0 = sigma24.zeros[1]
    h0 = 1e-4 * 0.5
    assert abs(np.exp(sigma24.log_eval(lam0 + h0) - eval_log_Sprime_at_zero(sigma24, 1).log() - np.log(h0)) - 1) < 1e-6
    for k in (3, 20, 90):
        lam = sigma24.zeros[k]
        h = 1e-4 * float(rho_at(sigma24.weight, lam)) * np.exp(0.3j)
        ratio = np.exp(sigma24.log_eval(lam + h) - eval_log_Sprime_at_zero(sigma24, k).log() - np.log(h))
        assert abs(ratio / np.exp(2 * np.conj(lam) * h) - 1) < 1e-9


def test_sprime_node_doubling(sigma24):
    for k in (5, 60):
        a = eval_log_Sprime_at_zero(sigma24, k, n_nodes=64).log()
        b = eval_log_Sprime_at_zero(sigma24, k, n_nodes=128).log()
        assert abs(np.exp(a - b) - 1) < 1e-10


def test_sigma_over_linear_values(sigma_z40):
    assert sigma_z40.gamma_nominal == 1.0
    assert sigma_z40.removed == 0
    # sigma(z)/z -> 1 at the removed zero
    assert sigma_z40.log_eval(0.0) == pytest.approx(0.0, abs=1e-12)
    z = 2.3 - 1.1j
    assert sigma_z40.log_eval(z) == pytest.approx(log_sigma(z) - np.log(z))


def test_taylor_low_order(sigma24):
    c = taylor_coeffs(sigma24, 0, 9)
    assert c.logmag[1] == pytest.approx(0.0, abs=1e-12)
    for n in (0, 2, 3, 4, 6, 7, 8):
        assert c.logmag[n] < -25
    # square lattice: sigma(z) = z - (g2/240) z^5 + ..., g2 = 60 G4
    G4 = Gamma(0.25) ** 8 / (960 * np.pi**2) / OM**4
    s5 = c[5].to_complex()
    assert s5 == pytest.approx(-G4 / 4, rel=1e-10)


def test_taylor_matches_product_fft():
    M = 256
    t = 2 * np.pi * np.arange(M) / M
    r = 2.5
    vals = np.exp(np.array([sigma_product(z, margin=30) for z in r * np.exp(1j * t)]))
    ref = (np.fft.fft(vals) / M / r ** np.arange(M))[:30]
    got = taylor_coeffs(sigma_lattice(20.0), 1, 29).to_complex()
    np.testing.assert_allclose(got, ref[1:30], rtol=0, atol=1e-11)


def test_taylor_bound_envelope(sigma40):
    n = np.arange(20, 101)
    c = taylor_coeffs(sigma40, 20, 100)
    live = n % 4 == 1
    env = c.logmag[live] + (n[live] / 2) * np.log(n[live] / (2 * np.e))
    assert np.all(np.isfinite(env))
    assert env.max() < 5.0
    # the other coefficients vanish; what is left is extraction noise far below the envelope
    dead = c.logmag[~live] + (n[~live] / 2) * np.log(n[~live] / (2 * np.e))
    assert dead.max() < -20


def test_taylor_reconstruction(sigma40):
    N = 200
    c = taylor_coeffs(sigma40, 0, N)
    assert c.logmag.size == N + 1
    r_max = 0.7 * np.sqrt(N / 2)
    z = r_max * np.sqrt(np.linspace(0.05, 1, 40)) * np.exp(1j * np.linspace(0, 6, 40))
    n = np.arange(N + 1)
    finite = np.isfinite(c.logmag)
    terms = c.log()[finite][None, :] + n[finite][None, :] * np.log(z)[:, None] - (np.abs(z) ** 2)[:, None]
    approx = np.exp(terms).sum(axis=1)
    exact = sigma40.normalized(z)
    assert np.max(np.abs(approx - exact) / np.abs(exact)) < 1e-6


def test_certification_small_grid(sigma24):
    cert = certify_sinetype(sigma24, AnnularGrid(1, 10, 9, 4, 64))
    assert cert.passed and cert.ratio < 10
    assert abs(cert.radial_slope()) < 0.05
    single = certify_sinetype(sigma24, AnnularGrid(5, 5.5, 1, 1, 32))
    assert single.c_min <= single.c_max


def test_wrong_gamma_grows(sigma40):
    ratios = [certify_sinetype(sigma40, AnnularGrid(1, R, 6, 4, 64), gamma=1.0).ratio for R in (10, 20, 30)]
    assert ratios[0] < ratios[1] < ratios[2]
    # roughly linear in the outer radius
    assert ratios[2] / ratios[0] == pytest.approx(3.0, rel=0.35)


def test_empty_grid_rejected():
    with pytest.raises(ValueError):
        AnnularGrid(1, 10, 0)


def test_custom_rule_sine_type(lattice24):
    s = SineType(lattice24, 0.0, "custom", log_rule=lambda z: log_sigma(z))
    assert s.log_eval(1.2 + 0.3j) == pytest.approx(log_sigma(1.2 + 0.3j))
