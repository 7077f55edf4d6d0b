import numpy as np
import pytest

from fockinterp.contours import Contour, build_contour
from fockinterp.genfun import SineType
from fockinterp.interp import (
    CurveProximityError,
    InterpolationProblem,
    LogEntire,
    cauchy_identity_rhs,
    cauchy_remainder,
    chi_N,
    flambda_function,
    flambda_norm_growth,
    kernel_function,
    lagrange_term,
    monomial_function,
    partial_sum,
    partial_sum_normalized,
    residual_norm,
)
from fockinterp.lattice import ZeroSet, rho_at
from fockinterp.quadrature import QuadratureSpec, weighted_norm_sq
from fockinterp.weights import ModifiedWeight, RadialWeight


@pytest.fixture(scope="module")
def kernel_problem(sigma24):
    return InterpolationProblem(sigma24, kernel_function(1 + 0.5j), beta=0.75)


def test_biorthogonality(kernel_problem):
    p = kernel_problem
    lam = p.nodes[:50]
    err = 0.0
    for k in range(1, 51):
        v = lagrange_term(p, k, lam).to_complex()
        err = max(err, np.max(np.abs(v - (np.arange(1, 51) == k))))
    assert err <= 1e-8


def test_removable_form_matches_direct(kernel_problem):
    p = kernel_problem
    for k in (1, 2, 9, 30):
        lam = p.nodes[k - 1]
        z = lam + 1e-4 * 0.5 * np.exp(0.3j)
        local = lagrange_term(p, k, z).to_complex()
        direct = np.exp(p.S.log_eval(z) - p.log_sprime[k - 1] - np.log(z - lam))
        assert abs(local - direct) <= 1e-6 * abs(direct)


def test_partial_sum_reproduces_biorthogonal_element(sigma24, rng):
    f = flambda_function(sigma24, 1)
    p = InterpolationProblem(sigma24, f)
    z = rng.uniform(-5, 5, 30) + 1j * rng.uniform(-5, 5, 30)
    for N in (1, 4, 40):
        np.testing.assert_allclose(partial_sum_normalized(p, N, z), f.normalized(z, p.weight), rtol=1e-9, atol=1e-14)


def test_partial_sum_empty(kernel_problem):
    assert partial_sum(kernel_problem, 0, 0.3 + 0.2j).logmag == -np.inf
    with pytest.raises(ValueError):
        partial_sum(kernel_problem, kernel_problem.k_max + 1, 0.0)


def test_partial_sum_at_kernel_node(kernel_problem):
    p = kernel_problem
    w = 1 + 0.5j
    target = p.u_f(w)
    errs = [abs(partial_sum_normalized(p, N, w) - target) for N in (25, 50, 100)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-6 * abs(target)


def test_chi(lattice24):
    c = build_contour(lattice24, 13)
    assert chi_N(c, 0.0) == 1
    assert chi_N(c, 2 * c.R) == 0
    th = c.centers
    for t, s in zip(th, c.signs):
        rr = c.r(t)
        # just inside and just outside the bumped profile
        assert chi_N(c, c.R * (rr - 0.01) * np.exp(1j * t)) == 1
        assert chi_N(c, c.R * (rr + 0.01) * np.exp(1j * t)) == 0
        # the bump moved the curve: the unperturbed radius is on the side given by the sign
        assert chi_N(c, c.R * np.exp(1j * t)) == (1 if s > 0 else 0)
    with pytest.raises(CurveProximityError):
        chi_N(c, c.point(0.123))


@pytest.mark.parametrize("fname", ["kernel", "cubic"])
def test_cauchy_identity(sigma24, lattice24, rng, fname):
    f = kernel_function(1 + 0.5j) if fname == "kernel" else monomial_function(3)
    p = InterpolationProblem(sigma24, f)
    c = build_contour(lattice24, 13)
    z = []
    while len(z) < 10:
        zz = 2 * c.R * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
        if np.min(np.abs(c.polygon() - zz)) > 0.05 and np.min(np.abs(p.nodes - zz)) > 0.05:
            z.append(zz)
    z = np.array(z)
    lhs = cauchy_remainder(p, c, z).to_complex()
    rhs = cauchy_identity_rhs(p, c, z)
    assert np.max(np.abs(lhs - rhs) / np.abs(rhs)) <= 1e-6


def test_residue_toy():
    # S a cubic polynomial: sum_k 1/(S'(lam_k)(z - lam_k)) = 1/S(z) by partial fractions
    lam = np.array([0.5, -1 + 1j, 2j])
    zs = ZeroSet(lam, RadialWeight.power(2.0), 10.0)
    S = SineType(zs, 0.0, "custom", log_rule=lambda z: np.sum(np.log(z[..., None] - lam), axis=-1))
    one = LogEntire(lambda z: np.zeros_like(np.asarray(z, dtype=complex)), 5.0)
    p = InterpolationProblem(S, one, k_max=3)
    c = Contour(3.0, N=3)
    z = np.array([4.0 + 1j, -3.5j, 5.0])
    I = cauchy_remainder(p, c, z).to_complex()
    np.testing.assert_allclose(I, 1 / np.prod(z[:, None] - lam, axis=1), rtol=1e-10)
    np.testing.assert_allclose(I, cauchy_identity_rhs(p, c, z), rtol=1e-10)
    inside = np.array([0.1 + 0.1j, 1.0 - 1.0j])
    assert np.max(np.abs(cauchy_remainder(p, c, inside).to_complex())) < 1e-10


@pytest.mark.parametrize("form", ["direct", "auto"])
def test_residual_of_biorthogonal_element_vanishes(sigma24, form):
    for k in (1, 5):
        p = InterpolationProblem(sigma24, flambda_function(sigma24, k), beta=0.75)
        for N in (k, k + 6):
            assert residual_norm(p, N, form=form) <= 5 * np.sqrt(QuadratureSpec().atol)


def test_residual_of_zero(sigma24):
    zero = LogEntire(lambda z: np.full(np.shape(z), -np.inf, dtype=complex), 1.0)
    p = InterpolationProblem(sigma24, zero, beta=0.75)
    assert residual_norm(p, 10) == 0.0


def test_residual_forms_agree(kernel_problem):
    a = residual_norm(kernel_problem, 25, form="direct")
    b = residual_norm(kernel_problem, 25, form="tail")
    assert a == pytest.approx(b, rel=1e-4)


def test_flambda_single_radius(sigma24):
    got = flambda_norm_growth(sigma24, 3, [6.0])
    u = flambda_function(sigma24, 3).as_normalized(sigma24.weight)
    ref = weighted_norm_sq(u, ModifiedWeight(sigma24.weight, 0.0), QuadratureSpec(), r_max=6.0)
    assert len(got) == 1 and got[0] == pytest.approx(ref, rel=1e-8)
