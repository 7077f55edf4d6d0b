"""Lagrange interpolation series, Cauchy remainders and residual norms.

Notation: ``c_k = f(lambda_k) / S'(lambda_k)``, so that

    Sigma_N(z) = S(z) * sum_{k<=N} c_k / (z - lambda_k).

The coefficients ``c_k`` are O(1) for ``f`` of finite norm even though
``f(lambda_k)`` and ``S'(lambda_k)`` are both of size ``exp(phi)``; all
area integrands are assembled from normalized values ``g exp(-phi)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from .contours import Contour, point_in_polygon
from .genfun import SineType, TruncationError, eval_log_Sprime_at_zero, local_taylor
from .logcomplex import LogComplex
from .quadrature import (
    NormalizedFunction,
    QuadratureSpec,
    arc_integral,
    contour_integral,
    partial_norms_sq,
    weighted_norm_sq,
)
from .weights import ModifiedWeight, phi, rho_at

log = logging.getLogger(__name__)

NEAR_ZERO = 1e-3  # in units of rho: switch to the removable-singularity form below this
LOCAL_TERMS = 10
TAIL_REL = 1e-30


class CurveProximityError(ValueError):
    pass


@dataclass(frozen=True)
class LogEntire:
    """An entire function given by its complex logarithm ``log_f(z)``."""

    log_f: Callable
    R_eff: float

    def normalized(self, z, weight):
        z = np.asarray(z, dtype=complex)
        return np.exp(self.log_f(z) - phi(weight, np.abs(z)))

    def as_normalized(self, weight) -> NormalizedFunction:
        return NormalizedFunction(lambda z: self.normalized(z, weight), self.R_eff)


def kernel_function(w: complex, a: float = 2.0, R_eff: float | None = None) -> LogEntire:
    """Unit-norm reproducing kernel at ``w``."""
    from .kernels import normalized_kernel_log

    return LogEntire(normalized_kernel_log(w, a), R_eff or abs(w) + 6.0)


def monomial_function(n: int, a: float = 2.0, normalize: bool = True) -> LogEntire:
    """``z**n`` (divided by its norm when ``normalize``)."""
    from .kernels import monomial_norm

    c = 0.5 * float(monomial_norm(n, a)) if normalize else 0.0

    def log_f(z):
        z = np.asarray(z, dtype=complex)
        if not n:
            return np.zeros_like(z) - c
        with np.errstate(divide="ignore"):
            lz = np.log(np.where(z == 0, 1.0, z))
        # complex -inf times n would give a nan phase
        return np.where(z == 0, -np.inf + 0j, n * lz - c)

    return LogEntire(log_f, (n / a + 12.0) ** (1 / a) + 2.0)


def flambda_function(s: SineType, k: int) -> LogEntire:
    """The biorthogonal element ``f_k = S / (S'(lambda_k)(z - lambda_k))``."""
    lam = s.zeros[k]
    sp = eval_log_Sprime_at_zero(s, k).log()
    lt = _LocalForm(s, k)

    def log_f(z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = s.log_eval(z) - sp - np.log(z - lam)
        near = np.abs(z - lam) < NEAR_ZERO * lt.rho
        if np.any(near):
            out = np.where(near, np.log(lt.ratio(z - lam)), out)
        return out

    return LogEntire(log_f, np.inf)


class _LocalForm:
    """``S(z) / (S'(lam)(z - lam))`` near ``lam`` from local Taylor coefficients."""

    def __init__(self, s: SineType, k: int):
        lam = s.zeros[k]
        self.rho = float(rho_at(s.weight, lam)) or float(rho_at(s.weight, 1.0))
        key = ("local", k)
        if key not in s._cache:
            s._cache[key] = local_taylor(s, lam, 0.1 * self.rho, LOCAL_TERMS)
        self.coeffs, self.shift = s._cache[key]

    def ratio(self, h):
        # S(lam + h)/h = exp(shift) * sum_{j>=1} c_j h^{j-1}; divided by S'(lam) = exp(shift) c_1
        c = self.coeffs
        return np.polyval(c[:0:-1], h) / c[1]


@dataclass(eq=False)
class InterpolationProblem:
    """Interpolate ``f`` at the zeros of ``S``; ``k_max`` bounds the number of nodes used."""

    S: SineType
    f: LogEntire
    beta: float = 0.0
    k_max: int | None = None
    _local: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.k_max is None:
            R = self.S.zeros.truncation_radius - self.S.margin
            self.k_max = int(np.sum(self.S.zeros.moduli <= R))
        if self.k_max > len(self.S.zeros):
            raise ValueError("k_max exceeds the number of available zeros")

    @property
    def weight(self):
        return self.S.weight

    @cached_property
    def log_sprime(self) -> np.ndarray:
        return np.array([eval_log_Sprime_at_zero(self.S, k).log() for k in range(1, self.k_max + 1)])

    @cached_property
    def log_coeffs(self) -> np.ndarray:
        """``log c_k`` for k = 1..k_max."""
        lam = self.S.zeros.points[: self.k_max]
        return self.f.log_f(lam) - self.log_sprime

    @property
    def nodes(self):
        return self.S.zeros.points[: self.k_max]

    def local(self, k) -> _LocalForm:
        if k not in self._local:
            self._local[k] = _LocalForm(self.S, k)
        return self._local[k]

    def u_f(self, z):
        return self.f.normalized(z, self.weight)


# ---------------------------------------------------------------------------


def lagrange_term(p: InterpolationProblem, k: int, z) -> LogComplex:
    """``f_k(z) = S(z) / (S'(lambda_k)(z - lambda_k))``."""
    if not 1 <= k <= p.k_max:
        raise IndexError(f"k={k} outside 1..{p.k_max}")
    z = np.asarray(z, dtype=complex)
    lam = p.nodes[k - 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = p.S.log_eval(z) - p.log_sprime[k - 1] - np.log(z - lam)
    lf = p.local(k)
    near = np.abs(z - lam) < NEAR_ZERO * lf.rho
    if np.any(near):
        out = np.where(near, np.log(lf.ratio(np.where(near, z - lam, 0))), out)
    return LogComplex.from_log(out)


def _cauchy_sum(p: InterpolationProblem, z, ks, log_c=None, chunk=4_000_000):
    """``sum_{k in ks} c_k / (z - lambda_k)`` together with the removable-form fix-up.

    Returns ``(A, B)`` with the full partial sum equal to
    ``u_S(z) * A + B`` in normalized form: ``A`` collects ordinary terms,
    ``B`` the normalized contributions of terms evaluated in local form.
    """
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    ks = np.asarray(ks, dtype=int)
    lam = p.nodes[ks - 1]
    lc = p.log_coeffs[ks - 1] if log_c is None else log_c
    c = np.exp(lc)
    A = np.zeros(flat.shape, dtype=complex)
    B = np.zeros(flat.shape, dtype=complex)
    if ks.size == 0:
        return A.reshape(z.shape), B.reshape(z.shape)
    step = max(1, chunk // ks.size)
    rho_k = rho_at(p.weight, lam)
    rho_k = np.where(rho_k > 0, rho_k, float(rho_at(p.weight, 1.0)))
    for i in range(0, flat.size, step):
        zz = flat[i : i + step, None]
        diff = zz - lam[None, :]
        near = np.abs(diff) < NEAR_ZERO * rho_k[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(near, 0.0, c[None, :] / np.where(near, 1.0, diff))
        A[i : i + step] = terms.sum(axis=1)
        if np.any(near):
            rows, cols = np.nonzero(near)
            for r, j in zip(rows, cols):
                k = int(ks[j])
                zr = flat[i + r]
                lf = p.local(k)
                # c_k S(z)/(z - lam) normalized = c_k S'(lam) ratio(h) exp(-phi(|z|))
                val = np.exp(lc[j] + p.log_sprime[k - 1] - phi(p.weight, abs(zr))) * lf.ratio(zr - lam[j])
                B[i + r] += val
    return A.reshape(z.shape), B.reshape(z.shape)


def partial_sum_normalized(p: InterpolationProblem, N: int, z):
    """``Sigma_N(z) exp(-phi(|z|))`` as ordinary complex numbers."""
    if not 0 <= N <= p.k_max:
        raise ValueError(f"N={N} outside 0..{p.k_max}")
    z = np.asarray(z, dtype=complex)
    if N == 0:
        return np.zeros(z.shape, dtype=complex)
    A, B = _cauchy_sum(p, z, np.arange(1, N + 1))
    uS = p.S.normalized(z)
    return uS * A + B


def partial_sum(p: InterpolationProblem, N: int, z) -> LogComplex:
    """``Sigma_N(z) = S(z) sum_{k<=N} f(lambda_k) / (S'(lambda_k)(z - lambda_k))``."""
    z = np.asarray(z, dtype=complex)
    u = partial_sum_normalized(p, N, z)
    return LogComplex.from_complex(u).scale_log(phi(p.weight, np.abs(z)))


def chi_N(c: Contour, z, n_vertices: int = 10_000):
    """1 inside the contour, 0 outside; points on the curve are rejected."""
    z = np.asarray(z, dtype=complex)
    poly = c.polygon(n_vertices)
    _check_off_curve(z, c, 1e-6 * c.R, poly)
    out = point_in_polygon(z, poly).astype(int)
    return out[()] if out.ndim == 0 else out


def _curve_distance(z, c: Contour, poly=None):
    poly = c.polygon() if poly is None else poly
    flat = np.asarray(z, dtype=complex).ravel()
    a, e = poly, np.roll(poly, -1) - poly
    ee = np.abs(e) ** 2
    d = np.empty(flat.shape)
    for i in range(0, flat.size, 256):
        q = flat[i : i + 256, None] - a[None, :]
        # distance to each polygon edge, not just its vertices
        t = np.clip((q * np.conj(e)).real / ee, 0.0, 1.0)
        d[i : i + 256] = np.min(np.abs(q - t * e), axis=1)
    return d.reshape(np.shape(z))


def _check_off_curve(z, c, tol, poly=None):
    if np.any(_curve_distance(z, c, poly) < tol):
        raise CurveProximityError("point too close to the contour")


def cauchy_remainder(p: InterpolationProblem, c: Contour, z, rtol: float = 1e-10) -> LogComplex:
    """``I_N(z, f) = (1/2 pi i) int_{Gamma_N} f(zeta) / (S(zeta)(z - zeta)) d zeta``."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    _check_off_curve(z, c, NEAR_ZERO * float(rho_at(p.weight, c.R)))

    def h(zeta):
        with np.errstate(divide="ignore", invalid="ignore"):
            return (p.f.log_f(zeta) - p.S.log_eval(zeta))[:, None] - np.log(z[None, :] - zeta[:, None])

    return contour_integral(h, c, rtol=rtol, log_form=True)


def cauchy_identity_rhs(p: InterpolationProblem, c: Contour, z) -> np.ndarray:
    """``sum_{k<=N} c_k/(z - lambda_k) - chi_N(z) f(z)/S(z)`` (ordinary complex)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    ks = np.arange(1, c.N + 1)
    terms = np.exp(p.log_coeffs[ks - 1])[None, :] / (z[:, None] - p.nodes[ks - 1][None, :])
    ratio = np.exp(p.f.log_f(z) - p.S.log_eval(z))
    return terms.sum(axis=1) - chi_N(c, z) * ratio


# ---------------------------------------------------------------------------
# residual norms


def _cell_mean_sq(s: SineType) -> float:
    """Cell average of ``|sigma(z)|**2 exp(-2|z|**2)`` (periodic on the critical lattice)."""
    key = "cell_mean_sq"
    if key not in s._cache:
        from .genfun import log_sigma

        x, wt = leggauss(64)
        X, W = 0.5 * s.omega * x, 0.5 * s.omega * wt
        Z = X[:, None] + 1j * X[None, :]
        v = np.exp(2 * log_sigma(Z, s.omega, normalized=True).real)
        s._cache[key] = float(np.sum(W[:, None] * W[None, :] * v) / s.omega**2)
    return s._cache[key]


def _far_tail(s: SineType, lam, log_c, R_T: float, beta: float, J: int = 60) -> float:
    """``int_{|z|>R_T} |u_S(z)|**2 |sum c_k/(z-lam_k)|**2 (1+|z|)**(-2 beta) dm``.

    The fast factor ``|u_S|**2`` is replaced by its cell average (times
    ``|z|**-2`` for the sigma/linear variant); the slow factor by its
    multipole expansion ``sum_j m_j z**(-j-1)``, ``m_j = sum c_k lam_k**j``,
    whose angular mean square is ``sum_j |m_j|**2 r**(-2j-2)``.
    """
    from scipy.integrate import quad

    if s.kind not in ("sigma_lattice", "sigma_over_linear"):
        raise NotImplementedError("far-field tail needs a lattice sigma function")
    live = np.isfinite(np.real(log_c))
    lam, log_c = lam[live], log_c[live]
    if lam.size == 0:
        return 0.0
    pbar = _cell_mean_sq(s)
    extra = 2 if s.kind == "sigma_over_linear" else 0
    scale = float(np.max(log_c.real))
    c = np.exp(log_c - scale)
    x = lam / R_T  # |x| <= 1/2 by construction
    mom = np.array([np.sum(c * x**j) for j in range(J)])
    amp = np.abs(mom) ** 2
    # the j-th multipole term behaves like r**(-1 - 2 beta - extra - 2 j)
    live = amp > 1e-300
    if np.any(live & (2 * beta + extra + 2 * np.arange(J) <= 0)):
        return np.inf
    f = lambda r: 2 * np.pi * pbar * r * (1 + r) ** (-2 * beta) * r ** (-extra) * np.sum(
        amp * (R_T / r) ** (2 * np.arange(J)) / r**2)
    val = quad(f, R_T, np.inf, epsrel=1e-10, limit=200)[0]
    return float(val * np.exp(2 * scale))


@dataclass
class ResidualReport:
    N: int
    beta: float
    norm: float
    form: str
    R_T: float
    tail: float


def residual_function(p: InterpolationProblem, N: int, form: str = "direct"):
    """Normalized residual ``(f - Sigma_N) exp(-phi)`` as a callable.

    ``form="direct"`` subtracts the partial sum from ``f``.  ``form="tail"``
    evaluates ``-S sum_{N<k<=k_max} c_k/(z - lambda_k)``, the same function
    whenever the full interpolation series reproduces ``f`` and the
    coefficients beyond ``k_max`` are negligible; it has no cancellation.
    """
    if form == "direct":
        return lambda z: p.u_f(z) - partial_sum_normalized(p, N, z)
    ks = np.arange(N + 1, p.k_max + 1)
    lc = p.log_coeffs[ks - 1]
    if ks.size == 0 or not np.any(np.isfinite(lc.real)):
        zero = lambda z: np.zeros(np.shape(z), dtype=complex)
        zero.log_scale = 0.0
        return zero
    # terms 1e-30 below the largest one cannot affect the result
    keep = lc.real >= np.max(lc.real) + np.log(TAIL_REL)
    ks, lc = ks[keep], lc[keep]
    shift = float(np.max(lc.real))

    def u(z):
        A, B = _cauchy_sum(p, z, ks, log_c=lc - shift)
        return p.S.normalized(z) * A + B

    u.log_scale = shift
    return u


def _significant_radius(p: InterpolationProblem, ks, rel=TAIL_REL):
    lc = p.log_coeffs[ks - 1].real
    if lc.size == 0:
        return 0.0
    keep = lc >= np.max(lc) + np.log(rel)
    return float(np.max(np.abs(p.nodes[ks - 1][keep])))


def residual_norm(p: InterpolationProblem, N: int, spec: QuadratureSpec = QuadratureSpec(), form: str = "auto",
                  report: bool = False):
    """``|| f - Sigma_N ||_{phi_beta}``.

    ``form="auto"`` uses the cancellation-free tail form when it is
    admissible: the coefficients must have died out (relative 1e-30) well
    inside the available zeros, and direct and tail forms must agree at
    sample points.  Otherwise the direct difference is integrated.
    """
    s = p.S
    rhoN = float(rho_at(p.weight, abs(p.nodes[N - 1]))) if N > 0 else 0.5
    R_N = abs(p.nodes[N - 1]) if N > 0 else 0.0
    all_k = np.arange(1, p.k_max + 1)
    lc_all = p.log_coeffs.real
    tail_ok = False
    if form in ("auto", "tail"):
        ks = np.arange(N + 1, p.k_max + 1)
        big = np.max(lc_all)
        # coefficients at the edge of the available zeros must be negligible
        edge = np.abs(p.nodes) > 0.9 * np.max(np.abs(p.nodes))
        tail_ok = ks.size > 0 and (np.all(lc_all[edge] < big + np.log(TAIL_REL)) or big == -np.inf)
        if tail_ok and form == "auto":
            rng = np.random.default_rng(12345)
            zt = (R_N + 2) * np.sqrt(rng.random(64)) * np.exp(2j * np.pi * rng.random(64))
            d = residual_function(p, N, "direct")(zt)
            t = residual_function(p, N, "tail")
            tv = t(zt) * np.exp(t.log_scale)
            scale = max(np.max(np.abs(p.u_f(zt))), 1e-300)
            tail_ok = bool(np.max(np.abs(d - tv)) <= 1e-9 * scale)
        if form == "tail" and not tail_ok:
            raise ValueError("tail form not admissible for this problem")
    mw = ModifiedWeight(p.weight, p.beta)
    if tail_ok and not np.any(np.isfinite(lc_all[N:])):
        # every remaining coefficient vanishes: the partial sum is exact
        return ResidualReport(N, p.beta, 0.0, "tail", R_N, 0.0) if report else 0.0
    if tail_ok:
        ks = np.arange(N + 1, p.k_max + 1)
        u = residual_function(p, N, "tail")
        lam, lc = p.nodes[ks - 1], p.log_coeffs[ks - 1]
        R_T = max(R_N + 10 * rhoN, 2 * _significant_radius(p, ks))
        keep = lc.real >= np.max(lc.real) + np.log(TAIL_REL)
        tail = _far_tail(s, lam[keep], lc[keep] - u.log_scale, R_T, p.beta)
        scale2 = np.exp(2 * u.log_scale)
        used = "tail"
    else:
        u = residual_function(p, N, "direct")
        lam, lc = p.nodes[:N], p.log_coeffs[:N]
        R_T = max(R_N + 10 * rhoN, 2 * R_N)
        if np.isfinite(p.f.R_eff):
            R_T = max(R_T, p.f.R_eff)
            tail = _far_tail(s, lam, lc, R_T, p.beta) if N else 0.0
        else:
            # f itself is not negligible outside any disc; let the tail
            # check on the truncation circle vouch for the difference
            tail = None
        scale2 = 1.0
        used = "direct"
    if R_T + s.margin > s.zeros.truncation_radius:
        raise TruncationError(f"residual quadrature needs zeros up to {R_T + s.margin:.3g}")
    nf = NormalizedFunction(u, R_T, tail=None if tail is None else (lambda R, b: tail))
    core = weighted_norm_sq(nf, mw, replace(spec, truncation_radius=R_T))
    val = float(np.sqrt(core * scale2))
    if report:
        return ResidualReport(N, p.beta, val, used, R_T, (tail or 0.0) * scale2)
    return val


def flambda_norm_growth(s: SineType, k: int, radii, spec: QuadratureSpec = QuadratureSpec()):
    """``int_{|z|<R} |f_k|**2 exp(-2 phi) dm`` for each R in ``radii``."""
    f = flambda_function(s, k)
    u = f.as_normalized(s.weight)
    return partial_norms_sq(u, ModifiedWeight(s.weight, 0.0), radii, spec)


def scaled_curve_mass(f: LogEntire, c: Contour, weight, n: int = 4096) -> float:
    """``R rho(R) int_{gamma} |f(R zeta)|**2 exp(-2 phi(R zeta)) |d zeta|``."""
    R = c.R
    rh = float(rho_at(weight, R))
    g = lambda th: np.abs(f.normalized(c.point(th), weight)) ** 2
    return R * rh * arc_integral(g, c, n)
