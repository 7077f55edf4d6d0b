"""Sine-type generating functions and their Taylor coefficients.

The canonical generating function for ``phi(r) = r**2`` is the Weierstrass
sigma function of the square lattice ``omega*(Z + iZ)`` with
``omega = sqrt(pi/2)``.  For this lattice the quasi-period map is
``eta(lam) = 2*conj(lam)``, so that

    sigma(z + lam) = eps(lam) * exp(2*conj(lam)*(z + lam/2)) * sigma(z)

and ``|sigma(z)| exp(-|z|**2)`` is lattice periodic.  Evaluation reduces
``z`` to the cell around the nearest lattice point and evaluates sigma there
from the Jacobi theta series (nome ``exp(-pi)``, so a handful of terms reach
machine precision).  Everything is returned as complex logarithms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gamma as _gamma

from .lattice import CRITICAL_OMEGA, ZeroSet, dist_to_set, remove_zero, square_lattice
from .logcomplex import LogComplex
from .weights import RadialWeight, phi, rho_at


class TruncationError(ValueError):
    """The finite zero set does not cover the requested evaluation radius."""


class CoefficientAccuracyError(RuntimeError):
    pass


# theta_1 series for nome q = exp(-pi); terms beyond n = 6 are below 1e-60
_Q = np.exp(-np.pi)
_TN = np.arange(7)
_TC = 2.0 * (-1.0) ** _TN * _Q ** ((_TN + 0.5) ** 2)
_TPRIME0 = float(np.sum(_TC * (2 * _TN + 1)))


def _log_sigma_cell(z0, omega):
    """log sigma(z0) for z0 in the cell around the origin."""
    v = np.pi * z0 / omega
    th = np.tensordot(_TC, np.sin(np.multiply.outer(2 * _TN + 1, v)), axes=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(omega / np.pi) + z0 * z0 + np.log(th / _TPRIME0)


def _reduce(z, omega):
    m = np.round(z.real / omega)
    n = np.round(z.imag / omega)
    lam = omega * (m + 1j * n)
    return z - lam, lam, m, n


def log_sigma(z, omega=CRITICAL_OMEGA, normalized=False):
    """Complex logarithm of the square-lattice sigma function.

    With ``normalized=True`` returns ``log(sigma(z)) - |z|**2``; the lattice
    part of ``|z|**2`` cancels exactly in that form.
    """
    if not np.isclose(omega, CRITICAL_OMEGA, rtol=0, atol=1e-15):
        raise ValueError("quasi-periodic reduction is implemented for the critical lattice only")
    z = np.asarray(z, dtype=complex)
    z0, lam, m, n = _reduce(z, omega)
    base = _log_sigma_cell(z0, omega)
    sign = np.where((np.mod(m, 2) == 0) & (np.mod(n, 2) == 0), 0.0, np.pi)
    cross = 2.0 * np.conj(lam) * z0
    if normalized:
        # 2 conj(lam)(z0 + lam/2) - |z0 + lam|^2 = i Im(2 conj(lam) z0) - |z0|^2
        return base + 1j * (cross.imag + sign) - (z0 * np.conj(z0)).real
    return base + 1j * sign + cross + (lam * np.conj(lam)).real


def sigma_product(z, margin=30.0, omega=CRITICAL_OMEGA, tail_correction=True):
    """Independent oracle: truncated Weierstrass product over ``|lam| <= |z| + margin``.

    Uses the quadratic convergence factors.  The disc truncation of the
    product differs from sigma by ``exp(-sum_j z**(4j)/(4j) sum_{|lam|>R} lam**(-4j))``
    (other powers cancel by the square symmetry); with ``tail_correction``
    the j = 1, 2 factors are restored from the closed form
    ``G4 = Gamma(1/4)**8 / (960 pi**2)`` of the Gaussian-integer lattice and
    ``G8 = 3 G4**2 / 7``.
    Returns ``log sigma(z)`` (phase only defined mod 2pi).
    """
    z = complex(z)
    R = abs(z) + margin
    M = int(R / omega) + 2
    m, n = np.meshgrid(np.arange(-M, M + 1), np.arange(-M, M + 1))
    lam = (omega * (m + 1j * n)).ravel()
    lam = lam[(np.abs(lam) <= R) & (lam != 0)]
    t = z / lam
    if z == 0:
        return -np.inf + 0j
    out = np.log(z) + np.sum(np.log(1 - t) + t + 0.5 * t * t)
    if tail_correction:
        g4 = _gamma(0.25) ** 8 / (960 * np.pi**2) / omega**4
        # E8 = E4**2 gives G8 = 3 G4**2 / 7 for every lattice
        g8 = 3.0 * g4 * g4 / 7.0
        out -= z**4 * (g4 - np.sum(lam**-4.0)) / 4 + z**8 * (g8 - np.sum(lam**-8.0)) / 8
    return out


@dataclass(frozen=True, eq=False)
class SineType:
    """A generating function ``S`` with zero set ``zeros``.

    ``kind`` is ``"sigma_lattice"`` (gamma = 0), ``"sigma_over_linear"``
    (sigma divided by ``z - removed``, gamma = 1), or ``"custom"`` with a
    user-supplied ``log_rule`` returning ``log S(z)``.
    """

    zeros: ZeroSet
    gamma_nominal: float
    kind: str
    omega: float = CRITICAL_OMEGA
    removed: complex | None = None
    log_rule: Callable | None = None
    margin: float = 2.0
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def weight(self) -> RadialWeight:
        return self.zeros.weight

    def _check_range(self, z):
        if np.size(z) and np.max(np.abs(z)) + self.margin > self.zeros.truncation_radius:
            raise TruncationError(
                f"|z| up to {np.max(np.abs(z)):.3g} needs zero set truncation >= "
                f"{np.max(np.abs(z)) + self.margin:.3g}, have {self.zeros.truncation_radius:.3g}"
            )

    def log_eval(self, z, normalized=False, check=True):
        """``log S(z)``, or ``log S(z) - phi(|z|)`` when ``normalized``."""
        z = np.asarray(z, dtype=complex)
        if check:
            self._check_range(z)
        if self.kind == "custom":
            out = np.asarray(self.log_rule(z), dtype=complex)
            return out - phi(self.weight, np.abs(z)) if normalized else out
        out = log_sigma(z, self.omega, normalized=normalized)
        if self.kind == "sigma_over_linear":
            with np.errstate(divide="ignore"):
                lin = np.log(z - self.removed)
            # sigma/(z - lam0) at z = lam0 is the removable value sigma'(lam0)
            at = z == self.removed
            if np.any(at):
                sp = eval_log_Sprime_sigma(self.removed, self.omega)
                base = sp if not normalized else sp - abs(self.removed) ** 2
                out = np.where(at, base, out - np.where(at, 0, lin))
            else:
                out = out - lin
        return out

    def normalized(self, z, check=True):
        """``S(z) * exp(-phi(|z|))`` as ordinary complex numbers."""
        return np.exp(self.log_eval(z, normalized=True, check=check))

    def __call__(self, z) -> LogComplex:
        return eval_log_S(self, z)


def sigma_lattice(R_max: float, omega: float = CRITICAL_OMEGA) -> SineType:
    """``sigma`` on the critical lattice, zeros truncated at ``R_max``."""
    zs = square_lattice(omega, R_max, RadialWeight.power(2.0))
    return SineType(zs, 0.0, "sigma_lattice", omega)


def sigma_over_linear(R_max: float, removed_index: int = 1, omega: float = CRITICAL_OMEGA) -> SineType:
    """``sigma(z)/(z - lambda_removed)``; with the default it is ``sigma(z)/z``."""
    lat = square_lattice(omega, R_max, RadialWeight.power(2.0))
    lam0 = complex(lat[removed_index])
    return SineType(remove_zero(lat, removed_index), 1.0, "sigma_over_linear", omega, removed=lam0)


def eval_log_Sprime_sigma(lam, omega=CRITICAL_OMEGA):
    """Closed form ``log sigma'(lam) = |lam|**2 (+ i pi if lam/omega has an odd coordinate)``."""
    _, _, m, n = _reduce(np.asarray(lam, dtype=complex), omega)
    sign = np.where((np.mod(m, 2) == 0) & (np.mod(n, 2) == 0), 0.0, np.pi)
    return np.abs(lam) ** 2 + 1j * sign


def eval_log_S(s: SineType, z) -> LogComplex:
    return LogComplex.from_log(s.log_eval(z))


# ---------------------------------------------------------------------------
# local Taylor data at zeros


def local_taylor(s: SineType, center: complex, radius: float, n_terms: int, n_nodes: int = 64):
    """Taylor coefficients of ``S`` about ``center`` by the trapezoid rule on a circle.

    Returns ``(coeffs, shift)`` with ``S(center + h) = exp(shift) * sum coeffs[j] h**j``;
    ``shift`` keeps the coefficients O(1).
    """
    t = 2 * np.pi * np.arange(n_nodes) / n_nodes
    zeta = center + radius * np.exp(1j * t)
    L = s.log_eval(zeta, check=False)
    shift = float(np.max(L.real))
    vals = np.exp(L - shift)
    c = np.fft.fft(vals) / n_nodes
    j = np.arange(n_terms)
    return c[:n_terms] / radius**j, shift


def eval_log_Sprime_at_zero(s: SineType, k: int, n_nodes: int = 64) -> LogComplex:
    """``S'(lambda_k)`` from the Cauchy integral on ``|zeta - lambda_k| = 0.1 rho``."""
    key = ("sprime", k, n_nodes)
    if key in s._cache:
        return s._cache[key]
    lam = s.zeros[k]
    r = 0.1 * float(rho_at(s.weight, lam))
    if r == 0:
        r = 0.1 * float(rho_at(s.weight, s.zeros.omega or 1.0))
    d, _ = s.zeros.tree.query([lam.real, lam.imag], k=2)
    if len(s.zeros) > 1 and r >= d[1]:
        raise ValueError("Cauchy circle radius exceeds the separation of the zero set")
    c, shift = local_taylor(s, lam, r, 2, n_nodes)
    out = LogComplex.from_complex(c[1]).scale_log(shift)
    s._cache[key] = out
    return out


def sprime_table(s: SineType, N: int) -> LogComplex:
    """``S'(lambda_k)`` for ``k = 1..N`` as one LogComplex array."""
    vals = [eval_log_Sprime_at_zero(s, k) for k in range(1, N + 1)]
    return LogComplex(np.array([v.logmag for v in vals]), np.array([v.phase for v in vals]))


# ---------------------------------------------------------------------------
# certification of the sine-type estimate


@dataclass(frozen=True)
class AnnularGrid:
    r_inner: float
    r_outer: float
    n_annuli: int
    n_radii: int = 8
    n_angles: int = 128

    def __post_init__(self):
        if self.n_annuli < 1 or self.n_radii < 1 or self.n_angles < 1:
            raise ValueError("empty grid")
        if not 0 < self.r_inner <= self.r_outer:
            raise ValueError("need 0 < r_inner <= r_outer")

    @property
    def size(self):
        return self.n_annuli * self.n_radii * self.n_angles


@dataclass
class Certification:
    c_min: float
    c_max: float
    rows: list  # (annulus_inner, annulus_outer, q_min, q_max, n_samples)
    n_excluded: int
    bound: float

    @property
    def ratio(self):
        return self.c_max / self.c_min

    @property
    def passed(self):
        return bool(np.isfinite(self.ratio) and self.ratio <= self.bound)

    def radial_slope(self):
        """Least-squares slope of log q_max against log of the annulus mid-radius."""
        rows = [r for r in self.rows if r[4] > 0]
        if len(rows) < 2:
            return 0.0
        mid = np.array([0.5 * (r[0] + r[1]) for r in rows])
        qmax = np.array([r[3] for r in rows])
        return float(np.polyfit(np.log(mid), np.log(qmax), 1)[0])

    def to_csv(self, path, header=""):
        import csv

        with open(path, "w", newline="") as fh:
            if header:
                fh.write(header)
            w = csv.writer(fh)
            w.writerow(["annulus_inner", "annulus_outer", "q_min", "q_max", "n_samples"])
            for row in self.rows:
                w.writerow([f"{row[0]:.10g}", f"{row[1]:.10g}", f"{row[2]:.10g}", f"{row[3]:.10g}", row[4]])


def certify_sinetype(s: SineType, grid: AnnularGrid, gamma: float | None = None, bound: float = 50.0) -> Certification:
    """Sample ``Q = |S| exp(-phi) rho (1+|z|)**gamma / d(z, Lambda)`` on ``grid``.

    Points with ``d(z, Lambda) < 1e-3 rho`` are excluded and counted.
    ``gamma`` defaults to the nominal one of ``s``.
    """
    g = s.gamma_nominal if gamma is None else gamma
    edges = np.linspace(grid.r_inner, grid.r_outer, grid.n_annuli + 1)
    rows = []
    excluded = 0
    qmin, qmax = np.inf, 0.0
    theta = 2 * np.pi * (np.arange(grid.n_angles) + 0.5) / grid.n_angles
    for lo, hi in zip(edges[:-1], edges[1:]):
        radii = lo + (hi - lo) * (np.arange(grid.n_radii) + 0.5) / grid.n_radii
        z = (radii[:, None] * np.exp(1j * theta[None, :])).ravel()
        d = dist_to_set(z, s.zeros)
        rh = rho_at(s.weight, z)
        ok = d >= 1e-3 * rh
        excluded += int(np.sum(~ok))
        z, d, rh = z[ok], d[ok], rh[ok]
        if z.size == 0:
            rows.append((lo, hi, np.nan, np.nan, 0))
            continue
        logq = s.log_eval(z, normalized=True).real + np.log(rh) + g * np.log1p(np.abs(z)) - np.log(d)
        q = np.exp(logq)
        rows.append((lo, hi, float(q.min()), float(q.max()), int(z.size)))
        qmin, qmax = min(qmin, q.min()), max(qmax, q.max())
    return Certification(float(qmin), float(qmax), rows, excluded, bound)


# ---------------------------------------------------------------------------
# Taylor coefficients about the origin


def saddle_radius(n: float, a: float) -> float:
    """Radius where ``r**n exp(-r**a)`` peaks."""
    return max((n / a) ** (1.0 / a), 0.5)


def _envelope(n, r, a):
    # log of |s_n| r**n exp(-r**a) up to O(log n), from the Taylor envelope of S_gamma
    n = np.asarray(n, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lead = np.where(n > 0, -(n / a) * np.log(n / (a * np.e)), 0.0)
    return lead + n * np.log(r) - r**a


#: a window is extracted on one circle only if its edge terms are within this factor of the peak
WINDOW_DYNAMIC_RANGE = 1e8


def _window_ok(n_lo, n_hi, a):
    if n_lo == n_hi:
        return True
    r = saddle_radius(0.5 * (n_lo + n_hi), a)
    peak = _envelope(max(a * r**a, 1.0), r, a)
    edge = min(_envelope(n_lo, r, a), _envelope(n_hi, r, a))
    return bool(peak - edge <= np.log(WINDOW_DYNAMIC_RANGE))


def taylor_coeffs(s: SineType, n_lo: int, n_hi: int, n_nodes: int | None = None) -> LogComplex:
    """Coefficients ``s_n`` of ``S(z) = sum s_n z**n`` for ``n_lo <= n <= n_hi``.

    FFT of ``S(r e^{it}) exp(-phi(r))`` on the saddle circle of the window
    midpoint; windows too wide for one circle are split recursively.
    """
    if n_lo > n_hi or n_lo < 0:
        raise ValueError("need 0 <= n_lo <= n_hi")
    a = s.weight.a
    if not _window_ok(n_lo, n_hi, a):
        mid = (n_lo + n_hi) // 2
        left = taylor_coeffs(s, n_lo, mid, n_nodes)
        right = taylor_coeffs(s, mid + 1, n_hi, n_nodes)
        return LogComplex(np.concatenate([left.logmag, right.logmag]), np.concatenate([left.phase, right.phase]))
    r = saddle_radius(0.5 * (n_lo + n_hi), a)
    M = n_nodes or int(2 ** np.ceil(np.log2(max(4 * n_hi + 64, 256))))
    t = 2 * np.pi * np.arange(M) / M
    u = s.normalized(r * np.exp(1j * t))
    c = np.fft.fft(u) / M
    n = np.arange(n_lo, n_hi + 1)
    with np.errstate(divide="ignore"):
        logmag = np.log(np.abs(c[n])) + float(phi(s.weight, r)) - n * np.log(r)
    return LogComplex(logmag, np.angle(c[n]))


def taylor_bound_log(n, a, gamma):
    """Log of the Taylor envelope ``exp(-(n/a) ln(n/(a e)) - (gamma/a) ln n)``."""
    n = np.asarray(n, dtype=float)
    return -(n / a) * np.log(n / (a * np.e)) - (gamma / a) * np.log(n)
