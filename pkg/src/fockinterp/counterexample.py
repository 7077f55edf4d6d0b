"""Taylor-block witness for divergence below the critical modification.

For ``S(z) = sum s_n z**n`` and a radius ``R`` the block

    S_R(z) = sum_{|n - a R**a| < R**(a/2 + eps)} s_n z**n

carries essentially all of ``S`` on the annulus ``||z| - R| < rho(R)`` as
``R`` grows.  Sparse radii ``R_1 < R_2 < ...`` (each more than twice the
previous one) give the witness ``f = sum_k R_k**(-kappa) S_{R_k}``, which
has finite norm while ``f / S`` is close to ``R_k**(-kappa)`` on the k-th
contour.  The quantity

    A_k = || S chi_{N_k} int_{Gamma_{N_k}} f(zeta) / (S(zeta)(. - zeta)) d zeta ||_{phi_beta}

then fails to decay when ``beta < a/4``.  Inside the contour the Cauchy
formula gives ``S * (1/2 pi i) int ... = Sigma_{N_k} - f``, so ``A_k`` is
``2 pi`` times the ``phi_beta`` norm of ``f - Sigma_{N_k}`` over the region
enclosed by ``Gamma_{N_k}``.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .contours import Contour, build_contour
from .genfun import SineType, taylor_coeffs
from .interp import InterpolationProblem, LogEntire, cauchy_remainder, residual_function
from .kernels import monomial_norm
from .logcomplex import LogComplex
from .quadrature import QuadratureSpec, region_norm_sq
from .weights import ModifiedWeight, phi, rho_at

log = logging.getLogger(__name__)

#: annulus sampling used for the cross-shell smallness check
CHECK_ANGLES = 64
CHECK_RADII = 5


class ShellSelectionError(RuntimeError):
    pass


def choose_parameters(a: float, beta: float, gamma: float = 0.0):
    """Default ``(eps, kappa)``: midpoints of the admissible intervals.

    ``0 < eps < a/2 - 2 beta`` and ``1 - a/4 + eps/2 - gamma < kappa < 1 - beta - gamma``.
    """
    if not 0 < a <= 2:
        raise ValueError("need 0 < a <= 2")
    if not 0 <= beta < a / 4:
        raise ValueError(f"need 0 <= beta < a/4 = {a / 4:g} (got beta={beta:g})")
    eps = 0.5 * (a / 2 - 2 * beta)
    lo, hi = kappa_interval(a, beta, gamma, eps)
    # with eps at the midpoint, hi - lo = (a/2 - 2 beta)/4 > 0
    assert lo < hi, "empty kappa interval"
    return eps, 0.5 * (lo + hi)


def kappa_interval(a: float, beta: float, gamma: float, eps: float):
    return 1 - a / 4 + eps / 2 - gamma, 1 - beta - gamma


def block_window(R: float, a: float, eps: float):
    """Integer range ``[n_lo, n_hi]`` of ``|n - a R**a| < R**(a/2 + eps)``."""
    c, h = a * R**a, R ** (a / 2 + eps)
    n_lo = int(np.floor(c - h)) + 1
    n_hi = int(np.ceil(c + h)) - 1
    return max(n_lo, 0), n_hi


def in_window(n, R: float, a: float, eps: float):
    n = np.asarray(n, dtype=float)
    return np.abs(n - a * R**a) < R ** (a / 2 + eps)


@dataclass
class Shell:
    R: float
    N: int
    n_lo: int
    n_hi: int
    coeffs: LogComplex  # s_n for n_lo..n_hi
    tail_max: float = np.nan

    @property
    def n(self):
        return np.arange(self.n_lo, self.n_hi + 1)


def _block_log(z, shells, weights_log):
    """``log sum_k exp(weights_log[k]) S_{R_k}(z)`` with one common rescaling per point."""
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    with np.errstate(divide="ignore"):
        lz = np.log(flat)
    n = np.concatenate([sh.n for sh in shells])
    lc = np.concatenate([sh.coeffs.logmag + wl + 1j * sh.coeffs.phase for sh, wl in zip(shells, weights_log)])
    finite = np.isfinite(lc.real)
    n, lc = n[finite], lc[finite]
    out = np.full(flat.shape, -np.inf + 0j)
    if n.size == 0:
        return out.reshape(z.shape)
    step = max(1, 2_000_000 // n.size)
    for i in range(0, flat.size, step):
        zz = lz[i : i + step, None]
        with np.errstate(invalid="ignore"):
            t = lc[None, :] + n[None, :] * zz
        t = np.where(np.isfinite(zz), t, -np.inf)  # z = 0 and every n >= 1
        t = np.where(np.isnan(t), -np.inf, t)
        m = np.max(t.real, axis=1, keepdims=True)
        ms = np.where(np.isfinite(m), m, 0.0)
        s = np.sum(np.exp(t - ms), axis=1)
        with np.errstate(divide="ignore"):
            out[i : i + step] = np.log(s) + ms[:, 0]
    return out.reshape(z.shape)


def build_block(s: SineType, R: float, eps: float, N: int = 0, n_samples: int = 256) -> Shell:
    """Window coefficients of ``S`` at radius ``R``.

    Also samples ``|S - S_R| exp(-phi)`` on ``||z| - R| < rho(R)`` and stores
    its maximum in ``tail_max``.
    """
    a = s.weight.a
    n_lo, n_hi = block_window(R, a, eps)
    if n_lo > n_hi:
        raise ValueError(f"empty coefficient window at R={R}")
    coeffs = taylor_coeffs(s, n_lo, n_hi)
    sh = Shell(float(R), int(N), n_lo, n_hi, coeffs)
    rh = float(rho_at(s.weight, R))
    radii = R + rh * np.linspace(-1, 1, CHECK_RADII + 2)[1:-1]
    theta = 2 * np.pi * (np.arange(n_samples) + 0.5) / n_samples
    z = (radii[:, None] * np.exp(1j * theta[None, :])).ravel()
    uS = s.normalized(z)
    uB = np.exp(_block_log(z, [sh], [0.0]) - phi(s.weight, np.abs(z)))
    sh.tail_max = float(np.max(np.abs(uS - uB)))
    return sh


def block_norm_sq_log(sh: Shell, a: float) -> float:
    """``log ||S_R||**2 = log sum |s_n|**2 ||z**n||**2`` (monomials are orthogonal)."""
    terms = 2 * sh.coeffs.logmag + monomial_norm(sh.n, a)
    m = np.max(terms)
    return float(m + np.log(np.sum(np.exp(terms - m))))


@dataclass
class BlockWitness:
    S: SineType
    a: float
    beta: float
    gamma: float
    eps: float
    kappa: float
    shells: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def radii(self):
        return np.array([sh.R for sh in self.shells])

    def log_f(self, z):
        """Complex logarithm of the witness ``sum_k R_k**(-kappa) S_{R_k}(z)``."""
        wl = [-self.kappa * np.log(sh.R) for sh in self.shells]
        return _block_log(z, self.shells, wl)

    def as_entire(self) -> LogEntire:
        R_eff = 2 * float(np.max(self.radii)) + 4.0 if self.shells else 1.0
        return LogEntire(self.log_f, R_eff)

    def norm_sq_parts(self):
        """``R_k**(-2 kappa) ||S_{R_k}||**2`` per shell (the windows are disjoint)."""
        return np.array([np.exp(-2 * self.kappa * np.log(sh.R) + block_norm_sq_log(sh, self.a)) for sh in self.shells])

    def to_csv(self, path, header: str = ""):
        with open(path, "w", newline="") as fh:
            if header:
                fh.write(header)
            w = csv.writer(fh)
            w.writerow(["shell", "n", "logmag", "phase"])
            for k, sh in enumerate(self.shells, 1):
                lm = sh.coeffs.logmag - self.kappa * np.log(sh.R)
                for n, l, p in zip(sh.n, lm, sh.coeffs.phase):
                    w.writerow([k, int(n), f"{l:.15g}", f"{p:.15g}"])


def witness_eval(bw: BlockWitness, z) -> LogComplex:
    """``f(z) = sum_k R_k**(-kappa) S_{R_k}(z)``."""
    return LogComplex.from_log(bw.log_f(z))


def _annulus_samples(R: float, rh: float):
    radii = R + rh * np.linspace(-1, 1, CHECK_RADII + 2)[1:-1]
    theta = 2 * np.pi * (np.arange(CHECK_ANGLES) + 0.5) / CHECK_ANGLES
    return (radii[:, None] * np.exp(1j * theta[None, :])).ravel()


def cross_shell_excess(shells, a: float, kappa: float, gamma: float, weight) -> np.ndarray:
    """Per shell: ``max log(|e^{-|z|^a} sum_{m != k} S_{R_m} R_m^{-kappa}| |z|^{gamma+1})``.

    Non-positive entries mean the smallness condition holds on that annulus.
    """
    out = []
    for k, sh in enumerate(shells):
        others = [o for j, o in enumerate(shells) if j != k]
        if not others:
            out.append(-np.inf)
            continue
        z = _annulus_samples(sh.R, float(rho_at(weight, sh.R)))
        wl = [-kappa * np.log(o.R) for o in others]
        lv = _block_log(z, others, wl).real - phi(weight, np.abs(z)) + (gamma + 1) * np.log(np.abs(z))
        out.append(float(np.max(lv)))
    return np.array(out)


def _snap(s: SineType, R: float):
    mod = s.zeros.moduli
    N = int(np.searchsorted(mod, R * (1 + 1e-12), side="right"))
    if N == 0:
        raise ShellSelectionError(f"no zero inside radius {R}")
    return N, float(mod[N - 1])


def select_shells(s: SineType, k_max: int, eps: float, kappa: float, gamma: float = 0.0,
                  R1: float = 3.0, max_tries: int = 20) -> tuple[list, list]:
    """Greedy shells on the schedule ``R_1 = 3``, ``R_{k+1} ~ 2 R_k + 1``.

    Each candidate is snapped down to the modulus of a zero, pushed out
    until ``R_{k+1} > 2 R_k`` holds, and accepted once the cross-shell
    condition holds on every annulus so far.  Returns ``(shells, diagnostics)``;
    fewer than ``k_max`` shells come back when the zero set runs out.
    """
    a = s.weight.a
    shells: list = []
    diag: list = []
    cand = R1
    limit = s.zeros.truncation_radius - s.margin
    while len(shells) < k_max:
        accepted = False
        for _ in range(max_tries):
            if cand + 3 * float(rho_at(s.weight, cand)) > limit:
                break
            N, R = _snap(s, cand)
            if shells and R <= 2 * shells[-1].R:
                cand += float(rho_at(s.weight, cand))
                continue
            try:
                sh = build_block(s, R, eps, N)
            except ValueError as exc:
                diag.append(f"R={R:.6g}: {exc}")
                cand += 1.0
                continue
            exc = cross_shell_excess(shells + [sh], a, kappa, gamma, s.weight)
            if np.all(exc <= 0):
                shells.append(sh)
                accepted = True
                break
            diag.append(f"R={R:.6g} rejected: cross-shell excess {np.max(exc):.3g}")
            cand = R + 1.0
        if not accepted:
            diag.append(f"stopped at {len(shells)} shells: zero set truncation {s.zeros.truncation_radius:.3g}")
            log.warning(diag[-1])
            break
        cand = 2 * shells[-1].R + 1.0
    return shells, diag


def build_witness(s: SineType, beta: float, gamma: float = 0.0, k_max: int = 3,
                  eps: float | None = None, kappa: float | None = None) -> BlockWitness:
    a = s.weight.a
    e0, k0 = choose_parameters(a, beta, gamma)
    eps = e0 if eps is None else eps
    kappa = k0 if kappa is None else kappa
    if not 0 < eps < a / 2 - 2 * beta:
        raise ValueError("eps outside (0, a/2 - 2 beta)")
    lo, hi = kappa_interval(a, beta, gamma, eps)
    if not lo < kappa < hi:
        raise ValueError(f"kappa outside ({lo:g}, {hi:g})")
    shells, diag = select_shells(s, k_max, eps, kappa, gamma)
    return BlockWitness(s, a, beta, gamma, eps, kappa, shells, diag)


def ratio_on_contour(bw: BlockWitness, c: Contour, n: int = 2048):
    """``max |f/S - R_k**(-kappa)|`` on the contour, in units of ``R_k**(-1-kappa)``."""
    th = 2 * np.pi * (np.arange(n) + 0.5) / n
    zeta = c.point(th)
    q = np.exp(bw.log_f(zeta) - bw.S.log_eval(zeta))
    dev = np.max(np.abs(q - c.R ** (-bw.kappa)))
    return float(dev / c.R ** (-1 - bw.kappa))


@dataclass
class AkResult:
    k: int
    R: float
    N: int
    A: float
    spot_rel_err: float


def _problem(bw: BlockWitness, N: int) -> InterpolationProblem:
    return InterpolationProblem(bw.S, bw.as_entire(), bw.beta, k_max=N)


#: A_k is a trend quantity; four digits under node doubling are plenty
AK_SPEC = QuadratureSpec(rtol=1e-4)


def A_k(bw: BlockWitness, k: int, c: Contour | None = None, spec: QuadratureSpec = AK_SPEC,
        spot_points: int = 4, seed: int = 0) -> AkResult:
    """``A_k`` by region quadrature of ``2 pi |f - Sigma_{N_k}|`` inside ``Gamma_{N_k}``.

    The Cauchy-formula shortcut is spot-checked against direct contour
    integration at a few interior points; the relative mismatch is returned.
    """
    sh = bw.shells[k - 1]
    c = build_contour(bw.S.zeros, sh.N) if c is None else c
    p = _problem(bw, sh.N)
    u = residual_function(p, sh.N, "direct")
    mw = ModifiedWeight(bw.S.weight, bw.beta)
    val = region_norm_sq(u, mw, c, spec)
    spot = 0.0
    if spot_points:
        rng = np.random.default_rng(seed)
        z = 0.5 * sh.R * np.sqrt(rng.random(spot_points)) * np.exp(2j * np.pi * rng.random(spot_points))
        I = cauchy_remainder(p, c, z, rtol=1e-9)
        # S * I_N = Sigma_N - f inside the contour
        lhs = np.exp(I.log() + bw.S.log_eval(z, normalized=True))
        rhs = -u(z)
        spot = float(np.max(np.abs(lhs - rhs) / np.abs(rhs)))
    return AkResult(k, sh.R, sh.N, float(2 * np.pi * np.sqrt(val)), spot)


def lower_bound_ratio(bw: BlockWitness, k: int, n: int = 64, seed: int = 1):
    """``(min, max)`` of ``|I_{N_k}(z)| R_k**kappa`` over random ``|z| < R_k/2``.

    ``S I_{N_k} = Sigma_{N_k} - f`` vanishes at the enclosed zeros, so the
    lower bound ``|S I| >= c R_k**(-kappa) e^{phi} (1+|z|)**(-gamma)`` can
    only hold away from them; dividing by ``S`` removes that factor and
    leaves a quantity that tends to 1 as ``f/S -> R_k**(-kappa)`` on the contour.
    """
    sh = bw.shells[k - 1]
    p = _problem(bw, sh.N)
    rng = np.random.default_rng(seed)
    z = 0.5 * sh.R * np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n))
    u = residual_function(p, sh.N, "direct")(z)
    q = np.abs(u) / np.abs(bw.S.normalized(z)) * sh.R**bw.kappa
    return float(np.min(q)), float(np.max(q))


def predicted_slope(beta: float, gamma: float, kappa: float) -> float:
    return 1 - beta - gamma - kappa


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
