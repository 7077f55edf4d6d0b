"""Weighted area norms and contour integrals.

Integrands are always handed over in normalized form ``u = g * exp(-phi)``
so that ``||g||_phi**2 = int |u|**2 dm`` is a sum of O(1) numbers.  Area
rules are polar: composite Gauss-Legendre in the radius with panels of
width ``rho(r)/2`` and the trapezoid rule in the angle (spectral for
periodic integrands).  Every result is checked against a run with doubled
node counts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad

from .logcomplex import LogComplex
from .weights import ModifiedWeight, RadialWeight, rho_at

log = logging.getLogger(__name__)


class QuadratureError(RuntimeError):
    """Raised when node doubling does not reproduce a result or a tail check fails."""


@dataclass(frozen=True)
class NormalizedFunction:
    """``u(z) = g(z) exp(-phi(|z|))`` for an entire ``g``.

    ``R_eff`` is a radius beyond which ``|u|`` is below the tail tolerance.
    When ``|u|`` only decays polynomially, supply ``tail(R, beta)``
    returning ``int_{|z|>R} |u|**2 (1+|z|)**(-2 beta) dm``.
    """

    u: Callable
    R_eff: float
    tail: Callable | None = None

    def scaled(self, c) -> "NormalizedFunction":
        tail = None if self.tail is None else (lambda R, b: abs(c) ** 2 * self.tail(R, b))
        return NormalizedFunction(lambda z: c * self.u(z), self.R_eff, tail)


@dataclass(frozen=True)
class QuadratureSpec:
    panels_per_rho: float = 2.0
    gl_order: int = 8
    angular_spacing: float = 0.25  # arc length between angular nodes, in units of rho
    min_angles: int = 32
    truncation_radius: float | None = None
    eps_tail: float = 1e-9
    rtol: float = 1e-6
    # absolute floor for squared norms: O(1) normalized integrands cannot
    # resolve anything below double-precision roundoff squared
    atol: float = 1e-28
    validate: bool = True

    def __post_init__(self):
        if self.panels_per_rho <= 0 or self.gl_order < 1 or self.min_angles < 1 or self.angular_spacing <= 0:
            raise ValueError("node counts must be positive")

    def doubled(self) -> "QuadratureSpec":
        return replace(self, panels_per_rho=2 * self.panels_per_rho, angular_spacing=self.angular_spacing / 2,
                       min_angles=2 * self.min_angles)


_GL_CACHE: dict = {}


def gauss_legendre(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = leggauss(n)
    return _GL_CACHE[n]


def _rho_floor(w: RadialWeight, r):
    # rho vanishes at the origin for a < 2; keep panels finite there
    return np.maximum(rho_at(w, r), float(rho_at(w, 1.0)) * 0.5)


def radial_breaks(w: RadialWeight, r0: float, r1: float, panels_per_rho: float):
    """Panel edges on [r0, r1] with local width ``rho(r)/panels_per_rho``."""
    edges = [r0]
    r = r0
    while r < r1:
        r = min(r + float(_rho_floor(w, r)) / panels_per_rho, r1)
        edges.append(r)
    return np.array(edges)


def _pairwise_sum(x):
    # fixed-order summation: numpy's pairwise reduction over a contiguous array
    return np.sum(np.ascontiguousarray(x))


def _polar_integral(f_sq, w: RadialWeight, r0: float, r1: float, spec: QuadratureSpec, beta: float = 0.0,
                    center: complex = 0.0):
    """``int_{r0<|z-center|<r1} f_sq(z) (1+|z|)^(-2beta) dm`` with a polar rule about ``center``."""
    x, wt = gauss_legendre(spec.gl_order)
    edges = radial_breaks(w, r0, r1, spec.panels_per_rho)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        r = 0.5 * (b - a) * x + 0.5 * (a + b)
        wr = 0.5 * (b - a) * wt * r
        rho_loc = float(_rho_floor(w, abs(center) + b))
        n_ang = max(spec.min_angles, int(np.ceil(2 * np.pi * b / (spec.angular_spacing * rho_loc))))
        n_ang += (-n_ang) % 8
        theta = 2 * np.pi * np.arange(n_ang) / n_ang
        z = center + r[:, None] * np.exp(1j * theta)[None, :]
        vals = f_sq(z)
        if beta:
            vals = vals * (1 + np.abs(z)) ** (-2 * beta)
        total += _pairwise_sum(wr * np.sum(vals, axis=1)) * (2 * np.pi / n_ang)
    return float(total)


def _polar_integral_complex(f, w, r0, r1, spec, beta=0.0):
    re = _polar_integral(lambda z: f(z).real, w, r0, r1, spec, beta)
    im = _polar_integral(lambda z: f(z).imag, w, r0, r1, spec, beta)
    return complex(re, im)


def _validated(compute, spec: QuadratureSpec, what: str):
    v1 = compute(spec)
    if not spec.validate:
        return v1
    v2 = compute(spec.doubled())
    scale = max(abs(v1), abs(v2))
    if abs(v2 - v1) > max(spec.rtol * scale, spec.atol):
        raise QuadratureError(f"{what}: node doubling changed {v1!r} -> {v2!r} (rtol {spec.rtol})")
    return v2


def tail_check(u: NormalizedFunction, w: RadialWeight, R: float, eps: float, n: int = 512):
    z = R * np.exp(2j * np.pi * np.arange(n) / n)
    m = float(np.max(np.abs(u.u(z))))
    if m > eps:
        raise QuadratureError(f"|u| = {m:.3g} > {eps:g} on the truncation circle |z| = {R:g}")
    return m


def weighted_norm_sq(u: NormalizedFunction, mw: ModifiedWeight, spec: QuadratureSpec, r_max: float | None = None) -> float:
    """``int |u|**2 (1+|z|)**(-2 beta) dm`` over the plane (or over ``|z| < r_max``)."""
    R_T = spec.truncation_radius if spec.truncation_radius is not None else u.R_eff
    if r_max is None:
        if R_T < u.R_eff:
            raise QuadratureError(f"truncation radius {R_T} < R_eff {u.R_eff}")
        if u.tail is None:
            tail_check(u, mw.base, R_T, spec.eps_tail)
        tail = 0.0 if u.tail is None else float(u.tail(R_T, mw.beta))
    else:
        R_T, tail = r_max, 0.0
    f_sq = lambda z: np.abs(u.u(z)) ** 2
    core = _validated(lambda sp: _polar_integral(f_sq, mw.base, 0.0, R_T, sp, mw.beta), spec, "weighted_norm")
    return core + tail


def weighted_norm(u: NormalizedFunction, mw: ModifiedWeight, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """``||g||_{phi_beta}`` for ``u = g exp(-phi)`` (phi of the base weight)."""
    return float(np.sqrt(weighted_norm_sq(u, mw, spec)))


def inner_product(u: NormalizedFunction, v: NormalizedFunction, mw: ModifiedWeight,
                  spec: QuadratureSpec = QuadratureSpec()) -> complex:
    """``<g, h>_{phi_beta} = int u conj(v) (1+|z|)**(-2 beta) dm`` over ``|z| < max(R_eff)``."""
    R = spec.truncation_radius or max(u.R_eff, v.R_eff)
    for x in (u, v):
        tail_check(x, mw.base, R, np.sqrt(spec.eps_tail))
    f = lambda z: u.u(z) * np.conj(v.u(z))

    def compute(sp):
        return _polar_integral_complex(f, mw.base, 0.0, R, sp, mw.beta)

    v1 = compute(spec)
    v2 = compute(spec.doubled())
    if abs(v2 - v1) > spec.rtol * max(abs(v1), abs(v2), 1e-300):
        raise QuadratureError(f"inner product: node doubling changed {v1} -> {v2}")
    return v2


def partial_norms_sq(u: NormalizedFunction, mw: ModifiedWeight, radii, spec: QuadratureSpec = QuadratureSpec()):
    """``int_{|z|<R} |u|**2 (1+|z|)**(-2beta) dm`` for each R in increasing ``radii``."""
    radii = np.asarray(radii, dtype=float)
    f_sq = lambda z: np.abs(u.u(z)) ** 2
    out = []
    acc, prev = 0.0, 0.0
    for R in radii:
        acc += _validated(lambda sp: _polar_integral(f_sq, mw.base, prev, R, sp, mw.beta), spec, "partial norm")
        out.append(acc)
        prev = R
    return np.array(out)


# ---------------------------------------------------------------------------
# star-shaped regions bounded by a contour


def _angle_panels(contour, max_width: float):
    bp = contour.breakpoints()
    out = [bp[0]]
    for a, b in zip(bp[:-1], bp[1:]):
        k = max(1, int(np.ceil((b - a) / max_width)))
        out.extend(a + (b - a) * np.arange(1, k + 1) / k)
    return np.array(out)


def _region_integral(f_sq, w: RadialWeight, contour, spec: QuadratureSpec, beta: float):
    # z = t R r(theta) e^{i theta}, t in [0, 1]; dm = R^2 r^2 t dt dtheta
    x, wt = gauss_legendre(spec.gl_order)
    R = contour.R
    rho_R = float(_rho_floor(w, R))
    tb = radial_breaks(w, 0.0, R, spec.panels_per_rho) / R
    th_edges = _angle_panels(contour, spec.angular_spacing * rho_R * spec.gl_order / (2 * max(R, 1.0)))
    th = (0.5 * np.diff(th_edges)[:, None] * x + 0.5 * (th_edges[:-1] + th_edges[1:])[:, None]).ravel()
    wth = (0.5 * np.diff(th_edges)[:, None] * wt).ravel()
    rth = contour.r(th)
    eith = np.exp(1j * th)
    total = 0.0
    for a, b in zip(tb[:-1], tb[1:]):
        t = 0.5 * (b - a) * x + 0.5 * (a + b)
        wtt = 0.5 * (b - a) * wt * t
        z = R * t[:, None] * (rth * eith)[None, :]
        vals = f_sq(z)
        if beta:
            vals = vals * (1 + np.abs(z)) ** (-2 * beta)
        total += _pairwise_sum(wtt * np.sum(vals * (wth * R * R * rth * rth)[None, :], axis=1))
    return float(total)


def region_norm_sq(u: NormalizedFunction | Callable, mw: ModifiedWeight, contour, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """``int_{inside contour} |u|**2 (1+|z|)**(-2 beta) dm``."""
    fn = u.u if isinstance(u, NormalizedFunction) else u
    f_sq = lambda z: np.abs(fn(z)) ** 2
    return _validated(lambda sp: _region_integral(f_sq, mw.base, contour, sp, mw.beta), spec, "region norm")


# ---------------------------------------------------------------------------
# contour integrals


def _contour_rule(contour, n_per_panel: int, refine: int):
    x, wt = gauss_legendre(n_per_panel)
    bp = contour.breakpoints()
    edges = [bp[0]]
    for a, b in zip(bp[:-1], bp[1:]):
        edges.extend(a + (b - a) * np.arange(1, refine + 1) / refine)
    edges = np.array(edges)
    h = np.diff(edges)
    th = (0.5 * h[:, None] * x + 0.5 * (edges[:-1] + edges[1:])[:, None]).ravel()
    wth = (0.5 * h[:, None] * wt).ravel()
    return th, wth


ROUNDOFF_FLOOR = 1e-13


def contour_integral(h: Callable, contour, rtol: float = 1e-8, log_form: bool = False,
                     n_per_panel: int = 16, max_level: int = 12) -> LogComplex:
    """``(1/2 pi i) int_contour h(zeta) d zeta`` by composite Gauss-Legendre in theta.

    ``h`` maps an array of nodes (shape (n,)) to values of shape (n, ...);
    with ``log_form`` it returns complex logarithms instead (evaluated
    after a common rescaling, so huge integrands are fine).  Panels are
    doubled until two successive results agree to ``rtol``.
    """
    prev = None
    refine = max(1, int(np.ceil(2 * np.pi * contour.R / (len(contour.breakpoints()) * 0.5))))
    for level in range(max_level):
        th, wth = _contour_rule(contour, n_per_panel, refine)
        zeta = contour.point(th)
        dz = contour.dpoint(th) * wth
        vals = h(zeta)
        extra = (1,) * (np.ndim(vals) - 1)
        dz = dz.reshape(dz.shape + extra)
        if log_form:
            shift = np.max(vals.real, axis=0)
            shift = np.where(np.isfinite(shift), shift, 0.0)
            e = np.exp(vals - shift) * dz
            cur = LogComplex.from_complex(np.sum(e, axis=0) / (2j * np.pi)).scale_log(shift)
            with np.errstate(divide="ignore"):
                mass = np.log(np.sum(np.abs(e), axis=0) / (2 * np.pi)) + shift
        else:
            e = vals * dz
            cur = LogComplex.from_complex(np.sum(e, axis=0) / (2j * np.pi))
            with np.errstate(divide="ignore"):
                mass = np.log(np.sum(np.abs(e), axis=0) / (2 * np.pi))
        if prev is not None:
            m = np.maximum(cur.logmag, prev.logmag)
            m = np.where(np.isfinite(m), m, 0.0)
            diff = np.abs(cur.scaled(m) - prev.scaled(m))
            scale = np.maximum(np.abs(cur.scaled(m)), np.abs(prev.scaled(m)))
            # relative test, or absolute when the integral is at roundoff
            # level compared with int |h| |d zeta| (cancelling integrands)
            floor = ROUNDOFF_FLOOR * np.exp(mass - m)
            ok = (diff <= rtol * scale) | (diff <= floor)
            if np.all(ok):
                return cur
        prev = cur
        refine *= 2
    raise QuadratureError("contour integral did not converge under panel doubling")


def arc_integral(f_abs, contour, n: int = 4096):
    """``int_gamma f_abs(theta) |d zeta|`` over the unscaled curve ``gamma = Gamma / R`` (trapezoid)."""
    th = 2 * np.pi * np.arange(n) / n
    ds = np.sqrt(contour.r(th) ** 2 + contour.dr(th) ** 2)
    return float(np.sum(f_abs(th) * ds) * 2 * np.pi / n)


# ---------------------------------------------------------------------------
# sub-mean-value inequality


def disc_integral(u: Callable, center: complex, radius: float, spec: QuadratureSpec = QuadratureSpec(), w=None):
    """``int_{D(center, radius)} |u|**2 dm`` (polar rule about the centre, node-doubling checked)."""
    w = w or RadialWeight.power(2.0)
    f_sq = lambda z: np.abs(u(z)) ** 2
    # panels scaled to the disc itself
    sp = replace(spec, panels_per_rho=max(spec.panels_per_rho, 4 * float(_rho_floor(w, abs(center))) / radius))
    return _validated(lambda s: _polar_integral(f_sq, w, 0.0, radius, s, 0.0, center), sp, "disc integral")


def submeanvalue_check(funcs, w: RadialWeight, delta: float, samples, spec: QuadratureSpec = QuadratureSpec()):
    """Ratios ``|u(z)|**2 rho(z)**2 / int_{D(z, delta rho(z))} |u|**2 dm``.

    ``funcs`` is a list of normalized evaluators ``u``; ``samples`` a list of
    (index into funcs, z).  Returns a dict with the ratio array and its max.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    ratios = []
    for i, z in samples:
        u = funcs[i]
        rz = float(rho_at(w, z))
        num = abs(u(np.array([z]))[0]) ** 2 * rz**2
        den = disc_integral(u, z, delta * rz, spec, w)
        ratios.append(num / den if den > 0 else np.inf)
    ratios = np.array(ratios)
    return {"ratios": ratios, "max": float(np.max(ratios)), "min": float(np.min(ratios))}


def gaussian_disc_integral(center: complex, radius: float) -> float:
    """Oracle: ``int_{D(center, radius)} exp(-2|w|**2) dm`` via the Bessel-I0 radial form."""
    from scipy.special import i0e

    c = abs(center)
    # exp(-2(c^2 + t^2)) I0(4 c t) written with the scaled Bessel function
    f = lambda t: 2 * np.pi * t * np.exp(-2 * (c * c + t * t) + 4 * c * t) * i0e(4 * c * t)
    return quad(f, 0, radius, epsabs=0, epsrel=1e-13, limit=200)[0]
