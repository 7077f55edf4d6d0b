"""Perturbed circles separating the first N zeros from the rest.

``Gamma_N = R_N * {r(theta) e^{i theta}}`` with ``R_N = |lambda_N|`` and

    r(theta) = 1 + sum_{k in Xi} s_k (delta rho_N / R_N) psi((R_N / (delta rho_N)) (theta - theta_k))

where ``Xi`` collects the zeros within ``delta rho_N / 4`` of the circle,
``s_k = +1`` for ``k <= N`` and ``-1`` otherwise.  The bumps push the curve
outward around the zeros that must be enclosed and inward around the ones
that must be left out.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .lattice import ZeroSet, separation
from .weights import d_rho, rho_at

log = logging.getLogger(__name__)

PSI_SCALE = 0.99
EPS_TARGET = 0.05
N_VERTICES = 10_000


class ContourError(RuntimeError):
    pass


def psi(t):
    """``0.99 exp(1 - 1/(1 - t**2))`` on ``|t| < 1``, zero outside."""
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1
    ts = np.where(inside, t, 0.0)
    return np.where(inside, PSI_SCALE * np.exp(1.0 - 1.0 / (1.0 - ts * ts)), 0.0)


def dpsi(t):
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1
    ts = np.where(inside, t, 0.0)
    den = 1.0 - ts * ts
    return np.where(inside, psi(ts) * (-2.0 * ts / den**2), 0.0)


def _wrap(x):
    """Map angles to (-pi, pi]."""
    return np.pi - np.mod(np.pi - x, 2 * np.pi)


@dataclass(frozen=True, eq=False)
class Contour:
    """Closed curve ``R * r(theta) e^{i theta}``, theta in [0, 2 pi)."""

    R: float
    centers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    signs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    halfwidth: float = 0.0
    N: int = 0
    delta: float = 0.0
    rho_N: float = 0.0

    @classmethod
    def circle(cls, R: float) -> "Contour":
        return cls(float(R))

    def _t(self, theta):
        theta = np.asarray(theta, dtype=float)
        return _wrap(theta[..., None] - self.centers) / self.halfwidth

    def r(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.centers.size == 0:
            return np.ones_like(theta)
        return 1.0 + self.halfwidth * np.sum(self.signs * psi(self._t(theta)), axis=-1)

    def dr(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.centers.size == 0:
            return np.zeros_like(theta)
        # amplitude equals the angular half-width, so the chain rule cancels it
        return np.sum(self.signs * dpsi(self._t(theta)), axis=-1)

    def point(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self.R * self.r(theta) * np.exp(1j * theta)

    def dpoint(self, theta):
        """``d zeta / d theta``."""
        theta = np.asarray(theta, dtype=float)
        return self.R * (self.dr(theta) + 1j * self.r(theta)) * np.exp(1j * theta)

    def breakpoints(self):
        """Angles in [0, 2pi] where the profile changes character (bump edges and peaks)."""
        if self.centers.size == 0:
            return np.array([0.0, 2 * np.pi])
        pts = np.concatenate([self.centers - self.halfwidth, self.centers, self.centers + self.halfwidth])
        pts = np.mod(pts, 2 * np.pi)
        return np.unique(np.concatenate([[0.0, 2 * np.pi], pts]))

    def polygon(self, n_vertices: int = N_VERTICES):
        theta = 2 * np.pi * np.arange(n_vertices) / n_vertices
        # make sure each bump peak is a vertex
        theta = np.unique(np.concatenate([theta, np.mod(self.centers, 2 * np.pi)]))
        return self.point(theta)

    def inside(self, z, n_vertices: int = N_VERTICES):
        """Even-odd ray crossing against the polygonal approximation."""
        return point_in_polygon(z, self.polygon(n_vertices))

    def to_csv(self, path, n: int = 2048, header: str = ""):
        theta = 2 * np.pi * np.arange(n) / n
        with open(path, "w", newline="") as fh:
            if header:
                fh.write(header)
            w = csv.writer(fh)
            w.writerow(["theta", "r", "dr"])
            for t, rv, dv in zip(theta, self.r(theta), self.dr(theta)):
                w.writerow([f"{t:.12g}", f"{rv:.15g}", f"{dv:.15g}"])


def point_in_polygon(z, vertices):
    """Vectorized even-odd test with a rightward horizontal ray."""
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    x, y = flat.real[:, None], flat.imag[:, None]
    v0 = np.asarray(vertices)
    v1 = np.roll(v0, -1)
    x0, y0, x1, y1 = v0.real, v0.imag, v1.real, v1.imag
    inside = np.zeros(flat.shape, dtype=bool)
    chunk = max(1, 2_000_000 // max(len(v0), 1))
    for i in range(0, flat.size, chunk):
        xs, ys = x[i : i + chunk], y[i : i + chunk]
        straddle = (y0 > ys) != (y1 > ys)
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = x0 + (ys - y0) * (x1 - x0) / (y1 - y0)
        inside[i : i + chunk] = np.sum(straddle & (xs < xcross), axis=1) % 2 == 1
    return inside.reshape(z.shape)


@dataclass
class ContourReport:
    K_emp: float
    eps_emp: float
    inside_count: int
    first_n_inside: bool
    annulus_ok: bool
    max_radial_offset: float

    @property
    def ok(self):
        return self.first_n_inside and self.annulus_ok and self.eps_emp >= EPS_TARGET


def _cached_separation(zs: ZeroSet) -> float:
    s = zs.__dict__.get("_separation")
    if s is None:
        s = separation(zs)
        object.__setattr__(zs, "_separation", s)
    return s


def _make(zs: ZeroSet, N: int, delta: float) -> Contour | None:
    lamN = zs[N]
    R = float(abs(lamN))
    rhoN = float(rho_at(zs.weight, lamN))
    mod = zs.moduli
    xi = np.flatnonzero(np.abs(mod - R) < delta * rhoN / 4)
    theta = np.mod(np.angle(zs.points[xi]), 2 * np.pi)
    signs = np.where(xi < N, 1.0, -1.0)
    hw = delta * rhoN / R
    if theta.size > 1:
        srt = np.sort(theta)
        gaps = np.diff(np.concatenate([srt, [srt[0] + 2 * np.pi]]))
        if np.min(gaps) <= 2 * hw:
            return None
    return Contour(R, theta, signs, hw, N, delta, rhoN)


def build_contour(zs: ZeroSet, N: int, delta: float | None = None, verify: bool = True) -> Contour:
    """Contour enclosing exactly ``lambda_1..lambda_N``.

    ``delta`` starts at ``0.2 * separation`` and is halved until the bump
    supports are disjoint and the verification report is clean.
    """
    if not 1 <= N < len(zs):
        raise ContourError(f"need 1 <= N < {len(zs)}")
    R = abs(zs[N])
    if R == 0:
        raise ContourError("lambda_N = 0: no circle to perturb")
    rhoR = float(rho_at(zs.weight, R))
    if R + 3 * rhoR > zs.truncation_radius:
        raise ContourError("zero set truncation too small for this N")
    d0 = 0.2 * _cached_separation(zs) if delta is None else delta
    d = d0
    while d >= 1e-3 * d0:
        c = _make(zs, N, d)
        if c is not None:
            if not verify:
                return c
            rep = verify_contour(c, zs, N)
            if rep.ok:
                return c
            log.debug("delta=%g rejected: %s", d, rep)
        d *= 0.5
    raise ContourError(f"no admissible delta for N={N}")


def verify_contour(c: Contour, zs: ZeroSet, N: int, n_vertices: int = N_VERTICES) -> ContourReport:
    """Empirical K, separation from the zeros, inside count and annulus containment."""
    theta = 2 * np.pi * np.arange(n_vertices) / n_vertices
    K = float(np.max(np.abs(c.dr(theta)))) if c.centers.size else 0.0
    curve = c.polygon(n_vertices)
    rhoR = float(rho_at(zs.weight, c.R))
    offset = float(np.max(np.abs(np.abs(curve) - c.R)))
    mod = zs.moduli
    near = np.flatnonzero(np.abs(mod - c.R) < offset + 3 * rhoR)
    if near.size:
        dd = d_rho(zs.weight, zs.points[near][:, None], curve[None, :])
        eps = float(np.min(dd))
    else:
        eps = np.inf
    inside = c.inside(zs.points, n_vertices)
    count = int(np.sum(inside))
    first = bool(np.all(inside[:N]) and not np.any(inside[N:]))
    return ContourReport(K, eps, count, first, offset < rhoR, offset)
