"""Radial weights, their density function and the d_rho metric.

Two families are supported: the power weights ``phi(r) = r**a`` with
``0 < a <= 2`` and ``phi(r) = (log r)**2`` for ``r >= 2``, smoothly
continued below ``r = 2`` by its second order Taylor polynomial.

All functions accept scalars or numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOGSQUARE_R0 = 2.0


class WeightDomainError(ValueError):
    """Raised when a weight is evaluated outside its domain."""


@dataclass(frozen=True)
class RadialWeight:
    """A radial weight ``phi``.

    Use :meth:`power` or :meth:`logsquare` rather than the constructor.
    """

    kind: str
    a: float = 2.0

    def __post_init__(self):
        if self.kind == "power":
            if not (0.0 < self.a <= 2.0):
                raise WeightDomainError(f"power weight needs 0 < a <= 2, got {self.a}")
        elif self.kind != "logsquare":
            raise WeightDomainError(f"unknown weight kind {self.kind!r}")

    @classmethod
    def power(cls, a: float = 2.0) -> "RadialWeight":
        return cls("power", float(a))

    @classmethod
    def logsquare(cls) -> "RadialWeight":
        return cls("logsquare", 0.0)

    def __str__(self):
        if self.kind == "power":
            return f"power(a={self.a:g})"
        return "logsquare"


@dataclass(frozen=True)
class ModifiedWeight:
    """``phi_beta(r) = phi(r) + beta*log(1 + r)``."""

    base: RadialWeight
    beta: float = 0.0

    def __post_init__(self):
        if self.beta < 0:
            raise WeightDomainError(f"beta must be >= 0, got {self.beta}")


def _logsquare_taylor():
    # value, first and second derivative of (log r)^2 at r0
    L = np.log(LOGSQUARE_R0)
    r0 = LOGSQUARE_R0
    return L * L, 2.0 * L / r0, (2.0 - 2.0 * L) / r0**2


def _check_nonneg(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(np.isnan(r)):
        raise WeightDomainError("radius must be >= 0")
    return r


def phi(w: RadialWeight, r):
    """Evaluate the weight at radius ``r >= 0``."""
    r = _check_nonneg(r)
    if w.kind == "power":
        out = r**w.a
    else:
        v0, v1, v2 = _logsquare_taylor()
        t = r - LOGSQUARE_R0
        low = np.maximum(v0 + v1 * t + 0.5 * v2 * t * t, 0.0)
        with np.errstate(divide="ignore"):
            high = np.log(np.maximum(r, LOGSQUARE_R0)) ** 2
        out = np.where(r >= LOGSQUARE_R0, high, low)
    return out[()] if out.ndim == 0 else out


def dphi(w: RadialWeight, r):
    """Radial derivative ``phi'(r)``."""
    r = _check_nonneg(r)
    if w.kind == "power":
        with np.errstate(divide="ignore"):
            out = w.a * r ** (w.a - 1.0)
    else:
        v0, v1, v2 = _logsquare_taylor()
        rr = np.maximum(r, LOGSQUARE_R0)
        out = np.where(r >= LOGSQUARE_R0, 2.0 * np.log(rr) / rr, v1 + v2 * (r - LOGSQUARE_R0))
    return out[()] if out.ndim == 0 else out


def _rho_unchecked(w: RadialWeight, r):
    r = np.asarray(r, dtype=float)
    if w.kind == "power":
        if w.a == 2.0:
            out = np.full_like(r, 0.5)
        else:
            out = r ** (1.0 - 0.5 * w.a) / w.a
    else:
        v0, v1, v2 = _logsquare_taylor()
        with np.errstate(divide="ignore", invalid="ignore"):
            # Laplacian of the quadratic continuation: p'' + p'/r
            lap_low = v2 + (v1 + v2 * (r - LOGSQUARE_R0)) / r
            low = np.where(r > 0, 1.0 / np.sqrt(lap_low), 0.0)
        out = np.where(r >= LOGSQUARE_R0, r / np.sqrt(2.0), low)
    return out


def rho(w: RadialWeight, r):
    """Density ``(Laplacian phi)**(-1/2)`` at ``r > 0``.

    Power weights give ``r**(1 - a/2)/a``; the logsquare weight gives
    ``r/sqrt(2)`` for ``r >= 2``.
    """
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise WeightDomainError("rho needs r > 0")
    out = _rho_unchecked(w, r)
    return out[()] if out.ndim == 0 else out


def rho_at(w: RadialWeight, z):
    """``rho(|z|)`` continued to the origin by its limit (0, or 1/2 for a=2)."""
    out = _rho_unchecked(w, np.abs(np.asarray(z)))
    return out[()] if out.ndim == 0 else out


def phi_beta(mw: ModifiedWeight, r):
    r = _check_nonneg(r)
    out = phi(mw.base, r) + mw.beta * np.log1p(r)
    return out[()] if np.ndim(out) == 0 else out


def d_rho(w: RadialWeight, z, v):
    """``|z - v| / min(rho(z), rho(v))``.

    When both densities vanish (only possible at the origin) distinct
    points are at distance ``inf``.
    """
    z = np.asarray(z, dtype=complex)
    v = np.asarray(v, dtype=complex)
    dist = np.abs(z - v)
    m = np.minimum(rho_at(w, z), rho_at(w, v))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(dist == 0, 0.0, np.where(m > 0, dist / np.where(m > 0, m, 1.0), np.inf))
    return out[()] if out.ndim == 0 else out


def laplacian_fd(w: RadialWeight, r, h: float = 1e-4):
    """Finite-difference Laplacian of ``phi(|z|)`` at the point ``z = r``.

    Five-point stencil in the plane; independent of the closed forms above.
    """
    r = np.asarray(r, dtype=float)
    f = lambda z: phi(w, np.abs(z))
    return (f(r + h) + f(r - h) + f(r + 1j * h) + f(r - 1j * h) - 4 * f(r + 0j)) / h**2
