"""Reproducing kernels of the power-weight Fock spaces.

For ``phi(r) = r**a`` the monomials are orthogonal and

    ||z**n||**2 = 2 pi int_0^inf r**(2n+1) exp(-2 r**a) dr
                = (2 pi / a) 2**(-(2n+2)/a) Gamma((2n+2)/a),

so the kernel is ``k_w(z) = sum_n (z conj(w))**n / ||z**n||**2``.  For a = 2
this sums to ``(2/pi) exp(2 conj(w) z)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .logcomplex import LogComplex


class KernelRangeError(ValueError):
    pass


def monomial_norm(n, a: float):
    """``log ||z**n||**2`` in the weight ``r**a``."""
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise ValueError("n must be >= 0")
    if not 0 < a <= 2:
        raise ValueError("need 0 < a <= 2")
    s = (2 * n + 2) / a
    out = np.log(2 * np.pi / a) - s * np.log(2.0) + gammaln(s)
    return out[()] if out.ndim == 0 else out


def _n_max_for(xmax: float, a: float) -> int:
    # terms x**n / m_n peak near the saddle index and then decay
    # super-geometrically; stop 1e-16 below the running maximum
    if xmax == 0:
        return 0
    lx = np.log(xmax)
    best = -np.inf
    n = 0
    while True:
        t = n * lx - monomial_norm(n, a)
        best = max(best, t)
        if n > 4 and t < best + np.log(1e-16) and t < best:
            return n
        n += 1


@dataclass(frozen=True)
class KernelFunction:
    """Kernel ``k_w`` truncated to be accurate for ``|z| <= z_range``."""

    w: complex
    a: float = 2.0
    z_range: float = 6.0

    @property
    def n_max(self) -> int:
        return _n_max_for(abs(self.w) * self.z_range, self.a)

    @property
    def log_norms(self):
        return monomial_norm(np.arange(self.n_max + 1), self.a)


def kernel_eval(kf: KernelFunction, z) -> LogComplex:
    """``k_w(z)`` by the truncated monomial series, summed after rescaling by the largest term."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) > kf.z_range * (1 + 1e-12)):
        raise KernelRangeError(f"|z| exceeds the validated range {kf.z_range}")
    x = z * np.conj(kf.w)
    # truncate from the actual |z conj(w)| so the sum is symmetric in (z, w)
    n = np.arange(min(kf.n_max, _n_max_for(float(np.max(np.abs(x), initial=0.0)), kf.a)) + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        lx = np.log(x)
        terms_log = np.multiply.outer(lx, n)
    terms_log = np.where(np.multiply.outer(x == 0, n > 0), -np.inf, np.where(np.multiply.outer(x == 0, n == 0), 0, terms_log))
    terms_log = terms_log - kf.log_norms[: n.size]
    shift = np.max(terms_log.real, axis=-1, keepdims=True)
    s = np.sum(np.exp(terms_log - shift), axis=-1)
    return LogComplex.from_complex(s).scale_log(np.squeeze(shift, -1))


def kernel_log_closed_a2(w, z):
    """``log k_w(z)`` for a = 2: ``log(2/pi) + 2 conj(w) z``."""
    return np.log(2 / np.pi) + 2 * np.conj(w) * np.asarray(z, dtype=complex)


def normalized_kernel_log(w, a: float = 2.0):
    """``log`` of ``k_w / ||k_w||`` as a callable of z.

    Uses the closed form for a = 2 and the monomial series otherwise.
    """
    if a == 2.0:
        log_norm = 0.5 * kernel_log_closed_a2(w, w).real
        return lambda z: kernel_log_closed_a2(w, z) - log_norm

    def f(z):
        z = np.asarray(z, dtype=complex)
        kf = KernelFunction(w, a, max(float(np.max(np.abs(z), initial=0.0)), abs(w), 1.0))
        return kernel_eval(kf, z).log() - 0.5 * kernel_eval(kf, w).logmag

    return f
