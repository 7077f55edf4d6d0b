"""Complex numbers stored as (log-magnitude, phase).

Values such as ``sigma(z)`` grow like ``exp(|z|**2)`` and leave the double
range near ``|z| = 27``; keeping the logarithm of the modulus makes products
and quotients exact in range.  Sums are done by rescaling to the largest
modulus first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi
#: largest |logmag| that may be turned back into an ordinary complex
EXP_GUARD = 700.0


class LogRangeError(OverflowError):
    pass


def _wrap(phase):
    return np.mod(phase, TWO_PI)


@dataclass(frozen=True)
class LogComplex:
    """``exp(logmag) * exp(1j*phase)``, elementwise over numpy arrays.

    ``logmag = -inf`` encodes zero.
    """

    logmag: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        lm = np.asarray(self.logmag, dtype=float)
        ph = np.asarray(self.phase, dtype=float)
        lm, ph = np.broadcast_arrays(lm, ph)
        ph = np.where(np.isneginf(lm), 0.0, _wrap(ph))
        object.__setattr__(self, "logmag", lm)
        object.__setattr__(self, "phase", ph)

    # construction -------------------------------------------------------
    @classmethod
    def from_log(cls, logz) -> "LogComplex":
        """From a complex logarithm ``log|z| + 1j*arg z``."""
        logz = np.asarray(logz, dtype=complex)
        return cls(logz.real, logz.imag)

    @classmethod
    def from_complex(cls, z) -> "LogComplex":
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore"):
            return cls(np.log(np.abs(z)), np.angle(z))

    @classmethod
    def zeros(cls, shape=()) -> "LogComplex":
        return cls(np.full(shape, -np.inf), np.zeros(shape))

    # properties ---------------------------------------------------------
    @property
    def shape(self):
        return self.logmag.shape

    def __len__(self):
        return len(self.logmag)

    def __getitem__(self, idx) -> "LogComplex":
        return LogComplex(self.logmag[idx], self.phase[idx])

    def is_zero(self):
        return np.isneginf(self.logmag)

    def log(self):
        """Complex logarithm (principal phase in [0, 2pi))."""
        return self.logmag + 1j * self.phase

    # arithmetic -----------------------------------------------------------
    def __mul__(self, other) -> "LogComplex":
        if not isinstance(other, LogComplex):
            other = LogComplex.from_complex(other)
        return LogComplex(self.logmag + other.logmag, self.phase + other.phase)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "LogComplex":
        if not isinstance(other, LogComplex):
            other = LogComplex.from_complex(other)
        return LogComplex(self.logmag - other.logmag, self.phase - other.phase)

    def __neg__(self) -> "LogComplex":
        return LogComplex(self.logmag, self.phase + np.pi)

    def conj(self) -> "LogComplex":
        return LogComplex(self.logmag, -self.phase)

    def scale_log(self, shift) -> "LogComplex":
        """Multiply by ``exp(shift)`` (``shift`` real)."""
        return LogComplex(self.logmag + shift, self.phase)

    def __add__(self, other) -> "LogComplex":
        if not isinstance(other, LogComplex):
            other = LogComplex.from_complex(other)
        m = np.maximum(self.logmag, other.logmag)
        m_safe = np.where(np.isfinite(m), m, 0.0)
        s = self.scaled(m_safe) + other.scaled(m_safe)
        out = LogComplex.from_complex(s)
        return out.scale_log(m_safe)

    def __sub__(self, other) -> "LogComplex":
        if not isinstance(other, LogComplex):
            other = LogComplex.from_complex(other)
        return self + (-other)

    # conversion -----------------------------------------------------------
    def scaled(self, shift=0.0):
        """Ordinary complex value of ``self * exp(-shift)``.

        No range guard; the caller is responsible for choosing ``shift`` so
        that the result is representable.
        """
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            mag = np.exp(self.logmag - shift)
        return mag * np.exp(1j * self.phase)

    def to_complex(self):
        finite = self.logmag[np.isfinite(self.logmag)]
        if finite.size and np.max(np.abs(finite)) > EXP_GUARD:
            raise LogRangeError("log-magnitude outside +-700; use scaled()")
        if np.any(np.isposinf(self.logmag)) or np.any(np.isnan(self.logmag)):
            raise LogRangeError("non-finite log-magnitude")
        out = self.scaled(0.0)
        return out[()] if np.ndim(out) == 0 else out

    def __repr__(self):
        return f"LogComplex(logmag={self.logmag!r}, phase={self.phase!r})"


def log_sum(values: LogComplex, axis=None) -> LogComplex:
    """Sum of an array of LogComplex values along ``axis``."""
    lm = values.logmag
    m = np.max(lm, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    s = np.sum(values.scaled(m), axis=axis)
    m = np.squeeze(m, axis=axis) if axis is not None else m.reshape(())
    return LogComplex.from_complex(s).scale_log(m)
