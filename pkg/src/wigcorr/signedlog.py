"""Signed-logarithmic number representation and streaming accumulation.

Products of characteristic polynomials scale like exp(c*n) and routinely
leave the range of double precision.  Everything downstream therefore works
with a real number stored as (sign, log-magnitude), plus a complex-phase
variant for determinants of complex matrices.  Sums of mixed-sign values are
accumulated with a running maximum shift so that nothing overflows for
log-magnitudes up to ~1e6.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SignedLog",
    "LogPhase",
    "signed_log_sum",
    "SignedLogAccumulator",
]

_NEG_INF = float("-inf")


@dataclass(frozen=True)
class SignedLog:
    """A real number x = sign * exp(logmag); sign in {-1, 0, +1}."""

    sign: int
    logmag: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {self.sign}")
        if self.sign == 0 and self.logmag != _NEG_INF:
            object.__setattr__(self, "logmag", _NEG_INF)

    @classmethod
    def from_value(cls, x):
        x = float(x)
        if x == 0.0:
            return cls(0, _NEG_INF)
        if not math.isfinite(x):
            raise ValueError(f"cannot represent non-finite value {x}")
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def one(cls):
        return cls(1, 0.0)

    @classmethod
    def zero(cls):
        return cls(0, _NEG_INF)

    @property
    def value(self):
        """Best-effort float; overflows to +-inf, underflows to 0."""
        if self.sign == 0:
            return 0.0
        if self.logmag > 709.0:
            return math.inf * self.sign
        return self.sign * math.exp(self.logmag)

    def __mul__(self, other):
        if isinstance(other, SignedLog):
            s = self.sign * other.sign
            return SignedLog(s, self.logmag + other.logmag if s else _NEG_INF)
        return self * SignedLog.from_value(other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, SignedLog):
            other = SignedLog.from_value(other)
        if other.sign == 0:
            raise ZeroDivisionError("division by signed-log zero")
        s = self.sign * other.sign
        return SignedLog(s, self.logmag - other.logmag if s else _NEG_INF)

    def __neg__(self):
        return SignedLog(-self.sign, self.logmag)

    def __pow__(self, k: int):
        if self.sign == 0:
            if k <= 0:
                raise ZeroDivisionError("0 ** nonpositive power")
            return SignedLog.zero()
        return SignedLog(self.sign if k % 2 else 1, k * self.logmag)

    def sqrt(self):
        if self.sign < 0:
            raise ValueError("square root of a negative signed-log value")
        if self.sign == 0:
            return SignedLog.zero()
        return SignedLog(1, self.logmag / 2.0)

    def isclose(self, other, rtol=1e-12):
        """Relative closeness of the represented real numbers."""
        if self.sign == 0 or other.sign == 0:
            return self.sign == other.sign
        if self.sign != other.sign:
            return False
        return abs(math.expm1(self.logmag - other.logmag)) <= rtol


@dataclass(frozen=True)
class LogPhase:
    """A complex number z = phase * exp(logmag); |phase| = 1 (or 0)."""

    phase: complex
    logmag: float

    @classmethod
    def from_value(cls, z):
        z = complex(z)
        if z == 0:
            return cls(0j, _NEG_INF)
        r = abs(z)
        return cls(z / r, math.log(r))

    @classmethod
    def one(cls):
        return cls(1 + 0j, 0.0)

    def __mul__(self, other):
        if isinstance(other, LogPhase):
            ph = self.phase * other.phase
            if ph == 0:
                return LogPhase(0j, _NEG_INF)
            # renormalize so rounding never drifts the modulus
            return LogPhase(ph / abs(ph), self.logmag + other.logmag)
        return self * LogPhase.from_value(other)

    __rmul__ = __mul__

    @property
    def value(self):
        if self.phase == 0:
            return 0j
        if self.logmag > 709.0:
            return self.phase * math.inf
        return self.phase * math.exp(self.logmag)

    def to_signed_log(self, imag_tol=1e-6):
        """Collapse to SignedLog when the phase is (numerically) real."""
        if self.phase == 0:
            return SignedLog.zero()
        if abs(self.phase.imag) > imag_tol:
            raise ValueError(
                f"phase {self.phase} is not real within tolerance {imag_tol}"
            )
        return SignedLog(1 if self.phase.real > 0 else -1, self.logmag)


def signed_log_sum(values):
    """Sum an iterable of SignedLog values with a single max-shift."""
    vals = list(values)
    if not vals:
        return SignedLog.zero()
    shift = max(v.logmag for v in vals)
    if shift == _NEG_INF:
        return SignedLog.zero()
    acc = math.fsum(v.sign * math.exp(v.logmag - shift) for v in vals)
    if acc == 0.0:
        return SignedLog.zero()
    return SignedLog(1 if acc > 0 else -1, math.log(abs(acc)) + shift)


class SignedLogAccumulator:
    """Streaming mean/variance of signed values given as (sign, logmag).

    Internally keeps shifted first and second moments
    ``s1 = sum_i sign_i * exp(logmag_i - shift)`` and
    ``s2 = sum_i exp(2*(logmag_i - shift))`` so that merging and pushing
    never overflow.  Merging is exact-stateful: merge(a, b) equals the
    accumulator of the concatenated stream pushed in that order.
    """

    __slots__ = ("count", "shift", "s1", "s2")

    def __init__(self):
        self.count = 0
        self.shift = _NEG_INF
        self.s1 = 0.0
        self.s2 = 0.0

    def _rescale(self, new_shift):
        if new_shift == self.shift:
            return
        if self.shift != _NEG_INF:
            f = math.exp(self.shift - new_shift)
            self.s1 *= f
            self.s2 *= f * f
        self.shift = new_shift

    def push(self, sign, logmag):
        self.push_batch(np.asarray([sign]), np.asarray([logmag], dtype=float))

    def push_batch(self, signs, logmags):
        signs = np.asarray(signs)
        logmags = np.asarray(logmags, dtype=float)
        if signs.shape != logmags.shape:
            raise ValueError("signs and logmags must have identical shapes")
        n = signs.size
        if n == 0:
            return
        batch_max = float(np.max(logmags[signs != 0], initial=_NEG_INF))
        new_shift = max(self.shift, batch_max)
        if new_shift == _NEG_INF:  # everything so far is exactly zero
            self.count += n
            return
        self._rescale(new_shift)
        scaled = np.exp(logmags - new_shift)
        self.s1 += float(np.sum(signs * scaled))
        self.s2 += float(np.sum(scaled * scaled))
        self.count += n

    def merge(self, other):
        """In-place merge of another accumulator (same stream family)."""
        if other.count == 0:
            return self
        new_shift = max(self.shift, other.shift)
        self._rescale(new_shift)
        if other.shift != _NEG_INF:
            f = math.exp(other.shift - new_shift)
            self.s1 += other.s1 * f
            self.s2 += other.s2 * f * f
        self.count += other.count
        return self

    def copy(self):
        c = SignedLogAccumulator()
        c.count, c.shift, c.s1, c.s2 = self.count, self.shift, self.s1, self.s2
        return c

    @property
    def mean(self):
        if self.count == 0:
            raise ValueError("mean of empty accumulator")
        if self.s1 == 0.0:
            return SignedLog.zero()
        return SignedLog(
            1 if self.s1 > 0 else -1,
            math.log(abs(self.s1)) - math.log(self.count) + self.shift,
        )

    @property
    def stderr_rel(self):
        """Standard error of the mean relative to |mean|; inf for zero mean."""
        if self.count < 2:
            raise ValueError("need at least 2 samples for a standard error")
        if self.s1 == 0.0:
            return math.inf
        var_scaled = self.s2 - self.s1 * self.s1 / self.count
        var_scaled = max(var_scaled, 0.0)
        return math.sqrt(var_scaled * self.count / (self.count - 1)) / abs(self.s1)
