"""Signed values stored as (natural log of magnitude, sign)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

NEG_INF = -math.inf


@dataclass(frozen=True)
class SignedLogValue:
    """A real number ``sign * exp(log_mag)``.

    Exact zero is ``sign == 0`` with ``log_mag == -inf``.  Arithmetic goes
    through log-sum-exp so magnitudes far outside the float range
    (``log_mag`` up to about 1e6 either way) never overflow.
    """

    log_mag: float
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or 1, got {self.sign}")
        if math.isnan(self.log_mag):
            raise ValueError("log_mag is NaN")
        if (self.sign == 0) != (self.log_mag == NEG_INF):
            raise ValueError("sign == 0 must coincide with log_mag == -inf")

    @classmethod
    def zero(cls) -> SignedLogValue:
        return cls(NEG_INF, 0)

    @classmethod
    def from_float(cls, x: float) -> SignedLogValue:
        if x == 0.0:
            return cls.zero()
        if math.isnan(x):
            raise ValueError("cannot represent NaN")
        return cls(math.log(abs(x)), 1 if x > 0 else -1)

    @classmethod
    def from_log(cls, log_mag: float, sign: int = 1) -> SignedLogValue:
        if log_mag == NEG_INF or sign == 0:
            return cls.zero()
        return cls(float(log_mag), sign)

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    def to_float(self) -> float:
        if self.sign == 0:
            return 0.0
        if self.log_mag > 709.78:
            return self.sign * math.inf
        return self.sign * math.exp(self.log_mag)

    __float__ = to_float

    def __neg__(self) -> SignedLogValue:
        return SignedLogValue(self.log_mag, -self.sign)

    def __abs__(self) -> SignedLogValue:
        return SignedLogValue(self.log_mag, abs(self.sign))

    def __add__(self, other: SignedLogValue) -> SignedLogValue:
        other = _coerce(other)
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        hi, lo = (self, other) if self.log_mag >= other.log_mag else (other, self)
        d = lo.log_mag - hi.log_mag
        if hi.sign == lo.sign:
            return SignedLogValue(hi.log_mag + math.log1p(math.exp(d)), hi.sign)
        if d == 0.0:
            return SignedLogValue.zero()
        # -expm1(d) = 1 - e^d, accurate when d is close to 0
        return SignedLogValue(hi.log_mag + math.log(-math.expm1(d)), hi.sign)

    __radd__ = __add__

    def __sub__(self, other: SignedLogValue) -> SignedLogValue:
        return self + (-_coerce(other))

    def __rsub__(self, other) -> SignedLogValue:
        return _coerce(other) - self

    def __mul__(self, other: SignedLogValue) -> SignedLogValue:
        other = _coerce(other)
        if self.sign == 0 or other.sign == 0:
            return SignedLogValue.zero()
        return SignedLogValue(self.log_mag + other.log_mag, self.sign * other.sign)

    __rmul__ = __mul__

    def __truediv__(self, other: SignedLogValue) -> SignedLogValue:
        other = _coerce(other)
        if other.sign == 0:
            raise ZeroDivisionError("division by exact zero")
        if self.sign == 0:
            return self
        return SignedLogValue(self.log_mag - other.log_mag, self.sign * other.sign)

    def __rtruediv__(self, other) -> SignedLogValue:
        return _coerce(other) / self

    def __pow__(self, k: float) -> SignedLogValue:
        if self.sign == 0:
            if k <= 0:
                raise ZeroDivisionError("zero to a non-positive power")
            return self
        if self.sign < 0 and float(k) != int(k):
            raise ValueError("fractional power of a negative value")
        sign = self.sign if int(k) % 2 else 1
        return SignedLogValue(self.log_mag * k, sign)

    def __lt__(self, other) -> bool:
        other = _coerce(other)
        return (self - other).sign < 0

    def __le__(self, other) -> bool:
        other = _coerce(other)
        return (self - other).sign <= 0

    def __gt__(self, other) -> bool:
        return _coerce(other) < self

    def __ge__(self, other) -> bool:
        return _coerce(other) <= self

    def __repr__(self) -> str:
        if self.sign == 0:
            return "SignedLogValue(0)"
        return f"SignedLogValue({'-' if self.sign < 0 else '+'}exp({self.log_mag!r}))"


def _coerce(x) -> SignedLogValue:
    if isinstance(x, SignedLogValue):
        return x
    return SignedLogValue.from_float(float(x))


def log_sum(log_terms: np.ndarray) -> float:
    """``log(sum(exp(log_terms)))``, returning -inf for an empty or all -inf input."""
    a = np.asarray(log_terms, dtype=float)
    if a.size == 0:
        return NEG_INF
    m = float(np.max(a))
    if m == NEG_INF:
        return NEG_INF
    return m + math.log(float(np.sum(np.exp(a - m))))


def signed_log_sum(log_terms: np.ndarray, signs: np.ndarray) -> SignedLogValue:
    """Sum of ``signs * exp(log_terms)`` as a SignedLogValue."""
    a = np.asarray(log_terms, dtype=float)
    sg = np.asarray(signs)
    keep = (sg != 0) & np.isfinite(a)
    if not np.any(keep):
        return SignedLogValue.zero()
    a, sg = a[keep], sg[keep]
    m = float(np.max(a))
    total = float(np.sum(sg * np.exp(a - m)))
    return SignedLogValue.from_float(total) * SignedLogValue(m, 1)
