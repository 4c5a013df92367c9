"""Model parameters, coefficient family and region geometry of the punctured disc.

Everything here is a pure function of its arguments.  ``|log r|`` always means
the natural-log absolute value ``|ln r|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .logvalue import SignedLogValue

__all__ = [
    "DomainError",
    "LN_2PI",
    "Lemma2Constants",
    "ModelParams",
    "R_MAX",
    "RegionPartition",
    "SignedLogValue",
    "delta_p",
    "lemma2_constants",
    "log_coeff_sq",
    "log_factorial",
    "region_partition",
]

LN_2PI = math.log(2.0 * math.pi)
R_MAX = 1.0 / (4.0 * math.e)

DEFAULT_R = math.exp(-3.0)
DEFAULT_B = 0.5
DEFAULT_GAMMA = 0.25

# Guard for floor((p-2)/(2|ln r|)) when the quotient is an integer up to
# rounding, e.g. r = exp(-3) where ln r comes back as -3 +- 1 ulp.
_FLOOR_SLACK = 1e-12


class DomainError(ValueError):
    """An argument lies outside the domain of the requested operation."""


def _check_p(p: int) -> int:
    if isinstance(p, bool) or int(p) != p:
        raise DomainError(f"p must be an integer, got {p!r}")
    p = int(p)
    if p < 2:
        raise DomainError(f"p must be >= 2, got {p}")
    return p


def _check_r(r: float) -> float:
    r = float(r)
    if not (0.0 < r < R_MAX):
        raise DomainError(f"r must satisfy 0 < r < 1/(4e) ~ {R_MAX:.6f}, got {r!r}")
    return r


def _check_b_gamma(b: float, gamma: float) -> tuple[float, float]:
    b, gamma = float(b), float(gamma)
    if not (0.0 < b < 1.0):
        raise DomainError(f"b must lie in (0, 1), got {b!r}")
    if not (0.0 < gamma < 0.5):
        raise DomainError(f"gamma must lie in (0, 1/2), got {gamma!r}")
    return b, gamma


@dataclass(frozen=True)
class ModelParams:
    p: int
    r: float = DEFAULT_R
    b: float = DEFAULT_B
    gamma: float = DEFAULT_GAMMA

    def __post_init__(self):
        object.__setattr__(self, "p", _check_p(self.p))
        object.__setattr__(self, "r", _check_r(self.r))
        b, gamma = _check_b_gamma(self.b, self.gamma)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "gamma", gamma)

    @property
    def abs_log_r(self) -> float:
        return -math.log(self.r)

    @property
    def delta(self) -> int:
        return delta_p(self.p, self.r)

    def with_p(self, p: int) -> ModelParams:
        return ModelParams(p, self.r, self.b, self.gamma)

    def as_dict(self) -> dict:
        return {"p": self.p, "r": self.r, "b": self.b, "gamma": self.gamma}


def log_factorial(n: int) -> float:
    """ln(n!) for integer n >= 0."""
    if n < 0:
        raise DomainError(f"factorial of negative integer {n}")
    return math.lgamma(n + 1.0)


def _split_hi(x: float) -> float:
    # Veltkamp split: hi keeps 26 significant bits, so k * hi is exact for k < 2**27.
    c = 134217729.0 * x
    return c - (c - x)


# ln 2 as a head with trailing zero bits plus a tail (the fdlibm split)
_LN2_HI = 6.93147180369123816490e-01
_LN2_LO = 1.90821492927058770002e-10


def _log_int_parts(l: int) -> tuple[float, float, float]:
    """ln l as an unevaluated sum e ln2_hi + e ln2_lo + log1p(f - 1), l = 2^e f."""
    m, e = math.frexp(l)
    f, e = 2.0 * m, e - 1
    return (e * _LN2_HI, e * _LN2_LO, math.log1p(f - 1.0))


def log_coeff_sq(p: int, l: int) -> float:
    """ln of the squared orthonormal coefficient, (p-1) ln l - ln(2 pi) - ln((p-2)!).

    ln l is carried as a short unevaluated sum, each product with (p - 1) is
    split so it is exact, and the pieces are summed with ``math.fsum``; the
    result carries little more than its final rounding.
    """
    p = _check_p(p)
    if int(l) != l or l < 1:
        raise DomainError(f"l must be an integer >= 1, got {l!r}")
    k = float(p - 1)
    parts = [-LN_2PI, -log_factorial(p - 2)]
    for x in _log_int_parts(int(l)):
        hi = _split_hi(x)
        parts += (k * hi, k * (x - hi))
    return math.fsum(parts)


def delta_p(p: int, r: float) -> int:
    """Low/high frequency cutoff floor((p-2) / (2 |ln r|))."""
    p = _check_p(p)
    r = _check_r(r)
    q = (p - 2) / (2.0 * -math.log(r))
    k = math.floor(q)
    if q - k > 1.0 - _FLOOR_SLACK * max(1.0, q):
        k += 1
    return int(k)


@dataclass(frozen=True)
class Lemma2Constants:
    alpha_prime: float
    a_prime: float
    c_prime: float
    log_c_prime: float

    def log_radius_bound(self, p: int) -> float:
        """ln(c' p^{-A'}), the radius below which the tail-block estimates apply."""
        return self.log_c_prime - self.a_prime * math.log(p)


def lemma2_constants(r: float) -> Lemma2Constants:
    r = _check_r(r)
    L = -math.log(r)
    alpha = 1.0 / (4.0 * L)
    a = 1.0 / (2.0 * alpha)
    # |ln((2r)^2)| > 0 since 2r < 1/(2e)
    log_c = math.log(r) + a + a * math.log(abs(2.0 * math.log(2.0 * r)))
    return Lemma2Constants(alpha, a, math.exp(log_c), log_c)


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float
    closed_lower: bool = False

    def contains(self, x: float) -> bool:
        lo_ok = x >= self.lower if self.closed_lower else x > self.lower
        return lo_ok and x < self.upper

    @property
    def empty(self) -> bool:
        return not self.lower < self.upper

    def t_range(self) -> tuple[float, float]:
        """Matching range of t = -2 ln|z|, as (t_low, t_high); t_high may be inf."""
        t_lo = -2.0 * math.log(self.upper)
        t_hi = math.inf if self.lower <= 0.0 else -2.0 * math.log(self.lower)
        return t_lo, t_hi


@dataclass(frozen=True)
class RegionPartition:
    p: int
    inner: Interval
    middle: Interval
    outer: Interval
    log_outer_lower: float

    def __getitem__(self, name: str) -> Interval:
        if name not in ("inner", "middle", "outer"):
            raise KeyError(name)
        return getattr(self, name)

    def t_range(self, name: str) -> tuple[float, float]:
        """t-range of a region, computed from logs so it stays exact for huge p."""
        p = self.p
        if name == "inner":
            return 2.0 * p - 2.0 * math.log(2.0), math.inf
        if name == "middle":
            return -2.0 * self.log_outer_lower, 2.0 * p
        if name == "outer":
            return 0.0, -2.0 * self.log_outer_lower
        raise KeyError(name)


def region_partition(p: int, b: float, gamma: float) -> RegionPartition:
    """Inner (0, 2e^-p), middle (e^-p, b e^{-p^gamma}) and outer [b e^{-p^gamma}, 1)."""
    p = _check_p(p)
    b, gamma = _check_b_gamma(b, gamma)
    log_edge = math.log(b) - p**gamma
    edge = math.exp(log_edge)
    return RegionPartition(
        p=p,
        inner=Interval(0.0, 2.0 * math.exp(-p)),
        middle=Interval(math.exp(-p), edge),
        outer=Interval(edge, 1.0, closed_lower=True),
        log_outer_lower=log_edge,
    )
