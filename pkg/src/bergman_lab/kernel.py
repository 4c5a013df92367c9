"""Bergman kernel of the punctured disc and the Fubini-Study / Poincare quotient.

All series are indexed by l >= 1 with weights

    a_l s^l = exp((p-1) ln l - l t + C_p),    t = -ln s = -ln|z|^2,

which are log-concave in l with peak at l* = (p-1)/t.  Sums run over a window
around the peak and every second-order quantity (S0 S2 - S1^2 and the block
products) is assembled from centered variances computed in log space, so no
large number is ever subtracted from another.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .logvalue import NEG_INF, SignedLogValue, log_sum, signed_log_sum
from .model_core import (
    DEFAULT_B,
    DEFAULT_GAMMA,
    DEFAULT_R,
    LN_2PI,
    DomainError,
    delta_p,
    lemma2_constants,
    log_coeff_sq,
    log_factorial,
    _check_p,
)

DEFAULT_TOL_NATS = 40.0
MAX_TERMS = 10**7


class TruncationError(ArithmeticError):
    """The series window would exceed the configured hard cap on terms."""


# ---------------------------------------------------------------------------
# argument handling


def t_from_radius(radius: float | None = None, log_radius: float | None = None) -> float:
    """t = -2 ln|z|, taken from either the radius or its natural log."""
    if (radius is None) == (log_radius is None):
        raise DomainError("give exactly one of radius / log_radius")
    if log_radius is not None:
        if not log_radius < 0.0:
            raise DomainError(f"log_radius must be < 0, got {log_radius!r}")
        return -2.0 * float(log_radius)
    radius = float(radius)
    if not (0.0 < radius < 1.0):
        raise DomainError(f"radius must lie in (0, 1), got {radius!r}")
    return -2.0 * math.log(radius)


def _check_t(t: float) -> float:
    t = float(t)
    if not (t > 0.0 and math.isfinite(t)):
        raise DomainError(f"t = -ln|z|^2 must be positive and finite, got {t!r}")
    return t


def _log_const(p: int) -> float:
    return -(LN_2PI + log_factorial(p - 2))


def _log_weight(p: int, t: float, l: np.ndarray | float):
    return (p - 1) * np.log(l) - l * t


# ---------------------------------------------------------------------------
# truncation windows


def _argmax_from(p: int, t: float, start: int) -> int:
    peak = (p - 1) / t
    if peak <= start:
        return start
    k = int(math.floor(peak))
    return k if _log_weight(p, t, float(k)) >= _log_weight(p, t, float(k + 1)) else k + 1


def _window_above(p: int, t: float, top: int, tol: float, cap: int) -> int:
    """Last index >= top (the block argmax) within tol nats of the max."""
    floor_val = _log_weight(p, t, float(top)) - tol
    step = 1
    while _log_weight(p, t, float(top + step)) >= floor_val:
        step *= 2
        if step > cap:
            raise TruncationError(
                f"series window for p={p}, t={t:g} exceeds the hard cap of {cap} terms"
            )
    # weight decreases on [top, top + step]
    a, b = top, top + step
    while b - a > 1:
        mid = (a + b) // 2
        if _log_weight(p, t, float(mid)) >= floor_val:
            a = mid
        else:
            b = mid
    return a


def _window_below(p: int, t: float, start: int, top: int, tol: float) -> int:
    """First index in [start, top] within tol nats of the max at top."""
    floor_val = _log_weight(p, t, float(top)) - tol
    if _log_weight(p, t, float(start)) >= floor_val:
        return start
    a, b = start, top  # weight increases on [a, b]
    while b - a > 1:
        mid = (a + b) // 2
        if _log_weight(p, t, float(mid)) >= floor_val:
            b = mid
        else:
            a = mid
    return b


def series_window(p: int, t: float, tol_nats: float = DEFAULT_TOL_NATS,
                  start: int = 1, cap: int = MAX_TERMS) -> tuple[int, int]:
    """Index window [lo, hi] of the series tail starting at ``start``."""
    if tol_nats <= 0:
        raise DomainError(f"tol_nats must be positive, got {tol_nats!r}")
    top = _argmax_from(p, t, start)
    hi = _window_above(p, t, top, tol_nats, cap)
    lo = _window_below(p, t, start, top, tol_nats)
    if hi - lo + 1 > cap:
        raise TruncationError(f"window of {hi - lo + 1} terms exceeds the cap of {cap}")
    return lo, hi


# ---------------------------------------------------------------------------
# weighted statistics of one block


@dataclass(frozen=True)
class _Block:
    """Normalized statistics of sum_l a_l s^l over one index block."""

    log_mass: float  # ln sum a_l s^l (includes C_p); -inf for an empty block
    mean: float
    log_var: float
    l: np.ndarray
    lw: np.ndarray  # ln weights minus the block max
    log_norm: float  # ln of sum of exp(lw)

    @property
    def empty(self) -> bool:
        return self.l.size == 0

    def log_expect(self, log_f: np.ndarray) -> float:
        """ln E[f(l)] for a positive f given by its logarithm."""
        return log_sum(self.lw + log_f) - self.log_norm


def _empty_block() -> _Block:
    e = np.zeros(0)
    return _Block(NEG_INF, math.nan, NEG_INF, e, e, NEG_INF)


def _block(p: int, t: float, lo: int, hi: int) -> _Block:
    if hi < lo:
        return _empty_block()
    l = np.arange(lo, hi + 1, dtype=float)
    raw = _log_weight(p, t, l)
    i0 = int(np.argmax(raw))
    m = float(raw[i0])
    lw = raw - m
    log_norm = log_sum(lw)
    l0 = l[i0]
    dl = l - l0
    with np.errstate(divide="ignore"):
        shift = signed_log_sum(lw + np.log(np.abs(dl)), np.sign(dl)) / SignedLogValue(log_norm)
        d = dl - shift.to_float()
        log_d2 = 2.0 * np.log(np.abs(d))
    log_d2[i0] = 2.0 * shift.log_mag
    log_var = log_sum(lw + log_d2) - log_norm
    return _Block(
        log_mass=m + log_norm + _log_const(p),
        mean=l0 + shift.to_float(),
        log_var=log_var,
        l=l,
        lw=lw,
        log_norm=log_norm,
    )


# ---------------------------------------------------------------------------
# moments, density, quotient


@dataclass(frozen=True)
class MomentTriple:
    s0: SignedLogValue
    s1: SignedLogValue
    s2: SignedLogValue
    mean: float
    variance: float
    log_variance: float
    terms_used: int
    peak_index: int


def _triple(b: _Block, peak: int) -> MomentTriple:
    s0 = SignedLogValue.from_log(b.log_mass)
    s1 = s0 * SignedLogValue(math.log(b.mean))
    s2 = s0 * (SignedLogValue.from_log(b.log_var) + SignedLogValue(2.0 * math.log(b.mean)))
    return MomentTriple(s0, s1, s2, float(b.mean), math.exp(b.log_var), float(b.log_var), int(b.l.size), peak)


def moments_t(p: int, t: float, tol_nats: float = DEFAULT_TOL_NATS,
              max_terms: int = MAX_TERMS) -> MomentTriple:
    """S0, S1, S2 of the weight series at t = -ln s."""
    p = _check_p(p)
    t = _check_t(t)
    lo, hi = series_window(p, t, tol_nats, cap=max_terms)
    b = _block(p, t, lo, hi)
    log_var = b.log_var
    if log_var == NEG_INF:
        # one-term window: V is about the relative weight of the nearest neighbour
        top = _log_weight(p, t, float(b.l[0]))
        nb = [_log_weight(p, t, float(hi + 1))]
        if lo > 1:
            nb.append(_log_weight(p, t, float(lo - 1)))
        log_var = max(nb) - top
    if log_var < 0.0:
        # a narrow distribution: dropped terms must also sit tol_nats below V,
        # not just below the mass, so deepen the window by |ln V| (plus l^2)
        deeper = tol_nats - log_var + 2.0 * math.log(hi + 2.0)
        lo, hi = series_window(p, t, deeper, cap=max_terms)
        b = _block(p, t, lo, hi)
    peak = int(b.l[int(np.argmax(b.lw))])
    return _triple(b, peak)


def moments(p: int, s: float, tol_nats: float = DEFAULT_TOL_NATS,
            max_terms: int = MAX_TERMS) -> MomentTriple:
    """Weighted power sums S_k = sum_l l^k (c_l^(p))^2 s^l for k = 0, 1, 2."""
    s = float(s)
    if not (0.0 < s < 1.0):
        raise DomainError(f"s = |z|^2 must lie in (0, 1), got {s!r}")
    return moments_t(p, -math.log(s), tol_nats, max_terms)


def bergman_density_t(p: int, t: float, tol_nats: float = DEFAULT_TOL_NATS) -> SignedLogValue:
    m = moments_t(p, t, tol_nats)
    return SignedLogValue(p * math.log(t)) * m.s0


def bergman_density(p: int, radius: float | None = None, *, log_radius: float | None = None,
                    tol_nats: float = DEFAULT_TOL_NATS) -> SignedLogValue:
    """B_p(z) = |ln|z|^2|^p * sum_l (c_l^(p))^2 |z|^{2l} on the punctured disc."""
    return bergman_density_t(p, t_from_radius(radius, log_radius), tol_nats)


@dataclass(frozen=True)
class FsQuotientSample:
    radius: float
    t: float
    quotient: SignedLogValue
    bergman: SignedLogValue


def fs_quotient_t(p: int, t: float, tol_nats: float = DEFAULT_TOL_NATS) -> FsQuotientSample:
    p = _check_p(p)
    m = moments_t(p, t, tol_nats)
    log_q = 2.0 * math.log(t) + m.log_variance - math.log(2.0 * math.pi * p)
    return FsQuotientSample(
        radius=math.exp(-0.5 * t),
        t=t,
        quotient=SignedLogValue.from_log(log_q),
        bergman=SignedLogValue(p * math.log(t)) * m.s0,
    )


def fs_quotient(p: int, radius: float | None = None, *, log_radius: float | None = None,
                tol_nats: float = DEFAULT_TOL_NATS) -> FsQuotientSample:
    """Pulled-back Fubini-Study form over p times the Poincare form, t^2 V / (2 pi p)."""
    return fs_quotient_t(p, t_from_radius(radius, log_radius), tol_nats)


# ---------------------------------------------------------------------------
# plateau error B_p - (p-1)/(2 pi)

_DUAL_MAX_TERMS = 10**6


def _dual_terms_needed(p: int, theta: float, log_first: float) -> float:
    # tail sum_{k>K} |1 + i theta k|^{-p} <= theta^{-p} K^{1-p} / (p-1); push it
    # 40 nats below the first term
    if p < 3:
        return math.inf
    num = -p * math.log(theta) - math.log(p - 1) - log_first + 40.0
    return math.exp(max(0.0, num / (p - 1)))


def plateau_error_t(p: int, t: float, tol_nats: float = DEFAULT_TOL_NATS) -> SignedLogValue:
    """Signed B_p - (p-1)/(2 pi) at t = -ln|z|^2.

    Near the plateau the difference sits far below double precision of B_p,
    so it is taken from the dual representation

        B_p - (p-1)/(2 pi) = (p-1)/pi * sum_{k>=1} Re (1 + 2 pi i k / t)^{-p},

    (Poisson summation of sum_l l^{p-1} e^{-lt}).  Where that series converges
    too slowly the direct subtraction is used; it is accurate there because the
    difference is then not small.
    """
    p = _check_p(p)
    t = _check_t(t)
    theta = 2.0 * math.pi / t
    log_first = -0.5 * p * math.log1p(theta * theta)
    k_needed = _dual_terms_needed(p, theta, log_first)
    if k_needed <= _DUAL_MAX_TERMS:
        k = np.arange(1, int(k_needed) + 2, dtype=float)
        x = theta * k
        log_mod = -0.5 * p * np.log1p(x * x)
        cosines = np.cos(p * np.arctan(x))
        total = signed_log_sum(log_mod + np.log(np.abs(cosines)), np.sign(cosines))
        return SignedLogValue(math.log((p - 1) / math.pi)) * total
    b = bergman_density_t(p, t, tol_nats).to_float()
    return SignedLogValue.from_float(b - (p - 1) / (2.0 * math.pi))


def plateau_error(p: int, radius: float | None = None, *, log_radius: float | None = None,
                  tol_nats: float = DEFAULT_TOL_NATS) -> SignedLogValue:
    return plateau_error_t(p, t_from_radius(radius, log_radius), tol_nats)


# ---------------------------------------------------------------------------
# four-block splitting of S0 S2 - S1^2


@dataclass(frozen=True)
class SplitQuadruple:
    i1: SignedLogValue
    i2: SignedLogValue
    i3: SignedLogValue
    i4: SignedLogValue
    delta: int

    @property
    def total(self) -> SignedLogValue:
        return self.i1 + self.i2 + self.i3 + self.i4

    def as_tuple(self) -> tuple[SignedLogValue, ...]:
        return (self.i1, self.i2, self.i3, self.i4)


@dataclass(frozen=True)
class SplitDetail:
    """A split together with the full-series mass, for ratios against beta_p^2."""

    split: SplitQuadruple
    log_s0: float
    low: _Block
    high: _Block


def _split_blocks(p: int, t: float, delta: int, max_index: int | None,
                  tol_nats: float) -> tuple[_Block, _Block]:
    if max_index is not None:
        low = _block(p, t, 1, min(delta, max_index))
        high = _block(p, t, delta + 1, max_index)
        return low, high
    low = _block(p, t, 1, delta)
    lo, hi = series_window(p, t, tol_nats, start=delta + 1)
    high = _block(p, t, lo, hi)
    return low, high


def split_detail_t(p: int, t: float, delta: int, *, max_index: int | None = None,
                   tol_nats: float = DEFAULT_TOL_NATS) -> SplitDetail:
    p = _check_p(p)
    t = _check_t(t)
    if delta < 0:
        raise DomainError(f"delta must be >= 0, got {delta}")
    low, high = _split_blocks(p, t, delta, max_index, tol_nats)
    zero = SignedLogValue.zero()
    i1 = i2 = i3 = i4 = zero
    if not low.empty:
        i1 = SignedLogValue.from_log(2.0 * low.log_mass + low.log_var)
    if not high.empty:
        i4 = SignedLogValue.from_log(2.0 * high.log_mass + high.log_var)
    if not (low.empty or high.empty):
        cross = low.log_mass + high.log_mass
        # every l in the low block is below every index of the high block, so
        # both factors below are termwise positive
        e2 = low.log_expect(np.log(low.l) + np.log(high.mean - low.l))
        e3 = high.log_expect(np.log(high.l) + np.log(high.l - low.mean))
        i2 = SignedLogValue.from_log(cross + e2, -1)
        i3 = SignedLogValue.from_log(cross + e3, 1)
    log_s0 = log_sum(np.array([low.log_mass, high.log_mass]))
    return SplitDetail(SplitQuadruple(i1, i2, i3, i4, delta), log_s0, low, high)


def i_split(p: int, radius: float | None = None, r: float = DEFAULT_R, *,
            log_radius: float | None = None, delta: int | None = None,
            max_index: int | None = None,
            tol_nats: float = DEFAULT_TOL_NATS) -> SplitQuadruple:
    """Blocks I1..I4 of sum_{l,m} l(l-m) a_l a_m s^{l+m}, split at delta_p(p, r).

    ``delta`` overrides the cutoff; ``max_index`` truncates both index ranges
    at a fixed L instead of the adaptive window.
    """
    t = t_from_radius(radius, log_radius)
    if delta is None:
        delta = delta_p(p, r)
    return split_detail_t(p, t, delta, max_index=max_index, tol_nats=tol_nats).split


# ---------------------------------------------------------------------------
# bound certificates

CERTIFICATES = ("EQ30", "EQ0038", "EQ38", "EQ43", "EQ45", "EQ48", "EQ52")

CERTIFICATE_LABELS = {
    "EQ30": "first term below beta: a_1 s / beta",
    "EQ0038": "shifted low sum <= 2^{p-1} beta",
    "EQ38": "l=1 row of I1 <= p 2^{p-1} s beta^2",
    "EQ43": "|I1| <= p^2 beta^2",
    "EQ45": "t^2 |I1| / beta^2 <= 4 p^4 on the middle region",
    "EQ48": "c_s <= sqrt(p) (2r)^{-s} |ln (2r)^2|^{-p/2}",
    "EQ52": "tail factor <= p^{-1/2} 2^{-alpha' p} beta^{1/2} for |z| <= c' p^{-A'}",
}


def certificate_eval(cert_id: str, p: int, radius: float | None = None,
                     r: float = DEFAULT_R, tau: int = 1, *,
                     log_radius: float | None = None,
                     b: float = DEFAULT_B, gamma: float = DEFAULT_GAMMA,
                     tol_nats: float = DEFAULT_TOL_NATS) -> SignedLogValue:
    """LHS / RHS of one of the bound inequalities with every unnamed constant set to 1.

    For ``EQ48`` the radius is unused and ``tau`` is the coefficient index s.
    """
    cert_id = cert_id.upper()
    if cert_id not in CERTIFICATES:
        raise DomainError(f"unknown certificate {cert_id!r}; expected one of {CERTIFICATES}")
    p = _check_p(p)
    delta = delta_p(p, r)
    ln_4r2 = abs(2.0 * math.log(2.0 * r))

    if cert_id == "EQ48":
        s_idx = int(tau)
        if s_idx < 1:
            raise DomainError("EQ48 needs a coefficient index tau >= 1")
        log_lhs = 0.5 * log_coeff_sq(p, s_idx)
        log_rhs = 0.5 * math.log(p) - s_idx * math.log(2.0 * r) - 0.5 * p * math.log(ln_4r2)
        return SignedLogValue(log_lhs - log_rhs)

    t = t_from_radius(radius, log_radius)
    log_abs_z = -0.5 * t
    det = split_detail_t(p, t, delta, tol_nats=tol_nats)
    log_beta = det.log_s0
    c = _log_const(p)

    if cert_id == "EQ30":
        return SignedLogValue(c - t - log_beta)

    if cert_id == "EQ0038":
        if delta < 2:
            return SignedLogValue.zero()
        l = np.arange(2, delta + 1, dtype=float)
        lhs = log_sum(c + (p - 1) * np.log(l) - (l - 1) * t)
        return SignedLogValue(lhs - ((p - 1) * math.log(2.0) + log_beta))

    if cert_id == "EQ38":
        if delta < 2:
            return SignedLogValue.zero()
        m = np.arange(2, delta + 1, dtype=float)
        lhs = log_sum(np.log(m - 1) + 2 * c + (p - 1) * np.log(m) - (1 + m) * t)
        rhs = math.log(p) + (p - 1) * math.log(2.0) - t + 2.0 * log_beta
        return SignedLogValue(lhs - rhs)

    i1 = det.split.i1
    if cert_id == "EQ43":
        return abs(i1) / SignedLogValue(2.0 * math.log(p) + 2.0 * log_beta)

    if cert_id == "EQ45":
        slack = 1e-12 * p
        if not (-p - slack <= log_abs_z <= math.log(b) - p**gamma + slack):
            raise DomainError("EQ45 applies only on the middle region e^-p < |z| < b e^{-p^gamma}")
        q = abs(i1) * SignedLogValue(2.0 * math.log(t) - 2.0 * log_beta)
        return q / SignedLogValue(math.log(4.0) + 4.0 * math.log(p))

    # EQ52
    lc = lemma2_constants(r)
    if log_abs_z > lc.log_radius_bound(p) + 1e-12 * p:
        raise DomainError("EQ52 applies only for |z| <= c' p^{-A'}")
    expo = delta - int(tau) + 1
    log_lhs = -0.5 * p * math.log(ln_4r2) + expo * (log_abs_z - math.log(2.0 * r))
    log_rhs = -0.5 * math.log(p) - lc.alpha_prime * p * math.log(2.0) + 0.5 * log_beta
    return SignedLogValue(log_lhs - log_rhs)
