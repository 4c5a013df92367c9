"""Brute-force and quadrature oracles.

Nothing here calls into :mod:`bergman_lab.kernel`; coefficients come from exact
integer factorials and sums are plain loops or direct quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .logvalue import SignedLogValue
from .kernel import SplitQuadruple
from .model_core import DomainError


class NonConvergenceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    scheme: str = "adaptive-interval"
    abs_tol: float = 1e-13
    max_subdivisions: int = 200

    def __post_init__(self):
        if self.scheme not in ("adaptive-interval", "gauss-laguerre"):
            raise ValueError(f"unknown quadrature scheme {self.scheme!r}")
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


def _ln_fact(n: int) -> float:
    return math.log(math.factorial(n))


def _check(p: int, l: int):
    if p < 2 or l < 1:
        raise DomainError(f"need p >= 2 and l >= 1, got p={p}, l={l}")


def _gamma_type_integral(k: int, rate: float, spec: QuadratureSpec) -> tuple[float, float]:
    """(ln I, abs error of the scaled integral) for I = int_0^inf t^k e^{-rate t} dt."""
    if spec.scheme == "gauss-laguerre":
        # u = rate * t turns the weight into e^{-u}; n nodes are exact for k <= 2n - 1
        n = max(20, k // 2 + 2)
        u, w = np.polynomial.laguerre.laggauss(n)
        log_terms = np.log(w) + k * np.log(u)
        m = float(np.max(log_terms))
        val = m + math.log(float(np.sum(np.exp(log_terms - m))))
        return val - (k + 1) * math.log(rate), 0.0

    # scale by the integrand peak so quad sees values of order one
    t_peak = k / rate
    log_peak = k * math.log(t_peak) - rate * t_peak if k > 0 else 0.0

    def f(t):
        if t <= 0.0:
            return 1.0 if k == 0 else 0.0
        return math.exp(k * math.log(t) - rate * t - log_peak)

    width = math.sqrt(k + 1.0) / rate
    pieces = [(0.0, t_peak), (t_peak, t_peak + 40.0 * width), (t_peak + 40.0 * width, math.inf)]
    total = err = 0.0
    for a, b in pieces:
        if b <= a:
            continue
        val, e, info = integrate.quad(
            f, a, b, epsabs=spec.abs_tol, epsrel=spec.abs_tol,
            limit=spec.max_subdivisions, full_output=1,
        )[:3]
        total += val
        err += e
    if err > max(spec.abs_tol, spec.abs_tol * total) * 100.0:
        raise NonConvergenceError(
            f"quadrature of t^{k} e^(-{rate:g} t) did not converge: error estimate {err:.3g}"
        )
    return log_peak + math.log(total), err


def norm_by_quadrature(p: int, l: int, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """||z^l||^2 in the weighted L^2 space, integrated in t = -ln r^2.

    ||z^l||^2 = 4 pi int_0^1 r^{2l-1} (-2 ln r)^{p-2} dr = 2 pi int_0^inf t^{p-2} e^{-lt} dt.
    """
    _check(p, l)
    ln_i, _ = _gamma_type_integral(p - 2, float(l), spec)
    return 2.0 * math.pi * math.exp(ln_i)


def log_norm_closed_form(p: int, l: int) -> float:
    """ln(2 pi (p-2)! / l^{p-1}) from exact integer arithmetic."""
    _check(p, l)
    num = 2 * math.factorial(p - 2)
    return math.log(math.pi) + math.log(num) - (p - 1) * math.log(l)


def orthogonality_check(p: int, l: int, m: int, spec: QuadratureSpec = QuadratureSpec(),
                        n_angles: int = 64) -> float:
    """|<z^l, z^m>| from a radial quadrature times a periodic trapezoid in the angle."""
    _check(p, min(l, m))
    k = abs(l - m)
    n = n_angles
    while n <= k:
        n *= 2
    theta = 2.0 * math.pi * np.arange(n) / n
    angular = complex(np.sum(np.exp(1j * k * theta))) * (2.0 * math.pi / n)
    # int r^{l+m} t^p * 2 r dr / (r^2 t^2) = int_0^inf t^{p-2} e^{-(l+m)t/2} dt
    ln_rad, _ = _gamma_type_integral(p - 2, 0.5 * (l + m), spec)
    return abs(angular) * math.exp(ln_rad)


def brute_double_sum(p: int, s: float, L: int, delta: int) -> SplitQuadruple:
    """I1..I4 by explicit double sums over l, m <= L with the low block l, m <= delta."""
    if not (0 <= delta <= L <= 5000):
        raise DomainError(f"need 0 <= delta <= L <= 5000, got delta={delta}, L={L}")
    if p < 2 or not (0.0 < s < 1.0):
        raise DomainError("need p >= 2 and 0 < s < 1")
    fact = math.factorial(p - 2)
    a = [0.0] + [float(l ** (p - 1)) / (2.0 * math.pi * fact) * s**l for l in range(1, L + 1)]
    blocks = {1: [], 2: [], 3: [], 4: []}
    for l in range(1, L + 1):
        al = a[l]
        for m in range(1, L + 1):
            if l == m:
                continue
            term = l * (l - m) * al * a[m]
            if l <= delta:
                blocks[1 if m <= delta else 2].append(term)
            else:
                blocks[3 if m <= delta else 4].append(term)
    vals = [SignedLogValue.from_float(math.fsum(blocks[j])) for j in (1, 2, 3, 4)]
    return SplitQuadruple(*vals, delta=delta)


def _log_bergman_plain(p: int, t: float, max_index: int | None = None) -> float:
    ln_c = -math.log(2.0 * math.pi) - _ln_fact(p - 2)
    if max_index is None:
        peak = max(1.0, (p - 1) / t)
        L = int(peak) + 1
        while (p - 1) * math.log(L) - L * t > (p - 1) * math.log(peak) - peak * t - 60.0:
            L *= 2
    else:
        L = max_index
    l = np.arange(1, L + 1, dtype=float)
    lt = (p - 1) * np.log(l) - l * t
    m = float(np.max(lt))
    return p * math.log(t) + ln_c + m + math.log(float(np.sum(np.exp(lt - m))))


def default_fd_step(radius: float) -> float:
    return min(1e-4 * radius, 0.25 * radius, 0.25 * (1.0 - radius))


def fd_quotient(p: int, x: float, y: float, h: float | None = None, *,
                max_index: int | None = None) -> float:
    """Quotient from the 5-point Laplacian of log B_p at z = x + iy.

    Q = 1/(2 pi) + s (ln s)^2 * Lap(log B_p) / (8 pi p),  s = |z|^2.
    """
    rad = math.hypot(x, y)
    if not (0.0 < rad < 1.0):
        raise DomainError(f"z = {x}+{y}i is not in the punctured disc")
    if h is None:
        h = default_fd_step(rad)
    pts = [(x, y), (x + h, y), (x - h, y), (x, y + h), (x, y - h)]
    for px, py in pts:
        pr = math.hypot(px, py)
        if not (0.0 < pr < 1.0) or h >= rad:
            raise DomainError(f"stencil of step {h:g} at z = {x}+{y}i leaves the punctured disc")
    f = [_log_bergman_plain(p, -math.log(px * px + py * py), max_index) for px, py in pts]
    lap = (f[1] + f[2] + f[3] + f[4] - 4.0 * f[0]) / (h * h)
    s = rad * rad
    return 1.0 / (2.0 * math.pi) + s * math.log(s) ** 2 * lap / (8.0 * math.pi * p)


def lgamma_stirling_check(p: int) -> float:
    """p^p / p! * sqrt(2 pi p) * e^{-p}, evaluated in log space from exact p!."""
    if p < 1:
        raise DomainError("p must be >= 1")
    return math.exp(p * math.log(p) - _ln_fact(p) + 0.5 * math.log(2.0 * math.pi * p) - p)


def lgamma_factorial_error(n_max: int = 170) -> float:
    """Largest |lgamma(n+1) - ln n!| over 0 <= n <= n_max, against exact integers."""
    from .model_core import log_factorial

    return max(abs(log_factorial(n) - _ln_fact(n)) for n in range(n_max + 1))
