"""Region scans, per-p suprema and growth fits.

Grids are log-uniform in t = -ln|z|^2.  Regions are described by their t-range:

    inner      |z| < 2 e^{-p}                       t in [2p - 2 ln 2, T_cap]
    middle     e^{-p} < |z| < b e^{-p^gamma}        t in (t_edge, 2p)
    outer      b e^{-p^gamma} <= |z| < 1            t in [T_OUTER_MIN, t_edge]
    punctured  0 < |z| < b e^{-p^gamma}             inner and middle together
    lemma      0 < |z| <= min(c' p^{-A'}, b e^{-p^gamma})

Unbounded ranges are capped at T_cap = max(8p, 4 t_low); every quantity scanned
here decays exponentially in t well before that.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import kernel
from .logvalue import SignedLogValue
from .model_core import DomainError, ModelParams, lemma2_constants

T_OUTER_MIN = 1e-2
REFINE_PEAKS = 3

REGIONS = ("inner", "middle", "outer", "punctured", "lemma")

QUANTITIES = (
    "FS_QUOTIENT",
    "PLATEAU_ERROR",
    "LEMMA_I1_INNER",
    "LEMMA_I1_MIDDLE",
    "LEMMA_I2",
    "LEMMA_I3",
    "LEMMA_I4",
)

DEFAULT_REGION = {
    "FS_QUOTIENT": "punctured",
    "PLATEAU_ERROR": "outer",
    "LEMMA_I1_INNER": "inner",
    "LEMMA_I1_MIDDLE": "middle",
    "LEMMA_I2": "lemma",
    "LEMMA_I3": "lemma",
    "LEMMA_I4": "lemma",
    "CERT:EQ45": "middle",
    "CERT:EQ52": "lemma",
}

DEFAULT_P_LADDER = (20, 40, 80, 160, 320)


class EmptyRegionError(DomainError):
    pass


def normalize_quantity(quantity: str) -> str:
    q = quantity.strip().upper()
    if q in QUANTITIES:
        return q
    if q.startswith("CERT:") or q.startswith("CERT(") and q.endswith(")"):
        cid = q[5:].strip("()") if q.startswith("CERT:") else q[5:-1]
        if cid not in kernel.CERTIFICATES or cid == "EQ48":
            raise DomainError(f"certificate {cid!r} cannot be scanned over a region")
        return f"CERT:{cid}"
    raise DomainError(f"unknown quantity {quantity!r}")


def region_t_range(model: ModelParams, region: str) -> tuple[float, float]:
    p, b, gamma = model.p, model.b, model.gamma
    t_edge = 2.0 * (p**gamma - math.log(b))
    if region == "inner":
        lo = 2.0 * p - 2.0 * math.log(2.0)
        hi = None
    elif region == "middle":
        lo, hi = t_edge, 2.0 * p
    elif region == "outer":
        lo, hi = T_OUTER_MIN, t_edge
    elif region == "punctured":
        lo, hi = t_edge, None
    elif region == "lemma":
        t_c = -2.0 * lemma2_constants(model.r).log_radius_bound(p)
        lo, hi = max(t_edge, t_c), None
    else:
        raise DomainError(f"unknown region {region!r}; expected one of {REGIONS}")
    if hi is None:
        hi = max(8.0 * p, 4.0 * lo)
    if not lo < hi:
        raise EmptyRegionError(f"region {region!r} is empty for {model}")
    return lo, hi


def evaluate_quantity(quantity: str, model: ModelParams, t: float,
                      tol_nats: float = kernel.DEFAULT_TOL_NATS) -> SignedLogValue:
    """Nonnegative magnitude of a scanned quantity at one t."""
    q = normalize_quantity(quantity)
    p = model.p
    if q == "FS_QUOTIENT":
        return kernel.fs_quotient_t(p, t, tol_nats).quotient
    if q == "PLATEAU_ERROR":
        return abs(kernel.plateau_error_t(p, t, tol_nats))
    if q.startswith("CERT:"):
        return abs(kernel.certificate_eval(
            q[5:], p, r=model.r, log_radius=-0.5 * t, b=model.b, gamma=model.gamma,
            tol_nats=tol_nats,
        ))
    det = kernel.split_detail_t(p, t, model.delta, tol_nats=tol_nats)
    idx = {"LEMMA_I1_INNER": 0, "LEMMA_I1_MIDDLE": 0, "LEMMA_I2": 1, "LEMMA_I3": 2, "LEMMA_I4": 3}[q]
    block = abs(det.split.as_tuple()[idx])
    return block * SignedLogValue(2.0 * math.log(t) - 2.0 * det.log_s0)


def t_grid(model: ModelParams, region: str, n: int) -> np.ndarray:
    lo, hi = region_t_range(model, region)
    return np.geomspace(lo, hi, n)


def scan_sup(model: ModelParams, region: str, n: int, quantity: str,
             tol_nats: float = kernel.DEFAULT_TOL_NATS,
             refine: int = REFINE_PEAKS) -> tuple[SignedLogValue, float]:
    """Largest value of ``quantity`` over ``region``.

    The n-point log-uniform t grid is scanned first; then the ``refine``
    highest local maxima (endpoints included) are polished with a bounded Brent search
    between their grid neighbours.  Both stages are deterministic.
    """
    if n < 2:
        raise DomainError("need at least two grid points")
    ts = t_grid(model, region, n)
    vals = [evaluate_quantity(quantity, model, float(t), tol_nats) for t in ts]
    logs = np.array([v.log_mag for v in vals])
    i_best = int(np.argmax(logs))
    best, best_t = vals[i_best], float(ts[i_best])
    if refine <= 0 or best.is_zero:
        return best, best_t

    # local maxima of the sampled values, endpoints included
    peaks = [
        i for i in range(n)
        if (i == 0 or logs[i] >= logs[i - 1]) and (i == n - 1 or logs[i] >= logs[i + 1])
    ]
    peaks.sort(key=lambda i: (-logs[i], i))

    def neg_log(t):
        return -evaluate_quantity(quantity, model, float(t), tol_nats).log_mag

    for i in peaks[:refine]:
        if not math.isfinite(logs[i]):
            continue
        lo, hi = float(ts[max(i - 1, 0)]), float(ts[min(i + 1, n - 1)])
        res = optimize.minimize_scalar(
            neg_log, bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-9 * float(ts[i])},
        )
        v = evaluate_quantity(quantity, model, float(res.x), tol_nats)
        if v > best:
            best, best_t = v, float(res.x)
    return best, best_t


# ---------------------------------------------------------------------------
# fits and sweeps


def fit_exponent(points) -> tuple[float, float, float]:
    """Ordinary least squares y = slope x + intercept; residual is the RMS misfit."""
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 3:
        raise DomainError("a fit needs at least three points")
    x = np.array([a for a, _ in pts])
    y = np.array([b for _, b in pts])
    if np.any(np.diff(x) <= 0):
        raise DomainError("x values must be strictly increasing")
    if not np.all(np.isfinite(y)):
        raise DomainError("cannot fit non-finite y values")
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), float(math.sqrt(np.mean(resid**2)))


@dataclass(frozen=True)
class SweepConfig:
    p_values: tuple[int, ...]
    quantity: str
    model: ModelParams = field(default_factory=lambda: ModelParams(2))
    samples_per_region: int = 256
    region: str | None = None
    tol_nats: float = kernel.DEFAULT_TOL_NATS

    def __post_init__(self):
        pv = tuple(int(p) for p in self.p_values)
        if not pv or any(p < 2 for p in pv) or any(b <= a for a, b in zip(pv, pv[1:])):
            raise DomainError("p_values must be nonempty, strictly increasing and >= 2")
        if self.samples_per_region < 16:
            raise DomainError("samples_per_region must be >= 16")
        object.__setattr__(self, "p_values", pv)
        q = normalize_quantity(self.quantity)
        object.__setattr__(self, "quantity", q)
        region = self.region or DEFAULT_REGION.get(q, "punctured")
        if region not in REGIONS:
            raise DomainError(f"unknown region {region!r}")
        object.__setattr__(self, "region", region)

    @property
    def exponential(self) -> bool:
        return self.quantity == "PLATEAU_ERROR" or self.quantity.startswith("LEMMA")


@dataclass(frozen=True)
class GrowthReport:
    quantity: str
    region: str
    per_p: tuple[tuple[int, SignedLogValue, float], ...]
    fit_slope: float
    fit_intercept: float
    fit_residual: float
    fitted_epsilon: float
    fit_mode: str

    def table_rows(self) -> list[dict]:
        return [
            {
                "p": p,
                "region": self.region,
                "quantity": self.quantity,
                "sup_log": sup.log_mag if sup.sign else None,
                "argmax_t": t,
            }
            for p, sup, t in self.per_p
        ]


def worker_count() -> int:
    env = os.environ.get("BERGMAN_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"BERGMAN_LAB_THREADS must be an integer, got {env!r}") from None
    return min(4, os.cpu_count() or 1)


def sweep(config: SweepConfig) -> GrowthReport:
    """scan_sup for every p, then a power-law or exponential fit of ln(sup)."""
    def one(p):
        sup, t = scan_sup(config.model.with_p(p), config.region, config.samples_per_region,
                          config.quantity, config.tol_nats)
        return p, sup, t

    threads = worker_count()
    if threads > 1 and len(config.p_values) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_p = tuple(pool.map(one, config.p_values))
    else:
        per_p = tuple(one(p) for p in config.p_values)

    gamma = config.model.gamma
    if config.exponential:
        xs = [p ** (1.0 - 2.0 * gamma) for p, _, _ in per_p]
        mode = "exponential"
    else:
        xs = [math.log(p) for p, _, _ in per_p]
        mode = "power"
    ys = [sup.log_mag for _, sup, _ in per_p]
    if len(per_p) >= 3 and all(math.isfinite(y) for y in ys):
        slope, intercept, resid = fit_exponent(zip(xs, ys))
    else:
        slope = intercept = resid = math.nan
    eps = -slope if config.exponential else math.nan
    return GrowthReport(config.quantity, config.region, per_p, slope, intercept, resid, eps, mode)
