"""Cusp-form Bergman function and Bergman-form ratio for level-one data.

A basis is a list of q-expansions of weight k = 2p.  The Petersson product is

    <f, g> = int_F f conj(g) (2y)^k dx dy / (2 y^2)

over F = {|x| <= 1/2, |z| >= 1}, the Bergman function is

    S(z) = sum_j |f~_j(z)|^2 (2y)^k = (2y)^k v^H G^{-1} v,   v_j = f_j(z),

and the ratio reported by :func:`bergman_ratio` is

    (i / 2 pi) d dbar log S  /  (p dx dy / (2 y^2)) = y^2 Lap(log S) / (2 pi p).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path

import numpy as np
from scipy import linalg, special

from .model_core import DomainError

TWO_PI = 2.0 * math.pi
EVAL_IM_FLOOR = 0.5
DATA_DIR = Path(__file__).with_name("data")


class BasisError(ValueError):
    """Malformed basis file or basis data."""


class CuspConditionError(BasisError):
    pass


class TruncationFloorError(BasisError):
    pass


class TruncationWarning(RuntimeWarning):
    pass


class GramError(ArithmeticError):
    pass


class VanishingKernelError(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# data


@dataclass(frozen=True, eq=False)
class QExpansion:
    """sum_{n>=1} a_n q^n, with ``coeffs[n-1] = a_n``."""

    coeffs: np.ndarray
    weight: int

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size == 0:
            raise BasisError("a q-expansion needs a nonempty 1-d coefficient array")
        if not np.all(np.isfinite(c)):
            raise BasisError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def truncation(self) -> int:
        return int(self.coeffs.size)

    def scaled(self, factor: complex) -> "QExpansion":
        return QExpansion(self.coeffs * factor, self.weight)


@dataclass(frozen=True, eq=False)
class CuspFormBasis:
    weight: int
    forms: tuple[QExpansion, ...]
    q_truncation: int
    label: str = ""

    def __post_init__(self):
        k = self.weight
        if not isinstance(k, int) or k < 12 or k % 2:
            raise BasisError(f"weight must be an even integer >= 12, got {k!r}")
        if not self.forms:
            raise BasisError("a basis needs at least one form")
        if self.q_truncation < 10 * k:
            raise TruncationFloorError(
                f"truncation {self.q_truncation} is below the floor 10*weight = {10 * k}"
            )
        for f in self.forms:
            if f.weight != k:
                raise BasisError("all forms must share the basis weight")
            if f.truncation < self.q_truncation:
                raise BasisError(f"a form has {f.truncation} coefficients, expected {self.q_truncation}")
        object.__setattr__(self, "forms", tuple(self.forms))

    @property
    def p(self) -> int:
        return self.weight // 2

    @property
    def dim(self) -> int:
        return len(self.forms)

    def coefficient_matrix(self) -> np.ndarray:
        """d x N array of a_n for n = 1..N."""
        return np.stack([f.coeffs[: self.q_truncation] for f in self.forms])

    def recombined(self, matrix) -> "CuspFormBasis":
        """Basis g_i = sum_j A_ij f_j for an invertible d x d matrix A."""
        a = np.asarray(matrix, dtype=complex)
        if a.shape != (self.dim, self.dim):
            raise BasisError(f"recombination matrix must be {self.dim}x{self.dim}")
        if abs(np.linalg.det(a)) < 1e-12 * max(1.0, np.abs(a).max()) ** self.dim:
            raise BasisError("recombination matrix is singular")
        new = a @ self.coefficient_matrix()
        forms = tuple(QExpansion(row, self.weight) for row in new)
        return CuspFormBasis(self.weight, forms, self.q_truncation, self.label + "*")


def _parse_coeff(c) -> complex:
    if isinstance(c, bool):
        raise BasisError(f"bad coefficient {c!r}")
    if isinstance(c, int):
        return complex(float(c))
    if isinstance(c, str):
        try:
            return complex(float(Decimal(c.strip())))
        except InvalidOperation:
            raise BasisError(f"bad coefficient {c!r}") from None
    if isinstance(c, float):
        return complex(c)
    raise BasisError(f"coefficients must be integers or decimal strings, got {c!r}")


def basis_from_dict(data: dict) -> CuspFormBasis:
    """Build a basis from the JSON schema {label, weight, truncation, forms}.

    Each form lists a_1, a_2, ...; with ``"leading_index": 0`` the lists
    start at a_0, which must then be zero.
    """
    try:
        weight = data["weight"]
        truncation = data["truncation"]
        raw_forms = data["forms"]
    except (KeyError, TypeError) as exc:
        raise BasisError(f"basis file is missing field {exc}") from None
    label = str(data.get("label", ""))
    lead = data.get("leading_index", 1)
    if lead not in (0, 1):
        raise BasisError("leading_index must be 0 or 1")
    if not isinstance(weight, int) or not isinstance(truncation, int):
        raise BasisError("weight and truncation must be integers")
    if not isinstance(raw_forms, list) or not all(isinstance(f, list) for f in raw_forms):
        raise BasisError("forms must be a list of coefficient lists")
    forms = []
    for i, raw in enumerate(raw_forms):
        coeffs = [_parse_coeff(c) for c in raw]
        if lead == 0:
            if not coeffs or coeffs[0] != 0:
                raise CuspConditionError(f"form {i} has a nonzero constant term")
            coeffs = coeffs[1:]
        if len(coeffs) < truncation:
            raise BasisError(f"form {i} has {len(coeffs)} coefficients, truncation is {truncation}")
        forms.append(QExpansion(np.array(coeffs[:truncation]), weight))
    return CuspFormBasis(weight, tuple(forms), truncation, label)


def load_basis(path) -> CuspFormBasis:
    """Read a basis file; a bare name such as ``weight12`` refers to bundled data."""
    path = Path(path)
    if not path.exists() and not path.suffix and (DATA_DIR / f"{path.name}.json").exists():
        path = DATA_DIR / f"{path.name}.json"
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise BasisError(f"{path}: not valid JSON ({exc})") from None
    return basis_from_dict(data)


# ---------------------------------------------------------------------------
# evaluation


def reduce_point(z: complex) -> tuple[complex, complex, int]:
    """Move z to Im >= 1/2 with translations and inversions.

    Returns (w, j, n): j is the product of the points z_i that were inverted
    and n counts them, so a weight-k form satisfies f(z) = j^{-k} f(w).
    """
    if not z.imag > 0:
        raise DomainError(f"need Im z > 0, got {z}")
    w = complex(math.remainder(z.real, 1.0), z.imag)
    j = 1.0 + 0.0j
    n = 0
    while w.imag < EVAL_IM_FLOOR:
        j *= w
        w = -1.0 / w
        w = complex(math.remainder(w.real, 1.0), w.imag)
        n += 1
        if n > 10_000:
            raise DomainError(f"reduction of {z} did not terminate")
    return w, j, n


def _q_powers(w: complex, n: int, deriv: int = 0) -> np.ndarray:
    """(2 pi i m)^deriv q^m for m = 1..n at a point with reduced real part."""
    m = np.arange(1, n + 1, dtype=float)
    x = math.remainder(w.real, 1.0)
    qm = np.exp(-TWO_PI * m * w.imag) * np.exp(1j * TWO_PI * m * x)
    if deriv:
        qm = qm * (1j * TWO_PI * m) ** deriv
    return qm


def _tail_estimate(coeffs: np.ndarray, weight: int, y: float) -> float:
    """Majorant of sum_{n>N} |a_n| e^{-2 pi n y} from a fitted n^{k/2+1} envelope."""
    N = coeffs.size
    n = np.arange(1, N + 1, dtype=float)
    expo = weight / 2.0 + 1.0
    env = float(np.max(np.abs(coeffs) / n**expo))
    m = np.arange(N + 1, 3 * N + 1, dtype=float)
    return env * float(np.sum(np.exp(expo * np.log(m) - TWO_PI * m * y)))


def evaluate_form_with_tail(form: QExpansion, z: complex) -> tuple[complex, float]:
    """f(z) and an estimate of the neglected tail (in the same units)."""
    z = complex(z)
    w, j, n_inv = reduce_point(z)
    qm = _q_powers(w, form.truncation)
    terms = form.coeffs * qm
    val = complex(np.sum(terms))
    tail = _tail_estimate(form.coeffs, form.weight, w.imag)
    last = abs(terms[-1])
    if last > 1e-15 * abs(val) and val != 0:
        warnings.warn(
            f"q-expansion may be under-truncated at z={z}: last term {last:.3g}, sum {abs(val):.3g}",
            TruncationWarning, stacklevel=2,
        )
    if n_inv:
        factor = j ** (-form.weight)
        val *= factor
        tail *= abs(factor)
    return val, tail


def evaluate_form(form: QExpansion, z: complex) -> complex:
    """Truncated q-series sum_n a_n e^{2 pi i n z}.

    Points with Im z < 1/2 are first moved up by z -> -1/z and integer
    translations, with the weight-k automorphy factor applied.
    """
    return evaluate_form_with_tail(form, z)[0]


def _values(basis: CuspFormBasis, w: complex, deriv: int = 0) -> np.ndarray:
    """Vector of d^deriv f_j / dz^deriv at a point already in Im >= 1/2."""
    return basis.coefficient_matrix() @ _q_powers(w, basis.q_truncation, deriv)


# ---------------------------------------------------------------------------
# Petersson Gram


@dataclass(frozen=True)
class GramQuadSpec:
    x_panels: int = 8
    y_panels: int = 24
    nodes: int = 16
    coarse_nodes: int = 10
    tail_rel: float = 1e-16

    def __post_init__(self):
        if min(self.x_panels, self.y_panels) < 1 or self.nodes < 2:
            raise DomainError("panel and node counts must be positive")
        if not 2 <= self.coarse_nodes < self.nodes:
            raise DomainError("coarse_nodes must be in [2, nodes)")


@dataclass(frozen=True, eq=False)
class PeterssonGram:
    matrix: np.ndarray
    quadrature_error_estimate: float
    y_max: float = math.nan
    cholesky: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        g = np.array(self.matrix, dtype=complex)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise GramError("Gram matrix must be square")
        scale = max(1.0, float(np.abs(g).max()))
        if np.abs(g - g.conj().T).max() > 1e-10 * scale:
            raise GramError("Gram matrix is not Hermitian")
        g = 0.5 * (g + g.conj().T)
        eig = np.linalg.eigvalsh(g)
        if not np.all(eig > 0):
            raise GramError(
                f"Gram matrix is not positive definite (smallest eigenvalue {eig.min():.3g}); "
                "check truncation and basis data"
            )
        g.setflags(write=False)
        chol = np.linalg.cholesky(g)
        chol.setflags(write=False)
        object.__setattr__(self, "matrix", g)
        object.__setattr__(self, "cholesky", chol)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def _y_max(weight: int, tail_rel: float) -> float:
    """Height beyond which the leading-term integrand y^{k-2} e^{-4 pi y} has mass < tail_rel."""
    a = weight - 1.0
    lo, hi = 1.0, 2.0
    while special.gammaincc(a, 2.0 * TWO_PI * hi) > tail_rel:
        hi *= 2.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if special.gammaincc(a, 2.0 * TWO_PI * mid) > tail_rel:
            lo = mid
        else:
            hi = mid
    return hi


def _gram_rule(basis: CuspFormBasis, spec: GramQuadSpec, nodes: int, y_max: float) -> np.ndarray:
    k = basis.weight
    u, wu = np.polynomial.legendre.leggauss(nodes)
    # x nodes over 8 equal panels on [-1/2, 1/2]
    edges = np.linspace(-0.5, 0.5, spec.x_panels + 1)
    xs = np.concatenate([0.5 * (b - a) * u + 0.5 * (a + b) for a, b in zip(edges, edges[1:])])
    wx = np.concatenate([0.5 * (b - a) * wu for a, b in zip(edges, edges[1:])])

    coeffs = basis.coefficient_matrix()
    n = np.arange(1, basis.q_truncation + 1, dtype=float)
    G = np.zeros((basis.dim, basis.dim), dtype=complex)
    ratio_steps = np.arange(spec.y_panels + 1) / spec.y_panels
    for x, wxi in zip(xs, wx):
        y0 = math.sqrt(1.0 - x * x)
        yedges = y0 * (y_max / y0) ** ratio_steps
        ys = np.concatenate([0.5 * (b - a) * u + 0.5 * (a + b) for a, b in zip(yedges, yedges[1:])])
        wy = np.concatenate([0.5 * (b - a) * wu for a, b in zip(yedges, yedges[1:])])
        q = np.exp(-TWO_PI * np.outer(ys, n)) * np.exp(1j * TWO_PI * x * n)[None, :]
        vals = q @ coeffs.T  # (ny, d)
        # (2y)^k / (2 y^2) in logs to keep large weights finite
        dens = np.exp(k * np.log(2.0 * ys) - np.log(2.0 * ys * ys)) * wy * wxi
        G += (vals * dens[:, None]).T @ vals.conj()
    return G


def petersson_gram(basis: CuspFormBasis, quad_spec: GramQuadSpec = GramQuadSpec()) -> PeterssonGram:
    """G_ij = <f_i, f_j> by tensor Gauss-Legendre panels on the truncated domain.

    The error estimate is the largest entrywise difference from the same
    panels with ``coarse_nodes`` points each.
    """
    y_max = _y_max(basis.weight, quad_spec.tail_rel)
    fine = _gram_rule(basis, quad_spec, quad_spec.nodes, y_max)
    coarse = _gram_rule(basis, quad_spec, quad_spec.coarse_nodes, y_max)
    err = float(np.abs(fine - coarse).max())
    return PeterssonGram(fine, err, y_max)


# ---------------------------------------------------------------------------
# Bergman function and ratio


def _orthonormal_values(gram: PeterssonGram, v: np.ndarray) -> np.ndarray:
    return linalg.solve_triangular(gram.cholesky, v, lower=True)


def _log_u(basis: CuspFormBasis, gram: PeterssonGram, w: complex) -> float:
    """ln sum_j |f~_j(w)|^2 at a point with Im w >= 1/2."""
    vt = _orthonormal_values(gram, _values(basis, w))
    u = float(np.sum(np.abs(vt) ** 2))
    if not u > 0.0 or not math.isfinite(u):
        raise VanishingKernelError(f"Bergman function underflows at z = {w}")
    return math.log(u)


def log_bergman_function(basis: CuspFormBasis, gram: PeterssonGram, z: complex) -> float:
    z = complex(z)
    w, _, _ = reduce_point(z)
    # S is invariant, so evaluate at the reduced point
    return _log_u(basis, gram, w) + basis.weight * math.log(2.0 * w.imag)


def bergman_function(basis: CuspFormBasis, gram: PeterssonGram, z: complex) -> float:
    """S(z) = sum_j |f~_j(z)|^2 (2 Im z)^k for the Gram-orthonormalized basis."""
    _check_gram(basis, gram)
    z = complex(z)
    if not z.imag > 0:
        raise DomainError(f"need Im z > 0, got {z}")
    w, j, n_inv = reduce_point(z)
    if n_inv == 0:
        vt = _orthonormal_values(gram, _values(basis, w))
        return float(np.sum(np.abs(vt) ** 2)) * (2.0 * w.imag) ** basis.weight
    return math.exp(log_bergman_function(basis, gram, z))


def _check_gram(basis: CuspFormBasis, gram: PeterssonGram):
    if gram.matrix.shape != (basis.dim, basis.dim):
        raise GramError(f"Gram is {gram.matrix.shape}, basis has dimension {basis.dim}")


@dataclass(frozen=True)
class RatioSample:
    z: complex
    ratio: float
    fs_ratio: float
    mode: str


def _laplacian_log_u_analytic(basis: CuspFormBasis, gram: PeterssonGram, w: complex) -> float:
    """Lap ln(v^H G^{-1} v) = 4 (c u - |a|^2) / u^2 with a = v^H G^{-1} v', c = v'^H G^{-1} v'."""
    v = _orthonormal_values(gram, _values(basis, w))
    dv = _orthonormal_values(gram, _values(basis, w, deriv=1))
    u = float(np.sum(np.abs(v) ** 2))
    if not u > 0.0:
        raise VanishingKernelError(f"Bergman function underflows at z = {w}")
    a = complex(np.vdot(v, dv))
    c = float(np.sum(np.abs(dv) ** 2))
    return 4.0 * (c * u - abs(a) ** 2) / (u * u)


def _laplacian_log_u_fd(basis: CuspFormBasis, gram: PeterssonGram, w: complex, h: float) -> float:
    f0 = _log_u(basis, gram, w)
    fs = [_log_u(basis, gram, w + d) for d in (h, -h, 1j * h, -1j * h)]
    return (sum(fs) - 4.0 * f0) / (h * h)


def bergman_ratio_sample(basis: CuspFormBasis, gram: PeterssonGram, z: complex,
                         mode: str = "analytic-derivative", h: float = 1e-4) -> RatioSample:
    """Ratio together with its Fubini-Study part.

    With log S = log u + k log(2y), and y^2 Lap(k log 2y) / (2 pi p) = -1/pi,
    the ratio splits as ratio = fs_ratio - 1/pi where fs_ratio = y^2 Lap(log u)/(2 pi p).
    """
    _check_gram(basis, gram)
    z = complex(z)
    if not z.imag > 0:
        raise DomainError(f"need Im z > 0, got {z}")
    # the ratio is invariant under the group, so work at the reduced point
    w, _, _ = reduce_point(z)
    y = w.imag
    if mode in ("analytic", "analytic-derivative"):
        lap_u = _laplacian_log_u_analytic(basis, gram, w)
        mode = "analytic-derivative"
    elif mode in ("fd", "finite-difference"):
        if not (0.0 < h < 0.5 * y):
            raise DomainError(f"step h={h} must be in (0, Im z / 2)")
        lap_u = _laplacian_log_u_fd(basis, gram, w, h)
        mode = "finite-difference"
    else:
        raise DomainError(f"unknown mode {mode!r}")
    p = basis.p
    fs_ratio = y * y * lap_u / (TWO_PI * p)
    # Lap(k log 2y) = -k / y^2 exactly
    ratio = y * y * (lap_u - basis.weight / (y * y)) / (TWO_PI * p)
    return RatioSample(z, ratio, fs_ratio, mode)


def bergman_ratio(basis: CuspFormBasis, gram: PeterssonGram, z: complex,
                  mode: str = "analytic-derivative", h: float = 1e-4) -> float:
    """omega^{Ber,p} / (p omega_Sigma) at z, with omega_Sigma = dx dy / (2 y^2)."""
    return bergman_ratio_sample(basis, gram, z, mode, h).ratio


def bergman_ratio_fd_log_s(basis: CuspFormBasis, gram: PeterssonGram, z: complex, h: float = 1e-4) -> float:
    """Same ratio from the 5-point Laplacian of log S itself (no splitting of the y factor)."""
    w, _, _ = reduce_point(complex(z))
    f = [log_bergman_function(basis, gram, w + d) for d in (0, h, -h, 1j * h, -1j * h)]
    lap = (f[1] + f[2] + f[3] + f[4] - 4.0 * f[0]) / (h * h)
    return w.imag**2 * lap / (TWO_PI * basis.p)


def fundamental_domain_samples(n: int, seed: int = 0, y_top: float = 3.0) -> list[complex]:
    """n points uniform in x and in y on F truncated at y_top (deterministic for a seed)."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        x = rng.uniform(-0.5, 0.5)
        y = rng.uniform(math.sqrt(3.0) / 2.0, y_top)
        if x * x + y * y >= 1.0:
            out.append(complex(x, y))
    return out
