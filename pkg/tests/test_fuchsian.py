import json
import math
import warnings

import numpy as np
import pytest

from bergman_lab import fuchsian as fu
from bergman_lab.model_core import DomainError


@pytest.fixture(scope="module")
def w12():
    b = fu.load_basis("weight12")
    return b, fu.petersson_gram(b)


@pytest.fixture(scope="module")
def w24():
    b = fu.load_basis("weight24")
    return b, fu.petersson_gram(b)


def _primes(n):
    return [k for k in range(2, n + 1) if all(k % d for d in range(2, int(k**0.5) + 1))]


def test_delta_coefficients_hecke(w12):
    """Bundled Delta data obeys Ramanujan tau multiplicativity and the prime-square relation."""
    basis, _ = w12
    tau = {n: int(round(c.real)) for n, c in enumerate(basis.forms[0].coeffs, start=1)}
    assert [tau[n] for n in range(1, 6)] == [1, -24, 252, -1472, 4830]
    for m in range(2, 11):
        for n in range(2, 11):
            if math.gcd(m, n) == 1 and m * n <= 120:
                assert tau[m * n] == tau[m] * tau[n]
    for p in _primes(10):
        assert tau[p * p] == tau[p] ** 2 - p**11
    # Deligne's bound |tau(p)| <= 2 p^{11/2}
    for p in _primes(120):
        assert abs(tau[p]) <= 2 * p**5.5


def test_load_examples(w12, w24):
    assert w12[0].dim == 1 and w12[0].weight == 12
    assert w24[0].dim == 2 and w24[0].weight == 24


def _write(tmp_path, data):
    path = tmp_path / "basis.json"
    path.write_text(json.dumps(data))
    return path


def test_load_errors(tmp_path):
    good = json.loads((fu.DATA_DIR / "weight12.json").read_text())
    bad = dict(good, leading_index=0, forms=[[1] + good["forms"][0]])
    with pytest.raises(fu.CuspConditionError):
        fu.load_basis(_write(tmp_path, bad))
    ok0 = dict(good, leading_index=0, forms=[[0] + good["forms"][0]])
    assert fu.load_basis(_write(tmp_path, ok0)).dim == 1
    short = dict(good, truncation=100, forms=[good["forms"][0][:100]])
    with pytest.raises(fu.TruncationFloorError):
        fu.load_basis(_write(tmp_path, short))
    with pytest.raises(fu.BasisError):
        fu.load_basis(_write(tmp_path, {"weight": 12}))
    with pytest.raises(fu.BasisError):
        fu.load_basis(_write(tmp_path, dict(good, forms=[["x1"] * 120])))
    (tmp_path / "broken.json").write_text("{not json")
    with pytest.raises(fu.BasisError):
        fu.load_basis(tmp_path / "broken.json")
    with pytest.raises(FileNotFoundError):
        fu.load_basis(tmp_path / "missing.json")


def test_decimal_strings_match_integers(w24, tmp_path):
    basis, _ = w24
    raw = json.loads((fu.DATA_DIR / "weight24.json").read_text())
    assert isinstance(raw["forms"][0][5], str)
    as_int = dict(raw, forms=[[int(c) for c in f] for f in raw["forms"]])
    b2 = fu.load_basis(_write(tmp_path, as_int))
    assert np.array_equal(b2.coefficient_matrix(), basis.coefficient_matrix())


def test_evaluate_examples(w12):
    f = w12[0].forms[0]
    v = fu.evaluate_form(f, 2j)
    assert abs(v.imag) < 1e-25 and v.real > 0
    assert v.real == pytest.approx(math.exp(-4 * math.pi), rel=1e-3)
    # direct truncated sum as oracle
    n = np.arange(1, 121)
    direct = sum(int(c.real) * math.exp(-2 * math.pi * k * 2.0) for k, c in zip(n, f.coeffs))
    assert v.real == pytest.approx(direct, rel=1e-14)
    assert abs(fu.evaluate_form(f, 0.3 + 40j)) < 1e-100
    for x in (0.125, -0.375, 0.0078125):
        z = complex(x, 0.8)
        assert fu.evaluate_form(f, z) == fu.evaluate_form(f, z + 1)
    with pytest.raises(DomainError):
        fu.evaluate_form(f, 0.3 - 1j)


def test_evaluate_below_floor_uses_modularity(w12):
    f = w12[0].forms[0]
    z = 0.1 + 0.2j
    assert fu.evaluate_form(f, z) == pytest.approx(fu.evaluate_form(f, -1 / z) * z ** (-12), rel=1e-12)


def test_truncation_warning():
    # coefficients growing like e^{4n} outrun e^{-pi n} at Im z = 1/2
    wild = fu.QExpansion(np.exp(4.0 * np.arange(1, 121)), 12)
    with pytest.warns(fu.TruncationWarning):
        fu.evaluate_form_with_tail(wild, 0.5j)
    f = fu.QExpansion(np.ones(120), 12)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fu.evaluate_form(f, 1j)


def test_gram_properties(w12, w24):
    for basis, gram in (w12, w24):
        g = gram.matrix
        assert np.abs(g - g.conj().T).max() <= 1e-10 * np.abs(g).max()
        assert gram.eigenvalues.min() > 0
        assert gram.quadrature_error_estimate < 1e-8 * np.abs(g).max()
    basis, gram = w12
    doubled = basis.recombined([[2.0]])
    assert fu.petersson_gram(doubled).matrix[0, 0].real == pytest.approx(4 * gram.matrix[0, 0].real, rel=1e-13)


def test_gram_rejects_indefinite():
    with pytest.raises(fu.GramError):
        fu.PeterssonGram(np.array([[1.0, 2.0], [2.0, 1.0]]), 0.0)
    with pytest.raises(fu.GramError):
        fu.PeterssonGram(np.array([[1.0, 1j], [0.0, 1.0]]), 0.0)


def _points(n, seed):
    rng = np.random.default_rng(seed)
    return [complex(rng.uniform(-0.5, 0.5), rng.uniform(0.5, 2.0)) for _ in range(n)]


@pytest.mark.parametrize("which", ["w12", "w24"])
def test_bergman_invariance(which, request):
    basis, gram = request.getfixturevalue(which)
    for z in _points(50, 3):
        s = fu.bergman_function(basis, gram, z)
        assert s > 0
        assert fu.bergman_function(basis, gram, -1 / z) == pytest.approx(s, rel=1e-6)
        xd = round(z.real * 256) / 256
        assert fu.bergman_function(basis, gram, complex(xd, z.imag)) == \
            fu.bergman_function(basis, gram, complex(xd + 1, z.imag))


def test_recombination_invariance(w12, w24):
    basis, gram = w12
    b2 = basis.recombined([[0.3 + 1.7j]])
    g2 = fu.petersson_gram(b2)
    for z in _points(20, 4):
        assert fu.bergman_function(b2, g2, z) == pytest.approx(fu.bergman_function(basis, gram, z), rel=1e-10)
    # weight 24: the Gram has condition number ~2e7, so quadrature rounding is amplified
    basis, gram = w24
    b3 = basis.recombined([[1.0, 2j], [0.5, -1.0]])
    g3 = fu.petersson_gram(b3)
    for z in _points(20, 5):
        assert fu.bergman_function(b3, g3, z) == pytest.approx(fu.bergman_function(basis, gram, z), rel=1e-6)


def test_ratio_weight12_closed_form(w12):
    """d = 1: log S = log|Delta|^2 + 12 log 2y, and log|Delta|^2 is harmonic, so the ratio is -1/pi."""
    basis, gram = w12
    for z in [1.1j, 0.3 + 0.9j, -0.45 + 1.7j, 0.2 + 0.1j]:
        for mode in ("analytic-derivative", "finite-difference"):
            assert fu.bergman_ratio(basis, gram, z, mode) == pytest.approx(-1 / math.pi, rel=1e-6)


def test_ratio_modes_agree(w12, w24):
    for basis, gram in (w12, w24):
        a = fu.bergman_ratio(basis, gram, 1.1j, "analytic-derivative")
        f = fu.bergman_ratio(basis, gram, 1.1j, "finite-difference", h=1e-4)
        assert abs(a - f) <= 1e-4 * abs(a)


def test_ratio_fd_order_two(w24):
    basis, gram = w24
    z = 0.13 + 1.05j
    a = fu.bergman_ratio(basis, gram, z)
    e1 = fu.bergman_ratio(basis, gram, z, "finite-difference", h=2e-2) - a
    e2 = fu.bergman_ratio(basis, gram, z, "finite-difference", h=1e-2) - a
    assert 3.5 <= e1 / e2 <= 4.5


def test_ratio_translation_and_identity(w24):
    basis, gram = w24
    for z in [0.125 + 0.9j, -0.25 + 1.3j]:
        a = fu.bergman_ratio_sample(basis, gram, z)
        b = fu.bergman_ratio_sample(basis, gram, z + 1)
        assert a.ratio == b.ratio
        assert a.fs_ratio == pytest.approx(1 / math.pi + a.ratio, abs=1e-14)
        # the same ratio from the stencil on log S directly
        assert fu.bergman_ratio_fd_log_s(basis, gram, z) == pytest.approx(a.ratio, rel=1e-5)


def test_ratio_errors(w12):
    basis, gram = w12
    with pytest.raises(DomainError):
        fu.bergman_ratio(basis, gram, 1j, mode="spectral")
    with pytest.raises(fu.VanishingKernelError):
        fu.bergman_ratio(basis, gram, 0.1 + 80j)
    other = fu.load_basis("weight24")
    with pytest.raises(fu.GramError):
        fu.bergman_function(other, gram, 1j)


def test_ratio_samples_finite(w12):
    basis, gram = w12
    vals = [abs(fu.bergman_ratio(basis, gram, z)) for z in fu.fundamental_domain_samples(100, 0)]
    assert all(math.isfinite(v) and v > 0 for v in vals)
