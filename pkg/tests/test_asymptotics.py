import math

import numpy as np
import pytest

from bergman_lab import asymptotics as asy
from bergman_lab.model_core import DomainError, ModelParams

LADDER = (20, 40, 80, 160, 320)


def test_fit_exponent_examples():
    xs = np.arange(1.0, 6.0)
    slope, icpt, res = asy.fit_exponent(zip(xs, 2 * xs + 1))
    assert slope == pytest.approx(2.0, abs=1e-12) and icpt == pytest.approx(1.0, abs=1e-12)
    assert res == pytest.approx(0.0, abs=1e-12)
    ps = np.array([10.0, 20.0, 40.0, 80.0])
    slope, _, _ = asy.fit_exponent(zip(np.log(ps), 3 * np.log(ps)))
    assert slope == pytest.approx(3.0, abs=1e-12)
    # an outlier shifts the fit; OLS keeps it
    ys = 2 * xs + 1
    ys[2] += 5
    slope_o, _, res_o = asy.fit_exponent(zip(xs, ys))
    assert res_o > 0 and slope_o == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(DomainError):
        asy.fit_exponent([(0, 0), (1, 1)])
    with pytest.raises(DomainError):
        asy.fit_exponent([(0, 0), (0, 1), (1, 1)])


def test_sweep_config_validation():
    with pytest.raises(DomainError):
        asy.SweepConfig((40, 20, 80), "FS_QUOTIENT")
    with pytest.raises(DomainError):
        asy.SweepConfig((1, 20), "FS_QUOTIENT")
    with pytest.raises(DomainError):
        asy.SweepConfig((20, 40), "FS_QUOTIENT", samples_per_region=8)
    with pytest.raises(DomainError):
        asy.SweepConfig((20, 40), "NOPE")
    with pytest.raises(DomainError):
        ModelParams(2, b=1.5)
    assert asy.SweepConfig((20, 40), "cert(eq43)").quantity == "CERT:EQ43"


def test_scan_examples():
    sup, _ = asy.scan_sup(ModelParams(2), "outer", 64, "FS_QUOTIENT")
    assert sup.sign == 1 and math.isfinite(sup.log_mag)
    sup, _ = asy.scan_sup(ModelParams(100), "outer", 64, "PLATEAU_ERROR")
    assert sup.to_float() <= 1e-6
    sup, t = asy.scan_sup(ModelParams(60), "middle", 64, "FS_QUOTIENT")
    assert abs(t / (59 * math.log(2.0)) - 1.0) <= 0.15


def test_scan_is_deterministic():
    a = asy.scan_sup(ModelParams(80), "punctured", 64, "FS_QUOTIENT")
    b = asy.scan_sup(ModelParams(80), "punctured", 64, "FS_QUOTIENT")
    assert a == b


def test_empty_region():
    with pytest.raises(asy.EmptyRegionError):
        # the middle region (e^-p, b e^{-p^gamma}) is empty when b e^{-p^gamma} <= e^{-p}
        asy.region_t_range(ModelParams(2, b=0.01, gamma=0.49), "middle")


@pytest.mark.parametrize("quantity", [
    "FS_QUOTIENT", "PLATEAU_ERROR", "LEMMA_I1_INNER", "LEMMA_I1_MIDDLE",
    "LEMMA_I2", "LEMMA_I3", "LEMMA_I4", "CERT:EQ43", "CERT:EQ45",
])
def test_grid_resolution(quantity):
    a = asy.sweep(asy.SweepConfig(LADDER, quantity, samples_per_region=256))
    b = asy.sweep(asy.SweepConfig(LADDER, quantity, samples_per_region=512))
    for (_, sa, _), (_, sb, _) in zip(a.per_p, b.per_p):
        if sa.sign == 0:
            assert sb.sign == 0
            continue
        assert abs(sa.log_mag - sb.log_mag) <= 0.01 * max(abs(sa.log_mag), 1e-300) + 1e-12


def test_middle_exceeds_plateau():
    for p in LADDER:
        sup, _ = asy.scan_sup(ModelParams(p), "middle", 256, "FS_QUOTIENT")
        assert sup.to_float() >= 1.0 / (2.0 * math.pi)


def test_monotone_coverage():
    for p in (20, 80, 320):
        m = ModelParams(p)
        inner, _ = asy.scan_sup(m, "inner", 256, "FS_QUOTIENT")
        middle, _ = asy.scan_sup(m, "middle", 256, "FS_QUOTIENT")
        joint, _ = asy.scan_sup(m, "punctured", 1024, "FS_QUOTIENT")
        best = max(inner.log_mag, middle.log_mag)
        assert best >= joint.log_mag - 1e-9


def test_lemma_i1_middle_below_constant():
    rep = asy.sweep(asy.SweepConfig(LADDER, "LEMMA_I1_MIDDLE"))
    for p, sup, _ in rep.per_p:
        assert sup.log_mag <= math.log(4.0 * p**4)


def test_lemma_i1_inner_decay():
    rep = asy.sweep(asy.SweepConfig((40, 80, 160, 320), "LEMMA_I1_INNER"))
    assert all(sup.log_mag / p <= -0.2 for p, sup, _ in rep.per_p)


def test_quotient_growth_fit():
    rep = asy.sweep(asy.SweepConfig(LADDER, "FS_QUOTIENT", region="middle"))
    assert rep.fit_mode == "power"
    assert 0.5 <= rep.fit_slope <= 3.2
    assert rep.fit_residual >= 0


def test_plateau_fit_mode():
    rep = asy.sweep(asy.SweepConfig((50, 100, 200, 400), "PLATEAU_ERROR"))
    assert rep.fit_mode == "exponential" and rep.fitted_epsilon > 0
    rows = rep.table_rows()
    assert [r["p"] for r in rows] == [50, 100, 200, 400]
    assert set(rows[0]) == {"p", "region", "quantity", "sup_log", "argmax_t"}


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("BERGMAN_LAB_THREADS", "1")
    serial = asy.sweep(asy.SweepConfig((40, 80, 160), "FS_QUOTIENT", samples_per_region=64))
    monkeypatch.setenv("BERGMAN_LAB_THREADS", "3")
    threaded = asy.sweep(asy.SweepConfig((40, 80, 160), "FS_QUOTIENT", samples_per_region=64))
    assert serial == threaded
    monkeypatch.setenv("BERGMAN_LAB_THREADS", "many")
    with pytest.raises(DomainError):
        asy.worker_count()
