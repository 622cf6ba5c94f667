import math

import numpy as np
import pytest
from scipy import stats

import fdcr.montecarlo as mc
from fdcr import (
    DomainError,
    McConfig,
    SignalDesign,
    draw_realization,
    estimate_pu_outage,
    estimate_su_outage,
    pu_outage_proper,
    pu_outage_upper,
    pu_rate,
    su_outage,
    su_rate,
)
from fdcr.montecarlo import stream_generator


class TestMcConfig:
    @pytest.mark.parametrize("kw", [dict(samples=0), dict(samples=10, streams=0), dict(samples=10, seed=-1)])
    def test_rejects(self, kw):
        with pytest.raises(DomainError):
            McConfig(**kw)

    def test_stream_sizes(self):
        assert McConfig(10, streams=3).stream_sizes() == [3, 3, 4]
        assert McConfig(2, streams=4).stream_sizes() == [0, 0, 0, 2]


class TestDrawRealization:
    def test_determinism(self, baseline):
        a = draw_realization(baseline, stream_generator(5, 0), 1000)
        b = draw_realization(baseline, stream_generator(5, 0), 1000)
        for name in ("g_p", "i_p", "i_s", "v_p"):
            for k in (0, 1):
                np.testing.assert_array_equal(getattr(a, name)[k], getattr(b, name)[k])
        np.testing.assert_array_equal(a.g_s, b.g_s)

    def test_single_draw_is_scalar(self, baseline):
        r = draw_realization(baseline, stream_generator(0, 0))
        assert np.ndim(r.g_s) == 0

    def test_zero_mean_channel(self, baseline):
        r = draw_realization(baseline.replace(vbar_p=0.0, ibar_s=(0.0, 1.0)), stream_generator(1, 0), 500)
        np.testing.assert_array_equal(r.v_p[0], 0.0)
        np.testing.assert_array_equal(r.v_p[1], 0.0)
        np.testing.assert_array_equal(r.i_s[0], 0.0)
        assert np.all(r.i_s[1] > 0)

    def test_law_of_large_numbers(self, baseline):
        r = draw_realization(baseline, stream_generator(2, 0), 10**6)
        assert abs(np.mean(r.g_s) - 100.0) <= 3 * 100.0 / math.sqrt(10**6)

    def test_masks_match_rates(self, baseline):
        r = draw_realization(baseline, stream_generator(3, 0), 50_000)
        d = SignalDesign(0.4, 0.7)
        by_rate = su_rate(baseline, r, d) < baseline.r0_s
        np.testing.assert_array_equal(mc._su_outage_mask(baseline, r, 0.4, 0.7), by_rate)
        by_rate = pu_rate(baseline, 2, r, d) < baseline.r0_p[1]
        np.testing.assert_array_equal(mc._pu_outage_mask(baseline, 2, r, 0.4, 0.7), by_rate)


class TestEstimators:
    def test_su_baseline(self, baseline):
        d = SignalDesign(1.0, 0.0)
        est = estimate_su_outage(baseline, d, McConfig(10**6, seed=17))
        assert abs(est.mean - su_outage(baseline, d)) <= 3 * est.std_err
        assert est.samples == 10**6 and est.generator == mc.GENERATOR

    def test_su_zero_target(self, baseline):
        est = estimate_su_outage(baseline.replace(r0_s=0.0), SignalDesign(1.0, 0.2), McConfig(10_000))
        assert est.mean == 0.0 and est.std_err == 0.0

    def test_su_huge_power(self, baseline):
        est = estimate_su_outage(baseline, SignalDesign(1e6, 0.0), McConfig(100_000, seed=4))
        assert est.mean < 1e-3

    @pytest.mark.parametrize("cx", [0.0, 0.8])
    def test_pu_silent_su(self, baseline, cx):
        est = estimate_pu_outage(baseline, 1, SignalDesign(0.0, cx), McConfig(400_000, seed=8))
        assert abs(est.mean - pu_outage_proper(baseline, 1, 0.0)) <= 3 * est.std_err

    def test_pu_proper(self, baseline):
        est = estimate_pu_outage(baseline, 2, SignalDesign(1.0, 0.0), McConfig(10**6, seed=9))
        assert abs(est.mean - pu_outage_proper(baseline, 2, 1.0)) <= 3 * est.std_err

    @pytest.mark.parametrize("g_db", [10.0, 25.0, 40.0])
    def test_pu_below_bound(self, baseline, g_db):
        params = baseline.replace(gbar_p=10 ** (g_db / 10))
        d = SignalDesign(1.0, 0.5)
        est = estimate_pu_outage(params, 1, d, McConfig(200_000, seed=10))
        assert est.mean <= pu_outage_upper(params, 1, d) + 3 * est.std_err

    def test_std_err_bound(self, baseline):
        est = estimate_su_outage(baseline, SignalDesign(0.3, 0.3), McConfig(40_000, seed=1))
        assert est.std_err <= 0.5 / math.sqrt(40_000)
        assert est.std_err == pytest.approx(math.sqrt(est.mean * (1 - est.mean) / 40_000))

    def test_bad_node(self, baseline):
        with pytest.raises(DomainError):
            estimate_pu_outage(baseline, 3, SignalDesign(1.0), McConfig(10))


class TestDeterminism:
    def test_repeat_identical(self, baseline):
        cfg = McConfig(123_457, seed=2015, streams=4)
        d = SignalDesign(0.5, 0.5)
        assert estimate_su_outage(baseline, d, cfg) == estimate_su_outage(baseline, d, cfg)

    def test_independent_of_workers(self, baseline):
        cfg = McConfig(300_001, seed=77, streams=5)
        d = SignalDesign(0.8, 0.3)
        serial = estimate_pu_outage(baseline, 1, d, cfg)
        threaded = estimate_pu_outage(baseline, 1, d, cfg, workers=4)
        assert serial == threaded

    def test_independent_of_chunking(self, baseline, monkeypatch):
        cfg = McConfig(100_000, seed=3, streams=2)
        d = SignalDesign(0.2, 0.9)
        ref = estimate_su_outage(baseline, d, cfg)
        monkeypatch.setattr(mc, "CHUNK", 997)
        assert estimate_su_outage(baseline, d, cfg) == ref

    def test_seed_changes_result(self, baseline):
        d = SignalDesign(0.2, 0.9)
        a = estimate_su_outage(baseline, d, McConfig(100_000, seed=1))
        b = estimate_su_outage(baseline, d, McConfig(100_000, seed=2))
        assert a.mean != b.mean


def test_stream_independence(baseline):
    # Two-sample proportion z-test between substreams 0 and 1, 100 trials at
    # the 1% level. Under independence the rejection count is Binomial(100,
    # 0.01); more than 5 rejections has probability below 6e-4.
    n = 20_000
    d = SignalDesign(0.2, 0.5)
    mask = lambda r: mc._su_outage_mask(baseline, r, 0.2, 0.5)
    rejections = 0
    for trial in range(100):
        cfg = McConfig(2 * n, seed=1000 + trial, streams=2)
        a, b = (mc._count_stream(baseline, mask, cfg, k, n) for k in (0, 1))
        pooled = (a + b) / (2 * n)
        z = (a - b) / n / math.sqrt(pooled * (1 - pooled) * 2 / n)
        rejections += abs(z) > stats.norm.ppf(0.995)
    assert rejections <= 5
    assert su_outage(baseline, d) > 0.01


def test_estimator_consistency_over_seeds(baseline):
    # |closed - mean| <= 3 std_err in at least 99 of 100 independent seeds
    d = SignalDesign(0.3, 0.4)
    closed = su_outage(baseline, d)
    hits = 0
    for seed in range(100):
        est = estimate_su_outage(baseline, d, McConfig(20_000, seed=5000 + seed))
        hits += abs(closed - est.mean) <= 3 * est.std_err
    assert hits >= 99
