import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import frozen
from fdcr import (
    DomainError,
    PuConstraintConstants,
    SystemParams,
    constraint_constants,
    db_to_linear,
    linear_to_db,
    max_interference_margin,
    qos_margin,
    snr_threshold,
)
from fdcr.validation import random_scenario


class TestSnrThreshold:
    @pytest.mark.parametrize("r0, expected", [(0.0, 0.0), (0.5, 1.0), (1.0, 3.0)])
    def test_examples(self, r0, expected):
        assert snr_threshold(r0) == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize("r0", [-0.1, math.inf, math.nan])
    def test_domain(self, r0):
        with pytest.raises(DomainError):
            snr_threshold(r0)

    @given(st.floats(0, 5), st.floats(0, 5))
    def test_increasing_and_convex(self, a, b):
        lo, hi = sorted((a, b))
        if hi - lo < 1e-6:
            return
        assert snr_threshold(hi) > snr_threshold(lo)
        mid = snr_threshold(0.5 * (lo + hi))
        assert mid <= 0.5 * (snr_threshold(lo) + snr_threshold(hi)) * (1 + 1e-12)


class TestQosMargin:
    def test_zero_budget(self):
        assert qos_margin(1.0, 100.0, 0.0) == 0.0

    def test_baseline_value(self):
        assert qos_margin(1.0, 10**2.5, 0.01) == pytest.approx(frozen.MU_BASELINE, rel=1e-14)

    @pytest.mark.parametrize("o", [1.0, 1.5, -0.01])
    def test_domain(self, o):
        with pytest.raises(DomainError):
            qos_margin(1.0, 100.0, o)

    def test_diverges_near_one(self):
        assert qos_margin(1.0, 1.0, 1 - 1e-15) > 30

    @given(
        st.floats(0.1, 10), st.floats(1, 1e4), st.floats(1e-4, 0.9), st.floats(1.01, 2.0)
    )
    def test_increasing_in_each_argument(self, p, g, o, factor):
        base = qos_margin(p, g, o)
        assert qos_margin(p * factor, g, o) > base
        assert qos_margin(p, g * factor, o) > base
        assert qos_margin(p, g, 0.5 * (o + 0.99)) > base


class TestMaxInterferenceMargin:
    def test_integer_case(self):
        assert max_interference_margin(PuConstraintConstants(3.0, 2.0, 1.0)) == pytest.approx(1.0)

    def test_clamp_boundary(self):
        mu = math.sqrt(2.0) - 1.0
        assert max_interference_margin(PuConstraintConstants(1.0, mu, 1.0)) == pytest.approx(0.0, abs=1e-15)

    def test_clamp_below(self):
        assert max_interference_margin(PuConstraintConstants(1.0, 0.1, 1.0)) == 0.0

    def test_gamma_zero(self):
        with pytest.raises(DomainError):
            max_interference_margin(PuConstraintConstants(0.0, 1.0, 1.0))


class TestConstraintConstants:
    def test_baseline(self, baseline):
        c = constraint_constants(baseline, 1)
        assert c.gamma_p == pytest.approx(1.0, abs=1e-15)
        assert c.mu == pytest.approx(frozen.MU_BASELINE, rel=1e-13)
        assert c.beta == pytest.approx(frozen.BETA_BASELINE, rel=1e-14)
        assert c.lambda_ == pytest.approx(frozen.LAMBDA_BASELINE, rel=1e-12)
        assert c.upsilon_ == pytest.approx(frozen.UPSILON_BASELINE, rel=1e-12)

    def test_symmetric(self, baseline):
        assert constraint_constants(baseline, 1) == constraint_constants(baseline, 2)

    def test_zero_outage_budget_forces_signs(self):
        c = constraint_constants(SystemParams.baseline(o_p=0.0), 1)
        assert c.mu == 0
        assert c.lambda_ == pytest.approx(c.beta * c.gamma_p) and c.lambda_ > 0
        assert c.upsilon_ == pytest.approx(-c.gamma_p * c.beta**2) and c.upsilon_ < 0

    def test_uses_partner_rsi(self):
        params = SystemParams.baseline(vbar_p=(0.0, 9.0), p=(1.0, 2.0))
        assert constraint_constants(params, 1).beta == pytest.approx(19.0)
        assert constraint_constants(params, 2).beta == pytest.approx(1.0)

    @pytest.mark.parametrize("i", [0, 3])
    def test_bad_index(self, baseline, i):
        with pytest.raises(DomainError):
            constraint_constants(baseline, i)

    def test_upsilon_sign_matches_mu_condition(self):
        rng = np.random.default_rng(7)
        for _ in range(10_000):
            params = random_scenario(rng)
            for i in (1, 2):
                c = constraint_constants(params, i)
                root = c.beta * (math.sqrt(1.0 + c.gamma_p) - 1.0)
                if abs(c.mu - root) < 1e-9 * root:
                    continue
                assert (c.upsilon_ > 0) == (c.mu > root)


class TestSystemParams:
    def test_scalars_broadcast(self, baseline):
        assert baseline.p == (1.0, 1.0)
        assert baseline.gbar_p == (db_to_linear(25.0),) * 2

    @pytest.mark.parametrize(
        "change", [dict(o_p=1.0), dict(p=0.0), dict(ps_max=-1.0), dict(gbar_s=math.inf), dict(r0_s=-0.5)]
    )
    def test_rejects_invalid(self, change):
        with pytest.raises(DomainError):
            SystemParams.baseline(**change)

    def test_frozen(self, baseline):
        with pytest.raises(AttributeError):
            baseline.ps_max = 2.0

    @given(st.floats(-80, 80))
    def test_db_round_trip(self, db):
        back = linear_to_db(db_to_linear(db))
        assert back == pytest.approx(db, rel=1e-12, abs=1e-12)
