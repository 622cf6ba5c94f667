import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import frozen
from fdcr import DomainError, FadingRealization, SignalDesign, psi_p, psi_s, pu_rate, su_rate
from fdcr.params import SystemParams


def _real(g_p=10.0, i_p=0.0, i_s=1.0, v_p=2.0, g_s=10.0):
    return FadingRealization((g_p, g_p), (i_p, i_p), (i_s, i_s), (v_p, v_p), g_s)


class TestSignalDesign:
    @pytest.mark.parametrize("ps, cx", [(-1.0, 0.0), (math.inf, 0.0), (1.0, -0.1), (1.0, 1.1), (1.0, math.nan)])
    def test_rejects(self, ps, cx):
        with pytest.raises(DomainError):
            SignalDesign(ps, cx)

    def test_arrays(self):
        d = SignalDesign(np.array([0.0, 1.0]), np.array([0.0, 1.0]))
        assert d.ps.shape == (2,)


class TestPuRate:
    def test_example(self, baseline):
        val = pu_rate(baseline, 1, _real(), SignalDesign(1.0, 1.0))
        assert val == pytest.approx(frozen.PU_RATE_EXAMPLE, rel=1e-14)
        assert val == pytest.approx(0.5 * math.log2(13.0), rel=1e-14)

    @given(st.floats(0, 100), st.floats(0, 100), st.floats(0, 100), st.floats(0, 5))
    def test_proper_reduction(self, g, v, i, ps):
        params = SystemParams.baseline()
        r = pu_rate(params, 2, _real(g_p=g, i_s=i, v_p=v), SignalDesign(ps, 0.0))
        assert r == pytest.approx(math.log2(1 + g / (v + ps * i + 1)), rel=1e-12, abs=1e-14)

    def test_silent_su_ignores_cx(self, baseline):
        rates = [pu_rate(baseline, 1, _real(), SignalDesign(0.0, cx)) for cx in (0.0, 0.4, 1.0)]
        np.testing.assert_allclose(rates, math.log2(1 + 10.0 / 3.0), rtol=1e-14)

    def test_increasing_in_cx(self, baseline):
        cx = np.linspace(0, 1, 101)
        r = pu_rate(baseline, 1, _real(i_s=5.0), SignalDesign(1.0, cx))
        assert np.all(np.diff(r) > 0)

    def test_decreasing_in_ps(self, baseline):
        ps = np.linspace(0, 3, 101)
        r = pu_rate(baseline, 1, _real(i_s=5.0), SignalDesign(ps, 0.7))
        assert np.all(np.diff(r) < 0)


class TestSuRate:
    def test_example(self, baseline):
        # ps*g_s = 10 and D = 2 with i_p = 0.5 per node at p = 1
        val = su_rate(baseline, _real(i_p=0.5, g_s=10.0), SignalDesign(1.0, 0.5))
        assert val == pytest.approx(frozen.SU_RATE_EXAMPLE, rel=1e-14)

    def test_limits(self, baseline):
        real = _real(i_p=0.5, g_s=10.0)
        assert su_rate(baseline, real, SignalDesign(1.0, 0.0)) == pytest.approx(math.log2(6.0), rel=1e-14)
        assert su_rate(baseline, real, SignalDesign(1.0, 1.0)) == pytest.approx(0.5 * math.log2(11.0), rel=1e-14)

    def test_decreasing_in_cx(self, baseline):
        cx = np.linspace(0, 1, 101)
        r = su_rate(baseline, _real(i_p=0.5), SignalDesign(1.0, cx))
        assert np.all(np.diff(r) < 0)

    def test_increasing_in_ps(self, baseline):
        ps = np.linspace(0.1, 3, 101)
        r = su_rate(baseline, _real(i_p=0.5), SignalDesign(ps, 0.6))
        assert np.all(np.diff(r) > 0)


class TestPsi:
    def test_psi_s_example(self, baseline):
        assert psi_s(baseline, SignalDesign(1.0, 0.0)) == pytest.approx(frozen.PSI_S_EXAMPLE, rel=1e-14)

    def test_psi_s_trivial(self, baseline):
        assert psi_s(baseline, SignalDesign(1.0, 1.0)) == 0.0
        assert psi_s(baseline.replace(r0_s=0.0), SignalDesign(1.0, 0.3)) == 0.0

    def test_psi_s_zero_power(self, baseline):
        with pytest.raises(DomainError):
            psi_s(baseline, SignalDesign(0.0, 0.0))

    def test_psi_p_example(self, baseline):
        assert psi_p(baseline, 1, 0.0) == pytest.approx(frozen.PSI_P_EXAMPLE, rel=1e-14)

    def test_psi_p_trivial(self, baseline):
        assert psi_p(baseline, 2, 1.0) == 0.0
        np.testing.assert_array_equal(psi_p(baseline.replace(r0_p=0.0), 1, np.linspace(0, 1, 5)), 0.0)

    @pytest.mark.parametrize("x", [-0.01, 1.01])
    def test_psi_p_domain(self, baseline, x):
        with pytest.raises(DomainError):
            psi_p(baseline, 1, x)

    def test_psi_p_non_increasing(self, baseline):
        assert np.all(np.diff(psi_p(baseline, 1, np.linspace(0, 1, 201))) <= 0)

    def test_small_argument_accuracy(self, baseline):
        # sqrt(1+z)-1 for tiny z should keep full relative precision
        params = baseline.replace(r0_s=1e-12)
        gam = math.expm1(2e-12 * math.log(2))
        assert psi_s(params, SignalDesign(1.0, 0.0)) == pytest.approx(gam / 2 / 100, rel=1e-9)
