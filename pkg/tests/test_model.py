import math

import pytest
from hypothesis import given, strategies as st

from nnlif.errors import ConfigurationError
from nnlif.model import (
    DilationParams,
    ModelParams,
    Regime,
    classify_regime,
    diffusivity,
    drift_hypothesis_check,
    firing_rate_from_slope,
    invert_tilde_n,
    tilde_n_from_M,
    tilde_n_from_slope,
)


def make_params(b=0.9, a0=0.5, a1=1.0, v_l=0.0, v_r=0.0, v_f=1.0, mu0=0.0):
    return ModelParams(v_l=v_l, v_r=v_r, v_f=v_f, mu0=mu0, b=b, a0=a0, a1=a1)


class TestModelParams:
    def test_ordering_invariant(self):
        with pytest.raises(ConfigurationError):
            make_params(v_r=2.0)  # v_r above v_f
        with pytest.raises(ConfigurationError):
            make_params(v_l=0.5, v_r=0.0)

    def test_positive_noise(self):
        with pytest.raises(ConfigurationError):
            make_params(a0=0.0)
        with pytest.raises(ConfigurationError):
            make_params(a1=-1.0)

    def test_b0(self):
        assert make_params(v_l=-0.5, mu0=0.2).b0 == -0.3


class TestDilationParams:
    def test_flux_convention_zeroes_a_c_exactly(self):
        for a0, a1 in ((0.5, 1.0), (1.0, 3.0), (0.7, 0.3)):
            dil = DilationParams.flux_convention(make_params(a0=a0, a1=a1))
            assert dil.a_c == 0.0
            assert dil.c == a0 / a1

    def test_derived_constants(self):
        p = make_params(b=0.9, a0=0.5, a1=1.0)
        dil = DilationParams.for_params(p, c=2.0)
        assert dil.b_c == p.b0 - 2.0 * 0.9
        assert dil.a_c == 0.5 - 2.0
        assert dil.b_star == p.b0 - 0.5 * 0.9

    def test_c_positive(self):
        with pytest.raises(ConfigurationError):
            DilationParams.for_params(make_params(), c=0.0)


class TestFiringRate:
    def test_zero_slope_zero_rate(self):
        assert firing_rate_from_slope(0.0, make_params(a0=1, a1=1)) == 0.0

    def test_half_slope(self):
        assert firing_rate_from_slope(0.5, make_params(a0=1, a1=1)) == pytest.approx(1.0)

    def test_critical_slope_blows_up(self):
        assert firing_rate_from_slope(1.0, make_params(a0=1, a1=1)) == math.inf
        assert firing_rate_from_slope(2.0, make_params(a0=1, a1=1)) == math.inf

    def test_negative_slope_rejected(self):
        with pytest.raises(ValueError):
            firing_rate_from_slope(-0.1, make_params())


class TestTildeN:
    def test_zero_slope(self):
        assert tilde_n_from_slope(0.0, 2.0, make_params()) == 0.5

    def test_beyond_critical(self):
        assert tilde_n_from_slope(1.5, 1.0, make_params(a0=1, a1=1)) == 0.0

    def test_substitution(self):
        assert tilde_n_from_slope(0.5, 1.0, make_params(a0=1, a1=1)) == pytest.approx(0.5)

    def test_from_flux_convention(self):
        p = make_params(a0=2.0, a1=1.0)
        assert tilde_n_from_M(1.0, p) == 0.0
        assert tilde_n_from_M(0.0, p) == pytest.approx(0.5)
        assert tilde_n_from_M(0.5, p) == pytest.approx(0.25)

    def test_flux_and_slope_versions_agree(self):
        p = make_params(a0=0.5, a1=1.0)
        for g in (0.0, 0.3, 0.9, 1.0, 1.7):
            assert tilde_n_from_M(p.a1 * g, p) == pytest.approx(
                tilde_n_from_slope(g, p.a0 / p.a1, p), abs=1e-15
            )


class TestInvertTildeN:
    def test_endpoints(self):
        assert invert_tilde_n(0.5, 2.0) == pytest.approx(0.0)
        assert invert_tilde_n(0.0, 2.0) == math.inf
        assert invert_tilde_n(0.25, 1.0) == pytest.approx(3.0)

    def test_range_errors(self):
        with pytest.raises(ValueError):
            invert_tilde_n(-0.1, 1.0)
        with pytest.raises(ValueError):
            invert_tilde_n(1.5, 1.0)

    @given(
        g=st.fractions(min_value=0, max_value=10),
        c=st.sampled_from([0.25, 0.5, 1.0, 2.0]),
    )
    def test_round_trip_reproduces_firing_rate(self, g, c):
        p = make_params(a0=1.0, a1=1.0)
        g = float(g)
        n_direct = firing_rate_from_slope(g, p)
        n_via = invert_tilde_n(tilde_n_from_slope(g, c, p), c)
        if math.isinf(n_direct):
            assert math.isinf(n_via)
        else:
            assert n_via == pytest.approx(n_direct, rel=1e-9, abs=1e-9)


@given(
    g=st.floats(min_value=0.0, max_value=50.0, allow_nan=False),
    c=st.floats(min_value=1e-3, max_value=1e3),
    a0=st.floats(min_value=1e-3, max_value=10.0),
    a1=st.floats(min_value=1e-3, max_value=10.0),
)
def test_tilde_n_bounded(g, c, a0, a1):
    p = make_params(a0=a0, a1=a1)
    tn = tilde_n_from_slope(g, c, p)
    assert 0.0 <= tn <= 1.0 / c * (1.0 + 1e-12)


@given(
    tn_frac=st.floats(min_value=0.0, max_value=1.0),
    c=st.floats(min_value=1e-2, max_value=1e2),
    a0=st.floats(min_value=1e-2, max_value=10.0),
    a1=st.floats(min_value=1e-2, max_value=10.0),
)
def test_diffusivity_bounded(tn_frac, c, a0, a1):
    p = make_params(a0=a0, a1=a1)
    dil = DilationParams.for_params(p, c)
    a = diffusivity(tn_frac / c, p, dil)
    lo, hi = min(a0 / c, a1), max(a0 / c, a1)
    assert lo * (1 - 1e-9) <= a <= hi * (1 + 1e-9)


class TestRegime:
    def test_strongly_excitatory(self):
        assert classify_regime(make_params(b=1.5)) is Regime.STRONGLY_EXCITATORY
        assert classify_regime(make_params(b=1.0)) is Regime.STRONGLY_EXCITATORY

    def test_mildly_excitatory(self):
        assert classify_regime(make_params(b=0.9)) is Regime.MILDLY_EXCITATORY

    def test_inhibitory_includes_zero(self):
        assert classify_regime(make_params(b=0.0)) is Regime.INHIBITORY
        assert classify_regime(make_params(b=-1.0)) is Regime.INHIBITORY

    @given(shift=st.floats(min_value=-10, max_value=10, allow_nan=False))
    def test_translation_invariance(self, shift):
        base = make_params(b=0.9, v_l=-0.2, v_r=0.0, v_f=1.0, mu0=0.3)
        moved = ModelParams(
            v_l=base.v_l + shift, v_r=base.v_r + shift, v_f=base.v_f + shift,
            mu0=base.mu0 + shift, b=base.b, a0=base.a0, a1=base.a1,
        )
        assert classify_regime(moved) is classify_regime(base)


class TestDriftHypotheses:
    def test_inhibitory_condition(self):
        rep = drift_hypothesis_check(make_params(b=-0.5, mu0=0.0))
        assert rep.drift_inhibitory_ok  # b0 = 0 <= 1

    def test_excitatory_condition(self):
        rep = drift_hypothesis_check(make_params(b=0.9, a0=0.5, a1=1.0))
        assert rep.drift_excitatory_ok  # -0.45 <= 1

    def test_violated_inhibitory(self):
        rep = drift_hypothesis_check(make_params(b=-0.5, mu0=3.0))
        assert not rep.drift_inhibitory_ok  # b0 = 3 > 1
