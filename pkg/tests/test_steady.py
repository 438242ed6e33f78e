import math

import numpy as np
import pytest

from nnlif.errors import ConfigurationError
from nnlif.grid import boundary_slope, build_grid
from nnlif.model import ModelParams, Regime
from nnlif.steady import (
    flux_ratio,
    reference_ratio,
    steady_density,
    steady_density_derivative,
    steady_excitatory,
    steady_flux,
    steady_inhibitory,
    steady_numeric,
    steady_state,
)


def make_params(b, a0=1.0, a1=1.0, v_r=0.0, v_f=1.0):
    return ModelParams(v_l=v_r - 1.0, v_r=v_r, v_f=v_f, mu0=0.0, b=b, a0=a0, a1=a1)


class TestExcitatory:
    def test_flux_and_normalization(self):
        p = make_params(0.5)
        grid = build_grid(p, 1024, 1e-12)
        s = steady_excitatory(p, grid)
        assert s.m_inf == 0.5
        assert s.z == pytest.approx(math.exp(0.5))
        assert s.regime is Regime.MILDLY_EXCITATORY
        assert s.normalized

    def test_value_at_reset(self):
        p = make_params(0.5)
        value = steady_density(p)(np.array([0.0]))[0]
        assert value == pytest.approx(1.0 - math.exp(-0.5), rel=1e-12)

    def test_sampled_mass(self):
        p = make_params(0.5)
        grid = build_grid(p, 4096, 1e-12)
        s = steady_excitatory(p, grid)
        assert s.profile.mass() == pytest.approx(1.0, abs=1e-6)

    def test_regime_guard(self):
        p = make_params(-0.5)
        grid = build_grid(p, 256, 1e-6)
        with pytest.raises(ConfigurationError):
            steady_excitatory(p, grid)

    def test_flux_threshold_matches_regime(self):
        # M_inf >= 1 exactly when b >= v_f - v_r.
        for b in (0.3, 0.99, 1.0, 1.5):
            p = make_params(b)
            assert (steady_flux(p) >= 1.0) == (b >= p.width)

    def test_branch_continuity_at_reset(self):
        for b in (0.3, 0.9, 1.5, -0.7):
            p = make_params(b)
            f = steady_density(p)
            left = f(np.array([p.v_r - 1e-300]))[0]
            right = f(np.array([p.v_r + 1e-300]))[0]
            assert left == right == f(np.array([p.v_r]))[0]


class TestInhibitory:
    def test_b_zero_profile(self):
        p = make_params(0.0)
        s = steady_inhibitory(p, build_grid(p, 256, 1e-6))
        f = steady_density(p)
        assert f(np.array([0.0]))[0] == 1.0
        assert f(np.array([0.4]))[0] == pytest.approx(0.6)
        assert s.m_inf == p.a1
        assert not s.normalized
        assert s.z is None

    def test_b_negative_value_at_reset(self):
        p = make_params(-1.0)
        assert steady_density(p)(np.array([0.0]))[0] == pytest.approx(
            1.0 - math.exp(-1.0), rel=1e-12
        )

    def test_b_negative_flux(self):
        p = make_params(-1.0)
        assert steady_flux(p) == pytest.approx(math.exp(-1.0), rel=1e-12)

    def test_not_integrable_under_widening(self):
        # The b<0 profile grows leftward without bound: truncated-grid mass
        # diverges as the domain widens.
        p = make_params(-1.0)
        masses = []
        for widen in (1.0, 2.0, 4.0):
            grid = build_grid(p, 2048, 1e-6, widen=widen)
            masses.append(steady_inhibitory(p, grid).profile.mass())
        assert masses[0] < masses[1] < masses[2]
        assert masses[2] / masses[0] > 5.0

    def test_regime_guard(self):
        p = make_params(0.5)
        with pytest.raises(ConfigurationError):
            steady_inhibitory(p, build_grid(p, 256, 1e-6))

    def test_positive_interior(self):
        for b in (0.0, -0.5):
            p = make_params(b)
            grid = build_grid(p, 512, 1e-6)
            s = steady_state(p, grid)
            assert np.all(s.profile.values[:-1] > 0.0)


class TestDerivative:
    def test_matches_finite_difference_away_from_kink(self):
        for b in (0.5, -0.7, 0.0):
            p = make_params(b)
            f = steady_density(p)
            df = steady_density_derivative(p)
            for v in (-1.3, 0.4, 0.9):
                fd = (f(np.array([v + 1e-6]))[0] - f(np.array([v - 1e-6]))[0]) / 2e-6
                assert df(np.array([v]))[0] == pytest.approx(fd, rel=1e-6, abs=1e-9)

    def test_flux_consistency(self):
        for b in (0.5, -0.7, 0.0):
            p = make_params(b)
            df = steady_density_derivative(p)
            assert -p.a1 * df(np.array([p.v_f]))[0] == pytest.approx(steady_flux(p), rel=1e-12)


class TestSteadyNumeric:
    def test_second_order_convergence(self):
        p = make_params(0.5)
        errs = {}
        for n in (256, 512, 1024):
            grid = build_grid(p, n, 1e-8)
            numeric = steady_numeric(p, grid)
            closed = steady_excitatory(p, grid)
            errs[n] = float(np.max(np.abs(numeric.values - closed.profile.values)))
        order1 = math.log2(errs[256] / errs[512])
        order2 = math.log2(errs[512] / errs[1024])
        assert order1 >= 1.9
        assert order2 >= 1.9

    def test_boundary_flux(self):
        p = make_params(0.5)
        grid = build_grid(p, 2048, 1e-8)
        numeric = steady_numeric(p, grid)
        assert p.a1 * boundary_slope(numeric) == pytest.approx(0.5, rel=0.01)

    def test_regime_guard(self):
        p = make_params(-0.2)
        with pytest.raises(ConfigurationError):
            steady_numeric(p, build_grid(p, 256, 1e-6))


class TestReferenceRatio:
    def test_identity(self):
        p = make_params(0.5)
        grid = build_grid(p, 1024, 1e-10)
        s = steady_excitatory(p, grid)
        h = reference_ratio(s.profile, s)
        assert np.all(h[1:-1] == 1.0)
        # The boundary entry is the discrete flux ratio: 1 up to O(h^2).
        assert h[-1] == pytest.approx(1.0, abs=1e-3)
        assert flux_ratio(s.profile, s) == pytest.approx(1.0, abs=1e-3)

    def test_linearity(self):
        p = make_params(0.5)
        grid = build_grid(p, 1024, 1e-10)
        s = steady_excitatory(p, grid)
        doubled = s.profile.copy()
        doubled.values *= 2.0
        h = reference_ratio(doubled, s)
        assert np.all(h[1:-1] == 2.0)
        assert h[-1] == pytest.approx(2.0, abs=2e-3)

    def test_boundary_value_is_flux_ratio(self):
        p = make_params(0.5)
        grid = build_grid(p, 1024, 1e-10)
        s = steady_excitatory(p, grid)
        other = s.profile.copy()
        other.values = other.values * 1.5
        h = reference_ratio(other, s)
        assert h[-1] == pytest.approx(flux_ratio(other, s))
