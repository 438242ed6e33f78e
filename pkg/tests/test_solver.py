import numpy as np
import pytest

from nnlif.errors import ConfigurationError, SchemeIntegrityError
from nnlif.grid import DensityProfile, build_grid, gaussian_profile, project_function
from nnlif.model import DilationParams, ModelParams
from nnlif.solver import (
    StepperConfig,
    flux_jump_residual,
    run_limit_equation,
    run_tau,
    step_tau,
)
from nnlif.steady import steady_density, steady_state

from conftest import JUMP_PARAMS


def make_params(b=0.9, a0=0.5, a1=1.0, mu0=0.0, v_f=1.0):
    return ModelParams(v_l=0.0, v_r=0.0, v_f=v_f, mu0=mu0, b=b, a0=a0, a1=a1)


class TestStepperConfig:
    def test_validation(self):
        with pytest.raises(ConfigurationError):
            StepperConfig(dtau=0.0, horizon=1.0)
        with pytest.raises(ConfigurationError):
            StepperConfig(dtau=1e-4, horizon=-1.0)
        with pytest.raises(ConfigurationError):
            StepperConfig(dtau=1e-4, horizon=1.0, blowup_epsilon=1e-3)
        with pytest.raises(ConfigurationError):
            StepperConfig(dtau=1e-4, horizon=1.0, snapshot_stride=0)


class TestSingleStep:
    def test_mass_conserved_per_step(self):
        p = make_params()
        grid = build_grid(p, 512, 1e-12)
        prof = gaussian_profile(grid, 0.2, 0.04)
        dil = DilationParams.for_params(p, 1.0)
        new = step_tau(prof, p, dil, 1e-4)
        h = grid.h
        before = h * prof.values[1:-1].sum()
        after = h * new.values[1:-1].sum()
        assert abs(after - before) <= 1e-10

    def test_positivity_and_boundary(self):
        p = make_params()
        grid = build_grid(p, 512, 1e-12)
        prof = gaussian_profile(grid, 0.2, 0.04)
        dil = DilationParams.for_params(p, 1.0)
        new = step_tau(prof, p, dil, 1e-4)
        assert np.all(new.values >= 0.0)
        assert new.values[-1] == 0.0
        assert new.values[0] == 0.0

    def test_heat_kernel_spreading(self):
        # Large c makes the reciprocal rate tiny; with b=0 and the leak
        # centered on the bump, drift and reset are both negligible and a
        # single step must match exact Gaussian spreading.
        p = ModelParams(v_l=0.0, v_r=0.0, v_f=30.0, mu0=-6.0, b=0.0, a0=1.0, a1=1.0)
        dil = DilationParams.for_params(p, 1000.0)
        grid = build_grid(p, 4096, 1e-12, v_min_override=-40.0)
        center, var0 = -6.0, 0.25
        prof = project_function(
            lambda v: np.exp(-((v - center) ** 2) / (2 * var0)) / np.sqrt(2 * np.pi * var0),
            grid,
        )
        dtau = 1e-4
        new = step_tau(prof, p, dil, dtau)
        diff = dil.a_c * (1.0 / 1000.0) + p.a1
        var1 = var0 + 2.0 * diff * dtau
        exact = np.exp(-((grid.nodes - center) ** 2) / (2 * var1)) / np.sqrt(2 * np.pi * var1)
        exact[-1] = 0.0
        assert np.max(np.abs(new.values - exact)) <= 1e-4

    def test_steady_state_near_stationary(self):
        # The sampled strongly-excitatory steady state is stationary for
        # the scheme away from the reset node; the single-node deposit
        # makes the reset-node residual O(dtau/h), bounded by the flux.
        p = make_params(b=1.5, a0=1.0)
        grid = build_grid(p, 1024, 1e-12)
        s = steady_state(p, grid)
        prof = s.profile.copy()
        prof.values /= prof.mass()
        dil = DilationParams.for_params(p, 1.0)
        dtau = 1e-3
        new = step_tau(prof, p, dil, dtau)
        change = np.abs(new.values - prof.values)
        m = grid.i_reset
        interior = np.delete(change, range(m - 3, m + 4))
        assert np.max(interior) <= 5.0 * (grid.h**2 + dtau)
        assert change[m] <= 2.0 * dtau / grid.h * s.m_inf

    def test_cfl_violation_raises(self):
        p = make_params()
        grid = build_grid(p, 128, 1e-12)
        prof = gaussian_profile(grid, 0.2, 0.04)
        dil = DilationParams.for_params(p, 1.0)
        with pytest.raises(SchemeIntegrityError):
            step_tau(prof, p, dil, 1.0)


class TestRunTau:
    def test_requires_unit_mass(self):
        p = make_params()
        grid = build_grid(p, 256, 1e-12)
        prof = gaussian_profile(grid, 0.2, 0.04)
        prof.values *= 2.0
        dil = DilationParams.for_params(p, 1.0)
        with pytest.raises(ConfigurationError):
            run_tau(prof, p, dil, StepperConfig(dtau=1e-4, horizon=0.01))

    def test_series_invariants(self, jump_run_1024):
        traj = jump_run_1024
        c = traj.c
        assert np.all(np.diff(traj.taus) > 0.0)
        assert np.all(traj.tilde_n >= 0.0)
        assert np.all(traj.tilde_n <= 1.0 / c * (1.0 + 1e-12))

    def test_mass_drift(self, jump_run_1024):
        assert np.max(np.abs(jump_run_1024.mass - 1.0)) <= 1e-6

    def test_positivity_bookkeeping(self, jump_run_1024):
        assert jump_run_1024.min_value >= -1e-12
        assert jump_run_1024.clamped_mass <= 1e-9

    def test_boundary_condition_held(self, jump_run_1024):
        for _, values in jump_run_1024.snapshots:
            assert values[-1] == 0.0
            assert np.all(values >= 0.0)

    def test_blowup_and_recovery(self, jump_run_1024):
        # The reciprocal rate hits zero on a nonempty interval, then
        # recovers above the detection threshold.
        tn = jump_run_1024.tilde_n
        eps = jump_run_1024.cfg.blowup_epsilon
        plateau = tn <= eps
        assert plateau.any()
        first = int(np.argmax(plateau))
        assert not plateau[0]
        assert (~plateau[first:]).any()

    def test_eternal_blowup(self, eternal_run):
        assert np.all(eternal_run.tilde_n <= 1e-6)

    def test_snapshot_lookup(self, jump_run_1024):
        traj = jump_run_1024
        tau, values = traj.snapshots[3]
        assert np.array_equal(traj.snapshot_at(tau), values)
        mid = 0.5 * (traj.snapshots[3][0] + traj.snapshots[4][0])
        interp = traj.profile_at(mid)
        assert np.all(interp >= 0.0)


class TestRunLimitEquation:
    def test_steady_state_stationary_over_unit_time(self):
        p = make_params(b=0.5, a0=1.0)
        grid = build_grid(p, 1024, 1e-12)
        s = steady_state(p, grid)
        prof = s.profile.copy()
        cfg = StepperConfig(dtau=2e-4, horizon=1.0, snapshot_stride=5000)
        traj = run_limit_equation(prof, p, cfg)
        drift = np.max(np.abs(traj.snapshots[-1][1] - prof.values))
        assert drift <= 20.0 * (grid.h**2 + cfg.dtau)

    def test_b_zero_interior_stationary(self):
        # The non-integrable b=0 profile is steady away from the
        # truncation boundary, where the Dirichlet cut bites.
        p = make_params(b=0.0, a0=1.0)
        grid = build_grid(p, 2048, 1e-6, widen=1.5)
        prof = project_function(steady_density(p), grid)
        cfg = StepperConfig(dtau=2e-4, horizon=1.0, snapshot_stride=5000)
        traj = run_limit_equation(prof, p, cfg)
        final = traj.snapshots[-1][1]
        interior = slice(grid.n // 4, grid.n + 1)
        drift = np.max(np.abs(final[interior] - prof.values[interior]))
        assert drift <= 20.0 * (grid.h**2 + cfg.dtau)

    def test_flux_converges_to_steady_flux(self):
        # Long-horizon relaxation from a tail-perturbed steady state.
        p = make_params(b=0.5, a0=1.0)
        grid = build_grid(p, 2048, 1e-10)
        pinf = steady_density(p)
        prof = project_function(
            lambda v: pinf(v) * (1.0 + 0.5 * np.exp(-((v + 2.0) ** 2) / 4.0)),
            grid,
            normalize=True,
        )
        cfg = StepperConfig(dtau=2e-4, horizon=5.0, snapshot_stride=10000)
        traj = run_limit_equation(prof, p, cfg)
        assert abs(traj.flux[-1] - 0.5) <= 0.02

    def test_inhibitory_leak_monitored(self):
        p = make_params(b=-0.5)
        grid = build_grid(p, 512, 1e-12)
        prof = gaussian_profile(grid, -0.5, 0.05)
        cfg = StepperConfig(dtau=2e-4, horizon=0.5, snapshot_stride=1000)
        traj = run_limit_equation(prof, p, cfg)
        assert traj.left_leak >= 0.0


class TestFluxJumpResidual:
    def test_smooth_profile_vanishes(self):
        p = make_params()
        grid = build_grid(p, 512, 1e-12)
        values = (grid.v_f - grid.nodes) ** 2 * np.exp(grid.nodes)
        prof = DensityProfile(grid, values)
        assert abs(flux_jump_residual(prof, p.a1)) <= 10.0 * grid.h**2

    def test_steady_state_residual_refines(self):
        p = make_params(b=0.5, a0=1.0)
        res = {}
        for n in (512, 1024, 2048):
            grid = build_grid(p, n, 1e-10)
            s = steady_state(p, grid)
            res[n] = abs(flux_jump_residual(s.profile, p.a1))
        assert res[2048] < res[1024] < res[512]
        assert res[1024] / res[2048] >= 2.0  # at least first order

    def test_trajectory_snapshot_bound(self, jump_run_1024):
        traj = jump_run_1024
        _, values = traj.snapshots[len(traj.snapshots) // 2]
        residual = flux_jump_residual(DensityProfile(traj.grid, values), JUMP_PARAMS.a1)
        assert abs(residual) <= 10.0 * traj.grid.h


class TestBackends:
    def test_available_backends_agree(self):
        from nnlif.kernels import available_backends

        p = make_params()
        grid = build_grid(p, 256, 1e-12)
        prof = gaussian_profile(grid, 0.2, 0.04)
        results = {}
        for name, workspace_cls in available_backends().items():
            ws = workspace_cls(grid.nodes, grid.i_reset, -0.9, p.b)
            values = prof.values.copy()
            for _ in range(50):
                ws.step(values, 1e-4, 0.7, 0.85)
            results[name] = values
        if len(results) == 2:
            a, b = results.values()
            assert np.max(np.abs(a - b)) <= 1e-13
