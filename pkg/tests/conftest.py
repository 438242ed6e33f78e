"""Shared scenario fixtures.

The heavy trajectory runs are session-scoped so the acceptance tests and
the module tests draw from the same handful of simulations.
"""

from __future__ import annotations

import numpy as np
import pytest

from nnlif.grid import build_grid, gaussian_profile
from nnlif.model import DilationParams, ModelParams
from nnlif.solver import StepperConfig, run_tau

# fig-jump parameter set: mildly excitatory with a transient blow-up.
JUMP_PARAMS = ModelParams(v_l=0.0, v_r=0.0, v_f=1.0, mu0=0.0, b=0.9, a0=0.5, a1=1.0)
# fig-eternal parameter set: strongly excitatory.
ETERNAL_PARAMS = ModelParams(v_l=0.0, v_r=0.0, v_f=1.0, mu0=0.0, b=1.5, a0=1.0, a1=1.0)


@pytest.fixture(scope="session")
def jump_params() -> ModelParams:
    return JUMP_PARAMS


@pytest.fixture(scope="session")
def eternal_params() -> ModelParams:
    return ETERNAL_PARAMS


@pytest.fixture(scope="session")
def jump_run_1024():
    """fig-jump at n=1024, dtau=1e-4, tau in [0, 10] (conservation run)."""
    grid = build_grid(JUMP_PARAMS, 1024, 1e-12)
    p0 = gaussian_profile(grid, 0.2, 0.01)
    cfg = StepperConfig(dtau=1e-4, horizon=10.0, snapshot_stride=500)
    dil = DilationParams.for_params(JUMP_PARAMS, 1.0)
    return run_tau(p0, JUMP_PARAMS, dil, cfg)


@pytest.fixture(scope="session")
def jump_run_2048():
    """fig-jump at n=2048, dtau=5e-5 (jump-characterization run)."""
    grid = build_grid(JUMP_PARAMS, 2048, 1e-12)
    p0 = gaussian_profile(grid, 0.2, 0.01)
    cfg = StepperConfig(dtau=5e-5, horizon=3.0, snapshot_stride=200)
    dil = DilationParams.for_params(JUMP_PARAMS, 1.0)
    return run_tau(p0, JUMP_PARAMS, dil, cfg)


@pytest.fixture(scope="session")
def eternal_run():
    """Strongly excitatory run started from the sampled steady state."""
    from nnlif.steady import steady_state

    grid = build_grid(ETERNAL_PARAMS, 1024, 1e-12)
    reference = steady_state(ETERNAL_PARAMS, grid)
    p0 = reference.profile.copy()
    p0.values /= p0.mass()
    cfg = StepperConfig(dtau=1e-3, horizon=5.0, snapshot_stride=500)
    dil = DilationParams.for_params(ETERNAL_PARAMS, 1.0)
    return run_tau(p0, ETERNAL_PARAMS, dil, cfg)


@pytest.fixture(autouse=True)
def _quiet_round_off_warnings():
    import warnings

    with warnings.catch_warnings():
        warnings.filterwarnings(
            "ignore", message="boundary slope below the -1e-10 round-off band.*"
        )
        yield


def l1_distance(a: np.ndarray, b: np.ndarray, h: float) -> float:
    return float(np.trapezoid(np.abs(a - b), dx=h))
