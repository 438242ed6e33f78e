"""Time stepping for the dilated-timescale equation and its linear limit.

Scheme: explicit first-order upwind drift with the reciprocal rate
evaluated from the slope at the beginning of the step, implicit diffusion
(tridiagonal solve), and the Dirac reset source fed by the implicit-stage
boundary outflux so that discrete mass telescopes exactly up to the leak
through the truncation boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import kernels
from .errors import ConfigurationError, ResolutionError, SchemeIntegrityError
from .grid import DensityProfile, Grid, boundary_slope
from .model import DilationParams, ModelParams, tilde_n_from_slope

_UNDERSHOOT_ABORT = -1e-12
_MASS_PRECONDITION = 1e-6

Hook = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class StepperConfig:
    """Step size, horizon, and bookkeeping knobs for a run."""

    dtau: float
    horizon: float
    snapshot_stride: int = 100
    blowup_epsilon: float = 1e-8

    def __post_init__(self) -> None:
        if self.dtau <= 0.0:
            raise ConfigurationError(f"dtau must be positive, got {self.dtau}")
        if self.horizon <= 0.0:
            raise ConfigurationError(f"horizon must be positive, got {self.horizon}")
        if self.snapshot_stride < 1:
            raise ConfigurationError(f"snapshot_stride must be >= 1, got {self.snapshot_stride}")
        if not 0.0 < self.blowup_epsilon <= 1e-4:
            raise ConfigurationError(
                f"blowup_epsilon must lie in (0, 1e-4], got {self.blowup_epsilon}"
            )

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dtau))


@dataclass
class TauTrajectory:
    """Full record of a dilated-timescale run.

    Series are per step: taus, the reciprocal rate, the boundary flux
    M = a1*g, and the trapezoidal mass.  Snapshots are stored every
    `snapshot_stride` steps plus at every crossing of the blow-up
    threshold, so the endpoints of each plateau are always present.
    """

    grid: Grid
    params: ModelParams
    c: float
    cfg: StepperConfig
    kind: str  # "nonlinear" | "limit"
    taus: np.ndarray
    tilde_n: np.ndarray
    flux: np.ndarray
    mass: np.ndarray
    snapshots: list[tuple[float, np.ndarray]]
    hooks: dict[str, np.ndarray] = field(default_factory=dict)
    clamped_mass: float = 0.0
    min_value: float = 0.0
    left_leak: float = 0.0

    def snapshot_taus(self) -> np.ndarray:
        return np.array([t for t, _ in self.snapshots])

    def snapshot_at(self, tau: float, tol: float | None = None) -> np.ndarray:
        """Stored snapshot nearest tau; raises if none lies within tol
        (default: half a step)."""
        tol = 0.5 * self.cfg.dtau if tol is None else tol
        taus = self.snapshot_taus()
        i = int(np.argmin(np.abs(taus - tau)))
        if abs(taus[i] - tau) > tol:
            raise ResolutionError(
                f"no snapshot within {tol} of tau={tau}; nearest is {taus[i]}"
            )
        return self.snapshots[i][1]

    def profile_at(self, tau: float) -> np.ndarray:
        """Snapshot values linearly interpolated in tau."""
        taus = self.snapshot_taus()
        if tau <= taus[0]:
            return self.snapshots[0][1].copy()
        if tau >= taus[-1]:
            return self.snapshots[-1][1].copy()
        j = int(np.searchsorted(taus, tau, side="right"))
        t0, p0 = self.snapshots[j - 1]
        t1, p1 = self.snapshots[j]
        lam = (tau - t0) / (t1 - t0)
        return (1.0 - lam) * p0 + lam * p1

    def density_at(self, tau: float) -> DensityProfile:
        return DensityProfile(self.grid, self.profile_at(tau))


def _run(
    p0: DensityProfile,
    params: ModelParams,
    dil: DilationParams | None,
    cfg: StepperConfig,
    *,
    limit: bool,
    report_c: float,
    hooks: Mapping[str, Hook] | None = None,
) -> TauTrajectory:
    grid = p0.grid
    p0.validate()
    n_steps = cfg.n_steps
    if n_steps < 1:
        raise ConfigurationError("horizon shorter than one step")

    h = grid.h
    dtau = cfg.dtau
    eps = cfg.blowup_epsilon
    a1 = params.a1

    if limit:
        b_c, a_c = 0.0, 0.0
        diff_const = a1
    else:
        assert dil is not None
        b_c, a_c = dil.b_c, dil.a_c
        diff_const = None

    ws = kernels.StepWorkspace(grid.nodes, grid.i_reset, b_c, params.b)

    taus = np.arange(n_steps + 1) * dtau
    tilde = np.empty(n_steps + 1)
    flux = np.empty(n_steps + 1)
    mass = np.empty(n_steps + 1)
    hooks = dict(hooks or {})
    hook_series = {name: np.empty(n_steps + 1) for name in hooks}

    p = p0.values.copy()
    prev = p.copy()
    snaps: dict[int, np.ndarray] = {}

    def record(k: int) -> float:
        g = boundary_slope(DensityProfile(grid, p))
        tn = tilde_n_from_slope(g, report_c, params)
        tilde[k] = tn
        flux[k] = a1 * g
        mass[k] = h * float(p[1:-1].sum())
        for name, fn in hooks.items():
            hook_series[name][k] = fn(p)
        return tn

    tn_old = record(0)
    snaps[0] = p.copy()

    clamped_total = 0.0
    min_value = np.inf
    leak_total = 0.0

    for k in range(1, n_steps + 1):
        np.copyto(prev, p)
        tn_coef = 0.0 if limit else tn_old
        diff = diff_const if limit else a_c * tn_coef + a1
        max_speed, min_pre, clamped, leak = ws.step(p, dtau, tn_coef, diff)
        if 2.0 * dtau * max_speed > h:
            raise SchemeIntegrityError(
                f"CFL violated at step {k}: dtau={dtau} exceeds "
                f"h/(2*max_speed)={h / (2.0 * max_speed)}"
            )
        if min_pre < _UNDERSHOOT_ABORT:
            raise SchemeIntegrityError(
                f"negative undershoot {min_pre} below {_UNDERSHOOT_ABORT} at step {k}"
            )
        clamped_total += clamped
        min_value = min(min_value, min_pre)
        leak_total += leak

        tn_new = record(k)
        if tn_new <= eps < tn_old:
            snaps.setdefault(k, p.copy())
        elif tn_old <= eps < tn_new:
            snaps.setdefault(k - 1, prev.copy())
        if k % cfg.snapshot_stride == 0 or k == n_steps:
            snaps.setdefault(k, p.copy())
        tn_old = tn_new

    snapshots = [(taus[k], snaps[k]) for k in sorted(snaps)]
    return TauTrajectory(
        grid=grid,
        params=params,
        c=report_c,
        cfg=cfg,
        kind="limit" if limit else "nonlinear",
        taus=taus,
        tilde_n=tilde,
        flux=flux,
        mass=mass,
        snapshots=snapshots,
        hooks=hook_series,
        clamped_mass=clamped_total,
        min_value=float(min_value),
        left_leak=leak_total,
    )


def run_tau(
    p0: DensityProfile,
    params: ModelParams,
    dil: DilationParams,
    cfg: StepperConfig,
    *,
    hooks: Mapping[str, Hook] | None = None,
) -> TauTrajectory:
    """Run the nonlinear dilated-timescale equation to the horizon.

    Never halts early on blow-up: the dilated dynamics is global, and a
    vanishing reciprocal rate simply freezes the drift at b and the
    diffusivity at a1 until the boundary flux recovers.
    """
    m = p0.mass()
    if abs(m - 1.0) > _MASS_PRECONDITION:
        raise ConfigurationError(f"initial profile must have unit mass, got {m}")
    return _run(p0, params, dil, cfg, limit=False, report_c=dil.c, hooks=hooks)


def run_limit_equation(
    p0: DensityProfile,
    params: ModelParams,
    cfg: StepperConfig,
    *,
    report_c: float = 1.0,
    hooks: Mapping[str, Hook] | None = None,
) -> TauTrajectory:
    """Run the linear limit equation (drift b, diffusivity a1, reset source
    a1*g): the dynamics during a firing-rate blow-up.

    The initial profile is not required to have unit mass; the non-L1
    inhibitory reference states are legitimate inputs here.
    """
    return _run(p0, params, None, cfg, limit=True, report_c=report_c, hooks=hooks)


def step_tau(
    p: DensityProfile,
    params: ModelParams,
    dil: DilationParams,
    dtau: float,
) -> DensityProfile:
    """One semi-implicit step, as a pure function on profiles."""
    if dtau <= 0.0:
        raise ConfigurationError(f"dtau must be positive, got {dtau}")
    p.validate()
    grid = p.grid
    ws = kernels.StepWorkspace(grid.nodes, grid.i_reset, dil.b_c, params.b)
    values = p.values.copy()
    g = boundary_slope(p)
    tn = tilde_n_from_slope(g, dil.c, params)
    diff = dil.a_c * tn + params.a1
    max_speed, min_pre, _, _ = ws.step(values, dtau, tn, diff)
    if 2.0 * dtau * max_speed > grid.h:
        raise SchemeIntegrityError(
            f"CFL violated: dtau={dtau} exceeds h/(2*max_speed)="
            f"{grid.h / (2.0 * max_speed)}"
        )
    if min_pre < _UNDERSHOOT_ABORT:
        raise SchemeIntegrityError(f"negative undershoot {min_pre}")
    return DensityProfile(grid, values)


def flux_jump_residual(p: DensityProfile, diffusivity: float) -> float:
    """Defect of the discrete flux-jump relation: the jump of the
    diffusive flux at the reset node minus the boundary flux at v_f."""
    v = p.values
    h = p.grid.h
    m = p.grid.i_reset
    d_right = (-3.0 * v[m] + 4.0 * v[m + 1] - v[m + 2]) / (2.0 * h)
    d_left = (3.0 * v[m] - 4.0 * v[m - 1] + v[m - 2]) / (2.0 * h)
    d_vf = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    return diffusivity * ((d_left - d_right) - (-d_vf))
