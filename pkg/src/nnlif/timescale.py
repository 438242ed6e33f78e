"""Reconstruction of the original timescale from a dilated-timescale run:
the monotone map t(tau), its cadlag generalized inverse tau(t), the
lifespan estimate, blow-up interval detection, and the jump verification
against an independent limit-equation replay.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import ConfigurationError, OutOfLifespanError, ResolutionError
from .grid import DensityProfile
from .model import invert_tilde_n
from .solver import StepperConfig, TauTrajectory, run_limit_equation

# Tail fraction of the horizon whose integral increment decides whether
# the lifespan integral has converged.
_TAIL_FRACTION = 0.10
_TAIL_CONVERGED = 1e-8

# Plateaus separated by fewer than this many steps are merged.
_MERGE_GAP_STEPS = 3


class LifespanStatus(Enum):
    FINITE_CONVERGED = "finite-converged"
    GROWING_UNDETERMINED = "growing-undetermined"


@dataclass(frozen=True)
class TimeMap:
    """Sampled monotone map tau -> t with piecewise-linear evaluation and
    the supremum (cadlag) convention for the generalized inverse."""

    taus: np.ndarray
    ts: np.ndarray

    def __post_init__(self) -> None:
        if len(self.taus) != len(self.ts) or len(self.taus) < 2:
            raise ConfigurationError("time map needs matching sample arrays")
        if not np.all(np.diff(self.taus) > 0.0):
            raise ConfigurationError("tau samples must be strictly increasing")
        if self.ts[0] != 0.0 or np.any(np.diff(self.ts) < 0.0):
            raise ConfigurationError("t samples must be nondecreasing from 0")

    @property
    def total(self) -> float:
        return float(self.ts[-1])

    def t_of_tau(self, tau: float) -> float:
        if tau < self.taus[0] or tau > self.taus[-1]:
            raise OutOfLifespanError(f"tau={tau} outside [{self.taus[0]}, {self.taus[-1]}]")
        return float(np.interp(tau, self.taus, self.ts))

    def tau_of_t(self, t: float) -> float:
        """sup{tau : t(tau) = t}: the right endpoint of the preimage."""
        if t < 0.0 or t >= self.total:
            raise OutOfLifespanError(f"t={t} outside the covered lifespan [0, {self.total})")
        i = int(np.searchsorted(self.ts, t, side="right")) - 1
        if self.ts[i] == t:
            return float(self.taus[i])
        frac = (t - self.ts[i]) / (self.ts[i + 1] - self.ts[i])
        return float(self.taus[i] + frac * (self.taus[i + 1] - self.taus[i]))


@dataclass(frozen=True)
class BlowupEvent:
    """A maximal interval [tau1, tau2] where the reciprocal rate stays at
    numerical zero; all of it maps to the single instant t_star."""

    tau1: float
    tau2: float
    t_star: float
    delta_tau: float
    terminated: bool  # False when the plateau runs into the horizon


@dataclass(frozen=True)
class JumpVerification:
    """Outcome of replaying a blow-up interval with the limit equation."""

    l1_gap: float | None
    delta_tau_independent: float | None
    horizon_exhausted: bool


def forward_time(traj: TauTrajectory, c: float | None = None) -> TimeMap:
    """Cumulative trapezoid of the reciprocal rate: t(tau) = int Ntilde."""
    tn = traj.tilde_n
    c_eff = traj.c if c is None else c
    if np.any(tn < 0.0) or np.any(tn > (1.0 / c_eff) * (1.0 + 1e-12)):
        raise ConfigurationError("reciprocal-rate series leaves [0, 1/c]")
    ts = np.empty_like(traj.taus)
    ts[0] = 0.0
    np.cumsum(0.5 * (tn[1:] + tn[:-1]) * np.diff(traj.taus), out=ts[1:])
    return TimeMap(taus=traj.taus.copy(), ts=ts)


def inverse_time(tmap: TimeMap, t: float) -> float:
    """Generalized inverse tau(t) under the supremum convention."""
    return tmap.tau_of_t(t)


def lifespan(traj: TauTrajectory, c: float | None = None) -> tuple[float, LifespanStatus]:
    """Lifespan estimate int_0^horizon Ntilde dtau, flagged as converged
    when the last 10% of the horizon contributes at most 1e-8."""
    tmap = forward_time(traj, c)
    span = traj.taus[-1] - traj.taus[0]
    cut = traj.taus[-1] - _TAIL_FRACTION * span
    i = int(np.searchsorted(traj.taus, cut))
    tail = tmap.ts[-1] - tmap.ts[min(i, len(tmap.ts) - 1)]
    status = (
        LifespanStatus.FINITE_CONVERGED
        if tail <= _TAIL_CONVERGED
        else LifespanStatus.GROWING_UNDETERMINED
    )
    return tmap.total, status


def sample_generalized(
    traj: TauTrajectory, tmap: TimeMap, t: float
) -> tuple[DensityProfile, float]:
    """Generalized solution at original time t: the snapshot interpolated
    at tau(t) plus the firing rate N there (math.inf during blow-up)."""
    tau = tmap.tau_of_t(t)
    snap_taus = traj.snapshot_taus()
    gap = float(np.min(np.abs(snap_taus - tau)))
    if gap > traj.cfg.snapshot_stride * traj.cfg.dtau:
        warnings.warn(
            f"nearest snapshot is {gap} away from tau={tau}; "
            "interpolation may be under-resolved"
        )
    profile = traj.density_at(tau)
    tn = float(np.interp(tau, traj.taus, traj.tilde_n))
    if tn <= traj.cfg.blowup_epsilon:
        return profile, math.inf
    return profile, invert_tilde_n(tn, traj.c)


def detect_blowups(traj: TauTrajectory, eps: float | None = None) -> list[BlowupEvent]:
    """Maximal intervals with Ntilde <= eps, merged across gaps shorter
    than three steps."""
    eps = traj.cfg.blowup_epsilon if eps is None else eps
    mask = traj.tilde_n <= eps
    if not mask.any():
        return []
    idx = np.flatnonzero(mask)
    runs: list[list[int]] = [[int(idx[0]), int(idx[0])]]
    for i in idx[1:]:
        if i - runs[-1][1] < _MERGE_GAP_STEPS:
            runs[-1][1] = int(i)
        else:
            runs.append([int(i), int(i)])

    tmap = forward_time(traj)
    last = len(traj.taus) - 1
    events = []
    for start, end in runs:
        tau1 = float(traj.taus[start])
        tau2 = float(traj.taus[end])
        events.append(
            BlowupEvent(
                tau1=tau1,
                tau2=tau2,
                t_star=float(tmap.ts[start]),
                delta_tau=tau2 - tau1,
                terminated=end < last,
            )
        )
    return events


def verify_jump(
    traj: TauTrajectory,
    event: BlowupEvent,
    params=None,
) -> JumpVerification:
    """Replay the blow-up interval with the limit equation started from
    the snapshot at tau1.

    Returns the first replay time at which the boundary flux a1*g drops
    below 1 (the independent characterization of the plateau length) and,
    for terminated events, the L1 distance between the replayed profile at
    the event's delta_tau and the stored snapshot at tau2.
    """
    params = traj.params if params is None else params
    dtau = traj.cfg.dtau
    start = traj.snapshot_at(event.tau1)
    p0 = DensityProfile(traj.grid, start.copy())

    extra = max(50, int(round(0.05 * event.delta_tau / dtau)))
    if event.terminated:
        n_main = max(1, int(round(event.delta_tau / dtau)))
    else:
        n_main = max(1, int(round((traj.taus[-1] - event.tau1) / dtau)))

    cfg_main = replace(
        traj.cfg, horizon=n_main * dtau, snapshot_stride=max(1, n_main)
    )
    replay = run_limit_equation(p0, params, cfg_main, report_c=traj.c)

    delta_indep = _first_flux_drop(replay)
    l1_gap = None
    if event.terminated:
        end = traj.snapshot_at(event.tau2)
        l1_gap = float(np.trapezoid(np.abs(replay.snapshots[-1][1] - end), dx=traj.grid.h))
        if delta_indep is None:
            # The flux may recover only a few steps past the event length.
            tail0 = DensityProfile(traj.grid, replay.snapshots[-1][1].copy())
            cfg_tail = replace(traj.cfg, horizon=extra * dtau, snapshot_stride=extra)
            tail = run_limit_equation(tail0, params, cfg_tail, report_c=traj.c)
            dt_tail = _first_flux_drop(tail)
            if dt_tail is not None:
                delta_indep = cfg_main.horizon + dt_tail

    if delta_indep is None:
        return JumpVerification(l1_gap=l1_gap, delta_tau_independent=None, horizon_exhausted=True)
    return JumpVerification(
        l1_gap=l1_gap, delta_tau_independent=float(delta_indep), horizon_exhausted=False
    )


def _first_flux_drop(replay: TauTrajectory) -> float | None:
    below = np.flatnonzero(replay.flux < 1.0)
    if len(below) == 0:
        return None
    return float(replay.taus[below[0]])


def generalized_series(
    traj: TauTrajectory, tmap: TimeMap
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-step (t, N, mass) series of the generalized solution, with the
    firing rate math.inf wherever the reciprocal rate sits at zero."""
    n = np.empty_like(traj.tilde_n)
    for i, tn in enumerate(traj.tilde_n):
        n[i] = math.inf if tn == 0.0 else invert_tilde_n(float(tn), traj.c)
    return tmap.ts.copy(), n, traj.mass.copy()
