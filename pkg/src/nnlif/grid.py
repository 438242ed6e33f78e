"""Uniform voltage grid on a truncated domain [v_min, v_f] and the
discrete density profile living on it.

The reset potential v_r always coincides exactly with a grid node so the
Dirac reset source deposits into a single node.  Quadrature is trapezoidal
throughout, matching the second-order spatial scheme.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, NumericalIntegrityError
from .model import ModelParams

MIN_CELLS = 16
MAX_TAIL_TOLERANCE = 1e-3

# Reference horizon for sizing the inhibitory truncation, where no decay
# rate is available analytically.
_INHIBITORY_T_REF = 10.0


@dataclass(frozen=True)
class Grid:
    """Uniform grid with n cells on [v_min, v_f]; node i_reset sits at v_r."""

    nodes: np.ndarray
    h: float
    i_reset: int

    @property
    def n(self) -> int:
        return len(self.nodes) - 1

    @property
    def v_min(self) -> float:
        return float(self.nodes[0])

    @property
    def v_f(self) -> float:
        return float(self.nodes[-1])

    @property
    def v_reset(self) -> float:
        return float(self.nodes[self.i_reset])


@dataclass
class DensityProfile:
    """Nodal density values on a grid; zero at the v_f node, nonnegative."""

    grid: Grid
    values: np.ndarray

    def copy(self) -> "DensityProfile":
        return DensityProfile(self.grid, self.values.copy())

    def mass(self) -> float:
        return total_mass(self)

    def validate(self) -> None:
        if len(self.values) != self.grid.n + 1:
            raise ConfigurationError(
                f"profile has {len(self.values)} values for a grid of "
                f"{self.grid.n + 1} nodes"
            )
        if self.values[-1] != 0.0:
            raise ConfigurationError("density must vanish at the v_f node")
        if np.any(self.values < 0.0):
            raise ConfigurationError("density values must be nonnegative")


def _snapped_grid(v_min_target: float, params: ModelParams, n: int) -> Grid:
    """Place n cells on [~v_min_target, v_f] so that v_r is exactly a node
    and the grid is at least as wide as requested."""
    width_right = params.v_f - params.v_r
    rho = (params.v_r - v_min_target) / width_right
    m = math.ceil(n * rho / (1.0 + rho))
    if m < 1 or m > n - 1:
        raise ConfigurationError(
            f"cannot place v_r on a node: n={n} too small for truncation "
            f"at {v_min_target} (need wider spacing or more cells)"
        )
    h = width_right / (n - m)
    # Building nodes around v_r keeps node m equal to v_r to the last bit.
    nodes = params.v_r + (np.arange(n + 1, dtype=float) - m) * h
    nodes[m] = params.v_r
    return Grid(nodes=nodes, h=h, i_reset=m)


def build_grid(
    params: ModelParams,
    n: int,
    tail_tolerance: float,
    *,
    widen: float = 1.0,
    v_min_override: float | None = None,
) -> Grid:
    """Choose the truncation point from the reference profile's tail decay,
    then snap so v_r lies exactly on a node.

    For b > 0 the excitatory steady state decays like exp((b/a1)(v - v_r))
    and v_min solves exp((b/a1)(v - v_r)) = tail_tolerance.  For b <= 0 no
    decay rate is available; a documented width heuristic is used instead
    and `widen` scales it (mass leaking through v_min is monitored by the
    solver).
    """
    if n < MIN_CELLS:
        raise ConfigurationError(f"need at least {MIN_CELLS} cells, got {n}")
    if not 0.0 < tail_tolerance <= MAX_TAIL_TOLERANCE:
        raise ConfigurationError(
            f"tail_tolerance must lie in (0, {MAX_TAIL_TOLERANCE}], got {tail_tolerance}"
        )
    if widen < 1.0:
        raise ConfigurationError(f"widen factor must be >= 1, got {widen}")

    if v_min_override is not None:
        if v_min_override >= params.v_r:
            raise ConfigurationError(
                f"v_min override {v_min_override} must be below v_r={params.v_r}"
            )
        return _snapped_grid(v_min_override, params, n)

    if params.b > 0.0:
        width = (params.a1 / params.b) * math.log(1.0 / tail_tolerance)
    else:
        width = (
            2.0 * params.width
            + 6.0 * math.sqrt(params.a1 * _INHIBITORY_T_REF)
            + abs(params.b) * _INHIBITORY_T_REF
        )
    return _snapped_grid(params.v_r - widen * width, params, n)


def total_mass(p: DensityProfile) -> float:
    """Trapezoidal quadrature of the nodal values."""
    return float(np.trapezoid(p.values, dx=p.grid.h))


def boundary_slope(p: DensityProfile) -> float:
    """One-sided second-order slope g = -dp/dv at the v_f node.

    Small negative values (round-off) are clamped to zero; values below
    -1e-6 indicate a broken profile and raise.
    """
    v = p.values
    h = p.grid.h
    g = (4.0 * v[-2] - v[-3] - 3.0 * v[-1]) / (2.0 * h)
    if g >= 0.0:
        return float(g)
    if g < -1e-6:
        raise NumericalIntegrityError(f"strongly negative boundary slope {g}")
    if g < -1e-10:
        # Static message so repeated occurrences deduplicate to one report;
        # profiles decaying faster than exponentially at v_f land here.
        warnings.warn("boundary slope below the -1e-10 round-off band, clamped to 0")
    return 0.0


def project_function(
    f: Callable[[np.ndarray], np.ndarray],
    grid: Grid,
    normalize: bool = False,
) -> DensityProfile:
    """Sample f at the nodes, zero the v_f node, optionally rescale to
    unit trapezoidal mass."""
    values = np.asarray(f(grid.nodes), dtype=float)
    if values.shape != grid.nodes.shape:
        raise ConfigurationError("projected function must be vectorized over nodes")
    if np.any(values < 0.0):
        raise ConfigurationError("projected function is negative at a grid node")
    values = values.copy()
    values[-1] = 0.0
    if normalize:
        m = float(np.trapezoid(values, dx=grid.h))
        if m <= 0.0:
            raise ConfigurationError("cannot normalize a zero-mass profile")
        values /= m
    return DensityProfile(grid=grid, values=values)


def gaussian_profile(grid: Grid, center: float, variance: float) -> DensityProfile:
    """Unit-mass projected Gaussian, the standard localized initial datum."""
    if variance <= 0.0:
        raise ConfigurationError(f"variance must be positive, got {variance}")
    return project_function(
        lambda v: np.exp(-((v - center) ** 2) / (2.0 * variance)), grid, normalize=True
    )
