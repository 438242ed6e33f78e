"""Closed-form steady states of the linear limit equation for every
connectivity regime, an independent numeric stationary solver, and the
ratio h = p / p_inf with its boundary value nu = M / M_inf.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .errors import ConfigurationError, NumericalIntegrityError
from .grid import DensityProfile, Grid, boundary_slope, project_function
from .model import ModelParams, Regime, classify_regime

# Resolution guard: blend the last interior ratio node toward nu when the
# raw ratio deviates by more than this fraction (both numerator and
# denominator vanish at v_f, so the raw ratio degrades first there).
_RATIO_BLEND_TOLERANCE = 0.20


@dataclass(frozen=True)
class SteadyState:
    """A steady reference profile with its normalization and boundary flux.

    For b <= 0 the profile is not integrable on the half line; it is kept
    unnormalized (normalized=False) and its truncated-grid mass diverges
    under grid widening.
    """

    profile: DensityProfile
    z: float | None
    m_inf: float
    regime: Regime
    normalized: bool
    params: ModelParams


def steady_density(params: ModelParams) -> Callable[[np.ndarray], np.ndarray]:
    """Closed-form steady state of the limit equation as a vectorized
    callable; both branches agree exactly at v_r."""
    r = params.b / params.a1
    w = params.width
    if params.b > 0.0:
        big = np.exp(r * w)
        z = w * big

        def p_inf(v: np.ndarray) -> np.ndarray:
            v = np.asarray(v, dtype=float)
            e = np.exp(r * (v - params.v_r))
            return np.where(v <= params.v_r, (big - 1.0) * e, big - e) / z

        return p_inf

    if params.b < 0.0:
        small = np.exp(r * w)

        def p_inf(v: np.ndarray) -> np.ndarray:
            v = np.asarray(v, dtype=float)
            e = np.exp(r * (v - params.v_r))
            return np.where(v <= params.v_r, (1.0 - small) * e, e - small)

        return p_inf

    def p_inf(v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return np.where(v <= params.v_r, w, params.v_f - v)

    return p_inf


def steady_density_derivative(params: ModelParams) -> Callable[[np.ndarray], np.ndarray]:
    """Analytic derivative of the closed-form steady state.

    At the kink v_r the mean of the one-sided derivatives is returned,
    the consistent nodal value for trapezoidal quadrature.
    """
    r = params.b / params.a1
    w = params.width
    if params.b > 0.0:
        big = np.exp(r * w)
        z = w * big

        def dp_inf(v: np.ndarray) -> np.ndarray:
            v = np.asarray(v, dtype=float)
            e = np.exp(r * (v - params.v_r))
            left = r * (big - 1.0) * e / z
            right = -r * e / z
            out = np.where(v < params.v_r, left, right)
            return np.where(v == params.v_r, 0.5 * (left + right), out)

        return dp_inf

    if params.b < 0.0:
        small = np.exp(r * w)

        def dp_inf(v: np.ndarray) -> np.ndarray:
            v = np.asarray(v, dtype=float)
            e = np.exp(r * (v - params.v_r))
            left = r * (1.0 - small) * e
            right = r * e
            out = np.where(v < params.v_r, left, right)
            return np.where(v == params.v_r, 0.5 * (left + right), out)

        return dp_inf

    def dp_inf(v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        out = np.where(v < params.v_r, 0.0, -1.0)
        return np.where(v == params.v_r, -0.5, out)

    return dp_inf


def steady_flux(params: ModelParams) -> float:
    """Analytic boundary flux M_inf = -a1 * dp_inf/dv at v_f."""
    if params.b > 0.0:
        return params.b / params.width
    if params.b < 0.0:
        return -params.b * np.exp(params.b / params.a1 * params.width)
    return params.a1


def steady_excitatory(params: ModelParams, grid: Grid) -> SteadyState:
    """Probability-density steady state for b > 0, sampled on the grid."""
    if params.b <= 0.0:
        raise ConfigurationError(f"excitatory steady state needs b > 0, got b={params.b}")
    z = params.width * float(np.exp(params.b / params.a1 * params.width))
    profile = project_function(steady_density(params), grid)
    return SteadyState(
        profile=profile,
        z=z,
        m_inf=steady_flux(params),
        regime=classify_regime(params),
        normalized=True,
        params=params,
    )


def steady_inhibitory(params: ModelParams, grid: Grid) -> SteadyState:
    """Positive non-integrable steady state for b <= 0 on the truncated
    grid; its mass grows without bound as the grid widens."""
    if params.b > 0.0:
        raise ConfigurationError(f"inhibitory steady state needs b <= 0, got b={params.b}")
    profile = project_function(steady_density(params), grid)
    return SteadyState(
        profile=profile,
        z=None,
        m_inf=steady_flux(params),
        regime=classify_regime(params),
        normalized=False,
        params=params,
    )


def steady_state(params: ModelParams, grid: Grid) -> SteadyState:
    """Regime dispatch between the two closed-form branches."""
    if params.b > 0.0:
        return steady_excitatory(params, grid)
    return steady_inhibitory(params, grid)


def steady_numeric(params: ModelParams, grid: Grid) -> DensityProfile:
    """Solve the discrete stationary limit equation directly.

    Centered second-order differences, the reset source tied to the
    one-sided boundary-slope stencil, and a trapezoidal-mass normalization
    row replacing the (negligible) equation at the leftmost interior node.
    Serves as an independent oracle for the closed form; only the
    normalizable case b > 0 is supported.
    """
    if params.b <= 0.0:
        raise ConfigurationError(f"numeric steady state needs b > 0, got b={params.b}")
    n = grid.n
    h = grid.h
    m = grid.i_reset
    a1 = params.a1
    b = params.b

    rows: list[int] = []
    cols: list[int] = []
    data: list[float] = []

    def add(i: int, j: int, value: float) -> None:
        # Unknowns are interior nodes 1..n-1; Dirichlet ends drop out.
        if 1 <= j <= n - 1:
            rows.append(i - 1)
            cols.append(j - 1)
            data.append(value)

    for j in range(1, n):
        if j == 1:
            continue  # replaced by the normalization row below
        add(j, j - 1, a1 / h**2 + b / (2.0 * h))
        add(j, j, -2.0 * a1 / h**2)
        add(j, j + 1, a1 / h**2 - b / (2.0 * h))
        if j == m:
            # Reset source carries the boundary flux a1*g with the same
            # second-order slope stencil used by boundary_slope.
            add(j, n - 1, (a1 / h) * 4.0 / (2.0 * h))
            add(j, n - 2, (a1 / h) * (-1.0) / (2.0 * h))

    rhs = np.zeros(n - 1)
    for j in range(1, n):
        add(1, j, h)  # trapezoid mass with zero ends
    rhs[0] = 1.0

    matrix = scipy.sparse.csc_matrix(
        scipy.sparse.coo_matrix((data, (rows, cols)), shape=(n - 1, n - 1))
    )
    interior = scipy.sparse.linalg.spsolve(matrix, rhs)
    if not np.all(np.isfinite(interior)):
        raise ConfigurationError("stationary system is singular; grid or BC bug")

    values = np.zeros(n + 1)
    values[1:n] = interior
    if values.min() < -1e-10:
        raise NumericalIntegrityError(
            f"numeric steady state has negative values down to {values.min()}"
        )
    np.clip(values, 0.0, None, out=values)
    mass = float(np.trapezoid(values, dx=h))
    values /= mass
    return DensityProfile(grid=grid, values=values)


def reference_ratio(p: DensityProfile, s: SteadyState) -> np.ndarray:
    """Pointwise ratio h = p / p_inf with the v_f node set to the slope
    ratio nu = M / M_inf (both profiles vanish there)."""
    if p.grid is not s.profile.grid and not np.array_equal(p.grid.nodes, s.profile.grid.nodes):
        raise ConfigurationError("profile and steady state live on different grids")
    ref = s.profile.values
    if np.any(ref[1:-1] <= 0.0):
        raise ConfigurationError("steady reference vanishes at an interior node")

    h = np.empty_like(p.values)
    h[0] = p.values[0] / ref[0] if ref[0] > 0.0 else 0.0
    h[1:-1] = p.values[1:-1] / ref[1:-1]
    nu = flux_ratio(p, s)
    h[-1] = nu
    guard = _RATIO_BLEND_TOLERANCE * max(abs(nu), 1e-30)
    if abs(h[-2] - nu) > guard:
        h[-2] = 0.5 * (h[-3] + nu)
    return h


def flux_ratio(p: DensityProfile, s: SteadyState) -> float:
    """Flux ratio nu = M / M_inf from the discrete boundary slope of p."""
    return s.params.a1 * boundary_slope(p) / s.m_inf
