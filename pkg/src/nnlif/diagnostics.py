"""Relative-entropy functionals and their dissipation/perturbation terms,
decay-rate fitting, flux-control integrals, super-solution sup-bounds, and
a numerical weighted Poincare constant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConfigurationError, NumericalIntegrityError
from .grid import DensityProfile, Grid, boundary_slope
from .model import (
    DilationParams,
    ModelParams,
    Regime,
    classify_regime,
    tilde_n_from_slope,
)
from .solver import TauTrajectory
from .steady import SteadyState, reference_ratio, steady_density, steady_density_derivative
from .timescale import forward_time


@dataclass(frozen=True)
class EntropyChoice:
    """A C^2 convex generator G with its first two derivatives."""

    name: str
    g: Callable[[np.ndarray], np.ndarray]
    gp: Callable[[np.ndarray], np.ndarray]
    gpp: Callable[[np.ndarray], np.ndarray]


QUADRATIC_CENTERED = EntropyChoice(
    name="quadratic-centered",
    g=lambda x: (x - 1.0) ** 2,
    gp=lambda x: 2.0 * (x - 1.0),
    gpp=lambda x: 2.0 * np.ones_like(np.asarray(x, dtype=float)),
)

QUADRATIC = EntropyChoice(
    name="quadratic",
    g=lambda x: np.asarray(x, dtype=float) ** 2,
    gp=lambda x: 2.0 * np.asarray(x, dtype=float),
    gpp=lambda x: 2.0 * np.ones_like(np.asarray(x, dtype=float)),
)

ENTROPY_CHOICES: Mapping[str, EntropyChoice] = {
    "quadratic-centered": QUADRATIC_CENTERED,
    "quadratic": QUADRATIC,
}


@dataclass
class EntropyReport:
    """Entropy series along a trajectory, one row per snapshot."""

    taus: np.ndarray
    entropy: np.ndarray
    dissipation: np.ndarray
    perturbation: np.ndarray
    nu: np.ndarray
    h_reset: np.ndarray


@dataclass(frozen=True)
class SuperSolutionReport:
    holds: bool
    max_violation: float
    gamma_sup: float
    c_initial: float


def relative_entropy(p: DensityProfile, s: SteadyState, G: EntropyChoice) -> float:
    """S_G = int p_inf * G(p/p_inf) dv by trapezoidal quadrature."""
    h = reference_ratio(p, s)
    return float(np.trapezoid(s.profile.values * G.g(h), dx=p.grid.h))


def entropy_dissipation(
    p: DensityProfile, s: SteadyState, G: EntropyChoice, params: ModelParams
) -> float:
    """Dissipation D_G: the weighted gradient term plus the convexity gap
    between the flux ratio and the ratio at the reset node.  Nonnegative
    up to round-off for convex G."""
    grid = p.grid
    h = reference_ratio(p, s)
    # The single-node reset deposit leaves an O(h) spike in the discrete
    # ratio exactly at the reset node; the continuum ratio is merely
    # kinked there.  Replace the point value by the mean of the one-sided
    # linear extrapolations (the slope-jump contributions cancel, leaving
    # O(h^2)) and differentiate the two smooth pieces separately so the
    # one-sided slopes are not smeared across the kink.
    m = grid.i_reset
    h = h.copy()
    h[m] = 0.5 * ((2.0 * h[m - 1] - h[m - 2]) + (2.0 * h[m + 1] - h[m + 2]))
    dh_left = np.gradient(h[: m + 1], grid.h, edge_order=2)
    dh_right = np.gradient(h[m:], grid.h, edge_order=2)
    integrand = params.a1 * G.gpp(h) * s.profile.values
    left = float(np.trapezoid(integrand[: m + 1] * dh_left**2, dx=grid.h))
    right = float(np.trapezoid(integrand[m:] * dh_right**2, dx=grid.h))
    gradient_term = left + right
    nu = h[-1]
    h_r = h[m]
    gap = float(G.g(nu) - G.g(h_r) - G.gp(h_r) * (nu - h_r))
    return gradient_term + s.m_inf * gap


def perturbation_term(
    p: DensityProfile,
    s: SteadyState,
    tn: float,
    dil: DilationParams,
    G: EntropyChoice,
) -> float:
    """Entropy-balance defect of the nonlinear equation relative to the
    limit equation, proportional to the reciprocal rate.  Requires the
    c = a0/a1 convention (constant diffusivity)."""
    if dil.a_c != 0.0:
        raise ConfigurationError("perturbation term assumes c = a0/a1 (a_c = 0)")
    grid = p.grid
    h = reference_ratio(p, s)
    dp_inf = steady_density_derivative(s.params)(grid.nodes)
    weight = (-grid.nodes + dil.b_star) * dp_inf - s.profile.values
    integrand = (G.gp(h) * h - G.g(h)) * weight
    return -tn * float(np.trapezoid(integrand, dx=grid.h))


def entropy_series(
    traj: TauTrajectory,
    s: SteadyState,
    G: EntropyChoice,
    dil: DilationParams | None = None,
) -> EntropyReport:
    """Evaluate S, D, E, nu, h(v_r) at every stored snapshot."""
    taus, S, D, E, nus, hrs = [], [], [], [], [], []
    for tau, values in traj.snapshots:
        p = DensityProfile(traj.grid, values)
        h = reference_ratio(p, s)
        taus.append(tau)
        S.append(float(np.trapezoid(s.profile.values * G.g(h), dx=traj.grid.h)))
        D.append(entropy_dissipation(p, s, G, traj.params))
        nus.append(float(h[-1]))
        hrs.append(float(h[traj.grid.i_reset]))
        if dil is not None and traj.kind == "nonlinear":
            tn = tilde_n_from_slope(boundary_slope(p), dil.c, traj.params)
            E.append(perturbation_term(p, s, tn, dil, G))
        else:
            E.append(0.0)
    return EntropyReport(
        taus=np.array(taus),
        entropy=np.array(S),
        dissipation=np.array(D),
        perturbation=np.array(E),
        nu=np.array(nus),
        h_reset=np.array(hrs),
    )


def make_entropy_hooks(
    s: SteadyState,
    G: EntropyChoice,
    params: ModelParams,
    dil: DilationParams | None = None,
) -> dict[str, Callable[[np.ndarray], float]]:
    """Per-step hooks recording S and D (and E when dil is given) along a
    run, for difference-quotient checks at full time resolution."""
    grid = s.profile.grid

    def s_hook(values: np.ndarray) -> float:
        p = DensityProfile(grid, values)
        return relative_entropy(p, s, G)

    def d_hook(values: np.ndarray) -> float:
        p = DensityProfile(grid, values)
        return entropy_dissipation(p, s, G, params)

    hooks = {"entropy": s_hook, "dissipation": d_hook}
    if dil is not None:

        def e_hook(values: np.ndarray) -> float:
            p = DensityProfile(grid, values)
            tn = tilde_n_from_slope(boundary_slope(p), dil.c, params)
            return perturbation_term(p, s, tn, dil, G)

        hooks["perturbation"] = e_hook
    return hooks


def fit_decay_rate(taus: np.ndarray, entropy: np.ndarray) -> float:
    """Least-squares slope of -log S over the last half of the window."""
    taus = np.asarray(taus, dtype=float)
    entropy = np.asarray(entropy, dtype=float)
    start = len(taus) // 2
    t = taus[start:]
    s = entropy[start:]
    if np.any(s <= 0.0):
        raise NumericalIntegrityError("entropy must stay positive on the fit window")
    slope, _ = np.polyfit(t, -np.log(s), 1)
    return float(slope)


def flux_variance_integral(taus: np.ndarray, flux: np.ndarray, m_inf: float) -> float:
    """Trapezoidal int (M(tau) - M_inf)^2 dtau over the recorded horizon."""
    dev = (np.asarray(flux, dtype=float) - m_inf) ** 2
    return float(np.trapezoid(dev, np.asarray(taus, dtype=float)))


def _interp_integral(x: np.ndarray, y: np.ndarray, a: float, b: float) -> float:
    """Integral of the piecewise-linear interpolant of (x, y) over [a, b]."""
    if a < x[0] or b > x[-1] or a > b:
        raise ConfigurationError(f"integration window [{a}, {b}] leaves the sample range")
    xs = np.concatenate(([a], x[(x > a) & (x < b)], [b]))
    ys = np.interp(xs, x, y)
    return float(np.trapezoid(ys, xs))


def delta_k_mean(p: DensityProfile, s: SteadyState, K: float) -> tuple[float, float]:
    """Mean of h over the window [v_r - K, v_r], plus the a-priori bound
    mass / (K * min p_inf on the window side): both shrink like 1/K."""
    if K <= 0.0:
        raise ConfigurationError(f"window length must be positive, got {K}")
    grid = p.grid
    a = grid.v_reset - K
    if a < grid.v_min:
        raise ConfigurationError(
            f"window [v_r - K, v_r] = [{a}, {grid.v_reset}] leaves the grid"
        )
    h = reference_ratio(p, s)
    mean = _interp_integral(grid.nodes, h, a, grid.v_reset) / K
    # On (-inf, v_r] the reference is bounded below by its value at v_r.
    p_inf_min = float(steady_density(s.params)(np.array([grid.v_reset]))[0])
    bound = p.mass() / (K * p_inf_min)
    return mean, bound


def super_solution_rate(params: ModelParams, dil: DilationParams) -> float:
    """Exponent gamma_sup of the comparison bound, from the constructive
    recipe for each regime."""
    regime = classify_regime(params)
    if regime is Regime.INHIBITORY:
        if params.b0 > params.v_f:
            raise ConfigurationError("inhibitory super-solution needs b0 <= v_f")
        if params.b0 <= params.v_r:
            return 1.0
        v = np.linspace(params.v_r, params.b0, 20001)[1:-1]
        return 1.0 + float(np.max((params.b0 - v) / (params.v_f - v)))

    b_star = dil.b_star
    if b_star > params.v_f:
        raise ConfigurationError("excitatory super-solution needs b_star <= v_f")
    r = params.b / params.a1
    terms = [r * abs(b_star - params.v_r)]
    if b_star > params.v_r:
        v = np.linspace(params.v_r, min(b_star, params.v_f), 20001)[1:-1]
        e = np.exp(r * (v - params.v_r))
        e_f = np.exp(r * params.width)
        terms.append(float(np.max((b_star - v) * r * e / (e_f - e))))
    return 1.0 + max(terms)


def _reference_values(
    params: ModelParams, grid: Grid, s: SteadyState | None
) -> tuple[np.ndarray, float]:
    """Comparison reference and its (negated) slope at v_f: the excitatory
    steady state, or the piecewise-linear profile for b <= 0."""
    if classify_regime(params) is not Regime.INHIBITORY:
        if s is None:
            raise ConfigurationError("excitatory super-solution check needs a steady state")
        return s.profile.values, s.m_inf / params.a1
    v = grid.nodes
    ref = np.where(v <= params.v_r, 1.0, (params.v_f - v) / params.width)
    return ref, 1.0 / params.width


def check_super_solution(
    traj: TauTrajectory,
    s: SteadyState | None,
    dil: DilationParams,
    params: ModelParams,
    tol: float = 1e-8,
) -> SuperSolutionReport:
    """Verify p(v, tau) <= C_I * exp(gamma_sup * int_0^tau Ntilde) * ref(v)
    pointwise over every stored snapshot."""
    gamma_sup = super_solution_rate(params, dil)
    ref, ref_slope = _reference_values(params, traj.grid, s)
    if np.any((ref <= 0.0) & (traj.snapshots[0][1] > 0.0)):
        raise ConfigurationError("reference vanishes where the initial profile is positive")

    p0 = traj.snapshots[0][1]
    interior = ref[:-1] > 0.0
    c_initial = float(np.max(p0[:-1][interior] / ref[:-1][interior]))
    g0 = boundary_slope(DensityProfile(traj.grid, p0))
    c_initial = max(c_initial, g0 / ref_slope)

    tmap = forward_time(traj)
    max_violation = -np.inf
    for tau, values in traj.snapshots:
        factor = c_initial * float(np.exp(gamma_sup * tmap.t_of_tau(tau)))
        max_violation = max(max_violation, float(np.max(values - factor * ref)))
    return SuperSolutionReport(
        holds=max_violation <= tol,
        max_violation=max_violation,
        gamma_sup=gamma_sup,
        c_initial=c_initial,
    )


def poincare_constant(weights: np.ndarray, nodes: np.ndarray) -> float:
    """Smallest nonzero eigenvalue of the weighted Rayleigh quotient
    int w |f'|^2 / int w f^2 on the zero-weighted-mean subspace.

    P1 stiffness with midpoint weights and a lumped midpoint-weighted mass
    matrix; the weighted constant is an exact null vector, so the
    constraint reduces to taking the second-smallest eigenvalue.
    """
    weights = np.asarray(weights, dtype=float)
    nodes = np.asarray(nodes, dtype=float)
    if weights.shape != nodes.shape or len(nodes) < 3:
        raise ConfigurationError("need matching weight/node arrays with >= 3 nodes")
    if np.any(weights < 0.0) or np.any(weights[1:-1] <= 0.0):
        raise ConfigurationError("weight must be positive on interior nodes")

    hs = np.diff(nodes)
    w_mid = 0.5 * (weights[:-1] + weights[1:])
    if np.any(w_mid <= 0.0):
        raise ConfigurationError("weight vanishes on an entire cell")

    k_off = -w_mid / hs
    k_diag = np.zeros_like(nodes)
    k_diag[:-1] += w_mid / hs
    k_diag[1:] += w_mid / hs
    m_diag = np.zeros_like(nodes)
    m_diag[:-1] += 0.5 * w_mid * hs
    m_diag[1:] += 0.5 * w_mid * hs

    inv_sqrt = 1.0 / np.sqrt(m_diag)
    d = k_diag * inv_sqrt**2
    e = k_off * inv_sqrt[:-1] * inv_sqrt[1:]
    try:
        vals = eigh_tridiagonal(d, e, select="i", select_range=(0, 1), eigvals_only=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalIntegrityError(f"eigensolve failed: {exc}") from exc
    if abs(vals[0]) > 1e-6 * max(1.0, abs(vals[1])):
        raise NumericalIntegrityError(
            f"null mode not resolved: lowest eigenvalue {vals[0]} is not ~0"
        )
    alpha = float(vals[1])
    if alpha <= 0.0:
        raise NumericalIntegrityError(f"Poincare constant must be positive, got {alpha}")
    return alpha


def appendix_weight(x: np.ndarray) -> np.ndarray:
    """The benchmark weight min(x, e^-x) on (0, inf), up to normalization."""
    x = np.asarray(x, dtype=float)
    return np.minimum(x, np.exp(-x))
