"""Stefan-type reformulation machinery: the ODE for gamma = beta^2 driven
by the boundary flux M(s), the drift D(s; M), the moving boundaries with
their Lipschitz control, a change-of-variables cross-check against the
dilated-timescale solver, and a heat-kernel Volterra equation for M(s)
solved by Picard iteration on a short adaptive horizon.

Space is translated internally so the firing threshold sits at 0; the
translated reset coordinate v_r - v_f is negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, HorizonError, InvariantError, NumericalIntegrityError
from .model import ModelParams
from .solver import TauTrajectory

_BOUND_SLACK = 1e-9


@dataclass
class GammaState:
    """Series of the rescaling state along the s-axis: gamma = beta^2, the
    reciprocal rate expressed through (gamma, M), and the derived
    diffusivity, drift coefficient, and boundary drift D."""

    s: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    tn: np.ndarray
    a_tilde: np.ndarray
    mu_tilde: np.ndarray
    drift: np.ndarray


@dataclass
class BoundaryPath:
    """Moving boundaries ell(s) and ell_r(s) = ell(s) + v_r_shift*beta(s),
    with the largest observed Lipschitz quotient over sample pairs."""

    s: np.ndarray
    ell: np.ndarray
    ell_r: np.ndarray
    ell_initial: float
    lipschitz_max: float


@dataclass
class FreeBoundaryCheck:
    """Dual-route consistency report for one trajectory."""

    s: np.ndarray
    beta_direct: np.ndarray
    state: GammaState
    path: BoundaryPath
    beta_gap: float
    lipschitz_max: float
    bounds_ok: bool


@dataclass
class VolterraResult:
    s: np.ndarray
    M: np.ndarray
    sigma: float
    gaps: list[float]
    iterations: int
    state: GammaState
    path: BoundaryPath


def tilde_n_gamma(gamma: float, M: float, params: ModelParams, c: float) -> float:
    """Reciprocal rate as a function of the squared rescaling and the
    rescaled boundary flux; lies in [0, 1/c]."""
    if gamma < 1.0 - 1e-12:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    if M < 0.0:
        raise ValueError(f"boundary flux must be nonnegative, got {M}")
    gm = gamma * M
    plus = 1.0 - params.a1 * gm
    if plus <= 0.0:
        return 0.0
    return plus / (params.a0 * gm + c * plus)


def f_bound(params: ModelParams, c: float) -> float:
    return 2.0 / min(params.a0, params.a1 * c)


def _b0_shifted(params: ModelParams) -> float:
    # The rescaled frame puts the firing threshold at the origin, which
    # shifts the constant drift: b0 -> b0 - v_f.
    return params.b0 - params.v_f


def drift_bound(params: ModelParams, c: float) -> float:
    b0 = _b0_shifted(params)
    return max(abs(b0) / c, abs(params.b)) / min(params.a0 / c, params.a1)


def lipschitz_constant(params: ModelParams, c: float) -> float:
    """Uniform speed bound L for both moving boundaries combined."""
    b0 = _b0_shifted(params)
    return (max(abs(b0), abs(params.b) * c) + 1.0) / min(params.a0, params.a1 * c)


def F_rhs(gamma: float, M: float, params: ModelParams, c: float) -> float:
    """Right-hand side of gamma' = F(gamma, M); nonnegative and bounded by
    2 / min(a0, a1*c), which is asserted."""
    tn = tilde_n_gamma(gamma, M, params, c)
    value = 2.0 * tn / (params.a1 + (params.a0 - c * params.a1) * tn)
    cap = f_bound(params, c)
    if value < -_BOUND_SLACK or value > cap * (1.0 + _BOUND_SLACK):
        raise InvariantError(f"F(gamma, M) = {value} outside [0, {cap}]")
    return value


def drift_value(tn: float, beta: float, params: ModelParams, c: float) -> float:
    """Boundary drift D = mu_tilde / (beta * a_tilde) in the
    threshold-at-origin frame; asserts its uniform bound."""
    mu = tn * _b0_shifted(params) + (1.0 - c * tn) * params.b
    a = tn * params.a0 + (1.0 - c * tn) * params.a1
    value = mu / (beta * a)
    cap = drift_bound(params, c)
    if abs(value) > cap * (1.0 + _BOUND_SLACK):
        raise InvariantError(f"|D| = {abs(value)} exceeds its bound {cap}")
    return value


def integrate_gamma(
    s: np.ndarray,
    M: np.ndarray,
    params: ModelParams,
    c: float,
    substeps: int = 1,
) -> GammaState:
    """Classical fourth-order integration of gamma' = F(gamma, M(s)) with
    gamma(0) = 1 and M interpolated linearly between samples."""
    s = np.asarray(s, dtype=float)
    M = np.asarray(M, dtype=float)
    if s.shape != M.shape or len(s) < 2:
        raise ConfigurationError("need matching s/M sample arrays with >= 2 entries")
    if np.any(M < 0.0):
        raise ConfigurationError("flux samples must be nonnegative")
    if np.any(np.diff(s) <= 0.0):
        raise ConfigurationError("s samples must be strictly increasing")

    growth_cap = f_bound(params, c)
    gamma = np.empty_like(s)
    gamma[0] = 1.0
    g = 1.0
    for i in range(len(s) - 1):
        width = (s[i + 1] - s[i]) / substeps
        for k in range(substeps):
            s_a = s[i] + k * width
            m_a = _lerp(s_a, s[i], s[i + 1], M[i], M[i + 1])
            m_mid = _lerp(s_a + 0.5 * width, s[i], s[i + 1], M[i], M[i + 1])
            m_b = _lerp(s_a + width, s[i], s[i + 1], M[i], M[i + 1])
            k1 = F_rhs(g, m_a, params, c)
            k2 = F_rhs(g + 0.5 * width * k1, m_mid, params, c)
            k3 = F_rhs(g + 0.5 * width * k2, m_mid, params, c)
            k4 = F_rhs(g + width * k3, m_b, params, c)
            g += (width / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        cap = growth_cap * (s[i + 1] - s[0]) + 1.0
        if g < 1.0 - _BOUND_SLACK or g > cap * (1.0 + _BOUND_SLACK) + _BOUND_SLACK:
            raise InvariantError(
                f"gamma({s[i + 1]}) = {g} left [1, {cap}]; rejecting the step"
            )
        gamma[i + 1] = g

    beta = np.sqrt(gamma)
    tn = np.array([tilde_n_gamma(gi, mi, params, c) for gi, mi in zip(gamma, M)])
    a_tilde = tn * params.a0 + (1.0 - c * tn) * params.a1
    mu_tilde = tn * _b0_shifted(params) + (1.0 - c * tn) * params.b
    drift = np.array(
        [drift_value(t, b, params, c) for t, b in zip(tn, beta)]
    )
    return GammaState(
        s=s.copy(), gamma=gamma, beta=beta, tn=tn,
        a_tilde=a_tilde, mu_tilde=mu_tilde, drift=drift,
    )


def _lerp(x: float, x0: float, x1: float, y0: float, y1: float) -> float:
    if x >= x1:
        return y1
    if x <= x0:
        return y0
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


def boundaries(
    state: GammaState,
    ell_initial: float,
    v_r_shift: float,
    params: ModelParams,
    c: float,
    check: bool = True,
) -> BoundaryPath:
    """Integrate ell(s) = ell_I - int_0^s D and attach
    ell_r = ell + v_r_shift * beta; verifies the pairwise Lipschitz bound
    (consecutive pairs dominate all pairs by the triangle inequality)."""
    if v_r_shift >= 0.0:
        raise ConfigurationError("translated reset coordinate must be negative")
    ds = np.diff(state.s)
    ell = np.empty_like(state.s)
    ell[0] = ell_initial
    np.cumsum(0.5 * (state.drift[1:] + state.drift[:-1]) * ds, out=ell[1:])
    ell[1:] = ell_initial - ell[1:]
    ell_r = ell + v_r_shift * state.beta

    quotient = (np.abs(np.diff(ell)) + np.abs(np.diff(ell_r))) / ds
    lip_max = float(np.max(quotient)) if len(quotient) else 0.0
    if check:
        cap = 2.0 * lipschitz_constant(params, c)
        if lip_max > cap * (1.0 + 1e-6):
            raise InvariantError(
                f"boundary Lipschitz quotient {lip_max} exceeds 2L = {cap}"
            )
    return BoundaryPath(
        s=state.s.copy(), ell=ell, ell_r=ell_r,
        ell_initial=ell_initial, lipschitz_max=lip_max,
    )


def transformed_series(
    traj: TauTrajectory, params: ModelParams | None = None, c: float | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Map a dilated-timescale trajectory into the rescaled frame:
    returns (s, M(s), beta_direct) sampled at the trajectory steps.

    beta_direct = exp(int Ntilde), s = int beta^2 * a_tilde, and the
    rescaled flux is M(s) = g / beta^2 with g the raw boundary slope.
    """
    params = traj.params if params is None else params
    c = traj.c if c is None else c
    tn = traj.tilde_n
    taus = traj.taus
    t_int = np.empty_like(taus)
    t_int[0] = 0.0
    np.cumsum(0.5 * (tn[1:] + tn[:-1]) * np.diff(taus), out=t_int[1:])
    beta_direct = np.exp(t_int)
    a_tilde = tn * params.a0 + (1.0 - c * tn) * params.a1
    integrand = beta_direct**2 * a_tilde
    s = np.empty_like(taus)
    s[0] = 0.0
    np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(taus), out=s[1:])
    if np.any(np.diff(s) <= 0.0):
        raise NumericalIntegrityError("rescaled time failed to increase strictly")
    m_s = (traj.flux / params.a1) / beta_direct**2
    return s, m_s, beta_direct


def cross_check_transform(
    traj: TauTrajectory,
    params: ModelParams | None = None,
    c: float | None = None,
    stride: int = 1,
) -> FreeBoundaryCheck:
    """Dual-route consistency: integrate the gamma ODE on the flux series
    extracted from a trajectory and compare sqrt(gamma) against the
    directly accumulated rescaling exp(int Ntilde)."""
    params = traj.params if params is None else params
    c = traj.c if c is None else c
    s, m_s, beta_direct = transformed_series(traj, params, c)
    sl = slice(None, None, stride) if stride > 1 else slice(None)
    s, m_s, beta_direct = s[sl], m_s[sl], beta_direct[sl]

    state = integrate_gamma(s, m_s, params, c)
    path = boundaries(state, 0.0, params.v_r - params.v_f, params, c)
    beta_gap = float(np.max(np.abs(state.beta - beta_direct)))

    cap_gamma = f_bound(params, c) * (s - s[0]) + 1.0
    cap_d = drift_bound(params, c)
    bounds_ok = bool(
        np.all(state.gamma >= 1.0 - _BOUND_SLACK)
        and np.all(state.gamma <= cap_gamma * (1.0 + _BOUND_SLACK) + _BOUND_SLACK)
        and np.all(np.abs(state.drift) <= cap_d * (1.0 + _BOUND_SLACK))
    )
    return FreeBoundaryCheck(
        s=s, beta_direct=beta_direct, state=state, path=path,
        beta_gap=beta_gap, lipschitz_max=path.lipschitz_max, bounds_ok=bounds_ok,
    )


def _first_term(
    s: float,
    ell_s: float,
    ell_initial: float,
    x_nodes: np.ndarray,
    du0: np.ndarray,
    n_quad: int,
) -> float:
    """Initial-data term of the flux equation, with the heat kernel
    absorbed into an exp(-z^2) substitution so all s > 0 quadrate alike."""
    if s <= 0.0:
        return -float(np.interp(ell_initial, x_nodes, du0))
    z0 = (ell_s - ell_initial) / (2.0 * math.sqrt(s))
    z = np.linspace(z0, max(z0, 0.0) + 6.0, n_quad)
    xi = ell_s - 2.0 * math.sqrt(s) * z
    vals = np.exp(-(z**2)) * np.interp(xi, x_nodes, du0, left=0.0)
    return -(2.0 / math.sqrt(math.pi)) * float(np.trapezoid(vals, z))


def _memory_terms(
    i: int,
    s_grid: np.ndarray,
    M: np.ndarray,
    path: BoundaryPath,
    drift: np.ndarray,
    n_quad: int,
) -> float:
    """Two memory integrals along the moving boundaries, with the
    (s - tau)^(-1/2) endpoint singularity removed by u = sqrt(s - tau)."""
    s = float(s_grid[i])
    if s <= 0.0:
        return 0.0
    u = np.linspace(0.0, math.sqrt(s), n_quad)
    tau = s - u**2
    m_tau = np.interp(tau, s_grid, M)
    ell_s = path.ell[i]

    # Dirichlet-loss term along ell: ratio (ell(s)-ell(tau))/(s-tau) is the
    # averaged drift, finite as u -> 0.
    ell_tau = np.interp(tau, s_grid, path.ell)
    ratio = np.empty_like(u)
    ratio[0] = -drift[i]
    ratio[1:] = (ell_s - ell_tau[1:]) / (u[1:] ** 2)
    loss = -(1.0 / math.sqrt(math.pi)) * np.trapezoid(
        m_tau * ratio * np.exp(-(ratio**2) * u**2 / 4.0), u
    )

    # Source term along ell_r: the separation stays O(1), so the kernel is
    # essentially zero at the endpoint.
    sep = ell_s - np.interp(tau, s_grid, path.ell_r)
    gain = np.zeros_like(u)
    pos = u > 0.0
    gain[pos] = (sep[pos] / u[pos] ** 2) * np.exp(-(sep[pos] ** 2) / (4.0 * u[pos] ** 2))
    gain_int = (1.0 / math.sqrt(math.pi)) * np.trapezoid(m_tau * gain, u)
    return float(loss + gain_int)


def volterra_M(
    u0_values: np.ndarray,
    x_nodes: np.ndarray,
    ell_initial: float,
    params: ModelParams,
    c: float,
    sigma: float,
    *,
    n_s: int = 129,
    n_quad: int = 200,
    tol: float = 1e-8,
    max_iters: int = 60,
    max_halvings: int = 8,
) -> VolterraResult:
    """Solve the heat-kernel integral equation for the rescaled boundary
    flux M(s) on [0, sigma] by Picard iteration.

    Each iterate rebuilds beta and D from the current flux via the gamma
    ODE, then re-evaluates the three kernel integrals.  sigma is halved
    (up to max_halvings) until successive iterates contract by a factor
    of at most 0.5; failure to contract raises HorizonError.
    """
    u0_values = np.asarray(u0_values, dtype=float)
    x_nodes = np.asarray(x_nodes, dtype=float)
    if sigma <= 0.0:
        raise ConfigurationError(f"sigma must be positive, got {sigma}")
    du0 = np.gradient(u0_values, x_nodes, edge_order=2)
    v_r_shift = params.v_r - params.v_f
    m0 = max(-float(np.interp(ell_initial, x_nodes, du0)), 0.0)

    for _ in range(max_halvings + 1):
        s_grid = np.linspace(0.0, sigma, n_s)
        M = np.full(n_s, m0)
        gaps: list[float] = []
        failed = False
        for iteration in range(1, max_iters + 1):
            state = integrate_gamma(s_grid, M, params, c)
            path = boundaries(state, ell_initial, v_r_shift, params, c, check=False)
            new_m = np.empty(n_s)
            new_m[0] = m0
            for i in range(1, n_s):
                first = _first_term(
                    float(s_grid[i]), float(path.ell[i]), ell_initial,
                    x_nodes, du0, n_quad,
                )
                new_m[i] = first + _memory_terms(i, s_grid, M, path, state.drift, n_quad)
            if not np.all(np.isfinite(new_m)):
                raise NumericalIntegrityError("kernel quadrature produced non-finite flux")
            np.clip(new_m, 0.0, None, out=new_m)
            gap = float(np.max(np.abs(new_m - M)))
            M = new_m
            if gap <= tol:
                return VolterraResult(
                    s=s_grid, M=M, sigma=sigma, gaps=gaps + [gap],
                    iterations=iteration, state=state, path=path,
                )
            if gaps and gap > 0.5 * gaps[-1]:
                failed = True
                break
            gaps.append(gap)
        if not failed:
            raise HorizonError(
                f"Picard iteration did not converge within {max_iters} iterations"
            )
        sigma *= 0.5
    raise HorizonError(
        f"no contraction after {max_halvings} halvings; final sigma={sigma}"
    )
