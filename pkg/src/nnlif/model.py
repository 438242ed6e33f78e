"""Model parameters and the pointwise algebra linking boundary slope,
firing rate N, and its bounded reciprocal Ntilde = 1/(N + c).

All operations here are pure functions on immutable value types.  The
distinguished value ``math.inf`` represents a blown-up firing rate; it
serializes to the literal token ``inf`` in CSV output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import ConfigurationError


class Regime(Enum):
    """Connectivity regime, determined by the sign and size of b."""

    STRONGLY_EXCITATORY = "strongly-excitatory"  # b >= v_f - v_r
    MILDLY_EXCITATORY = "mildly-excitatory"      # 0 < b < v_f - v_r
    INHIBITORY = "inhibitory"                    # b <= 0


@dataclass(frozen=True)
class ModelParams:
    """Physical and coupling constants of the mean-field neuron model.

    v_l:  leak potential, v_r: reset potential, v_f: firing threshold,
    mu0:  mean external input, b: connectivity,
    a0:   external noise, a1: spike-noise scaling.
    """

    v_l: float
    v_r: float
    v_f: float
    mu0: float
    b: float
    a0: float
    a1: float

    def __post_init__(self) -> None:
        if not self.v_l <= self.v_r < self.v_f:
            raise ConfigurationError(
                f"require v_l <= v_r < v_f, got v_l={self.v_l}, "
                f"v_r={self.v_r}, v_f={self.v_f}"
            )
        if self.a0 <= 0.0 or self.a1 <= 0.0:
            raise ConfigurationError(
                f"noise coefficients must be positive, got a0={self.a0}, a1={self.a1}"
            )

    @property
    def b0(self) -> float:
        """Constant drift: leak potential plus mean external input."""
        return self.v_l + self.mu0

    @property
    def width(self) -> float:
        """Distance between reset and firing threshold, v_f - v_r."""
        return self.v_f - self.v_r


@dataclass(frozen=True)
class DilationParams:
    """Dilation parameter c > 0 and the derived constants of the
    dilated-timescale equation: b_c = b0 - c*b, a_c = a0 - c*a1, and
    b_star = b0 - (a0/a1)*b."""

    c: float
    b0: float
    b_c: float
    a_c: float
    b_star: float

    def __post_init__(self) -> None:
        if self.c <= 0.0:
            raise ConfigurationError(f"dilation parameter c must be positive, got {self.c}")

    @classmethod
    def for_params(cls, params: ModelParams, c: float = 1.0) -> "DilationParams":
        b0 = params.b0
        # c == a0/a1 must yield a_c == 0 exactly, not up to round-off.
        a_c = 0.0 if c == params.a0 / params.a1 else params.a0 - c * params.a1
        return cls(
            c=c,
            b0=b0,
            b_c=b0 - c * params.b,
            a_c=a_c,
            b_star=b0 - (params.a0 / params.a1) * params.b,
        )

    @classmethod
    def flux_convention(cls, params: ModelParams) -> "DilationParams":
        """The convention c = a0/a1, which zeroes a_c and makes the
        diffusivity constant; required by the entropy diagnostics."""
        return cls.for_params(params, c=params.a0 / params.a1)


@dataclass(frozen=True)
class DriftHypotheses:
    """Report of the drift-side hypotheses of the global-existence result."""

    regime: Regime
    drift_excitatory_ok: bool  # b0 - (a0/a1) b <= v_f
    drift_inhibitory_ok: bool  # b0 <= v_f


def positive_part(x: float) -> float:
    """max(x, 0), with no epsilon smoothing."""
    return x if x > 0.0 else 0.0


def firing_rate_from_slope(g: float, params: ModelParams) -> float:
    """Firing rate N from the boundary slope g = -dp/dv at v_f.

    Returns a0*g / (1 - a1*g) while a1*g < 1 and math.inf once the
    slope reaches the critical value 1/a1.
    """
    if g < 0.0:
        raise ValueError(f"boundary slope must be nonnegative, got {g}")
    denom = 1.0 - params.a1 * g
    if denom <= 0.0:
        return math.inf
    return params.a0 * g / denom


def tilde_n_from_slope(g: float, c: float, params: ModelParams) -> float:
    """Reciprocal rate Ntilde = 1/(N + c) evaluated from the boundary slope.

    Always lands in [0, 1/c]; equals 0 exactly when a1*g >= 1.
    """
    if g < 0.0:
        raise ValueError(f"boundary slope must be nonnegative, got {g}")
    if c <= 0.0:
        raise ValueError(f"dilation parameter must be positive, got {c}")
    plus = positive_part(1.0 - params.a1 * g)
    return plus / (params.a0 * g + c * plus)


def tilde_n_from_M(M: float, params: ModelParams) -> float:
    """Ntilde as a function of the boundary flux M = a1*g, under the fixed
    choice c = a0/a1.  Result lies in [0, a1/a0]."""
    if M < 0.0:
        raise ValueError(f"boundary flux must be nonnegative, got {M}")
    plus = positive_part(1.0 - M)
    if plus == 0.0:
        return 0.0
    return (params.a1 / params.a0) * plus / (M + plus)


def invert_tilde_n(tn: float, c: float) -> float:
    """Recover N from Ntilde: N = 1/tn - c, with tn = 0 mapping to inf."""
    if c <= 0.0:
        raise ValueError(f"dilation parameter must be positive, got {c}")
    if tn < 0.0 or tn > (1.0 / c) * (1.0 + 1e-12):
        raise ValueError(f"Ntilde={tn} outside [0, 1/c] with c={c}")
    if tn == 0.0:
        return math.inf
    return max(1.0 / tn - c, 0.0)


def classify_regime(params: ModelParams) -> Regime:
    if params.b >= params.width:
        return Regime.STRONGLY_EXCITATORY
    if params.b > 0.0:
        return Regime.MILDLY_EXCITATORY
    return Regime.INHIBITORY


def drift_hypothesis_check(params: ModelParams) -> DriftHypotheses:
    """Evaluate the drift conditions b0 - (a0/a1) b <= v_f and b0 <= v_f.

    The remaining hypothesis of the global-existence result is a tail
    condition on the initial datum and cannot be decided from parameters.
    """
    return DriftHypotheses(
        regime=classify_regime(params),
        drift_excitatory_ok=params.b0 - (params.a0 / params.a1) * params.b <= params.v_f,
        drift_inhibitory_ok=params.b0 <= params.v_f,
    )


def diffusivity(tn: float, params: ModelParams, dil: DilationParams) -> float:
    """Diffusion coefficient a_c*Ntilde + a1 of the dilated equation.

    Stays in [min(a0/c, a1), max(a0/c, a1)] for Ntilde in [0, 1/c].
    """
    return dil.a_c * tn + params.a1
