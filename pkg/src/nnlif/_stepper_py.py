"""Pure numpy/scipy implementation of the semi-implicit step kernel.

This is the fallback backend; a Cython translation with identical
semantics lives in ``_stepper_cy.pyx`` and is preferred when compiled.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solveh_banded

BACKEND_NAME = "python"


class StepWorkspace:
    """Preallocated scratch for repeated steps on one grid.

    One step performs: explicit first-order upwind advection with the
    face drift tn*(b_c - v) + b, implicit diffusion (symmetric
    tridiagonal solve), then deposits the implicit-stage boundary outflux
    into the reset node.  The profile is updated in place.
    """

    def __init__(self, nodes: np.ndarray, i_reset: int, b_c: float, b: float):
        self.h = float(nodes[1] - nodes[0])
        self.i_reset = int(i_reset)
        self.b = float(b)
        n = len(nodes) - 1
        faces = nodes[:-1] + 0.5 * self.h
        self._bcv = b_c - faces  # drift is tn * _bcv + b per face
        self._ab = np.empty((2, n - 1))
        self._w = np.empty(n)
        self._flux = np.empty(n)

    def step(
        self, p: np.ndarray, dtau: float, tn: float, diff: float
    ) -> tuple[float, float, float, float]:
        """Advance p by one step; returns (max_speed, min_pre_clamp,
        clamped_mass, left_leak_mass)."""
        h = self.h
        w = self._w
        np.multiply(self._bcv, tn, out=w)
        w += self.b
        max_speed = float(np.max(np.abs(w)))

        flux = self._flux
        np.multiply(np.maximum(w, 0.0), p[:-1], out=flux)
        flux += np.minimum(w, 0.0) * p[1:]

        rhs = p[1:-1] - (dtau / h) * (flux[1:] - flux[:-1])

        lam = dtau * diff / h**2
        ab = self._ab
        ab[0].fill(-lam)
        ab[0, 0] = 0.0
        ab[1].fill(1.0 + 2.0 * lam)
        sol = solveh_banded(ab, rhs, overwrite_b=True)

        # Reinject exactly the discrete outflux through the v_f face, so
        # mass telescopes to the left-boundary leak alone.
        phi_right = diff * sol[-1] / h + flux[-1]
        leak = dtau * (diff * sol[0] / h - flux[0])
        sol[self.i_reset - 1] += dtau * phi_right / h

        min_pre = float(sol.min())
        clamped = 0.0
        if min_pre < 0.0:
            neg = sol < 0.0
            clamped = -h * float(sol[neg].sum())
            sol[neg] = 0.0

        p[1:-1] = sol
        p[0] = 0.0
        p[-1] = 0.0
        return max_speed, min_pre, clamped, float(leak)
