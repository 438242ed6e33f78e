# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled semi-implicit step kernel; mirrors _stepper_py.StepWorkspace."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "cython"


cdef class StepWorkspace:
    cdef double h
    cdef Py_ssize_t i_reset
    cdef double b
    cdef double[::1] bcv
    cdef double[::1] w
    cdef double[::1] flux
    cdef double[::1] cp
    cdef double[::1] sol

    def __init__(self, nodes, i_reset, double b_c, double b):
        nodes = np.asarray(nodes, dtype=np.float64)
        self.h = float(nodes[1] - nodes[0])
        self.i_reset = int(i_reset)
        self.b = b
        faces = nodes[:-1] + 0.5 * self.h
        self.bcv = np.ascontiguousarray(b_c - faces)
        n = len(nodes) - 1
        self.w = np.empty(n)
        self.flux = np.empty(n)
        self.cp = np.empty(n - 1)
        self.sol = np.empty(n - 1)

    def step(self, cnp.ndarray[cnp.float64_t, ndim=1] p, double dtau,
             double tn, double diff):
        """Advance p by one step; returns (max_speed, min_pre_clamp,
        clamped_mass, left_leak_mass)."""
        cdef double[::1] pv = p
        cdef Py_ssize_t n = pv.shape[0] - 1
        cdef Py_ssize_t m = n - 1  # interior unknowns
        cdef double h = self.h
        cdef double[::1] w = self.w
        cdef double[::1] flux = self.flux
        cdef double[::1] cp = self.cp
        cdef double[::1] sol = self.sol
        cdef Py_ssize_t j
        cdef double wj, max_speed = 0.0, absw

        for j in range(n):
            wj = tn * self.bcv[j] + self.b
            w[j] = wj
            absw = -wj if wj < 0.0 else wj
            if absw > max_speed:
                max_speed = absw
            if wj > 0.0:
                flux[j] = wj * pv[j]
            else:
                flux[j] = wj * pv[j + 1]

        cdef double lam = dtau * diff / (h * h)
        cdef double diag = 1.0 + 2.0 * lam
        cdef double off = -lam
        cdef double r = dtau / h

        # Thomas algorithm on the constant-coefficient SPD tridiagonal
        # system; rhs assembled on the fly from the explicit stage.
        cdef double denom = diag
        cp[0] = off / denom
        sol[0] = (pv[1] - r * (flux[1] - flux[0])) / denom
        for j in range(1, m):
            denom = diag - off * cp[j - 1]
            cp[j] = off / denom
            sol[j] = (pv[j + 1] - r * (flux[j + 1] - flux[j]) - off * sol[j - 1]) / denom
        for j in range(m - 2, -1, -1):
            sol[j] = sol[j] - cp[j] * sol[j + 1]

        cdef double phi_right = diff * sol[m - 1] / h + flux[n - 1]
        cdef double leak = dtau * (diff * sol[0] / h - flux[0])
        sol[self.i_reset - 1] += dtau * phi_right / h

        cdef double min_pre = sol[0]
        cdef double clamped = 0.0
        for j in range(m):
            if sol[j] < min_pre:
                min_pre = sol[j]
        if min_pre < 0.0:
            for j in range(m):
                if sol[j] < 0.0:
                    clamped -= h * sol[j]
                    sol[j] = 0.0

        for j in range(m):
            pv[j + 1] = sol[j]
        pv[0] = 0.0
        pv[n] = 0.0
        return max_speed, min_pre, clamped, leak
