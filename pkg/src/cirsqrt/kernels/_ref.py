"""Pure-Python reference kernels.

These are the fallback twins of the Cython kernels in ``_fast.pyx``.
Expression order is kept identical in both so the backends produce
bit-identical IEEE-754 results; tests assert that.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = ["euler_full_truncation", "skorokhod_rou"]


def euler_full_truncation(x0, a, b, sigma, dt, dw, out):
    """Full-truncation Euler step of the CIR equation.

    out[i+1] = max(0, out[i] + (a - b*max(out[i],0))*dt + sigma*sqrt(max(out[i],0))*dw[i])

    Returns (clamp_count, clamp_mass): how often and by how much the
    positivity clamp fired.
    """
    n = dw.shape[0]
    out[0] = x0
    x = x0
    clamp_count = 0
    clamp_mass = 0.0
    for i in range(n):
        xp = x if x > 0.0 else 0.0
        p = x + (a - b * xp) * dt + sigma * math.sqrt(xp) * dw[i]
        if p < 0.0:
            clamp_count += 1
            clamp_mass -= p
            x = 0.0
        else:
            x = p
        out[i + 1] = x
    return clamp_count, clamp_mass


def skorokhod_rou(y0, b, sigma, dt, dw, y_out, l_out):
    """Projected-Euler Skorokhod recursion for the reflected OU process.

    P[i+1] = Y[i] - (b/2) Y[i] dt + (sigma/2) dw[i]
    Y[i+1] = max(P[i+1], 0);  dL[i] = Y[i+1] - P[i+1] >= 0, L cumulative.
    """
    n = dw.shape[0]
    y_out[0] = y0
    l_out[0] = 0.0
    y = y0
    ell = 0.0
    for i in range(n):
        p = y - 0.5 * b * y * dt + 0.5 * sigma * dw[i]
        if p < 0.0:
            y = 0.0
            ell += -p
        else:
            y = p
        y_out[i + 1] = y
        l_out[i + 1] = ell
    return 0


def _np(a):
    return np.ascontiguousarray(a, dtype=np.float64)
