"""Metropolis update kernels.

The numba kernel handles the built-in coded potentials; models with custom
Python callables fall back to the pure-Python kernel.  Both compute the
convex and bounded potential differences separately so that adding a
constant to psi_b cancels exactly in floating point.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# Potential codes, kept in sync with model.py.
_ZERO = 0
_QUADRATIC = 1
_QUARTIC = 2
_GAUSS_BUMP = 3


@njit(cache=True, nogil=True, inline="always")
def _pot(kind, param, z):
    if kind == _QUADRATIC:
        return 0.5 * param * z * z
    if kind == _QUARTIC:
        return z * z * z * z / 12.0
    if kind == _GAUSS_BUMP:
        return -param * math.exp(-0.5 * z * z)
    return 0.0


@njit(cache=True, nogil=True)
def metropolis_chain(M, field, beta, ck, cp, bk, bp,
                     n_keep, burn_sweeps, thinning, sd, seed):
    """Random-scan single-site Metropolis; one sweep = n random site updates.

    Returns (samples, accepts, proposals, burn_accepts, err_flag, err_site);
    err_flag 1 means a non-finite energy difference was encountered.
    """
    np.random.seed(seed)
    n = M.shape[0]
    x = np.zeros(n)
    out = np.zeros((n_keep, n))
    accepts = 0
    proposals = 0
    burn_accepts = 0
    total_sweeps = burn_sweeps + n_keep * thinning
    kept = 0
    for sweep in range(total_sweeps):
        for _ in range(n):
            i = np.random.randint(0, n)
            xi = x[i]
            y = xi + sd * np.random.normal()
            dconv = _pot(ck[i], cp[i], y) - _pot(ck[i], cp[i], xi)
            dbound = _pot(bk[i], bp[i], y) - _pot(bk[i], bp[i], xi)
            s = 0.0
            for j in range(n):
                s += M[i, j] * x[j]
            s -= M[i, i] * xi
            dh = beta * (dconv + dbound + field[i] * (y - xi)
                         + 0.5 * M[i, i] * (y * y - xi * xi) + (y - xi) * s)
            if not math.isfinite(dh):
                return out, accepts, proposals, burn_accepts, 1, i
            proposals += 1
            u = np.random.random()
            if dh <= 0.0 or u < math.exp(-dh):
                x[i] = y
                accepts += 1
                if sweep < burn_sweeps:
                    burn_accepts += 1
        if sweep >= burn_sweeps and (sweep - burn_sweeps + 1) % thinning == 0:
            out[kept] = x
            kept += 1
    return out, accepts, proposals, burn_accepts, 0, -1


def metropolis_chain_python(M, field, beta, potentials, n_keep, burn_sweeps,
                            thinning, sd, seed):
    """Pure-Python kernel for models with custom potential callables."""
    rs = np.random.RandomState(seed)
    n = M.shape[0]
    x = np.zeros(n)
    out = np.zeros((n_keep, n))
    accepts = 0
    proposals = 0
    burn_accepts = 0
    total_sweeps = burn_sweeps + n_keep * thinning
    kept = 0
    for sweep in range(total_sweeps):
        for _ in range(n):
            i = rs.randint(0, n)
            xi = x[i]
            y = xi + sd * rs.standard_normal()
            p = potentials[i]
            dconv = float(p.convex(y)) - float(p.convex(xi))
            dbound = float(p.bounded(y)) - float(p.bounded(xi))
            s = float(M[i] @ x) - M[i, i] * xi
            dh = beta * (dconv + dbound + field[i] * (y - xi)
                         + 0.5 * M[i, i] * (y * y - xi * xi) + (y - xi) * s)
            if not math.isfinite(dh):
                return out, accepts, proposals, burn_accepts, 1, i
            proposals += 1
            u = rs.random_sample()
            if dh <= 0.0 or u < math.exp(-dh):
                x[i] = y
                accepts += 1
                if sweep < burn_sweeps:
                    burn_accepts += 1
        if sweep >= burn_sweeps and (sweep - burn_sweeps + 1) % thinning == 0:
            out[kept] = x
            kept += 1
    return out, accepts, proposals, burn_accepts, 0, -1
