"""Hot numeric kernels.

Every kernel exists in two variants: an explicit-loop version compiled with
numba ``@njit`` and a vectorised pure-numpy fallback.  The fallback is
selected by setting the environment variable ``MEMSTEP_NO_NUMBA=1`` (or
automatically when numba is not importable).  ``benchmarks/bench_kernels.py``
times both paths.
"""
from __future__ import annotations

import os

import numpy as np

USE_NUMBA = os.environ.get("MEMSTEP_NO_NUMBA", "0") != "1"

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        USE_NUMBA = False


def _memory_direct_all_np(u0, values, gamma, tau):
    # K^n = u0 + tau * sum_{j=1..n} gamma_{n-j+1} v^j via a lower-triangular
    # Toeplitz matrix acting on the stacked trajectory.
    n_steps = values.shape[0] - 1
    out = np.empty_like(values)
    out[0] = u0
    idx = np.arange(n_steps)
    toep = np.where(idx[:, None] >= idx[None, :], gamma[np.abs(idx[:, None] - idx[None, :])], 0.0)
    out[1:] = u0 + tau * toep @ values[1:]
    return out


def _memory_direct_all_loop(u0, values, gamma, tau):
    n_steps = values.shape[0] - 1
    d = values.shape[1]
    out = np.empty((n_steps + 1, d))
    out[0] = u0
    for n in range(1, n_steps + 1):
        acc = np.zeros(d)
        for j in range(1, n + 1):
            g = gamma[n - j]
            for i in range(d):
                acc[i] += g * values[j, i]
        for i in range(d):
            out[n, i] = u0[i] + tau * acc[i]
    return out


def _p_laplacian_apply_np(v, p, h):
    g = np.diff(v, prepend=0.0, append=0.0) / h
    flux = np.abs(g) ** (p - 2.0) * g
    return -np.diff(flux) / h


def _p_laplacian_apply_loop(v, p, h):
    m = v.shape[0]
    flux = np.empty(m + 1)
    left = 0.0
    for i in range(m + 1):
        right = v[i] if i < m else 0.0
        g = (right - left) / h
        flux[i] = abs(g) ** (p - 2.0) * g
        left = right
    out = np.empty(m)
    for i in range(m):
        out[i] = -(flux[i + 1] - flux[i]) / h
    return out


def _p_laplacian_face_weights_np(v, p, h, eps):
    # Regularised derivative (p-1)(g^2 + eps^2)^((p-2)/2) of the flux,
    # one value per cell face; keeps the Newton matrix positive definite
    # at zero-gradient faces.
    g = np.diff(v, prepend=0.0, append=0.0) / h
    return (p - 1.0) * (g * g + eps * eps) ** ((p - 2.0) / 2.0)


def _p_laplacian_face_weights_loop(v, p, h, eps):
    m = v.shape[0]
    w = np.empty(m + 1)
    left = 0.0
    for i in range(m + 1):
        right = v[i] if i < m else 0.0
        g = (right - left) / h
        w[i] = (p - 1.0) * (g * g + eps * eps) ** ((p - 2.0) / 2.0)
        left = right
    return w


if USE_NUMBA:
    memory_direct_all = njit(cache=True)(_memory_direct_all_loop)
    p_laplacian_apply = njit(cache=True)(_p_laplacian_apply_loop)
    p_laplacian_face_weights = njit(cache=True)(_p_laplacian_face_weights_loop)
else:
    memory_direct_all = _memory_direct_all_np
    p_laplacian_apply = _p_laplacian_apply_np
    p_laplacian_face_weights = _p_laplacian_face_weights_np
