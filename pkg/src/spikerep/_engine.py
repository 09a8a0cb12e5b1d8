"""Hot loops of the presentation simulation.

The step loop is sequential because weights move mid-presentation whenever a
neuron fires with learning enabled. A numba-compiled kernel carries training;
a numpy twin with the same semantics serves as fallback and cross-check
(select it with SPIKEREP_DISABLE_JIT=1). Batched, learning-off scoring for
evaluation lives here too.
"""

from __future__ import annotations

import os

import numpy as np

try:  # pragma: no cover - exercised indirectly
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap if not (args and callable(args[0])) else args[0]


@njit(cache=True)
def _present_jit(W, theta, Z, S, a, lam, learn):
    D, N = W.shape
    T = Z.shape[1]
    raster = np.zeros((D, T), dtype=np.uint8)
    u = np.empty(D)
    one_lam = 1.0 + lam
    for t in range(T):
        drive = 0.0
        for i in range(N):
            drive += Z[i, t]
        if drive == 0.0:
            continue  # silent input step: nobody fires
        umax = -np.inf
        for j in range(D):
            acc = 0.0
            for i in range(N):
                acc += W[j, i] * Z[i, t]
            u[j] = acc
            if acc > umax:
                umax = acc
        zsum = 0.0
        for j in range(D):
            e = np.exp(u[j] - umax)
            u[j] = e
            zsum += e
        for j in range(D):
            if u[j] / zsum > theta:
                raster[j, t] = 1
                if learn:
                    for i in range(N):
                        w = W[j, i] + a * (S[i, t] - W[j, i] * one_lam)
                        if w < 0.0:
                            w = 0.0
                        elif w > 1.0:
                            w = 1.0
                        W[j, i] = w
    return raster


def _present_numpy(W, theta, Z, S, a, lam, learn):
    D, _ = W.shape
    T = Z.shape[1]
    raster = np.zeros((D, T), dtype=np.uint8)
    for t in range(T):
        zt = Z[:, t]
        if not zt.any():
            continue
        u = W @ zt
        e = np.exp(u - u.max())
        scores = e / e.sum()
        fired = scores > theta
        if fired.any():
            raster[fired, t] = 1
            if learn:
                rows = W[fired]
                rows += a * (S[t] - rows * (1.0 + lam))
                np.clip(rows, 0.0, 1.0, out=rows)
                W[fired] = rows
    return raster


def run_presentation(
    W: np.ndarray,
    theta: float,
    Z: np.ndarray,
    S: np.ndarray,
    a: float = 0.0,
    lam: float = 0.0,
    learn: bool = False,
) -> np.ndarray:
    """Simulate one T-step presentation; returns the (D, T) output raster.

    W is mutated in place when ``learn`` is set: each firing neuron's row
    takes one clamped update per step it fires, using the per-step input
    spike flags in S.
    """
    if W.dtype != np.float64 or not W.flags.c_contiguous:
        # W must be touched directly, never a converted copy, or learning
        # updates would be silently lost
        raise ValueError("W must be a C-contiguous float64 array")
    Z = np.ascontiguousarray(Z, dtype=np.float64)
    S = np.ascontiguousarray(S, dtype=np.float64)
    if _HAVE_NUMBA and not os.environ.get("SPIKEREP_DISABLE_JIT"):
        return _present_jit(W, float(theta), Z, S, float(a), float(lam), bool(learn))
    return _present_numpy(W, float(theta), Z, S.T, float(a), float(lam), bool(learn))


def batch_counts(W: np.ndarray, theta: float, Zb: np.ndarray) -> np.ndarray:
    """Learning-off spike counts for a batch of presentations.

    Zb has shape (B, N, T); the result (B, D) counts each neuron's firing
    steps with the same scoring and silent-step suppression as the
    sequential path.
    """
    U = np.einsum("dn,bnt->bdt", W, Zb)
    U -= U.max(axis=1, keepdims=True)
    np.exp(U, out=U)
    U /= U.sum(axis=1, keepdims=True)
    fired = U > theta
    fired &= (Zb > 0).any(axis=1)[:, None, :]
    return fired.sum(axis=2, dtype=np.int64)
