"""Inner loops of the NMF solver, in two flavours.

The ``_*_loops`` functions are written as explicit scalar loops and compiled
with numba; the ``_*_numpy`` twins do the same arithmetic with vectorised
numpy calls. ``mu_iterations`` / ``hals_iterations`` dispatch on the active
backend. Both update ``W`` and ``H`` in place and return
``(iterations_run, relative_residual)``.

With ``tol > 0`` a phase also returns early once its observed linear rate
says ``tol`` is out of reach within the remaining iterations, leaving the
rest of the budget to the next phase.
"""
from __future__ import annotations

import numpy as np

from . import _accel

HALS_FLOOR = 1e-16


@_accel.jitable
def _residual_loops(M, W, H):
    n, m = M.shape
    r = W.shape[1]
    err = 0.0
    nrm = 0.0
    for i in range(n):
        for j in range(m):
            s = 0.0
            for k in range(r):
                s += W[i, k] * H[k, j]
            d = M[i, j] - s
            err += d * d
            nrm += M[i, j] * M[i, j]
    if nrm == 0.0:
        return np.sqrt(err)
    return np.sqrt(err / nrm)


@_accel.jitable
def _out_of_budget(prev, res, tol, remaining, check_every):
    if tol <= 0.0 or res <= tol:
        return False
    if res >= prev:
        return True
    windows = np.log(tol / res) / np.log(res / prev)
    return windows * check_every > remaining


def _mu_loops(M, W, H, iters, eps, tol, check_every):
    n, m = M.shape
    r = W.shape[1]
    WtM = np.empty((r, m))
    WtW = np.empty((r, r))
    MHt = np.empty((n, r))
    HHt = np.empty((r, r))
    col = np.empty(r)
    res = _residual_loops(M, W, H)
    if res <= tol:
        return 0, res
    for it in range(1, iters + 1):
        # H <- H * (W^T M) / (W^T W H + eps)
        for k in range(r):
            for j in range(m):
                s = 0.0
                for i in range(n):
                    s += W[i, k] * M[i, j]
                WtM[k, j] = s
            for l in range(r):
                s = 0.0
                for i in range(n):
                    s += W[i, k] * W[i, l]
                WtW[k, l] = s
        for j in range(m):
            for k in range(r):
                den = 0.0
                for l in range(r):
                    den += WtW[k, l] * H[l, j]
                col[k] = H[k, j] * WtM[k, j] / (den + eps)
            for k in range(r):
                H[k, j] = col[k] if col[k] > eps else eps
        # W <- W * (M H^T) / (W H H^T + eps)
        for k in range(r):
            for l in range(r):
                s = 0.0
                for j in range(m):
                    s += H[k, j] * H[l, j]
                HHt[k, l] = s
        for i in range(n):
            for k in range(r):
                s = 0.0
                for j in range(m):
                    s += M[i, j] * H[k, j]
                MHt[i, k] = s
        for i in range(n):
            for k in range(r):
                den = 0.0
                for l in range(r):
                    den += W[i, l] * HHt[l, k]
                col[k] = W[i, k] * MHt[i, k] / (den + eps)
            for k in range(r):
                W[i, k] = col[k] if col[k] > eps else eps
        if it % check_every == 0 or it == iters:
            prev = res
            res = _residual_loops(M, W, H)
            if res <= tol or _out_of_budget(prev, res, tol, iters - it, check_every):
                return it, res
    return iters, res


@_accel.jitable
def _balance_loops(W, H):
    n, r = W.shape
    m = H.shape[1]
    for k in range(r):
        a = 0.0
        for i in range(n):
            a += W[i, k] * W[i, k]
        b = 0.0
        for j in range(m):
            b += H[k, j] * H[k, j]
        if a > 0.0 and b > 0.0:
            s = np.sqrt(np.sqrt(b / a))
            for i in range(n):
                W[i, k] *= s
            for j in range(m):
                H[k, j] /= s


def _hals_loops(M, W, H, iters, floor, tol, check_every):
    n, m = M.shape
    r = W.shape[1]
    A = np.empty((n, r))
    B = np.empty((r, r))
    C = np.empty((r, m))
    D = np.empty((r, r))
    res = _residual_loops(M, W, H)
    if res <= tol:
        return 0, res
    for it in range(1, iters + 1):
        for i in range(n):
            for k in range(r):
                s = 0.0
                for j in range(m):
                    s += M[i, j] * H[k, j]
                A[i, k] = s
        for k in range(r):
            for l in range(r):
                s = 0.0
                for j in range(m):
                    s += H[k, j] * H[l, j]
                B[k, l] = s
        for k in range(r):
            if B[k, k] <= 0.0:
                continue
            for i in range(n):
                s = 0.0
                for l in range(r):
                    s += W[i, l] * B[l, k]
                v = W[i, k] + (A[i, k] - s) / B[k, k]
                W[i, k] = v if v > floor else floor
        for k in range(r):
            for j in range(m):
                s = 0.0
                for i in range(n):
                    s += W[i, k] * M[i, j]
                C[k, j] = s
            for l in range(r):
                s = 0.0
                for i in range(n):
                    s += W[i, k] * W[i, l]
                D[k, l] = s
        for k in range(r):
            if D[k, k] <= 0.0:
                continue
            for j in range(m):
                s = 0.0
                for l in range(r):
                    s += D[k, l] * H[l, j]
                v = H[k, j] + (C[k, j] - s) / D[k, k]
                H[k, j] = v if v > floor else floor
        if it % check_every == 0 or it == iters:
            _balance_loops(W, H)
            prev = res
            res = _residual_loops(M, W, H)
            if res <= tol or _out_of_budget(prev, res, tol, iters - it, check_every):
                return it, res
    return iters, res


def _residual_numpy(M, W, H):
    nrm = np.linalg.norm(M)
    err = np.linalg.norm(M - W @ H)
    return float(err / nrm) if nrm > 0 else float(err)


def _mu_numpy(M, W, H, iters, eps, tol, check_every):
    res = _residual_numpy(M, W, H)
    if res <= tol:
        return 0, res
    for it in range(1, iters + 1):
        H *= (W.T @ M) / ((W.T @ W) @ H + eps)
        np.maximum(H, eps, out=H)
        W *= (M @ H.T) / (W @ (H @ H.T) + eps)
        np.maximum(W, eps, out=W)
        if it % check_every == 0 or it == iters:
            prev = res
            res = _residual_numpy(M, W, H)
            if res <= tol or _out_of_budget(prev, res, tol, iters - it, check_every):
                return it, res
    return iters, res


def _balance_numpy(W, H):
    a = np.linalg.norm(W, axis=0)
    b = np.linalg.norm(H, axis=1)
    ok = (a > 0) & (b > 0)
    s = np.ones_like(a)
    s[ok] = np.sqrt(b[ok] / a[ok])
    W *= s
    H /= s[:, None]


def _hals_numpy(M, W, H, iters, floor, tol, check_every):
    r = W.shape[1]
    res = _residual_numpy(M, W, H)
    if res <= tol:
        return 0, res
    for it in range(1, iters + 1):
        A = M @ H.T
        B = H @ H.T
        for k in range(r):
            if B[k, k] > 0:
                W[:, k] = np.maximum(W[:, k] + (A[:, k] - W @ B[:, k]) / B[k, k], floor)
        C = W.T @ M
        D = W.T @ W
        for k in range(r):
            if D[k, k] > 0:
                H[k, :] = np.maximum(H[k, :] + (C[k, :] - D[k, :] @ H) / D[k, k], floor)
        if it % check_every == 0 or it == iters:
            _balance_numpy(W, H)
            prev = res
            res = _residual_numpy(M, W, H)
            if res <= tol or _out_of_budget(prev, res, tol, iters - it, check_every):
                return it, res
    return iters, res


_mu_jit = _accel.njit(_mu_loops)
_hals_jit = _accel.njit(_hals_loops)
_residual_jit = _accel.njit(_residual_loops)


def relative_residual(M, W, H) -> float:
    if _accel.backend() == "numba":
        return float(_residual_jit(M, W, H))
    return _residual_numpy(M, W, H)


def mu_iterations(M, W, H, iters, eps=1e-12, tol=0.0, check_every=25):
    if _accel.backend() == "numba":
        it, res = _mu_jit(M, W, H, int(iters), float(eps), float(tol), int(check_every))
    else:
        it, res = _mu_numpy(M, W, H, int(iters), float(eps), float(tol), int(check_every))
    return int(it), float(res)


def hals_iterations(M, W, H, iters, floor=HALS_FLOOR, tol=0.0, check_every=25):
    if _accel.backend() == "numba":
        it, res = _hals_jit(M, W, H, int(iters), float(floor), float(tol), int(check_every))
    else:
        it, res = _hals_numpy(M, W, H, int(iters), float(floor), float(tol), int(check_every))
    return int(it), float(res)
