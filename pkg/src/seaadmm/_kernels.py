"""Compiled inner-ADMM loop. Mirrors ``projections`` and ``InnerSolver.run``
exactly; the pure-NumPy versions remain the reference implementation."""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _simplex_inplace(v, tau, out):
    m = v.size
    u = -np.sort(-v)
    css = 0.0
    theta = 0.0
    for j in range(m):
        css += u[j]
        t = (css - tau) / (j + 1)
        if u[j] - t > 0:
            theta = t
    for i in range(m):
        d = v[i] - theta
        out[i] = d if d > 0 else 0.0


@njit(cache=True)
def _weighted_simplex_inplace(v, w, tau, out):
    m = v.size
    order = np.argsort(-(v / w), kind="mergesort")
    num = -tau
    den = 0.0
    theta = 0.0
    for j in range(m):
        i = order[j]
        num += w[i] * v[i]
        den += w[i] * w[i]
        t = num / den
        if v[i] - t * w[i] > 0:
            theta = t
    for i in range(m):
        d = v[i] - theta * w[i]
        out[i] = d if d > 0 else 0.0


@njit(cache=True)
def inner_loop(base, inv_R, v, t_bar, T, K, mmf, budgets, uniform_budget):
    m = v.size
    v = v.copy()
    t_bar = t_bar.copy()
    x = np.empty(m)
    vp = np.empty(m)
    diff = np.empty(m)
    for _ in range(T):
        for i in range(m):
            diff[i] = v[i] - t_bar[i]
        for i in range(m):
            acc = base[i]
            for j in range(m):
                acc += inv_R[i, j] * diff[j]
            x[i] = acc
        for i in range(m):
            vp[i] = x[i] + t_bar[i]
        if mmf:
            _simplex_inplace(vp[:K], 1.0, v[:K])
            for i in range(K, m):
                v[i] = vp[i] if vp[i] > 0 else 0.0
        else:
            for i in range(K):
                v[i] = vp[i] if vp[i] > 0 else 0.0
            if uniform_budget:
                p = budgets[0]
                tmp = np.empty(m - K)
                _simplex_inplace(vp[K:] * p, 1.0, tmp)
                for i in range(m - K):
                    v[K + i] = tmp[i] / p
            else:
                _weighted_simplex_inplace(vp[K:], budgets, 1.0, v[K:])
        for i in range(m):
            t_bar[i] += x[i] - v[i]
    return v, t_bar
