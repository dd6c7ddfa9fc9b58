"""Two-level ADMM on the dual SDP.

Outer loop over ({y, z}, S, W_bar); the {y, z} block is a small QP solved by a
fixed number of inner ADMM iterations with a cached factorization of Q + R.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla

from ._kernels import inner_loop
from .netsim import ConfigError
from .problem import QpData, SdpProblem, build_c, build_Q, mapping_matrices
from .projections import project_nonneg, project_simplex, project_weighted_simplex

HISTORY_LEN = 2000


@dataclass(frozen=True)
class SolverConfig:
    rho: float = 0.2
    mu_s: float | tuple = 5e6
    mu_p: float | tuple = 5.0
    eps_dual: float = 2e-5
    eps_prim: float = 7e-5
    inner_iters: int = 50
    max_outer: int = 1000

    def validate(self) -> None:
        if self.rho <= 0 or np.any(np.asarray(self.mu_s) <= 0) or np.any(np.asarray(self.mu_p) <= 0):
            raise ConfigError("ADMM penalties must be positive")
        if self.eps_dual <= 0 or self.eps_prim <= 0:
            raise ConfigError("stopping tolerances must be positive")
        if self.inner_iters < 1 or self.max_outer < 1:
            raise ConfigError("iteration counts must be >= 1")

    def penalty_diag(self, K: int, L: int) -> np.ndarray:
        return np.concatenate([np.broadcast_to(np.asarray(self.mu_s, float), (K,)),
                               np.broadcast_to(np.asarray(self.mu_p, float), (L,))])


@dataclass
class AdmmState:
    y: np.ndarray
    z: np.ndarray
    S: np.ndarray
    W_bar: np.ndarray
    v: np.ndarray
    t_bar: np.ndarray
    outer_iter: int = 0
    prev_S: np.ndarray | None = None
    prev_W_bar: np.ndarray | None = None

    @classmethod
    def initial(cls, prob: SdpProblem, rho: float) -> "AdmmState":
        n, K, L = prob.n, prob.K, prob.L
        return cls(y=np.zeros(K), z=np.zeros(L), S=np.zeros((n, n), complex),
                   W_bar=prob.total_budget / (rho * n) * np.eye(n, dtype=complex),
                   v=np.zeros(K + L), t_bar=np.zeros(K + L))


@dataclass
class ConvergenceReport:
    outer_iters: int = 0
    dual_residual: float = float("inf")
    prim_residual: float = float("inf")
    converged: bool = False
    degenerate: bool = False
    residual_history: deque = field(default_factory=lambda: deque(maxlen=HISTORY_LEN))


class InnerSolver:
    """Fixed-iteration ADMM for min 0.5 x'Qx + c'x over the product constraint set.

    The inverse of Q + R is formed once from a Cholesky factorization; every
    inner iteration is then two small mat-vecs and two projections.
    """

    def __init__(self, Q: np.ndarray, R: np.ndarray, K: int, prob: SdpProblem):
        try:
            cho = sla.cho_factor(Q + np.diag(R))
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError("Q + R is not positive definite") from exc
        m = Q.shape[0]
        self.inv = sla.cho_solve(cho, np.eye(m))
        self.inv_R = self.inv * R[None, :]
        self.K = K
        self.mmf = prob.is_mmf
        self.budgets = prob.budgets

    def project(self, vp: np.ndarray) -> np.ndarray:
        K = self.K
        if self.mmf:
            return np.concatenate([project_simplex(vp[:K], 1.0), project_nonneg(vp[K:])])
        return np.concatenate([project_nonneg(vp[:K]),
                               project_weighted_simplex(vp[K:], self.budgets, 1.0)])

    def run(self, c: np.ndarray, v: np.ndarray, t_bar: np.ndarray, T: int,
            compiled: bool = True):
        base = -self.inv @ c
        if compiled:
            uniform = bool(np.all(self.budgets == self.budgets[0]))
            return inner_loop(base, self.inv_R, v.astype(float), t_bar.astype(float), int(T),
                              self.K, self.mmf, self.budgets.astype(float), uniform)
        for _ in range(T):
            x = base + self.inv_R @ (v - t_bar)
            v = self.project(x + t_bar)
            t_bar = t_bar + x - v
        return v, t_bar


def x_update(qp: QpData, R: np.ndarray, v: np.ndarray, t_bar: np.ndarray) -> np.ndarray:
    """Closed-form minimizer (Q + R)^-1 (-c + R (v - t_bar))."""
    R = np.asarray(R, dtype=float)
    Rm = np.diag(R) if R.ndim == 1 else R
    cho = sla.cho_factor(qp.Q + Rm)
    return sla.cho_solve(cho, -qp.c + Rm @ (v - t_bar))


def inner_admm(qp: QpData, R: np.ndarray, prob: SdpProblem, v: np.ndarray,
               t_bar: np.ndarray, T: int):
    """Run exactly ``T`` inner iterations; returns (y, z, v, t_bar)."""
    if T < 1:
        raise ValueError("T must be >= 1")
    R = np.asarray(R, dtype=float)
    inner = InnerSolver(qp.Q, np.diag(R) if R.ndim == 2 else R, prob.K, prob)
    v, t_bar = inner.run(qp.c, np.asarray(v, float), np.asarray(t_bar, float), T)
    return v[:prob.K], v[prob.K:], v, t_bar


def s_update(prob: SdpProblem, y: np.ndarray, z: np.ndarray, W_bar: np.ndarray):
    """PSD projection of X = D^H(z) - H^H(y) - W_bar; returns (S, X)."""
    X = prob.D_adj(z) - prob.H_adj(y) - W_bar
    X = 0.5 * (X + X.conj().T)
    try:
        lam, V = np.linalg.eigh(X)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("eigendecomposition failed in S-update") from exc
    pos = lam > 0
    Vp = V[:, pos]
    return (Vp * lam[pos]) @ Vp.conj().T, X


def w_bar_update(prob: SdpProblem, y, z, S, W_bar) -> np.ndarray:
    W = W_bar + prob.H_adj(y) + S - prob.D_adj(z)
    return 0.5 * (W + W.conj().T)


def residuals(W_bar, prev_W_bar, S, prev_S) -> tuple[float, float]:
    tr = float(np.real(np.trace(W_bar)))
    if prev_W_bar is None or tr <= 0:
        dual = float("inf")
    else:
        dual = abs(float(np.real(np.trace(W_bar - prev_W_bar)))) / tr
    nS = float(np.linalg.norm(S))
    if prev_S is None:
        prim = float("inf")
    elif nS == 0:
        # S stays exactly 0 when the relaxed optimum is full rank
        prim = 0.0 if not np.any(prev_S) else float("inf")
    else:
        prim = float(np.linalg.norm(S - prev_S)) / nS
    return dual, prim


def check_convergence(state: AdmmState, cfg: SolverConfig,
                      report: ConvergenceReport | None = None) -> ConvergenceReport:
    report = ConvergenceReport() if report is None else report
    dual, prim = residuals(state.W_bar, state.prev_W_bar, state.S, state.prev_S)
    report.outer_iters = state.outer_iter
    report.dual_residual, report.prim_residual = dual, prim
    report.degenerate = float(np.real(np.trace(state.W_bar))) <= 0
    report.converged = dual < cfg.eps_dual and prim < cfg.eps_prim
    report.residual_history.append((dual, prim))
    return report


TraceSink = Callable[[int, float, float, float], None]


def solve_dual(prob: SdpProblem, cfg: SolverConfig, state: AdmmState | None = None,
               trace: TraceSink | None = None) -> tuple[AdmmState, ConvergenceReport]:
    """Outer ADMM until both stopping criteria hold or ``max_outer`` is hit.

    A passed-in ``state`` is used as warm start (outer variables kept, inner
    (v, t_bar) reset). ``trace`` receives (iteration, transmit power,
    dual residual, primal residual) after every outer iteration.
    """
    cfg.validate()
    K, L = prob.K, prob.L
    if state is None:
        state = AdmmState.initial(prob, cfg.rho)
    else:
        state.v, state.t_bar = np.zeros(K + L), np.zeros(K + L)
        state.prev_S = state.prev_W_bar = None
        state.outer_iter = 0
    maps = mapping_matrices(prob)
    Q = build_Q(prob, cfg.rho, maps)
    inner = InnerSolver(Q, cfg.penalty_diag(K, L), K, prob)
    report = ConvergenceReport()
    for _ in range(cfg.max_outer):
        c = build_c(prob, cfg.rho, state.S, state.W_bar, maps)
        state.v, state.t_bar = inner.run(c, state.v, state.t_bar, cfg.inner_iters)
        state.y, state.z = state.v[:K].copy(), state.v[K:].copy()
        S, X = s_update(prob, state.y, state.z, state.W_bar)
        # W_bar + H^H(y) + S - D^H(z) == S - X
        W_bar = S - X
        state.prev_S, state.prev_W_bar = state.S, state.W_bar
        state.S, state.W_bar = S, W_bar
        state.outer_iter += 1
        check_convergence(state, cfg, report)
        if trace is not None:
            trace(state.outer_iter, cfg.rho * float(np.real(np.trace(W_bar))),
                  report.dual_residual, report.prim_residual)
        if report.converged:
            break
    report.degenerate = report.degenerate or prob.degenerate
    return state, report
