"""Independent checks of solver output.

Nothing here touches solver internals: certificates are computed from the
problem data and the raw iterates (y, z, S, W_bar) only.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .problem import Kind, SdpProblem, build_mmf, build_qos
from .solver import AdmmState, SolverConfig, solve_dual


class OracleUnsupported(ValueError):
    """The oracle has no reference answer for this problem shape."""


class Verdict(str, enum.Enum):
    CERTIFIED = "certified"
    MARGINAL = "marginal"
    FAILED = "failed"


@dataclass(frozen=True)
class Certificate:
    primal_obj: float
    dual_obj: float
    gap_rel: float
    stationarity_residual: float
    complementarity: float
    feasibility_violation: float
    lower_bound: float
    upper_bound: float
    bound_gap_rel: float
    verdict: Verdict

    @property
    def certified(self) -> bool:
        return self.verdict is Verdict.CERTIFIED


# tolerances for a certified verdict
GAP_TOL = 1e-3
RESIDUAL_TOL = 1e-3
MMF_POWER_SLACK = 1e-4
QOS_SNR_SLACK = 1e-3


def closed_form_single_ue(h, noise: float, budgets, kind: Kind | str, gamma: float | None = None,
                          antennas_per_ap: int = 1) -> float:
    """Optimal objective for one UE where the optimum is analytic.

    MMF returns the optimal SNR, QoS the optimal max normalized per-AP power.
    Supported: one antenna per AP (any number of APs; phase-aligned full
    power is optimal) or a single AP (matched filter).
    """
    kind = Kind(kind)
    h = np.asarray(h, dtype=complex).ravel()
    N = antennas_per_ap
    if h.size % N:
        raise OracleUnsupported("channel length not a multiple of antennas_per_ap")
    L = h.size // N
    P = np.broadcast_to(np.asarray(budgets, float), (L,))
    if N == 1:
        coherent = float(np.sum(np.sqrt(P) * np.abs(h)) ** 2)
    elif L == 1:
        coherent = float(P[0] * np.sum(np.abs(h) ** 2))
    else:
        raise OracleUnsupported("multi-antenna APs with L > 1 have no closed form")
    if kind is Kind.MMF:
        return coherent / noise
    if gamma is None:
        raise ValueError("QoS closed form needs an SNR target")
    if coherent == 0:
        return float("inf")
    return float(gamma) * noise / coherent


def _unit_directions(n: int, density: int) -> np.ndarray:
    """Grid of complex unit vectors in C^n; the first entry is real >= 0."""
    if n == 1:
        return np.ones((1, 1), dtype=complex)
    thetas = np.linspace(0.0, np.pi / 2, density)
    phis = np.linspace(0.0, 2 * np.pi, density, endpoint=False)
    if n == 2:
        th, ph = np.meshgrid(thetas, phis, indexing="ij")
        th, ph = th.ravel(), ph.ravel()
        return np.column_stack([np.cos(th), np.sin(th) * np.exp(1j * ph)])
    t1, t2, p1, p2 = (a.ravel() for a in np.meshgrid(thetas, thetas, phis, phis, indexing="ij"))
    return np.column_stack([np.cos(t1), np.sin(t1) * np.cos(t2) * np.exp(1j * p1),
                            np.sin(t1) * np.sin(t2) * np.exp(1j * p2)])


def _params_to_vec(x: np.ndarray, n: int) -> np.ndarray:
    if n == 2:
        return np.array([np.cos(x[0]), np.sin(x[0]) * np.exp(1j * x[1])])
    return np.array([np.cos(x[0]), np.sin(x[0]) * np.cos(x[1]) * np.exp(1j * x[2]),
                     np.sin(x[0]) * np.sin(x[1]) * np.exp(1j * x[3])])


def _vec_to_params(w: np.ndarray) -> np.ndarray:
    w = w * np.exp(-1j * np.angle(w[0])) / np.linalg.norm(w)
    t1 = np.arccos(np.clip(w[0].real, -1, 1))
    if w.size == 2:
        return np.array([t1, np.angle(w[1])])
    t2 = np.arctan2(abs(w[2]), abs(w[1]))
    return np.array([t1, t2, np.angle(w[1]), np.angle(w[2])])


def rank1_value(prob: SdpProblem, w: np.ndarray) -> np.ndarray:
    """Objective of directions ``w`` (rows) after scaling onto the feasible boundary.

    MMF: larger is better. QoS / sum-power: smaller is better.
    """
    w = np.atleast_2d(w)
    gains = np.abs(w @ prob.channels.conj().T) ** 2 / prob.noise  # (m, K)
    powers = (np.abs(w) ** 2) @ prob.blocks.T  # (m, L)
    load = np.max(powers / prob.budgets, axis=1)
    if prob.kind is Kind.MMF:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(load > 0, np.min(gains, axis=1) / load, 0.0)
    with np.errstate(divide="ignore"):
        need = np.max(prob.targets / gains, axis=1)
    return need * load


def brute_force_rank1(prob: SdpProblem, grid_density: int = 48, refine: bool = True,
                      chunk: int = 200_000, n_starts: int = 20) -> float:
    """Best rank-one objective by exhaustive direction search (n <= 3).

    Directions come from a hyperspherical-angle grid; each is scaled onto the
    feasible boundary. With ``refine`` the ``n_starts`` best grid points are
    polished by a restarted local simplex search (the max-min objective has
    kinks where a single Nelder-Mead run stalls). Refinement only ever
    improves on the grid value.
    """
    n = prob.n
    if n > 3:
        raise OracleUnsupported("brute force limited to n <= 3")
    if prob.penalty is not None:
        raise OracleUnsupported("brute force works on the unpenalized problem")
    sign = -1.0 if prob.kind is Kind.MMF else 1.0
    dirs = _unit_directions(n, grid_density)
    vals = np.concatenate([rank1_value(prob, dirs[i:i + chunk]) for i in range(0, len(dirs), chunk)])
    order = np.argsort(sign * vals)
    best = float(vals[order[0]])
    if not refine or n == 1:
        return best

    def f(x):
        return sign * float(rank1_value(prob, _params_to_vec(x, n))[0])

    for idx in order[:n_starts]:
        x, fx = _vec_to_params(dirs[idx]), sign * float(vals[idx])
        for _ in range(20):
            res = minimize(f, x, method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
            if res.fun >= fx - 1e-12 * abs(fx):
                break
            x, fx = res.x, float(res.fun)
        cand = sign * fx
        best = max(best, cand) if sign < 0 else min(best, cand)
    return best


def _dual_shift(prob: SdpProblem, y: np.ndarray, z: np.ndarray) -> float:
    """Smallest uniform increase of z that makes D^H(z) - H^H(y) PSD."""
    lam = np.linalg.eigvalsh(prob.D_adj(z) - prob.H_adj(y))
    # raising every z_l by d adds at least d * I to D^H(z)
    return max(0.0, -float(lam[0]))


def certify(prob: SdpProblem, state: AdmmState, rho: float) -> Certificate:
    """Duality-gap / KKT certificate for the relaxed problem ``prob`` at ``state``.

    Besides the raw gap between the primal value at W = rho * W_bar and the
    dual objective, a rigorous bracket is formed: W rescaled to exact primal
    feasibility gives one bound, z shifted to exact dual feasibility the other.
    """
    y, z, S = np.asarray(state.y, float), np.asarray(state.z, float), state.S
    W = rho * state.W_bar
    snr = prob.H_map(W)
    pw = prob.D_map(W)
    DHz = prob.D_adj(z)
    resid = prob.H_adj(y) + S - DHz
    stat = float(np.linalg.norm(resid) / max(np.linalg.norm(DHz), np.finfo(float).tiny))
    SW = abs(float(np.real(np.vdot(S, W))))
    d = _dual_shift(prob, y, z)
    if prob.kind is Kind.MMF:
        primal = float(np.min(snr))
        dual = float(z @ prob.budgets)
        scale = abs(dual) if dual else 1.0
        comp = max(np.max(y * np.abs(snr - primal)) / max(primal, np.finfo(float).tiny),
                   np.max(z * np.abs(prob.budgets - pw)) / scale, SW / scale)
        feas = float(max(0.0, np.max(pw / prob.budgets) - 1.0))
        feas_ok = feas <= MMF_POWER_SLACK
        load = np.max(pw / prob.budgets)
        lower = primal / load if load > 0 else 0.0
        upper = float((z + d) @ prob.budgets)
        bound_gap = (upper - lower) / upper if upper > 0 else float("inf")
        dual_ok = abs(np.sum(y) - 1) <= 1e-8
    else:
        primal = float(np.max(pw / prob.budgets))
        dual = float(y @ prob.targets)
        scale = abs(dual) if dual else 1.0
        comp = max(np.max(y * np.abs(snr - prob.targets)) / scale,
                   np.max(z * np.abs(primal * prob.budgets - pw)) / scale, SW / scale)
        feas = float(max(0.0, 1.0 - np.min(snr / prob.targets)))
        feas_ok = feas <= QOS_SNR_SLACK
        lo_load = np.min(snr / prob.targets)
        upper = primal / lo_load if lo_load > 0 else float("inf")
        lower = dual / float((z + d) @ prob.budgets)
        bound_gap = (upper - lower) / lower if lower > 0 else float("inf")
        dual_ok = abs(z @ prob.budgets - 1) <= 1e-8
    gap = abs(primal - dual) / abs(dual) if dual else float("inf")
    dual_ok = dual_ok and np.all(y >= 0) and np.all(z >= 0)
    if gap <= GAP_TOL and stat <= RESIDUAL_TOL and comp <= RESIDUAL_TOL and feas_ok and dual_ok:
        verdict = Verdict.CERTIFIED
    elif gap <= 10 * GAP_TOL and stat <= 10 * RESIDUAL_TOL and comp <= 10 * RESIDUAL_TOL and dual_ok:
        verdict = Verdict.MARGINAL
    else:
        verdict = Verdict.FAILED
    return Certificate(primal_obj=primal, dual_obj=dual, gap_rel=float(gap),
                       stationarity_residual=stat, complementarity=float(comp),
                       feasibility_violation=feas, lower_bound=float(lower),
                       upper_bound=float(upper), bound_gap_rel=float(bound_gap), verdict=verdict)


def mmf_qos_consistency(net, p_max, mmf_cfg: SolverConfig, qos_cfg: SolverConfig | None = None,
                        gamma_scale: float = 1.0) -> float | None:
    """Solve the relaxed MMF, then the relaxed QoS with gamma = scale * t*.

    Returns x* (the optimal max normalized per-AP power), which should equal
    ``gamma_scale``; ``None`` when the MMF solve does not certify.
    """
    qos_cfg = mmf_cfg if qos_cfg is None else qos_cfg
    mmf = build_mmf(net, p_max)
    st, _ = solve_dual(mmf, mmf_cfg)
    cert = certify(mmf, st, mmf_cfg.rho)
    if not cert.certified:
        return None
    t_star = 0.5 * (cert.primal_obj + cert.dual_obj)
    qos = build_qos(net, p_max, gamma_scale * t_star)
    st_q, _ = solve_dual(qos, qos_cfg)
    cq = certify(qos, st_q, qos_cfg.rho)
    return 0.5 * (cq.primal_obj + cq.dual_obj)
