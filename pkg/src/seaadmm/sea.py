"""Successive elimination: re-solve while penalizing the second eigendirection
until the relaxed solution is numerically rank one, then extract ``w``."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .netsim import ConfigError
from .problem import Kind, SdpProblem, apply_sea_penalty
from .solver import AdmmState, ConvergenceReport, SolverConfig, TraceSink, solve_dual


@dataclass(frozen=True)
class SeaConfig:
    zeta: float | str = 1.0
    rank_tol: float = 1e-2
    max_rounds: int = 20

    def validate(self) -> None:
        if not 0 < self.rank_tol < 1:
            raise ConfigError("rank_tol must lie in (0, 1)")
        if self.max_rounds < 1:
            raise ConfigError("max_rounds must be >= 1")
        if self.zeta != "auto" and float(self.zeta) < 0:
            raise ConfigError("zeta must be nonnegative or 'auto'")


@dataclass
class SolveReport:
    W: np.ndarray
    w: np.ndarray
    objective: float
    sdr_bound: float
    sea_rounds: int
    outer_iters_per_round: list
    converged_per_round: list
    duality_gap: float
    feasibility: np.ndarray
    rank_history: list
    round_objectives: list
    rank_one: bool
    zeta: float
    min_snr: float
    min_se: float
    total_power: float
    per_ap_power: np.ndarray
    problem: SdpProblem = field(repr=False)
    state: AdmmState = field(repr=False)
    convergence: ConvergenceReport = field(repr=False)
    relaxed_state: AdmmState | None = field(default=None, repr=False)
    relaxed_convergence: ConvergenceReport | None = field(default=None, repr=False)

    @property
    def outer_iters(self) -> int:
        return int(sum(self.outer_iters_per_round))

    @property
    def gap_rel(self) -> float:
        """Relative gap between the rank-one objective and the relaxation bound."""
        return abs(self.sdr_bound - self.objective) / abs(self.sdr_bound) if self.sdr_bound else float("nan")


def numerical_rank(W: np.ndarray, rank_tol: float = 1e-2) -> int:
    lam = np.linalg.eigvalsh(0.5 * (W + W.conj().T))[::-1]
    if lam.size == 0 or lam[0] <= 0:
        return 0
    return int(np.sum(lam > rank_tol * lam[0]))


def second_eigvec(W: np.ndarray) -> np.ndarray:
    lam, V = np.linalg.eigh(0.5 * (W + W.conj().T))
    if lam.size < 2 or lam[-2] <= 0:
        raise ValueError("matrix has fewer than two positive eigenvalues")
    u = V[:, -2]
    return u / np.linalg.norm(u)


def _fix_phase(w: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(w)))
    mag = np.abs(w[i])
    if mag == 0:
        return w
    out = w * (mag / w[i])
    out[i] = mag
    return out


def extract_beamformer(W: np.ndarray, rank_tol: float = 1e-2, strict: bool = True) -> np.ndarray:
    """Principal component sqrt(lambda_1) q_1, largest entry made real positive."""
    if strict and numerical_rank(W, rank_tol) != 1:
        raise ValueError("matrix is not numerically rank one")
    lam, V = np.linalg.eigh(0.5 * (W + W.conj().T))
    return _fix_phase(np.sqrt(max(lam[-1], 0.0)) * V[:, -1])


def relaxed_objective(prob: SdpProblem, W: np.ndarray) -> float:
    """Objective of the relaxed problem at W, using the original selectors."""
    if prob.kind is Kind.MMF:
        return float(np.min(prob.H_map(W)))
    return prob.power_objective(W) if prob.kind is Kind.QOS else float(np.real(np.trace(W)))


def scale_to_feasible(prob: SdpProblem, w: np.ndarray) -> np.ndarray:
    """Rescale w onto the boundary of the original (unpenalized) feasible set.

    MMF: the tightest per-AP budget becomes active. QoS / sum-power: the
    tightest SNR target is met with equality.
    """
    W = np.outer(w, w.conj())
    if prob.kind is Kind.MMF:
        load = np.max(prob.selector_map(W) / prob.budgets)
    else:
        load = np.min(prob.H_map(W) / prob.targets)
    return w / np.sqrt(load) if load > 0 else w


def _dual_gap(prob: SdpProblem, state: AdmmState, W: np.ndarray) -> float:
    if prob.kind is Kind.MMF:
        primal, dual = np.min(prob.H_map(W)), state.z @ prob.budgets
    else:
        primal, dual = np.max(prob.D_map(W) / prob.budgets), state.y @ prob.targets
    return float(abs(primal - dual) / abs(dual)) if dual else float("inf")


def auto_zeta(prob: SdpProblem, W: np.ndarray, factor: float = 10.0) -> float:
    """Penalty weight relative to the average per-constraint load of W."""
    load = np.mean(prob.selector_map(W) / prob.budgets)
    return factor / load if load > 0 else factor


def run_sea(prob: SdpProblem, solver_cfg: SolverConfig = SolverConfig(),
            sea_cfg: SeaConfig = SeaConfig(), trace: TraceSink | None = None) -> SolveReport:
    """Full SEA-ADMM: relaxed solve, elimination rounds, rank-one extraction.

    ``trace`` (if given) only observes the first round, which is the plain
    relaxation.
    """
    sea_cfg.validate()
    rho = solver_cfg.rho
    state, conv = solve_dual(prob, solver_cfg, trace=trace)
    # later rounds warm-start from (and mutate) state; keep the plain relaxation
    relaxed_state, relaxed_conv = copy.deepcopy(state), conv
    W = rho * state.W_bar
    sdr_bound = relaxed_objective(prob, W)
    zeta = auto_zeta(prob, W) if sea_cfg.zeta == "auto" else float(sea_cfg.zeta)
    iters, converged = [conv.outer_iters], [conv.converged]
    lam = np.linalg.eigvalsh(W)[::-1]
    ranks = [(float(lam[0]), float(lam[1]) if lam.size > 1 else 0.0)]
    objs = [sdr_bound]
    cur = prob
    rounds = 1
    while numerical_rank(W, sea_cfg.rank_tol) > 1 and rounds < sea_cfg.max_rounds:
        cur = apply_sea_penalty(cur, second_eigvec(W), zeta)
        state, conv = solve_dual(cur, solver_cfg, state=state)
        W = rho * state.W_bar
        rounds += 1
        iters.append(conv.outer_iters)
        converged.append(conv.converged)
        lam = np.linalg.eigvalsh(W)[::-1]
        ranks.append((float(lam[0]), float(lam[1]) if lam.size > 1 else 0.0))
        objs.append(relaxed_objective(prob, W))

    rank_one = numerical_rank(W, sea_cfg.rank_tol) == 1
    w = scale_to_feasible(prob, extract_beamformer(W, sea_cfg.rank_tol, strict=False))
    Ww = np.outer(w, w.conj())
    snr = prob.H_map(Ww)
    per_ap = prob.selector_map(Ww)
    if prob.kind is Kind.MMF:
        feas = per_ap / prob.budgets - 1.0
    else:
        feas = 1.0 - snr / prob.targets
    return SolveReport(
        W=W, w=w, objective=relaxed_objective(prob, Ww), sdr_bound=sdr_bound,
        sea_rounds=rounds, outer_iters_per_round=iters, converged_per_round=converged,
        duality_gap=_dual_gap(cur, state, W), feasibility=feas, rank_history=ranks,
        round_objectives=objs, rank_one=rank_one, zeta=zeta,
        min_snr=float(np.min(snr)), min_se=float(np.min(np.log2(1 + snr))),
        total_power=float(np.sum(per_ap)), per_ap_power=per_ap,
        problem=cur, state=state, convergence=conv,
        relaxed_state=relaxed_state, relaxed_convergence=relaxed_conv)
