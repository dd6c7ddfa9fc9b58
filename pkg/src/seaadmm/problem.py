"""Relaxed MMF / QoS / sum-power SDP data and the vectorized inner-QP data.

Power constraint matrices are stored implicitly: ``D_l = diag(block_l) + P``
where ``block_l`` selects the antennas of constraint ``l`` and ``P`` is the
penalty matrix shared by every constraint (``zeta * sum_r u_r u_r^H``).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .netsim import ConfigError, NetworkRealization


class Kind(str, enum.Enum):
    MMF = "mmf"
    QOS = "qos"
    SUMPOWER = "sumpower"


@dataclass(frozen=True)
class SdpProblem:
    kind: Kind
    channels: np.ndarray  # (K, n) concatenated h_k
    noise: np.ndarray  # (K,)
    blocks: np.ndarray  # (L', n) 0/1 selector rows, one per power constraint
    budgets: np.ndarray  # (L',) watts
    targets: np.ndarray | None = None  # (K,) linear SNR, QoS/sum-power only
    zeta: float = 0.0
    penalty_dirs: tuple = ()
    penalty: np.ndarray | None = None  # (n, n) zeta * sum_r u_r u_r^H
    num_aps: int = 1
    degenerate: bool = False

    @property
    def n(self) -> int:
        return self.channels.shape[1]

    @property
    def K(self) -> int:
        return self.channels.shape[0]

    @property
    def L(self) -> int:
        """Number of power constraints (1 for the sum-power variant)."""
        return self.blocks.shape[0]

    @property
    def is_mmf(self) -> bool:
        return self.kind is Kind.MMF

    @property
    def total_budget(self) -> float:
        return float(np.sum(self.budgets))

    def penalty_matrix(self) -> np.ndarray:
        if self.penalty is None:
            return np.zeros((self.n, self.n), dtype=complex)
        return self.penalty

    # -- explicit matrices -------------------------------------------------
    def H_mats(self) -> np.ndarray:
        """(K, n, n) H_k = h_k h_k^H / sigma_k^2."""
        h = self.channels
        return np.einsum("ki,kj->kij", h, h.conj()) / self.noise[:, None, None]

    def selector_mats(self) -> np.ndarray:
        """(L', n, n) penalty-free block selectors."""
        return np.stack([np.diag(b).astype(complex) for b in self.blocks])

    def D_mats(self) -> np.ndarray:
        return self.selector_mats() + self.penalty_matrix()[None]

    # -- linear maps and adjoints -----------------------------------------
    def H_map(self, W: np.ndarray) -> np.ndarray:
        """(tr(H_k W))_k."""
        h = self.channels
        return np.real(np.einsum("ki,ij,kj->k", h.conj(), W, h)) / self.noise

    def selector_map(self, W: np.ndarray) -> np.ndarray:
        """Per-constraint powers tr(D_l W) using the original selectors."""
        return self.blocks @ np.real(np.diag(W))

    def D_map(self, W: np.ndarray) -> np.ndarray:
        out = self.selector_map(W)
        if self.penalty is not None:
            out = out + np.real(np.vdot(self.penalty, W))
        return out

    def H_adj(self, y: np.ndarray) -> np.ndarray:
        """sum_k y_k H_k."""
        h = self.channels
        return (h.T * (y / self.noise)) @ h.conj()

    def D_adj(self, z: np.ndarray) -> np.ndarray:
        """sum_l z_l D_l."""
        out = np.diag((z @ self.blocks).astype(complex))
        if self.penalty is not None:
            out = out + np.sum(z) * self.penalty
        return out

    def power_objective(self, W: np.ndarray) -> float:
        """max_l tr(D_l W) / P_l with the original selectors."""
        return float(np.max(self.selector_map(W) / self.budgets))


@dataclass(frozen=True)
class QpData:
    Q: np.ndarray
    c: np.ndarray
    map_H: np.ndarray  # (K, n^2) rows vec(H_k)^H
    map_D: np.ndarray  # (L, n^2) rows vec(D_l)^H
    rho: float


def _vec(A: np.ndarray) -> np.ndarray:
    """Column-wise vectorization."""
    return np.reshape(A, -1, order="F")


def _base(net: NetworkRealization, p_max, kind: Kind, targets=None) -> SdpProblem:
    h = net.stacked_channels()
    K, n = h.shape
    L, N = net.channels.shape[1], net.channels.shape[2]
    p = np.broadcast_to(np.asarray(p_max, dtype=float), (L,)).copy()
    if np.any(p <= 0):
        raise ConfigError("power budgets must be positive")
    blocks = np.kron(np.eye(L), np.ones((1, N)))
    degenerate = bool(np.any(np.sum(np.abs(h) ** 2, axis=1) == 0))
    return SdpProblem(kind=kind, channels=h.copy(), noise=np.asarray(net.noise_variances, float).copy(),
                      blocks=blocks, budgets=p, targets=targets, num_aps=L,
                      degenerate=degenerate)


def build_mmf(net: NetworkRealization, p_max) -> SdpProblem:
    return _base(net, p_max, Kind.MMF)


def build_qos(net: NetworkRealization, p_max, gamma) -> SdpProblem:
    K = net.channels.shape[0]
    g = np.broadcast_to(np.asarray(gamma, dtype=float), (K,)).copy()
    if np.any(g <= 0):
        raise ConfigError("SNR targets must be positive")
    return _base(net, p_max, Kind.QOS, targets=g)


def sum_power_variant(prob: SdpProblem) -> SdpProblem:
    """Single total-power constraint D = I_n with budget P_T (QoS form)."""
    if prob.kind is Kind.MMF:
        raise ConfigError("sum-power variant is built from a QoS problem")
    return replace(prob, kind=Kind.SUMPOWER, blocks=np.ones((1, prob.n)),
                   budgets=np.array([prob.total_budget]))


def apply_sea_penalty(prob: SdpProblem, u: np.ndarray, zeta: float | None = None) -> SdpProblem:
    """Return a copy with every D_l incremented by ``zeta * u u^H``."""
    zeta = prob.zeta if zeta is None else float(zeta)
    if zeta < 0:
        raise ConfigError("penalty factor must be nonnegative")
    u = np.asarray(u, dtype=complex)
    if abs(np.linalg.norm(u) - 1) > 1e-8:
        raise ValueError("penalty direction must be a unit vector")
    P = prob.penalty_matrix() + zeta * np.outer(u, u.conj())
    return replace(prob, zeta=zeta, penalty=P, penalty_dirs=prob.penalty_dirs + (u.copy(),))


def mapping_matrices(prob: SdpProblem) -> tuple[np.ndarray, np.ndarray]:
    map_H = np.stack([_vec(Hk).conj() for Hk in prob.H_mats()])
    map_D = np.stack([_vec(Dl).conj() for Dl in prob.D_mats()])
    return map_H, map_D


def build_Q(prob: SdpProblem, rho: float, maps=None) -> np.ndarray:
    map_H, map_D = mapping_matrices(prob) if maps is None else maps
    M = np.vstack([map_H, -map_D])
    Q = rho * np.real(M @ M.conj().T)
    return 0.5 * (Q + Q.T)


def build_c(prob: SdpProblem, rho: float, S: np.ndarray, W_bar: np.ndarray, maps=None) -> np.ndarray:
    if maps is None:
        R = S + W_bar
        Hr, Dr = prob.H_map(R), prob.D_map(R)
    else:
        r = _vec(S + W_bar)
        Hr, Dr = np.real(maps[0] @ r), np.real(maps[1] @ r)
    if prob.is_mmf:
        return np.concatenate([rho * Hr, prob.budgets - rho * Dr])
    return np.concatenate([rho * Hr - prob.targets, -rho * Dr])


def build_qp(prob: SdpProblem, rho: float, S: np.ndarray, W_bar: np.ndarray) -> QpData:
    if S.shape != (prob.n, prob.n) or W_bar.shape != S.shape:
        raise ValueError("S and W_bar must be n x n")
    maps = mapping_matrices(prob)
    return QpData(Q=build_Q(prob, rho, maps), c=build_c(prob, rho, S, W_bar, maps),
                  map_H=maps[0], map_D=maps[1], rho=rho)


def qp_objective(qp: QpData, x: np.ndarray, S: np.ndarray, W_bar: np.ndarray) -> float:
    """0.5 x'Qx + c'x + (rho/2)||r||^2, the full inner objective value."""
    r = _vec(S + W_bar)
    return float(0.5 * x @ qp.Q @ x + qp.c @ x + 0.5 * qp.rho * np.real(np.vdot(r, r)))
