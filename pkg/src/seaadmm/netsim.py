"""Cell-free network drops: AP grid, UE placement, UMi large-scale fading,
correlated shadowing and spatially correlated Rayleigh channels.

All randomness is derived from ``numpy.random.SeedSequence`` sub-streams keyed
by ``(seed, purpose, index...)`` so that e.g. adding UEs leaves the draws of
existing UEs untouched.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# sub-stream purpose tags
_UE_STREAM = 1
_SHADOW_STREAM = 2
_CHANNEL_STREAM = 3

_SHIFTS = np.array([(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)], dtype=float)


class ConfigError(ValueError):
    """Invalid simulation or solver configuration."""


@dataclass(frozen=True)
class GeometryConfig:
    side_length: float = 750.0
    num_aps: int = 9
    antennas_per_ap: int = 4
    num_ues: int = 10
    wavelength_spacing: float = 0.5

    def validate(self) -> None:
        if self.side_length <= 0:
            raise ConfigError("side_length must be positive")
        if self.num_aps < 1 or math.isqrt(self.num_aps) ** 2 != self.num_aps:
            raise ConfigError(f"num_aps={self.num_aps} is not a perfect square")
        if self.antennas_per_ap < 1:
            raise ConfigError("antennas_per_ap must be >= 1")
        if self.num_ues < 1:
            raise ConfigError("num_ues must be >= 1")

    @property
    def n(self) -> int:
        return self.num_aps * self.antennas_per_ap


@dataclass(frozen=True)
class LargeScaleParams:
    pathloss_intercept: float = -30.5  # dB
    pathloss_slope: float = 36.7  # dB per decade
    shadow_std: float = 4.0  # dB
    shadow_decorrelation: float = 9.0  # m
    noise_power_dbm: float = -94.0
    angular_std_deg: float = 15.0
    height_difference: float = 10.0  # m, AP-UE vertical offset used by the pathloss

    def validate(self) -> None:
        if self.shadow_std < 0:
            raise ConfigError("shadow_std must be >= 0")
        if self.shadow_decorrelation <= 0:
            raise ConfigError("shadow_decorrelation must be positive")
        if self.angular_std_deg < 0 or self.height_difference < 0:
            raise ConfigError("angular_std_deg and height_difference must be >= 0")

    @property
    def noise_power(self) -> float:
        """Noise power in watts."""
        return 10 ** ((self.noise_power_dbm - 30.0) / 10)


@dataclass(frozen=True)
class NetworkRealization:
    side_length: float
    antennas_per_ap: int
    ap_positions: np.ndarray  # (L, 2)
    ue_positions: np.ndarray  # (K, 2)
    distances: np.ndarray  # (K, L) horizontal wrap-around distance
    angles: np.ndarray  # (K, L) azimuth from AP to UE, radians
    shadow_db: np.ndarray  # (K, L)
    gains: np.ndarray  # (K, L) linear beta_kl
    correlation: np.ndarray  # (K, L, N, N)
    channels: np.ndarray  # (K, L, N)
    noise_variances: np.ndarray  # (K,)
    meta: dict = field(default_factory=dict)

    @property
    def num_ues(self) -> int:
        return self.ue_positions.shape[0]

    @property
    def num_aps(self) -> int:
        return self.ap_positions.shape[0]

    def stacked_channels(self) -> np.ndarray:
        """(K, L*N) concatenated channels h_k = [h_k1; ...; h_kL]."""
        K, L, N = self.channels.shape
        return self.channels.reshape(K, L * N)


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *key]))


def place_network(cfg: GeometryConfig, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """AP positions on a centred sqrt(L) x sqrt(L) grid and i.i.d. uniform UEs."""
    cfg.validate()
    per_side = math.isqrt(cfg.num_aps)
    spacing = cfg.side_length / per_side
    ticks = spacing * (np.arange(per_side) + 0.5)
    gx, gy = np.meshgrid(ticks, ticks, indexing="ij")
    aps = np.column_stack([gx.ravel(), gy.ravel()])
    ues = np.array([_rng(seed, _UE_STREAM, k).uniform(0.0, cfg.side_length, size=2)
                    for k in range(cfg.num_ues)])
    return aps, ues


def _wrap_offsets(a: np.ndarray, b: np.ndarray, side: float) -> np.ndarray:
    """Shortest displacement b - a on the torus; broadcasting over leading dims."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b[..., None, :] + side * _SHIFTS - a[..., None, :]
    idx = np.argmin(np.einsum("...si,...si->...s", d, d), axis=-1)
    return np.take_along_axis(d, idx[..., None, None], axis=-2)[..., 0, :]


def wrap_distance(a, b, side: float) -> float:
    """Euclidean distance between ``a`` and the nearest of the 9 torus copies of ``b``."""
    off = _wrap_offsets(np.asarray(a, float), np.asarray(b, float), side)
    return float(np.hypot(off[0], off[1]))


def pathloss_db(d, params: LargeScaleParams = LargeScaleParams()):
    """UMi pathloss in dB at 3-D distance ``d`` metres, before shadowing."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("pathloss distance must be positive")
    out = params.pathloss_intercept - params.pathloss_slope * np.log10(d)
    return float(out) if out.ndim == 0 else out


def shadow_covariance(ue_positions: np.ndarray, params: LargeScaleParams,
                      side: float | None = None) -> np.ndarray:
    """K x K covariance (dB^2) of the shadowing seen by one AP.

    Entry (k, i) is ``std^2 * 2^(-delta_ki / decorrelation)``. Different APs are
    independent, so the same matrix applies to every AP column.
    """
    ue = np.atleast_2d(np.asarray(ue_positions, dtype=float))
    if ue.shape[0] < 1:
        raise ValueError("need at least one UE")
    if side is None:
        delta = np.linalg.norm(ue[:, None, :] - ue[None, :, :], axis=-1)
    else:
        off = _wrap_offsets(ue[:, None, :], ue[None, :, :], side)
        delta = np.linalg.norm(off, axis=-1)
    return params.shadow_std ** 2 * 2.0 ** (-delta / params.shadow_decorrelation)


def _sym_sqrt(C: np.ndarray) -> np.ndarray:
    lam, V = np.linalg.eigh(C)
    return (V * np.sqrt(np.clip(lam, 0.0, None))) @ V.conj().T


def local_scattering_correlation(N: int, angle: float, angular_std: float,
                                 spacing: float = 0.5) -> np.ndarray:
    """Normalized (trace N) Gaussian local-scattering correlation of a ULA."""
    dist = np.arange(N)[:, None] - np.arange(N)[None, :]
    phase = 2 * np.pi * spacing * dist
    return (np.exp(1j * phase * np.sin(angle))
            * np.exp(-0.5 * (angular_std * phase * np.cos(angle)) ** 2))


def sample_channels(correlation: np.ndarray, seed: int) -> np.ndarray:
    """Draw h_kl = R_kl^(1/2) g with g ~ CN(0, I), one sub-stream per (k, l)."""
    R = np.asarray(correlation)
    K, L, N, _ = R.shape
    h = np.zeros((K, L, N), dtype=complex)
    for k in range(K):
        for l in range(L):
            Rkl = R[k, l]
            lam, V = np.linalg.eigh(Rkl)
            tr = float(np.real(np.trace(Rkl)))
            if lam.size and lam.min() < -1e-10 * max(tr, np.finfo(float).tiny):
                raise np.linalg.LinAlgError(f"R[{k},{l}] is not PSD (min eig {lam.min():.3e})")
            root = (V * np.sqrt(np.clip(lam, 0.0, None))) @ V.conj().T
            g = _rng(seed, _CHANNEL_STREAM, k, l).standard_normal((2, N))
            h[k, l] = root @ ((g[0] + 1j * g[1]) / np.sqrt(2))
    return h


def generate_network(geometry: GeometryConfig, params: LargeScaleParams,
                     seed: int) -> NetworkRealization:
    """One complete Monte Carlo drop."""
    geometry.validate()
    params.validate()
    side = geometry.side_length
    aps, ues = place_network(geometry, seed)
    K, L, N = geometry.num_ues, geometry.num_aps, geometry.antennas_per_ap

    off = _wrap_offsets(aps[None, :, :], ues[:, None, :], side)  # AP -> UE
    dist = np.hypot(off[..., 0], off[..., 1])
    angles = np.arctan2(off[..., 1], off[..., 0])

    C = shadow_covariance(ues, params)
    root = _sym_sqrt(C)
    shadow = np.column_stack([root @ _rng(seed, _SHADOW_STREAM, l).standard_normal(K)
                              for l in range(L)])

    d3 = np.sqrt(dist ** 2 + params.height_difference ** 2)
    gains_db = pathloss_db(d3, params) + shadow
    gains = 10 ** (np.asarray(gains_db) / 10)

    sigma_phi = np.deg2rad(params.angular_std_deg)
    R = np.empty((K, L, N, N), dtype=complex)
    for k in range(K):
        for l in range(L):
            R[k, l] = gains[k, l] * local_scattering_correlation(
                N, angles[k, l], sigma_phi, geometry.wavelength_spacing)

    h = sample_channels(R, seed)
    noise = np.full(K, params.noise_power)
    return NetworkRealization(
        side_length=side, antennas_per_ap=N, ap_positions=aps, ue_positions=ues,
        distances=dist, angles=angles, shadow_db=shadow, gains=gains,
        correlation=R, channels=h, noise_variances=noise, meta={"seed": int(seed)})


def realization_from_channels(h: np.ndarray, noise_variances, antennas_per_ap: int = 1) -> NetworkRealization:
    """Wrap hand-made channels (K, L, N) or (K, n) as a realization with no geometry."""
    h = np.asarray(h, dtype=complex)
    if h.ndim == 1:
        h = h[None, :]
    if h.ndim == 2:
        K, n = h.shape
        if n % antennas_per_ap:
            raise ValueError("channel length not divisible by antennas_per_ap")
        h = h.reshape(K, n // antennas_per_ap, antennas_per_ap)
    K, L, N = h.shape
    gains = np.sum(np.abs(h) ** 2, axis=-1) / N
    R = np.einsum("kli,klj->klij", h, h.conj())
    return NetworkRealization(
        side_length=float("nan"), antennas_per_ap=N, ap_positions=np.zeros((L, 2)),
        ue_positions=np.zeros((K, 2)), distances=np.ones((K, L)), angles=np.zeros((K, L)),
        shadow_db=np.zeros((K, L)), gains=gains, correlation=R, channels=h,
        noise_variances=np.broadcast_to(np.asarray(noise_variances, float), (K,)).copy())


def dump_realization(net: NetworkRealization, path: str | Path) -> tuple[Path, Path]:
    """Write ``<path>.json`` (geometry, gains in dB, noise in dBm) and ``<path>.bin``.

    The sidecar holds the channels as little-endian float64 pairs (re, im) in
    row-major order [k][l][n].
    """
    path = Path(path)
    jpath, bpath = path.with_suffix(".json"), path.with_suffix(".bin")
    K, L, N = net.channels.shape
    doc = {
        "num_ues": K, "num_aps": L, "antennas_per_ap": N,
        "side_length": net.side_length,
        "ap_positions": net.ap_positions.tolist(),
        "ue_positions": net.ue_positions.tolist(),
        "gains_db": (10 * np.log10(net.gains)).tolist(),
        "noise_dbm": (10 * np.log10(net.noise_variances) + 30).tolist(),
        "channels_file": bpath.name,
        "channels_layout": "float64 little-endian (re, im), row-major [k][l][n]",
        "meta": net.meta,
    }
    jpath.write_text(json.dumps(doc, indent=2))
    inter = np.empty((K, L, N, 2), dtype="<f8")
    inter[..., 0] = net.channels.real
    inter[..., 1] = net.channels.imag
    bpath.write_bytes(inter.tobytes(order="C"))
    return jpath, bpath


def load_channels(bin_path: str | Path, K: int, L: int, N: int) -> np.ndarray:
    raw = np.frombuffer(Path(bin_path).read_bytes(), dtype="<f8").reshape(K, L, N, 2)
    return raw[..., 0] + 1j * raw[..., 1]
