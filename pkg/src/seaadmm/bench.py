"""Monte Carlo harness: drop a network, solve, certify, record metrics."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .netsim import ConfigError, GeometryConfig, LargeScaleParams, NetworkRealization, generate_network
from .oracle import Verdict, certify
from .problem import Kind, build_mmf, build_qos, sum_power_variant
from .sea import SeaConfig, run_sea
from .solver import SolverConfig

log = logging.getLogger(__name__)

WORKERS_ENV = "SEAADMM_WORKERS"
FAIL_BUDGET = 0.01

CSV_COLUMNS = (
    "sample_id", "seed", "variant", "K", "L", "N", "objective", "sdr_bound", "gap_rel",
    "sea_rounds", "outer_iters_total", "min_se", "total_power_w", "max_per_ap_power_w",
    "certificate", "wall_time_s",
)
TRACE_COLUMNS = ("iteration", "transmit_power_w", "dual_residual", "prim_residual")
QUANTILE_METRICS = (
    "objective", "sdr_bound", "gap_rel", "sea_rounds", "outer_iters_total", "min_se",
    "total_power_w", "max_per_ap_power_w", "wall_time_s",
)

# per-variant ADMM penalties used unless a config overrides them
DEFAULT_SOLVERS = {
    Kind.MMF: SolverConfig(rho=0.2, mu_s=5e6, mu_p=5.0),
    Kind.QOS: SolverConfig(rho=0.2, mu_s=3e6, mu_p=5.0),
    Kind.SUMPOWER: SolverConfig(rho=1.0, mu_s=2e6, mu_p=5.0),
}


@dataclass(frozen=True)
class BenchConfig:
    geometry: GeometryConfig = GeometryConfig()
    large_scale: LargeScaleParams = LargeScaleParams()
    variant: Kind = Kind.MMF
    p_max: float = 1.0
    gamma_c: float = 255.0
    solver: SolverConfig = DEFAULT_SOLVERS[Kind.MMF]
    sea: SeaConfig = SeaConfig()
    samples: int = 200
    base_seed: int = 0
    # wall time breaks byte-identical output; switch off for reproducibility checks
    timing: bool = True
    out_dir: str | None = None

    def validate(self) -> None:
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if self.p_max <= 0 or self.gamma_c <= 0:
            raise ConfigError("p_max and gamma_c must be positive")
        self.geometry.validate()
        self.solver.validate()
        self.sea.validate()

    def digest(self) -> str:
        d = dataclasses.asdict(self)
        d.pop("out_dir")
        blob = json.dumps(d, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kw = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
    try:
        return cls(**kw)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def config_from_dict(data: dict, variant: Kind | str | None = None) -> BenchConfig:
    """Build a BenchConfig from the JSON schema documented in the README.

    ``solver`` may be either one SolverConfig object or a mapping from
    variant name to SolverConfig objects.
    """
    data = dict(data)
    data.pop("meta", None)  # free-form, informational only
    allowed = {f.name for f in dataclasses.fields(BenchConfig)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    try:
        kind = Kind(variant if variant is not None else data.get("variant", Kind.MMF.value))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    solver = data.get("solver")
    if solver is None:
        solver_cfg = DEFAULT_SOLVERS[kind]
    elif isinstance(solver, dict) and set(solver) <= {k.value for k in Kind}:
        solver_cfg = (_build(SolverConfig, solver[kind.value], f"solver.{kind.value}")
                      if kind.value in solver else DEFAULT_SOLVERS[kind])
    else:
        solver_cfg = _build(SolverConfig, solver, "solver")
    cfg = BenchConfig(
        geometry=_build(GeometryConfig, data.get("geometry", {}), "geometry"),
        large_scale=_build(LargeScaleParams, data.get("large_scale", {}), "large_scale"),
        variant=kind,
        p_max=float(data.get("p_max", 1.0)),
        gamma_c=float(data.get("gamma_c", 255.0)),
        solver=solver_cfg,
        sea=_build(SeaConfig, data.get("sea", {}), "sea"),
        samples=int(data.get("samples", 200)),
        base_seed=int(data.get("base_seed", 0)),
        timing=bool(data.get("timing", True)),
        out_dir=data.get("out_dir"),
    )
    cfg.validate()
    return cfg


def load_config(path: str | Path, variant: Kind | str | None = None) -> BenchConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(data, variant)


@dataclass
class SampleRecord:
    sample_id: int
    seed: int
    variant: str
    K: int
    L: int
    N: int
    objective: float
    sdr_bound: float
    gap_rel: float
    sea_rounds: int
    outer_iters_total: int
    min_se: float
    total_power_w: float
    max_per_ap_power_w: float
    certificate: str
    wall_time_s: float
    per_ap_power: tuple = field(default=(), compare=False)
    duality_gap: float = field(default=float("nan"), compare=False)
    relaxed_iters: int = field(default=0, compare=False)
    relaxed_converged: bool = field(default=False, compare=False)
    rank_one: bool = field(default=False, compare=False)
    error: str = field(default="", compare=False)

    def row(self) -> dict:
        return {c: getattr(self, c) for c in CSV_COLUMNS}

    @classmethod
    def from_row(cls, row: dict) -> "SampleRecord":
        ints = {"sample_id", "seed", "K", "L", "N", "sea_rounds", "outer_iters_total"}
        strs = {"variant", "certificate"}
        kw = {c: (int(row[c]) if c in ints else row[c] if c in strs else float(row[c]))
              for c in CSV_COLUMNS}
        return cls(**kw)


def compute_se(w: np.ndarray, net: NetworkRealization) -> tuple[np.ndarray, float]:
    """Per-UE spectral efficiency log2(1 + SNR) in bit/s/Hz, and its minimum."""
    h = net.stacked_channels()
    snr = np.abs(h.conj() @ np.asarray(w)) ** 2 / net.noise_variances
    se = np.log2(1.0 + snr)
    return se, float(se.min())


def build_problem(cfg: BenchConfig, net: NetworkRealization):
    if cfg.variant is Kind.MMF:
        return build_mmf(net, cfg.p_max)
    prob = build_qos(net, cfg.p_max, cfg.gamma_c)
    return sum_power_variant(prob) if cfg.variant is Kind.SUMPOWER else prob


def run_sample(cfg: BenchConfig, sample_id: int) -> SampleRecord:
    seed = cfg.base_seed + sample_id
    g = cfg.geometry
    base = dict(sample_id=sample_id, seed=seed, variant=cfg.variant.value, K=g.num_ues,
                L=g.num_aps, N=g.antennas_per_ap)
    t0 = time.perf_counter()
    try:
        net = generate_network(g, cfg.large_scale, seed)
        prob = build_problem(cfg, net)
        rep = run_sea(prob, cfg.solver, cfg.sea)
        cert = certify(prob, rep.relaxed_state, cfg.solver.rho)
    except (np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
        log.warning("sample %d failed: %s", sample_id, exc)
        nan = float("nan")
        return SampleRecord(**base, objective=nan, sdr_bound=nan, gap_rel=nan, sea_rounds=0,
                            outer_iters_total=0, min_se=nan, total_power_w=nan,
                            max_per_ap_power_w=nan, certificate=Verdict.FAILED.value,
                            wall_time_s=0.0, error=str(exc))
    wall = time.perf_counter() - t0 if cfg.timing else 0.0
    _, min_se = compute_se(rep.w, net)
    return SampleRecord(
        **base, objective=rep.objective, sdr_bound=rep.sdr_bound, gap_rel=rep.gap_rel,
        sea_rounds=rep.sea_rounds, outer_iters_total=rep.outer_iters, min_se=min_se,
        total_power_w=rep.total_power, max_per_ap_power_w=float(np.max(rep.per_ap_power)),
        certificate=cert.verdict.value, wall_time_s=wall,
        per_ap_power=tuple(float(p) for p in rep.per_ap_power), duality_gap=cert.gap_rel,
        relaxed_iters=rep.relaxed_convergence.outer_iters,
        relaxed_converged=rep.relaxed_convergence.converged, rank_one=rep.rank_one)


def worker_count() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"{WORKERS_ENV} must be an integer") from exc
        if n < 1:
            raise ConfigError(f"{WORKERS_ENV} must be >= 1")
        return n
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def _quantiles(values) -> dict:
    arr = np.asarray([v for v in values if not math.isnan(v)], float)
    keys = ("p5", "p25", "p50", "p75", "p95")
    if arr.size == 0:
        return {k: None for k in keys}
    qs = np.quantile(arr, [0.05, 0.25, 0.5, 0.75, 0.95])
    return {k: float(q) for k, q in zip(keys, qs)}


def summarize(records: list[SampleRecord], cfg: BenchConfig) -> dict:
    n = len(records)
    cert = sum(r.certificate == Verdict.CERTIFIED.value for r in records)
    failed = sum(r.certificate == Verdict.FAILED.value for r in records)
    return {
        "config_digest": cfg.digest(),
        "n_samples": n,
        "certified_rate": cert / n if n else 0.0,
        "failed_rate": failed / n if n else 0.0,
        "quantiles": {m: _quantiles(float(getattr(r, m)) for r in records) for m in QUANTILE_METRICS},
    }


def run_batch(cfg: BenchConfig, workers: int | None = None,
              sample_ids: range | None = None) -> tuple[list[SampleRecord], dict]:
    """Solve every sample; records come back sorted by sample_id."""
    cfg.validate()
    ids = range(cfg.samples) if sample_ids is None else sample_ids
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(ids) == 1:
        records = [run_sample(cfg, i) for i in ids]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run_sample, [cfg] * len(ids), ids, chunksize=1))
    records.sort(key=lambda r: r.sample_id)
    return records, summarize(records, cfg)


def write_csv(records: list[SampleRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        wr.writeheader()
        for r in records:
            wr.writerow(r.row())


def read_csv(path: str | Path) -> list[SampleRecord]:
    with open(path, newline="") as fh:
        return [SampleRecord.from_row(row) for row in csv.DictReader(fh)]


def write_trace(rows, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(TRACE_COLUMNS)
        wr.writerows(rows)


def emit_results(records: list[SampleRecord], summary: dict, out_dir: str | Path,
                 stem: str = "results", trace_rows=None) -> dict:
    """Write ``<stem>.csv``, ``<stem>_summary.json`` and optionally ``<stem>_trace.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out / f"{stem}.csv", "summary": out / f"{stem}_summary.json"}
    write_csv(records, paths["csv"])
    paths["summary"].write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if trace_rows is not None:
        paths["trace"] = out / f"{stem}_trace.csv"
        write_trace(trace_rows, paths["trace"])
    return paths


def trace_sample(cfg: BenchConfig, sample_id: int = 0) -> list[tuple]:
    """Per-iteration (iteration, transmit power, residuals) of the first relaxed solve."""
    net = generate_network(cfg.geometry, cfg.large_scale, cfg.base_seed + sample_id)
    prob = build_problem(cfg, net)
    rows: list[tuple] = []
    from .solver import solve_dual
    solve_dual(prob, cfg.solver, trace=lambda *r: rows.append(r))
    return rows
