"""Command line entry point: ``seaadmm {mmf,qos,sumpower,trace,verify}``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .bench import (FAIL_BUDGET, BenchConfig, config_from_dict, emit_results, run_batch,
                    trace_sample, write_trace)
from .netsim import ConfigError, GeometryConfig, LargeScaleParams, generate_network, realization_from_channels
from .oracle import (brute_force_rank1, certify, closed_form_single_ue, mmf_qos_consistency)
from .problem import Kind, build_mmf, build_qos
from .sea import SeaConfig, run_sea
from .solver import SolverConfig, solve_dual

log = logging.getLogger("seaadmm")


def resolve_config(name: str | None) -> dict:
    """A file path, or the name of a bundled config (``paper.json``, ``certify.json``)."""
    if name is None:
        return {}
    path = Path(name)
    if path.is_file():
        text = path.read_text()
    else:
        bundled = resources.files("seaadmm") / "configs" / path.name
        if not bundled.is_file():
            raise ConfigError(f"config not found: {name}")
        text = bundled.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{name}: invalid JSON ({exc})") from exc


def make_config(args, variant: str) -> BenchConfig:
    cfg = config_from_dict(resolve_config(args.config), variant)
    geom = cfg.geometry
    if args.K is not None:
        geom = dataclasses.replace(geom, num_ues=args.K)
    if args.L is not None:
        geom = dataclasses.replace(geom, num_aps=args.L)
    if args.N is not None:
        geom = dataclasses.replace(geom, antennas_per_ap=args.N)
    over = {"geometry": geom}
    if args.samples is not None:
        over["samples"] = args.samples
    if args.seed is not None:
        over["base_seed"] = args.seed
    if args.no_timing:
        over["timing"] = False
    cfg = dataclasses.replace(cfg, **over)
    cfg.validate()
    return cfg


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file or bundled name (paper.json, certify.json)")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int, help="base seed; sample i uses seed + i")
    p.add_argument("--out", default="results", help="output directory (trace: CSV file, '-' for stdout)")
    p.add_argument("-K", type=int, help="number of UEs")
    p.add_argument("-L", type=int, help="number of APs (a perfect square)")
    p.add_argument("-N", type=int, help="antennas per AP")
    p.add_argument("--workers", type=int, help="worker processes (default: $SEAADMM_WORKERS or all CPUs)")
    p.add_argument("--no-timing", action="store_true", help="record zero wall time (byte-stable output)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="seaadmm", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("mmf", "qos", "sumpower"):
        _common(sub.add_parser(name, help=f"Monte Carlo batch of the {name} problem"))
    tp = sub.add_parser("trace", help="per-iteration transmit power of one relaxed solve")
    _common(tp)
    tp.add_argument("--variant", choices=[k.value for k in Kind], default="qos")
    tp.add_argument("--sample", type=int, default=0)
    sub.add_parser("verify", help="run the oracle suite on small instances")
    return ap


def cmd_batch(args, variant: str) -> int:
    cfg = make_config(args, variant)
    records, summary = run_batch(cfg, workers=args.workers)
    paths = emit_results(records, summary, args.out, stem=variant)
    print(json.dumps({k: summary[k] for k in ("config_digest", "n_samples", "certified_rate",
                                              "failed_rate")}))
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    if summary["failed_rate"] > FAIL_BUDGET:
        print(f"certification failures {summary['failed_rate']:.1%} exceed {FAIL_BUDGET:.0%}",
              file=sys.stderr)
        return 1
    return 0


def cmd_trace(args) -> int:
    cfg = make_config(args, args.variant)
    rows = trace_sample(cfg, args.sample)
    if args.out == "-":
        import csv
        wr = csv.writer(sys.stdout, lineterminator="\n")
        wr.writerow(("iteration", "transmit_power_w", "dual_residual", "prim_residual"))
        wr.writerows(rows)
    else:
        out = Path(args.out)
        if out.suffix != ".csv":
            out.mkdir(parents=True, exist_ok=True)
            out = out / f"trace_{args.variant}_K{cfg.geometry.num_ues}.csv"
        write_trace(rows, out)
        print(out)
    return 0


def run_verify(seed: int = 7, echo=print) -> bool:
    """Small oracle suite; returns True when every check passes."""
    rng = np.random.default_rng(seed)
    tight = dict(eps_dual=1e-9, eps_prim=1e-9, max_outer=20000)
    ok = True

    def report(name, passed, detail):
        nonlocal ok
        ok &= bool(passed)
        echo(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")

    # analytic single-UE optimum, one antenna per AP
    h = (rng.standard_normal(2) + 1j * rng.standard_normal(2)) * 1e-5
    net = realization_from_channels(h[None, :], np.array([1e-12]))
    prob = build_mmf(net, 1.0)
    rep = run_sea(prob, SolverConfig(mu_s=5e6, **tight))
    ref = closed_form_single_ue(h, 1e-12, 1.0, Kind.MMF)
    err = abs(rep.objective - ref) / ref
    report("closed-form MMF", err <= 1e-3, f"rel err {err:.2e}")

    # brute-force sandwich on n = 2
    h = (rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))) * 1e-5
    net = realization_from_channels(h, np.full(3, 1e-12))
    prob = build_mmf(net, 1.0)
    rep = run_sea(prob, SolverConfig(mu_s=5e6, **tight))
    bf = brute_force_rank1(prob, 96)
    err = abs(rep.objective - bf) / bf
    report("brute-force rank-1", rep.sdr_bound * (1 + 1e-6) >= rep.objective and err <= 1e-2,
           f"SEA {rep.objective:.6g} brute {bf:.6g} bound {rep.sdr_bound:.6g}")

    # certificate on a full-size MMF instance
    net = generate_network(GeometryConfig(num_ues=10), LargeScaleParams(), seed)
    prob = build_mmf(net, 1.0)
    cfg = SolverConfig(mu_s=5e6, eps_dual=1e-8, eps_prim=1e-8, max_outer=5000)
    st, _ = solve_dual(prob, cfg)
    cert = certify(prob, st, cfg.rho)
    report("duality certificate", cert.certified,
           f"gap {cert.gap_rel:.1e} stationarity {cert.stationarity_residual:.1e}")

    # MMF / QoS consistency on a small instance
    net = generate_network(GeometryConfig(num_aps=4, antennas_per_ap=2, num_ues=4), LargeScaleParams(), seed)
    x = mmf_qos_consistency(net, 1.0, SolverConfig(mu_s=5e6, **tight), SolverConfig(mu_s=3e6, **tight))
    report("MMF/QoS consistency", x is not None and abs(x - 1) <= 5e-3, f"x* = {x}")
    return ok


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command in ("mmf", "qos", "sumpower"):
            return cmd_batch(args, args.command)
        if args.command == "trace":
            return cmd_trace(args)
        return 0 if run_verify() else 1
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
