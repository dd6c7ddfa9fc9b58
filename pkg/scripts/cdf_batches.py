"""Monte Carlo batches behind the min-SE and transmit-power CDFs.

Runs MMF and QoS for K in {10, 30} on the bundled default configuration and
writes one CSV + summary per batch, then prints the median table.

    python3 scripts/cdf_batches.py --samples 200 --out results/cdf
"""
import argparse
import dataclasses
from pathlib import Path

from seaadmm import cli
from seaadmm.bench import config_from_dict, emit_results, run_batch


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/cdf")
    ap.add_argument("--workers", type=int)
    ap.add_argument("-K", type=int, nargs="+", default=[10, 30])
    args = ap.parse_args()

    raw = cli.resolve_config("paper.json")
    table = []
    for variant in ("mmf", "qos"):
        for K in args.K:
            cfg = config_from_dict(raw, variant)
            cfg = dataclasses.replace(cfg, geometry=dataclasses.replace(cfg.geometry, num_ues=K),
                                      samples=args.samples, base_seed=args.seed)
            records, summary = run_batch(cfg, workers=args.workers)
            emit_results(records, summary, Path(args.out), stem=f"{variant}_K{K}")
            q = summary["quantiles"]
            table.append((variant, K, q["min_se"]["p50"], q["total_power_w"]["p50"],
                          q["sea_rounds"]["p50"], summary["certified_rate"]))
    print(f"{'variant':8} {'K':>3} {'minSE p50':>10} {'power p50':>10} {'rounds':>7} {'cert':>6}")
    for v, K, se, pw, rd, cr in table:
        print(f"{v:8} {K:3d} {se:10.3f} {pw:10.3f} {rd:7.1f} {cr:6.1%}")


if __name__ == "__main__":
    main()
