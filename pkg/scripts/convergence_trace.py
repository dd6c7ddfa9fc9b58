"""Transmit power per outer iteration of one relaxed QoS solve.

Writes the trace CSV and prints power at a few checkpoints, which is enough
to see the early expansion and the later plateau without plotting.

    python3 scripts/convergence_trace.py -K 30 --sample 0 --out trace.csv
"""
import argparse
import dataclasses

from seaadmm import cli
from seaadmm.bench import config_from_dict, trace_sample, write_trace


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-K", type=int, default=30)
    ap.add_argument("--sample", type=int, default=0)
    ap.add_argument("--variant", default="qos", choices=["mmf", "qos", "sumpower"])
    ap.add_argument("--out", default="trace.csv")
    args = ap.parse_args()

    cfg = config_from_dict(cli.resolve_config("paper.json"), args.variant)
    cfg = dataclasses.replace(cfg, geometry=dataclasses.replace(cfg.geometry, num_ues=args.K))
    rows = trace_sample(cfg, args.sample)
    write_trace(rows, args.out)
    power = {int(r[0]): r[1] for r in rows}
    for it in (1, 5, 10, 20, 30, 50, 100, 200, 500, max(power)):
        if it in power:
            print(f"iter {it:5d}  power {power[it]:.4f} W")


if __name__ == "__main__":
    main()
