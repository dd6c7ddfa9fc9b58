"""Effect of the SEA penalty weight on rounds and objective.

    python3 scripts/zeta_sweep.py --samples 20 -K 10
"""
import argparse
import dataclasses

import numpy as np

from seaadmm import cli
from seaadmm.bench import config_from_dict, run_batch


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=20)
    ap.add_argument("-K", type=int, default=10)
    ap.add_argument("--variant", default="mmf", choices=["mmf", "qos"])
    ap.add_argument("--zeta", nargs="+", default=["0.1", "1", "10", "auto"])
    args = ap.parse_args()

    base = config_from_dict(cli.resolve_config("paper.json"), args.variant)
    base = dataclasses.replace(base, samples=args.samples, timing=False,
                               geometry=dataclasses.replace(base.geometry, num_ues=args.K))
    for z in args.zeta:
        zeta = z if z == "auto" else float(z)
        cfg = dataclasses.replace(base, sea=dataclasses.replace(base.sea, zeta=zeta))
        recs, _ = run_batch(cfg)
        print(f"zeta {z:>5}: median rounds {np.median([r.sea_rounds for r in recs]):4.1f}  "
              f"median gap {np.median([r.gap_rel for r in recs]):.3%}  "
              f"median objective {np.median([r.objective for r in recs]):.4g}")


if __name__ == "__main__":
    main()
