"""Compare the frame-potential Thouless time of GUE with the form-factor dip for several d."""
import argparse

import numpy as np

from quenchdesign.ensembles import GUE, EnsembleSpec
from quenchdesign.rmt import sff_dip_time
from quenchdesign.thouless import SweepConfig, detect_thouless, gap_sweep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dims", type=int, nargs="+", default=[20, 40, 70])
    ap.add_argument("--members", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    ts = tuple(float(x) for x in np.geomspace(0.1, 100, 25))
    print("d,t_th,sff_dip,ratio")
    for d in args.dims:
        cfg = SweepConfig(EnsembleSpec(GUE, d=d), 1, ts, members=args.members,
                          master_seed=args.seed, min_late_duration=1000.0)
        th = detect_thouless(gap_sweep(cfg, workers=args.workers))
        dip = sff_dip_time(d)
        ratio = th.t_th / dip if th.reached else float("nan")
        print(f"{d},{th.t_th},{dip!r},{ratio!r}")


if __name__ == "__main__":
    main()
