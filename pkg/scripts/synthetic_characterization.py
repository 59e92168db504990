"""Characterize synthetic Pareto traces and compare the fitted shape to the truth.

    python3 scripts/synthetic_characterization.py --shapes 1.85 2.5 --seeds 11 12 13
"""

import argparse
import time

from elephants.characterize import characterize_trace
from elephants.synth import SynthConfig, generate_trace


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--shapes", type=float, nargs="+", default=[1.85, 2.5])
    p.add_argument("--seeds", type=int, nargs="+", default=[11])
    p.add_argument("--flows-per-window", type=int, default=5000)
    p.add_argument("--windows", type=int, default=200)
    p.add_argument("--bmin", type=int, default=10)
    args = p.parse_args()

    print("a_true\tseed\ta_hat\tb_min\tb_max\tdelta\tresidual\tseconds")
    for a in args.shapes:
        for seed in args.seeds:
            t0 = time.perf_counter()
            cfg = SynthConfig(
                n_elephants=args.flows_per_window, shape_a=a, b_min=args.bmin, n_windows=args.windows, seed=seed
            )
            trace, _ = generate_trace(cfg)
            res = characterize_trace(trace)
            f = res.fit
            print(
                f"{a}\t{seed}\t{f.shape_a:.4f}\t{f.b_min}\t{f.b_max}\t{res.delta.delta:g}\t"
                f"{f.l2_residual:.2e}\t{time.perf_counter() - t0:.1f}"
            )


if __name__ == "__main__":
    main()
