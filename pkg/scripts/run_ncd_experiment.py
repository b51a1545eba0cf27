"""Recovery rates on nearly-completely-decomposable chains.

Sweeps seeds for a small 3-block family and one large 5-block instance,
reporting how often the pipeline picks the true number of superstates.
"""
import argparse
import collections
import time

import numpy as np

from mcagg import gen_ncd, run_pipeline


def sweep(blocks, eps, seeds, k_max):
    t0 = time.time()
    kts = []
    for seed in range(seeds):
        pi, _ = gen_ncd(blocks=blocks, eps=eps, seed=seed)
        kts.append(run_pipeline(pi.rows, k_max=k_max).k_t)
    hist = collections.Counter(kts)
    truth = len(blocks)
    hits = hist.get(truth, 0)
    print(f"blocks={blocks} eps={eps}: {hits}/{seeds} at k_t={truth}, "
          f"histogram={dict(sorted(hist.items()))} "
          f"[{time.time() - t0:.1f}s]")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=30)
    ap.add_argument("--eps", type=float, default=0.05)
    ap.add_argument("--large", action="store_true",
                    help="also run the N=100 five-block instance")
    args = ap.parse_args()

    sweep([3, 3, 3], args.eps, args.seeds, k_max=6)
    if args.large:
        sweep([10, 30, 20, 20, 20], 0.02, 5, k_max=8)


if __name__ == "__main__":
    main()
