"""Recovery rates on replicated-row chains (k_t prototype rows repeated
with near-equal multiplicities, then perturbed)."""
import argparse
import collections
import time

from mcagg import gen_replicated_rows, run_pipeline
from mcagg.generators import default_counts


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--eps", type=float, default=0.1)
    ap.add_argument("--seeds", type=int, default=30)
    ap.add_argument("--kts", default="3,4")
    args = ap.parse_args()

    for kt in (int(v) for v in args.kts.split(",")):
        counts = default_counts(args.n, kt)
        t0 = time.time()
        kts = []
        for seed in range(args.seeds):
            pi, _ = gen_replicated_rows(n=args.n, k_t=kt, counts=counts,
                                        eps=args.eps, seed=seed)
            kts.append(run_pipeline(pi.rows, k_max=6).k_t)
        hist = collections.Counter(kts)
        print(f"n={args.n} k_t={kt} counts={counts} eps={args.eps}: "
              f"{hist.get(kt, 0)}/{args.seeds} correct, "
              f"histogram={dict(sorted(hist.items()))} "
              f"[{time.time() - t0:.1f}s]")


if __name__ == "__main__":
    main()
