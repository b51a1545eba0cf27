"""Letter-bigram chain: ingest counts, score the shipped reference
partitions (vowels vs. consonant families), and report the selected k.

Use --counts to point at a full English bigram-count file; the shipped
sample in data/ is a small stand-in with the same format.
"""
import argparse
import pathlib

from mcagg import ingest_bigrams, parse_partitions, select_k

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--counts", default=str(ROOT / "data" / "bigrams_sample.txt"))
    ap.add_argument("--partitions",
                    default=str(ROOT / "data" / "table1_partitions.json"))
    ap.add_argument("--eta", type=float, default=1.0)
    args = ap.parse_args()

    matrix = ingest_bigrams(args.counts, smoothing=args.eta)
    partitions = parse_partitions(args.partitions, labels=matrix.labels)
    report = select_k(matrix.rows, partitions)
    print(f"k_t = {report.k_t}")
    print("k,t_bar,nu")
    for k in sorted(report.t_bars):
        nu = report.nus.get(k)
        tail = "" if nu is None else f"{nu:.6f}"
        print(f"{k},{report.t_bars[k]:.6f},{tail}")


if __name__ == "__main__":
    main()
