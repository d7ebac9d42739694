"""Optimal classical strategies per number of V insertions, for n = 1, 2, 3."""
import argparse

from qrewind.classical import optimize_baseline, write_baseline_csv
from qrewind.gateset import input_states, select_pairs


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="baseline.csv")
    ap.add_argument("--starts", type=int, default=24)
    args = ap.parse_args()

    pairs, states = select_pairs(0.9), input_states()
    results = []
    for n in (1, 2, 3):
        res = optimize_baseline(pairs, states, n, n_starts=args.starts)
        results.append(res)
        for k, (s, f) in sorted(res.per_k.items()):
            print(f"n={n} k={k}: F={f:.6f}  t={[round(t, 5) for t in s.times]}")
    write_baseline_csv(results, args.out)


if __name__ == "__main__":
    main()
