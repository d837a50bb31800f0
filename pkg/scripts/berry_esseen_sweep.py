"""Orthant deviation of the (T-sum, S-sum) pair from its Gaussian law, with a
power-law fit in ell.
"""

import argparse
import csv
import sys

from ctxcomm.verifiers import berry_esseen_check, fit_power_law


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--delta-prime", type=float, default=0.04)
    parser.add_argument("--ells", type=int, nargs="+", default=[64, 256, 1024, 4096])
    parser.add_argument("--trials", type=int, default=10**6)
    parser.add_argument("--seed", type=int, default=4)
    args = parser.parse_args()
    reps = [berry_esseen_check(args.delta_prime, ell, args.trials, args.seed) for ell in args.ells]
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["ell", "delta_prime", "max_deviation", "error_scale"])
    for r in reps:
        writer.writerow([r.ell, f"{r.delta_prime:.6f}", f"{r.max_deviation:.6f}",
                         f"{r.error_scale:.6f}"])
    c, exponent = fit_power_law(args.ells, [r.max_deviation for r in reps])
    print(f"# fit: deviation ~ {c:.4f} * ell^{exponent:.3f}", file=sys.stderr)


if __name__ == "__main__":
    main()
