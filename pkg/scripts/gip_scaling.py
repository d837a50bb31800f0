"""Bits sent by the inner-product estimator and its failure rate across rho."""

import argparse
import csv
import sys

from ctxcomm.acceptance import gip_failure_rate


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rhos", type=float, nargs="+", default=[1.0, 0.75, 0.5, 0.35, 0.25])
    parser.add_argument("--runs", type=int, default=50)
    parser.add_argument("--d", type=int, default=512)
    parser.add_argument("--theta", type=float, default=0.1)
    parser.add_argument("--seed", type=int, default=2)
    args = parser.parse_args()
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["rho", "bits", "bits_times_rho_squared", "failure_rate"])
    for i, rho in enumerate(args.rhos):
        fails, bits = gip_failure_rate(rho, args.runs, args.seed + i, args.d, args.theta)
        writer.writerow([rho, bits[0], f"{bits[0] * rho * rho:.1f}", f"{fails / args.runs:.4f}"])


if __name__ == "__main__":
    main()
