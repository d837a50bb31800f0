"""Noise stability of majority on k bits against exact enumeration and the
large-k limit 1 - (2/pi) arccos(rho).
"""

import argparse
import csv
import sys

from ctxcomm.core import majority_stability_bound
from ctxcomm.verifiers import noise_stability_exact, noise_stability_mc


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--ks", type=int, nargs="+", default=[1, 3, 5, 9, 15, 31, 101])
    parser.add_argument("--rho", type=float, default=0.5)
    parser.add_argument("--trials", type=int, default=10**6)
    parser.add_argument("--seed", type=int, default=3)
    args = parser.parse_args()
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["k", "rho", "estimate", "stderr", "exact", "limit"])
    for k in args.ks:
        rep = noise_stability_mc(k, args.rho, args.trials, args.seed + k)
        exact = f"{noise_stability_exact(k, args.rho):.6f}" if k <= 10 else ""
        writer.writerow([k, args.rho, f"{rep.estimate:.6f}", f"{rep.stderr:.6f}", exact,
                         f"{majority_stability_bound(args.rho):.6f}"])


if __name__ == "__main__":
    main()
