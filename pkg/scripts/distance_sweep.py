"""Distance between subset majorities on T and on S = T minus r elements,
against the Gaussian prediction arccos(sqrt(1 - r/ell))/pi.
"""

import argparse
import csv
import math
import sys

from ctxcomm.functions import distance_monte_carlo, subset_majority_pair
from ctxcomm.samplers import UniformPairs


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--ell", type=int, default=1000)
    parser.add_argument("--removed", type=int, nargs="+", default=[5, 10, 20, 40, 80, 160])
    parser.add_argument("--trials", type=int, default=2 * 10**5)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["ell", "removed", "estimate", "stderr", "predicted"])
    for i, r in enumerate(args.removed):
        f, g = subset_majority_pair(args.ell, r)
        rep = distance_monte_carlo(f, g, UniformPairs(args.ell), args.trials, args.seed + i,
                                   args.workers)
        predicted = math.acos(math.sqrt(1 - r / args.ell)) / math.pi
        writer.writerow([args.ell, r, f"{rep.estimate:.6f}", f"{rep.stderr:.6f}",
                         f"{predicted:.6f}"])


if __name__ == "__main__":
    main()
