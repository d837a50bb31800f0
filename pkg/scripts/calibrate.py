"""Regenerate the sign-agreement calibration table of the block-sum estimator."""

import argparse
from pathlib import Path

from ctxcomm.verifiers import sheppard_calibration


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rhos", type=float, nargs="+", default=[0.25, 0.5, 1.0])
    parser.add_argument("--d", type=int, default=64)
    parser.add_argument("--repetitions", type=int, default=2**15)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="sheppard_calibration.txt")
    args = parser.parse_args()
    table = sheppard_calibration(args.rhos, args.d, args.repetitions, args.seed)
    Path(args.out).write_text(table.to_text())
    print(table.to_text(), end="")


if __name__ == "__main__":
    main()
