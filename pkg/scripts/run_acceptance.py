"""Run the acceptance battery and print one line per check."""

import argparse
import sys

from ctxcomm.acceptance import CRITERIA, AcceptanceConfig, run_acceptance


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--fast", action="store_true", help="tenfold fewer trials")
    parser.add_argument("--seed", type=int, default=AcceptanceConfig.seed)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--only", type=int, nargs="*", choices=sorted(CRITERIA))
    args = parser.parse_args()
    cfg = AcceptanceConfig(fast=args.fast, seed=args.seed, workers=args.workers)
    results = run_acceptance(cfg, only=args.only)
    for res in results:
        print(res.line(), flush=True)
    failed = sorted({r.criterion for r in results if not r.passed})
    print(f"{len(results) - sum(not r.passed for r in results)}/{len(results)} checks passed"
          + (f"; failing criteria {failed}" if failed else ""))
    return 3 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
