"""Run the FD001 reproduction checks on synthetic fleets.

Useful to see the checks exercise the whole pipeline when the public data
is not available. The published targets are FD001-specific, so verdicts
here are informative only.
"""
import argparse

from mfprog import acceptance
from mfprog.synthetic import make_fleet


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    args = ap.parse_args()
    for seed in args.seeds:
        print(f"# synthetic fleet, seed {seed}")
        for check in acceptance.run_all(*make_fleet(seed=seed)):
            print(check.line())


if __name__ == "__main__":
    main()
