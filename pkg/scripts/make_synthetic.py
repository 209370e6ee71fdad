"""Write a synthetic run-to-failure fleet in the C-MAPSS layout.

    python scripts/make_synthetic.py out/syn --seed 3 --tag FD001
"""
import argparse

from mfprog.synthetic import FleetSpec, write_fleet


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("directory")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tag", default="SYN", help="file suffix, e.g. FD001 to mimic the public names")
    ap.add_argument("--n-train", type=int, default=100)
    ap.add_argument("--n-test", type=int, default=100)
    args = ap.parse_args()
    spec = FleetSpec(n_train=args.n_train, n_test=args.n_test)
    for p in write_fleet(args.directory, args.tag, spec, args.seed):
        print(p)


if __name__ == "__main__":
    main()
