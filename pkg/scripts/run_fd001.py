"""Run the full study on FD001 and print the summary.

The data directory comes from MFPROG_CMAPSS_DIR (default data/CMAPSSData).
Extra arguments are passed through as --set overrides, e.g.

    python scripts/run_fd001.py k=8 mfpca_scaling=pointwise
"""
import sys
from pathlib import Path

from mfprog import acceptance
from mfprog.cli import main


def run(overrides):
    missing = acceptance.missing_fd001()
    if missing:
        sys.exit("FD001 files missing: " + ", ".join(map(str, missing)))
    paths = acceptance.fd001_paths()
    out = Path("out/fd001")
    args = ["all", "--set", f"train_path={paths['train']}", "--set", f"test_path={paths['test']}",
            "--set", f"rul_path={paths['rul']}", "--set", f"output_dir={out}"]
    for o in overrides:
        args += ["--set", o]
    rc = main(args)
    if rc == 0:
        print((out / "summary.txt").read_text(), end="")
    return rc


if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
