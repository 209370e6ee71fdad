import csv
import filecmp
import subprocess
import sys

import pytest

from mfprog.cli import main
from mfprog.config import ConfigError, PipelineConfig, dump_config, load_config, parse_pairs


def write_cfg(d, out="out", extra=""):
    p = d / "run.cfg"
    p.write_text(f"# synthetic fleet\ntrain_path = train_SYN.txt\ntest_path = test_SYN.txt\n"
                 f"rul_path = RUL_SYN.txt\noutput_dir = {out}\n{extra}")
    return p


def test_defaults():
    cfg = PipelineConfig()
    assert cfg.k == 6 and cfg.alarm_fraction == 0.8 and cfg.aggregate == "mean"
    assert cfg.basis().n_basis == 23 and len(cfg.lambda_grid()) == 25
    assert cfg.eval_units == (20, 31, 34, 35, 42, 68, 76, 81, 82)
    assert cfg.sensor_ids() is None and cfg.q() is None


def test_overrides_last_wins(tmp_path):
    p = write_cfg(tmp_path, extra="k = 4\n")
    cfg = load_config(p, ["k=5", "k=7", "sensors=T24,W32", "mfpca_q=0.99", "eval_fractions=0.5;0.9"])
    assert cfg.k == 7 and cfg.sensor_ids() == (2, 21) and cfg.q() == 0.99
    assert cfg.eval_fractions == (0.5, 0.9)
    assert cfg.train_path == str(tmp_path / "train_SYN.txt")
    assert load_config(None, ["mfpca_q=3", "use_groups=no"]).q() == 3


def test_config_errors_name_the_key(tmp_path):
    with pytest.raises(ConfigError, match="'k'"):
        load_config(None, ["k=abc"])
    with pytest.raises(ConfigError, match="'aggregate'"):
        load_config(None, ["aggregate=mode"])
    with pytest.raises(ConfigError, match="unknown config key 'kk'"):
        load_config(None, ["kk=1"])
    with pytest.raises(ConfigError, match="'sensors'"):
        load_config(None, ["sensors=T99"])
    with pytest.raises(ConfigError, match="key=value"):
        parse_pairs(["justtext"])
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.cfg")


def test_dump_round_trip():
    cfg = load_config(None, ["k=3", "eval_units=1,2", "use_groups=false"])
    again = load_config(None, [ln for ln in dump_config(cfg).splitlines()])
    assert again == cfg


def test_all_subcommand(fleet_files, tmp_path):
    d = fleet_files[0]
    cfg = write_cfg(d, out=str(tmp_path / "a"))
    assert main(["all", "--config", str(cfg), "-q"]) == 0
    out = tmp_path / "a"
    with open(out / "predictions.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 100
    assert list(rows[0]) == ["unit_id", "group", "k", "pred_fail_mean", "pred_fail_median", "rul_mean",
                             "rul_median", "true_rul", "alarm_cycle", "alarm_flag"]
    assert len(list((out / "trajectories").iterdir())) == 100
    summary = dict(ln.split("=", 1) for ln in (out / "summary.txt").read_text().splitlines())
    assert summary["screen.n_informative"] == "9"
    assert summary["alarm.nested"] == "true"
    for name in ("table4.csv", "table5.csv", "curve_rmse.csv", "model.txt", "groups.csv", "screen.csv"):
        assert (out / name).exists()

    # same inputs, same bytes
    cfg_b = write_cfg(d, out=str(tmp_path / "b"))
    assert main(["all", "--config", str(cfg_b), "-q"]) == 0
    cmp = filecmp.dircmp(out, tmp_path / "b")
    # config_used.txt records the output directory, which differs on purpose
    assert cmp.diff_files == ["config_used.txt"] and not cmp.left_only
    for sub in ("plots", "trajectories"):
        _, mismatch, errors = filecmp.cmpfiles(out / sub, tmp_path / "b" / sub,
                                               [p.name for p in (out / sub).iterdir()], shallow=False)
        assert not mismatch and not errors


def test_screen_only(fleet_files, tmp_path):
    cfg = write_cfg(fleet_files[0], out=str(tmp_path / "s"))
    assert main(["screen", "--config", str(cfg), "-q"]) == 0
    with open(tmp_path / "s" / "screen.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["name"] for r in rows if r["status"] == "informative"] == \
        ["T24", "T30", "T50", "P30", "Ps30", "phi", "BPR", "W31", "W32"]


def test_errors_exit_nonzero(fleet_files, tmp_path, capsys):
    cfg = write_cfg(fleet_files[0], out=str(tmp_path / "e"))
    assert main(["fit", "--config", str(cfg), "--set", "train_path=/nonexistent.txt", "-q"]) == 1
    assert "missing file" in capsys.readouterr().err
    assert main(["fit", "--config", str(cfg), "--set", "k=0"]) == 2
    assert "'k'" in capsys.readouterr().err
    bad = tmp_path / "bad.txt"
    bad.write_text("1 1 0 0\n")
    assert main(["fit", "--config", str(cfg), "--set", f"train_path={bad}", "-q"]) == 1
    assert "ingest error" in capsys.readouterr().err


def test_unknown_subcommand():
    r = subprocess.run([sys.executable, "-m", "mfprog.cli", "bogus"], capture_output=True, text=True)
    assert r.returncode != 0 and "usage" in r.stderr
