"""Command line entry point: ``mfprog <subcommand> --config FILE [--set key=value ...]``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import mfpca, plotdata
from .config import ConfigError, PipelineConfig, dump_config, load_config
from .evaluation import (ALARM_WINDOWS, alarm_eval, curve_rmse_at_fractions, rul_eval, write_alarm_table,
                         write_rul_table)
from .ingest import IngestError, N_SENSORS, parse_rul_file, parse_unit_file, screen_sensors, select_sensors, sensor_name
from .pipeline import FittedPipeline, PipelineError, fit_pipeline, predict_fleet, tail_predictor

log = logging.getLogger("mfprog")
SUBCOMMANDS = ("screen", "fit", "predict", "evaluate", "alarm", "curves", "all")
fmt = plotdata.fmt


def _csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


class Run:
    """Lazily computed stages shared by the subcommands of one invocation."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.out = Path(cfg.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.summary: dict[str, str] = {}
        self._train = self._test = self._rul = self._fp = self._preds = None

    # inputs
    @property
    def train(self):
        if self._train is None:
            self._train = parse_unit_file(self.cfg.train_path)
        return self._train

    @property
    def test(self):
        if self._test is None:
            self._test = parse_unit_file(self.cfg.test_path)
        return self._test

    @property
    def rul(self):
        if self._rul is None:
            self._rul = parse_rul_file(self.cfg.rul_path)
            if len(self._rul) != len(self.test):
                raise IngestError(f"{self.cfg.rul_path}: {len(self._rul)} RUL values for "
                                  f"{len(self.test)} test engines")
        return self._rul

    @property
    def fp(self) -> FittedPipeline:
        if self._fp is None:
            self._fp = fit_pipeline(self.train, self.cfg)
        return self._fp

    @property
    def preds(self):
        if self._preds is None:
            self._preds = predict_fleet(self.fp, self.test)
        return self._preds

    def true_failure(self):
        return [p.rul.observed_cycle + r for p, r in zip(self.preds, self.rul)]

    # stages
    def screen(self):
        t0 = time.perf_counter()
        rep = screen_sensors(self.train, self.cfg.screen())
        rows = []
        for sid in range(1, N_SENSORS + 1):
            status = ("informative" if sid in rep.informative_ids else
                      "inconsistent" if sid in rep.inconsistent_ids else "excluded")
            agree = rep.agreement.get(sid)
            rows.append([sid, sensor_name(sid), status, rep.reasons.get(sid, ""),
                         "" if agree is None else fmt(agree), rep.trend_sign.get(sid, "")])
        _csv(self.out / "screen.csv", ["sensor_id", "name", "status", "reason", "trend_agreement", "trend_sign"], rows)
        self.summary["screen.informative"] = ",".join(rep.informative_names)
        self.summary["screen.n_informative"] = str(len(rep.informative_ids))
        log.info("screen: %s (%.2fs)", ", ".join(rep.informative_names), time.perf_counter() - t0)

    def fit(self):
        fp = self.fp
        mfpca.save_model(fp.model, self.out / "model.txt")
        ev = mfpca.explained_variance(fp.model)
        _csv(self.out / "explained_variance.csv", ["component", "eigenvalue", "ratio", "cumulative"],
             [[k + 1, fmt(a), fmt(b), fmt(c)] for k, (a, b, c) in enumerate(ev)])
        sel = fp.smoothing
        _csv(self.out / "lambda_profile.csv", ["lambda", f"mean_{sel.selector}"],
             [[fmt(g), fmt(m)] for g, m in zip(sel.grid, sel.mean_score)])
        names = [sensor_name(s) for s in fp.sensor_ids]
        _csv(self.out / "train_groups.csv", ["unit_id", "endpoint", "group", "pc1_score"] + [f"init_{n}" for n in names],
             [[u, int(e), lab, fmt(s)] + [fmt(x) for x in init]
              for u, e, lab, s, init in zip(fp.sample.unit_ids, fp.sample.endpoints, fp.labels,
                                            fp.model.train_scores[:, 0], fp.initial)])
        _csv(self.out / "cutoffs.csv", ["sensor", "cutoff", "direction", "youden"],
             [[n, fmt(c.value), c.direction, fmt(c.youden)] for n, c in zip(names, fp.groups.cutoffs)])
        plotdata.emit_all(fp, self.out / "plots")
        m = fp.mixture
        self.summary.update({
            "fit.sensors": ",".join(names),
            "fit.n_interior": str(fp.basis.n_interior),
            "fit.lambda": fmt(sel.lam),
            "fit.n_components": str(fp.model.n_components),
            "fit.pc1_ratio": fmt(ev[0][1]),
            "fit.pc12_ratio": fmt(ev[1][2] if len(ev) > 1 else ev[0][2]),
            "fit.scaling": fp.model.scaling,
            "mixture.mean_low": fmt(m.m1), "mixture.mean_high": fmt(m.m2),
            "mixture.sd": fmt(m.s), "mixture.weight_low": fmt(m.w),
            "groups.n_low": str(fp.labels.count("LOW")), "groups.n_high": str(fp.labels.count("HIGH")),
        })

    def predict(self):
        preds = self.preds
        names = [sensor_name(s) for s in self.fp.sensor_ids]
        try:
            truth = self.rul
        except (FileNotFoundError, IngestError) as e:
            log.warning("no ground truth: %s", e)
            truth = [None] * len(preds)
        rows = []
        for p, t in zip(preds, truth):
            r = p.rul
            rows.append([p.unit_id, p.label, r.k, r.predicted_failure_mean, r.predicted_failure_median,
                         r.rul_mean, r.rul_median, "" if t is None else t, r.alarm_cycle,
                         "passed" if r.alarm_passed else "pending"])
        _csv(self.out / "predictions.csv",
             ["unit_id", "group", "k", "pred_fail_mean", "pred_fail_median", "rul_mean", "rul_median",
              "true_rul", "alarm_cycle", "alarm_flag"], rows)
        _csv(self.out / "groups.csv", ["unit_id", "group", "pc1_score", "fallback"] + [f"vote_{n}" for n in names],
             [[p.unit_id, p.label, fmt(p.pc1_score),
               int(p.ranking.group_filter_dropped)] + list(p.votes) for p in preds])
        tdir = self.out / "trajectories"
        tdir.mkdir(exist_ok=True)
        for p in preds:
            r = p.rul
            _csv(tdir / f"unit_{p.unit_id:03d}.csv", ["cycle"] + names,
                 [[int(c)] + [fmt(x) for x in row] for c, row in zip(r.trajectory_cycles, r.trajectories)])
        self.summary["predict.n_test"] = str(len(preds))
        self.summary["predict.n_fallback"] = str(sum(p.ranking.group_filter_dropped for p in preds))

    def evaluate(self):
        mean = rul_eval([p.rul.rul_mean for p in self.preds], self.rul)
        med = rul_eval([p.rul.rul_median for p in self.preds], self.rul)
        write_rul_table(self.out / "table4.csv", mean, med)
        for tag, r in (("mean", mean), ("median", med)):
            self.summary.update({
                f"rul.{tag}.rmse": fmt(r.rmse),
                f"rul.{tag}.error_min": str(r.error_range[0]),
                f"rul.{tag}.error_max": str(r.error_range[1]),
                f"rul.{tag}.correct": str(r.correct_count),
                f"rul.{tag}.within_one": str(r.within_one_count),
            })
        log.info("RUL RMSE mean %.2f median %.2f", mean.rmse, med.rmse)

    def alarm(self):
        rep = alarm_eval([p.rul.alarm_cycle for p in self.preds], self.true_failure())
        write_alarm_table(self.out / "table5.csv", rep)
        self.summary["alarm.later"] = str(rep.later)
        self.summary["alarm.earlier"] = str(rep.earlier)
        for w in ALARM_WINDOWS:
            self.summary[f"alarm.last_{int(round(w * 100))}"] = str(rep.windows[w])
        self.summary["alarm.nested"] = "true" if rep.nested else "false"

    def curves(self):
        fp = self.fp
        series = {s.unit_id: select_sensors(s, fp.sensor_ids) for s in self.test}
        units = [u for u in self.cfg.eval_units if u in series]
        missing = sorted(set(self.cfg.eval_units) - set(units))
        if missing:
            log.warning("curve study: units %s not in the test set", missing)
        rows = curve_rmse_at_fractions(series, units, self.cfg.eval_fractions, tail_predictor(fp))
        names = [sensor_name(s) for s in fp.sensor_ids]
        _csv(self.out / "curve_rmse.csv",
             ["unit_id", "fraction", "cut_cycle", "n_tail", "n_covered", "mean_rmse"] + names + ["note"],
             [[r.unit_id, fmt(r.fraction), r.cut_cycle, r.n_tail, r.n_covered, fmt(r.mean_rmse)]
              + [fmt(x) for x in r.per_sensor] + [r.note] for r in rows])
        ok = [r.mean_rmse for r in rows if np.isfinite(r.mean_rmse)]
        self.summary["curves.n_rows"] = str(len(rows))
        self.summary["curves.mean_rmse"] = fmt(np.mean(ok)) if ok else "nan"

    def write_summary(self):
        with open(self.out / "summary.txt", "w", encoding="utf-8") as fh:
            for k in sorted(self.summary):
                fh.write(f"{k}={self.summary[k]}\n")
        (self.out / "config_used.txt").write_text(dump_config(self.cfg), encoding="utf-8")


PLAN = {
    "screen": ("screen",),
    "fit": ("fit",),
    "predict": ("predict",),
    "evaluate": ("predict", "evaluate"),
    "alarm": ("predict", "alarm"),
    "curves": ("curves",),
    "all": ("screen", "fit", "predict", "evaluate", "alarm", "curves"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mfprog", description="Multivariate functional prognostics pipeline.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable, last wins)")
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides)
    except ConfigError as e:
        print(f"mfprog: config error: {e}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.WARNING if args.quiet else getattr(logging, cfg.log_level.upper(), logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    run = Run(cfg)
    try:
        for stage in PLAN[args.subcommand]:
            getattr(run, stage)()
    except FileNotFoundError as e:
        print(f"mfprog: ingest error: missing file {e.filename}", file=sys.stderr)
        return 1
    except IngestError as e:
        print(f"mfprog: ingest error: {e}", file=sys.stderr)
        return 1
    except (PipelineError, ArithmeticError, ValueError) as e:
        print(f"mfprog: {type(e).__module__.split('.')[-1]} error: {e}", file=sys.stderr)
        return 1
    run.write_summary()
    return 0


if __name__ == "__main__":
    sys.exit(main())
