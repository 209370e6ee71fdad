"""RUL RMSE and alarm counts as the neighbour count k varies.

Uses FD001 when MFPROG_CMAPSS_DIR points at it, otherwise a synthetic fleet.
"""
import argparse

from mfprog import acceptance
from mfprog.config import PipelineConfig
from mfprog.evaluation import alarm_eval, rul_eval
from mfprog.pipeline import fit_pipeline, predict_engine
from mfprog.ingest import select_sensors
from mfprog.synthetic import make_fleet


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kmax", type=int, default=15)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if acceptance.missing_fd001():
        print("# FD001 not found, using a synthetic fleet")
        train, test, rul = make_fleet(seed=args.seed)
    else:
        train, test, rul = acceptance.load(acceptance.fd001_paths())
    fp = fit_pipeline(train, PipelineConfig())
    series = [select_sensors(s, fp.sensor_ids) for s in test]
    print("k,rmse_mean,rmse_median,correct,earlier,last_20")
    for k in range(1, args.kmax + 1):
        preds = [predict_engine(fp, s, k=k) for s in series]
        m = rul_eval([p.rul.rul_mean for p in preds], rul)
        md = rul_eval([p.rul.rul_median for p in preds], rul)
        a = alarm_eval([p.rul.alarm_cycle for p in preds], [p.rul.observed_cycle + r for p, r in zip(preds, rul)])
        print(f"{k},{m.rmse:.2f},{md.rmse:.2f},{m.correct_count},{a.earlier},{a.windows[0.2]}")


if __name__ == "__main__":
    main()
