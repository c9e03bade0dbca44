"""Shot-detection F1 and speed error as pixel noise and dropout grow.

    python scripts/noise_sweep.py --rallies 20 --sigmas 0 1 2 3 5 8
"""

import argparse
import csv
import sys

import numpy as np

from courtmetrics import pipeline, synth
from courtmetrics.errors import CourtMetricsError


def match(detected, truth, tol):
    used, tp = set(), 0
    for d in detected:
        hit = next((k for k, g in enumerate(truth) if k not in used and abs(g - d) <= tol), None)
        if hit is not None:
            used.add(hit)
            tp += 1
    return tp, len(detected) - tp, len(truth) - tp


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--rallies", type=int, default=20)
    p.add_argument("--sigmas", type=float, nargs="+", default=[0, 1, 2, 3, 5, 8])
    p.add_argument("--dropouts", type=float, nargs="+", default=[0.0, 0.2])
    p.add_argument("--tol", type=int, default=2, help="frame tolerance for a match")
    args = p.parse_args()

    rallies = [synth.generate_rally(synth.random_rally(s)) for s in range(args.rallies)]
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["sigma_px", "dropout", "precision", "recall", "f1", "median_speed_err_pct", "failures"])
    for drop in args.dropouts:
        for sigma in args.sigmas:
            tp = fp = fn = failures = 0
            errs = []
            for seed, (header, frames, truth) in enumerate(rallies):
                noisy = synth.corrupt(frames, synth.CorruptionConfig(sigma, drop, 0.0, seed))
                try:
                    res = pipeline.analyze(header, noisy)
                except CourtMetricsError:
                    failures += 1
                    fn += len(truth.shot_frames)
                    continue
                a, b, c = match([s.frame_index for s in res.shots], truth.shot_frames, args.tol)
                tp, fp, fn = tp + a, fp + b, fn + c
                speeds = {r.frame: r.speed_kmh for r in res.metrics.shots}
                for f, v in zip(truth.shot_frames[:-1], truth.speeds_kmh):
                    if speeds.get(f) is not None:
                        errs.append(abs(speeds[f] - v) / v * 100)
            prec = tp / (tp + fp) if tp + fp else 0.0
            rec = tp / (tp + fn) if tp + fn else 0.0
            f1 = 2 * tp / (2 * tp + fp + fn) if tp else 0.0
            med = float(np.median(errs)) if errs else float("nan")
            out.writerow([sigma, drop, f"{prec:.3f}", f"{rec:.3f}", f"{f1:.3f}", f"{med:.2f}", failures])


if __name__ == "__main__":
    main()
