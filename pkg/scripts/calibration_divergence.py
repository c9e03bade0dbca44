"""How far a single metres-per-pixel factor drifts from the homography.

A ball travels a fixed court chord at a known speed; both speed paths are
evaluated under the overhead camera and under broadcast cameras at several
heights. Prints one CSV row per (camera, chord).
"""

import csv
import dataclasses
import sys

import numpy as np

from courtmetrics import court, metrics, synth
from courtmetrics.tracking import BallTrack

FPS = 30.0
N = 31

CHORDS = {
    "baseline-to-net": ((0.0, -11.885), (0.0, 0.0)),
    "along-baseline": ((-5.0, -11.885), (5.0, -11.885)),
    "across-net": ((-4.0, 0.0), (4.0, 0.0)),
    "far-baseline": ((-5.0, 11.885), (5.0, 11.885)),
}


def speeds(camera, model, a, b):
    pts = np.linspace(a, b, N)
    img = synth.court_to_image(camera, pts)
    t = dataclasses.replace(BallTrack.from_points(img), court_positions=pts, court_raw=pts)
    scale = court.calibrate_scale(synth.court_to_image(camera, model.landmarks), model)
    return metrics.ball_speed(t, 0, N - 1, FPS), metrics.ball_speed_scalar(t, 0, N - 1, scale, FPS, source="raw")


def main():
    model = court.itf_standard()
    cameras = {"overhead": synth.overhead_camera(25.0)}
    for height in (4.0, 8.0, 12.0, 20.0, 40.0):
        cameras[f"broadcast-h{height:g}m"] = synth.look_at_camera((0.0, -30.0, height), (0.0, -1.0), focal_px=1000.0)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["camera", "chord", "homography_kmh", "scalar_kmh", "rel_diff_pct"])
    for cname, cam in cameras.items():
        for chord, (a, b) in CHORDS.items():
            h, s = speeds(cam, model, a, b)
            out.writerow([cname, chord, f"{h:.3f}", f"{s:.3f}", f"{(s - h) / h * 100:+.2f}"])


if __name__ == "__main__":
    main()
