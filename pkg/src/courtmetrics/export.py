"""Artifact writers. Every float leaves here with 9 significant digits."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from typing import Sequence

import numpy as np

from .metrics import Heatmap, MatchMetrics
from .tracking import BallTrack, PlayerTrack

SIG_DIGITS = 9


def fmt(v: float) -> str:
    return f"{v:.{SIG_DIGITS}g}"


def clean(obj):
    """Recursively round floats to 9 significant digits; non-finite becomes null."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return float(fmt(v)) if math.isfinite(v) else None
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    return obj


def dumps(obj, indent: int | None = 2) -> str:
    if indent is None:
        return json.dumps(clean(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)
    return json.dumps(clean(obj), sort_keys=True, indent=indent, allow_nan=False) + "\n"


def write_text(path: str, text: str) -> None:
    # newline="" keeps byte output identical across platforms
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _point(p) -> list[float] | None:
    if p is None:
        return None
    a = np.asarray(p, dtype=float)
    return a.tolist() if np.all(np.isfinite(a)) else None


def metrics_to_dict(m: MatchMetrics) -> dict:
    return {
        "fps": m.fps,
        "calibration": m.calibration,
        "shots": [
            {
                "frame": r.frame,
                "time_s": r.time_s,
                "striker": r.striker,
                "ball_court": r.ball_court,
                "turn_angle_deg": r.turn_angle_deg,
                "speed_kmh": r.speed_kmh,
                "path_speed_kmh": r.path_speed_kmh,
                "incoming_speed_kmh": r.incoming_speed_kmh,
                "outgoing_speed_kmh": r.outgoing_speed_kmh,
            }
            for r in m.shots
        ],
        "player_speeds": {
            str(pid): [
                {"frame_a": s.frame_a, "frame_b": s.frame_b,
                 "mean_speed_kmh": s.mean_speed_kmh, "distance_m": s.distance_m}
                for s in speeds
            ]
            for pid, speeds in m.player_speeds.items()
        },
        "reaction_times": [
            {"responder_id": r.responder_id, "shot_frame": r.shot_frame,
             "response_frame": r.response_frame, "seconds": r.seconds}
            for r in m.reaction_times
        ],
        "heatmaps": {
            name: {"grid": [h.counts.shape[1], h.counts.shape[0]], "bounds": list(h.bounds),
                   "overflow": h.overflow, "total": h.total}
            for name, h in m.heatmaps.items()
        },
        "shot_speed_series": [list(x) for x in m.shot_speed_series],
        "players": {
            str(pid): {
                "n_shots": p.n_shots,
                "avg_shot_speed_kmh": p.avg_shot_speed_kmh,
                "avg_player_speed_kmh": p.avg_player_speed_kmh,
                "mean_reaction_s": p.mean_reaction_s,
                "distance_m": p.distance_m,
            }
            for pid, p in m.players.items()
        },
    }


SHOT_COLUMNS = (
    "frame", "time_s", "striker", "ball_x_m", "ball_y_m",
    "turn_angle_deg", "incoming_speed_kmh", "outgoing_speed_kmh",
)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    return fmt(v) if math.isfinite(v) else ""


def shots_csv(m: MatchMetrics) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SHOT_COLUMNS)
    for r in m.shots:
        bx, by = r.ball_court if r.ball_court is not None else (None, None)
        w.writerow([_cell(v) for v in (
            r.frame, r.time_s, r.striker, bx, by,
            r.turn_angle_deg, r.incoming_speed_kmh, r.outgoing_speed_kmh,
        )])
    return buf.getvalue()


def heatmap_csv(h: Heatmap) -> str:
    """Row-major counts, first row = lowest y band."""
    return "".join(",".join(str(int(c)) for c in row) + "\n" for row in h.counts)


def minicourt_lines(ball: BallTrack, players: Sequence[PlayerTrack], fps: float) -> list[str]:
    """One JSON object per frame with court-plane positions."""
    lines = []
    for k, f in enumerate(ball.frames):
        obj = {
            "frame": int(f),
            "time_s": int(f) / fps,
            "ball": None if ball.court_positions is None else _point(ball.court_positions[k]),
            "players": {},
        }
        for p in players:
            j = int(f - p.frames[0])
            pos = p.court_positions[j] if p.court_positions is not None and 0 <= j < len(p) else None
            obj["players"][str(p.player_id)] = _point(pos)
        lines.append(dumps(obj, indent=None) + "\n")
    return lines


def track_lines(ball: BallTrack, players: Sequence[PlayerTrack]) -> list[str]:
    """Per-frame tracks with provenance, image and court coordinates."""
    lines = []
    for k, f in enumerate(ball.frames):
        obj = {
            "frame": int(f),
            "ball": {
                "provenance": ball.provenance[k].value,
                "image": _point(ball.centers[k]),
                "smoothed": None if ball.smoothed is None else _point(ball.smoothed[k]),
                "court": None if ball.court_positions is None else _point(ball.court_positions[k]),
            },
            "players": {},
        }
        for p in players:
            j = int(f - p.frames[0])
            ok = 0 <= j < len(p)
            obj["players"][str(p.player_id)] = {
                "foot": _point(p.foot_points[j]) if ok else None,
                "court": _point(p.court_positions[j]) if ok and p.court_positions is not None else None,
            }
        lines.append(dumps(obj, indent=None) + "\n")
    return lines


def write_analysis(out_dir: str, result, outputs) -> list[str]:
    """Write metrics, shots, heatmaps, mini-court and tracks; return file names."""
    os.makedirs(out_dir, exist_ok=True)
    m = result.metrics
    written = []

    def put(name: str, text: str):
        write_text(os.path.join(out_dir, name), text)
        written.append(name)

    put(outputs.metrics, dumps(metrics_to_dict(m)))
    put(outputs.shots, shots_csv(m))
    for name, h in m.heatmaps.items():
        put(f"{outputs.heatmap_prefix}{name}.csv", heatmap_csv(h))
    put(outputs.minicourt, "".join(minicourt_lines(result.ball, result.players, result.header.fps)))
    put(outputs.tracks, "".join(track_lines(result.ball, result.players)))
    return written
