"""Ball and player speeds, reaction times, heatmaps and the match summary."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .court import CalibrationScale
from .errors import CalibrationUnavailableError, IntervalError, ParameterError
from .events import ShotEvent
from .tracking import BallTrack, PlayerTrack

KMH_PER_MPS = 3.6
DEFAULT_MOVEMENT_THRESHOLD_M = 0.3
DEFAULT_SPEED_WINDOW_FRAMES = 10
DEFAULT_HEATMAP_GRID = (12, 24)
DEFAULT_HEATMAP_APRON_M = 2.0


def _ball_court(track: BallTrack, source: str) -> np.ndarray:
    pos = track.court_raw if source == "raw" else track.court_positions
    if pos is None:
        raise CalibrationUnavailableError("ball track has no court positions")
    return pos


def _span(track, a: int, b: int) -> tuple[int, int]:
    if b <= a:
        raise IntervalError(f"interval end {b} must follow start {a}")
    try:
        return track.index_of(a), track.index_of(b)
    except IndexError as exc:
        raise IntervalError(str(exc)) from None


def _chord(pos: np.ndarray, ka: int, kb: int) -> float:
    d = pos[kb] - pos[ka]
    if not np.all(np.isfinite(d)):
        raise CalibrationUnavailableError("position unavailable at interval endpoint")
    return float(math.hypot(d[0], d[1]))


def _path(pos: np.ndarray, ka: int, kb: int) -> float:
    seg = pos[ka:kb + 1]
    if not np.all(np.isfinite(seg)):
        return math.nan
    return float(np.sum(np.linalg.norm(np.diff(seg, axis=0), axis=1)))


def kmh(distance_m: float, frames: int, fps: float) -> float:
    return distance_m / (frames / fps) * KMH_PER_MPS


def ball_speed(
    track: BallTrack,
    shot_a: int,
    shot_b: int,
    fps: float,
    method: str = "chord",
    source: str = "smoothed",
) -> float:
    """Court-plane ball speed in km/h between two frames.

    ``method`` is ``"chord"`` (straight-line distance) or ``"path"`` (summed
    per-frame steps). ``source`` picks smoothed or raw projected positions.
    """
    ka, kb = _span(track, shot_a, shot_b)
    pos = _ball_court(track, source)
    if method == "chord":
        dist = _chord(pos, ka, kb)
    elif method == "path":
        _chord(pos, ka, kb)
        dist = _path(pos, ka, kb)
    else:
        raise ParameterError(f"unknown method {method!r}")
    return kmh(dist, shot_b - shot_a, fps)


def ball_speed_scalar(
    track: BallTrack,
    shot_a: int,
    shot_b: int,
    scale: CalibrationScale,
    fps: float,
    source: str = "smoothed",
) -> float:
    """Speed from the image-plane chord converted with a single metres-per-pixel factor."""
    ka, kb = _span(track, shot_a, shot_b)
    pos = track.centers if source == "raw" else track.positions()
    return kmh(_chord(pos, ka, kb) * scale.meters_per_pixel, shot_b - shot_a, fps)


class PlayerSpeed(NamedTuple):
    frame_a: int
    frame_b: int
    mean_speed_kmh: float
    distance_m: float


def player_speed(
    track: PlayerTrack,
    interval: tuple[int, int],
    fps: float,
    scale: CalibrationScale | None = None,
) -> PlayerSpeed:
    """Chord speed between the interval endpoints.

    Court-plane distance by default; with ``scale`` the image-plane foot-point
    chord is converted instead.
    """
    a, b = interval
    ka, kb = _span(track, a, b)
    if scale is not None:
        dist = _chord(track.foot_points, ka, kb) * scale.meters_per_pixel
    else:
        if track.court_positions is None:
            raise CalibrationUnavailableError("player track has no court positions")
        dist = _chord(track.court_positions, ka, kb)
    return PlayerSpeed(a, b, kmh(dist, b - a, fps), dist)


def reaction_time(
    shot_frame: int,
    responder: PlayerTrack,
    fps: float,
    movement_threshold_m: float = DEFAULT_MOVEMENT_THRESHOLD_M,
    until_frame: int | None = None,
) -> tuple[int, float] | None:
    """``(response_frame, seconds)`` or ``None`` when no movement is found.

    The response frame is the first frame after the shot where the responder
    is more than ``movement_threshold_m`` from where they stood at the shot.
    The search stops at ``until_frame`` (inclusive), normally the next shot.
    """
    if movement_threshold_m < 0:
        raise ParameterError("movement threshold must be >= 0")
    pos = responder.court_positions
    if pos is None:
        raise CalibrationUnavailableError("player track has no court positions")
    try:
        k0 = responder.index_of(shot_frame)
    except IndexError:
        return None
    ref = pos[k0]
    if not np.all(np.isfinite(ref)):
        return None
    last = len(responder) - 1
    if until_frame is not None:
        last = min(last, until_frame - int(responder.frames[0]))
    for k in range(k0 + 1, last + 1):
        p = pos[k]
        if np.all(np.isfinite(p)) and math.hypot(p[0] - ref[0], p[1] - ref[1]) > movement_threshold_m:
            frame = int(responder.frames[k])
            return frame, (frame - shot_frame) / fps
    return None


@dataclass(frozen=True, eq=False)
class Heatmap:
    """Counts on an ``(ny, nx)`` grid; row ``j`` covers the j-th band of y."""

    counts: np.ndarray
    overflow: int
    bounds: tuple[float, float, float, float]

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.overflow


def heatmap(positions, grid: tuple[int, int], bounds: tuple[float, float, float, float]) -> Heatmap:
    """Bin court points into ``grid = (nx, ny)`` cells over ``bounds = (xmin, xmax, ymin, ymax)``.

    Points on the upper edges fall in the last cell; points outside the bounds
    or non-finite count as overflow.
    """
    nx, ny = grid
    if nx < 1 or ny < 1:
        raise ParameterError("grid dimensions must be >= 1")
    xmin, xmax, ymin, ymax = bounds
    if not (xmax > xmin and ymax > ymin):
        raise ParameterError("empty heatmap bounds")
    pts = np.asarray(positions, dtype=float).reshape(-1, 2)
    counts = np.zeros((ny, nx), dtype=np.int64)
    inside = (
        np.all(np.isfinite(pts), axis=1)
        & (pts[:, 0] >= xmin) & (pts[:, 0] <= xmax)
        & (pts[:, 1] >= ymin) & (pts[:, 1] <= ymax)
    )
    p = pts[inside]
    ix = np.minimum(((p[:, 0] - xmin) / (xmax - xmin) * nx).astype(int), nx - 1)
    iy = np.minimum(((p[:, 1] - ymin) / (ymax - ymin) * ny).astype(int), ny - 1)
    np.add.at(counts, (iy, ix), 1)
    return Heatmap(counts, int(len(pts) - inside.sum()), (xmin, xmax, ymin, ymax))


# ---------------------------------------------------------------------------
# summary


@dataclass(frozen=True)
class MetricsConfig:
    movement_threshold_m: float = DEFAULT_MOVEMENT_THRESHOLD_M
    speed_window_frames: int = DEFAULT_SPEED_WINDOW_FRAMES
    heatmap_grid: tuple[int, int] = DEFAULT_HEATMAP_GRID
    heatmap_apron_m: float = DEFAULT_HEATMAP_APRON_M
    speed_source: str = "raw"


@dataclass(frozen=True)
class ShotRecord:
    frame: int
    time_s: float
    striker: int | None
    ball_court: tuple[float, float] | None
    turn_angle_deg: float
    speed_kmh: float | None
    path_speed_kmh: float | None
    incoming_speed_kmh: float | None
    outgoing_speed_kmh: float | None


@dataclass(frozen=True)
class ReactionRecord:
    responder_id: int
    shot_frame: int
    response_frame: int | None
    seconds: float | None


@dataclass(frozen=True)
class PlayerSummary:
    player_id: int
    n_shots: int
    avg_shot_speed_kmh: float | None
    avg_player_speed_kmh: float | None
    mean_reaction_s: float | None
    distance_m: float


@dataclass(frozen=True)
class MatchMetrics:
    fps: float
    calibration: str
    shots: list[ShotRecord]
    player_speeds: dict[int, list[PlayerSpeed]]
    reaction_times: list[ReactionRecord]
    heatmaps: dict[str, Heatmap]
    shot_speed_series: list[tuple[int, int | None, float | None]]
    players: dict[int, PlayerSummary] = field(default_factory=dict)


def _mean(values) -> float | None:
    vals = [v for v in values if v is not None and math.isfinite(v)]
    return float(np.mean(vals)) if vals else None


def _window_speed(speed_fn, a: int, b: int) -> float | None:
    if b <= a:
        return None
    try:
        return speed_fn(a, b)
    except (CalibrationUnavailableError, IntervalError):
        return None


def summarize(
    ball: BallTrack,
    players: Sequence[PlayerTrack],
    shots: Sequence[ShotEvent],
    fps: float,
    cfg: MetricsConfig = MetricsConfig(),
    bounds: tuple[float, float, float, float] | None = None,
    scale: CalibrationScale | None = None,
) -> MatchMetrics:
    """Aggregate every metric for one rally or match.

    ``bounds`` is the court rectangle; the heatmap covers it grown by the
    apron. A ``scale`` switches speeds to the scalar pixel conversion.
    """
    src = cfg.speed_source
    if scale is None:
        def speed(a, b):
            return ball_speed(ball, a, b, fps, source=src)

        def path_speed(a, b):
            v = ball_speed(ball, a, b, fps, method="path", source=src)
            return v if math.isfinite(v) else None
    else:
        def speed(a, b):
            return ball_speed_scalar(ball, a, b, scale, fps, source=src)

        def path_speed(a, b):
            return None

    frames = [s.frame_index for s in shots]
    first, last = (int(ball.frames[0]), int(ball.frames[-1])) if len(ball) else (0, -1)
    win = cfg.speed_window_frames
    records = []
    for i, s in enumerate(shots):
        f = s.frame_index
        nxt = frames[i + 1] if i + 1 < len(frames) else None
        prv = frames[i - 1] if i > 0 else None
        out_end = min(f + win, nxt if nxt is not None else last)
        in_start = max(f - win, prv if prv is not None else first)
        outgoing = _window_speed(speed, f, out_end)
        incoming = _window_speed(speed, in_start, f)
        if nxt is not None:
            main = _window_speed(speed, f, nxt)
            path = _window_speed(path_speed, f, nxt)
        else:
            main, path = outgoing, _window_speed(path_speed, f, out_end)
        court = None
        if s.ball_court is not None and np.all(np.isfinite(s.ball_court)):
            court = (float(s.ball_court[0]), float(s.ball_court[1]))
        records.append(
            ShotRecord(f, f / fps, s.striker_id, court, s.turn_angle, main, path, incoming, outgoing)
        )

    by_id = {p.player_id: p for p in players}
    player_speeds: dict[int, list[PlayerSpeed]] = {pid: [] for pid in sorted(by_id)}
    for pid, track in by_id.items():
        for a, b in zip(frames, frames[1:]):
            try:
                player_speeds[pid].append(player_speed(track, (a, b), fps, scale))
            except (CalibrationUnavailableError, IntervalError):
                continue

    reactions = []
    for i, s in enumerate(shots):
        if s.striker_id not in by_id or len(by_id) != 2:
            continue
        responder = next(pid for pid in by_id if pid != s.striker_id)
        until = frames[i + 1] if i + 1 < len(frames) else None
        hit = reaction_time(s.frame_index, by_id[responder], fps, cfg.movement_threshold_m, until)
        reactions.append(
            ReactionRecord(responder, s.frame_index, *(hit if hit else (None, None)))
        )

    if bounds is None:
        bounds = (-5.485, 5.485, -11.885, 11.885)
    a = cfg.heatmap_apron_m
    hb = (bounds[0] - a, bounds[1] + a, bounds[2] - a, bounds[3] + a)
    heatmaps = {}
    if ball.court_positions is not None:
        present = np.all(np.isfinite(ball.court_positions), axis=1)
        heatmaps["ball"] = heatmap(ball.court_positions[present], cfg.heatmap_grid, hb)
    for pid, track in sorted(by_id.items()):
        if track.court_positions is not None:
            present = np.all(np.isfinite(track.court_positions), axis=1)
            heatmaps[f"player{pid}"] = heatmap(track.court_positions[present], cfg.heatmap_grid, hb)

    summaries = {}
    for pid in sorted(by_id):
        mine = [r for r in records if r.striker == pid]
        speeds = player_speeds[pid]
        summaries[pid] = PlayerSummary(
            player_id=pid,
            n_shots=len(mine),
            avg_shot_speed_kmh=_mean(r.speed_kmh for r in mine),
            avg_player_speed_kmh=_mean(p.mean_speed_kmh for p in speeds),
            mean_reaction_s=_mean(r.seconds for r in reactions if r.responder_id == pid),
            distance_m=float(sum(p.distance_m for p in speeds)),
        )

    return MatchMetrics(
        fps=fps,
        calibration="scalar" if scale is not None else "homography",
        shots=records,
        player_speeds=player_speeds,
        reaction_times=reactions,
        heatmaps=heatmaps,
        shot_speed_series=[(r.frame, r.striker, r.speed_kmh) for r in records],
        players=summaries,
    )
