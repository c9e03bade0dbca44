"""Shot detection from ball-trajectory turns, and striker attribution."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterError
from .tracking import BallTrack, PlayerTrack

DEFAULT_ANGLE_DEG = 45.0
DEFAULT_SPEED_CHANGE_RATIO = 1.2
DEFAULT_MIN_GAP_S = 0.5
DEFAULT_VELOCITY_WINDOW = 2
DEFAULT_MAX_STRIKE_DISTANCE_M = 6.0
DEFAULT_STRIKE_WINDOW_FRAMES = 3
SPEED_EPS = 1e-6


def min_gap_for(fps: float, seconds: float = DEFAULT_MIN_GAP_S) -> int:
    """Frames in ``seconds``, rounded half up."""
    return int(math.floor(seconds * fps + 0.5))


@dataclass(frozen=True)
class EventConfig:
    angle_threshold_deg: float = DEFAULT_ANGLE_DEG
    speed_change_ratio: float = DEFAULT_SPEED_CHANGE_RATIO
    min_gap_frames: int | None = None
    velocity_window: int = DEFAULT_VELOCITY_WINDOW

    def __post_init__(self):
        if not 0.0 < self.angle_threshold_deg < 180.0:
            raise ParameterError("angle_threshold_deg must lie in (0, 180)")
        if not self.speed_change_ratio >= 1.0:
            raise ParameterError("speed_change_ratio must be >= 1")
        if self.min_gap_frames is not None and self.min_gap_frames < 0:
            raise ParameterError("min_gap_frames must be >= 0")
        if self.velocity_window < 2:
            raise ParameterError("velocity_window must be >= 2")

    def gap(self, fps: float) -> int:
        return self.min_gap_frames if self.min_gap_frames is not None else min_gap_for(fps)


@dataclass(frozen=True, eq=False)
class ShotEvent:
    frame_index: int
    turn_angle: float
    speed_ratio: float
    pre_velocity: np.ndarray
    post_velocity: np.ndarray
    ball_image: np.ndarray
    ball_court: np.ndarray | None = None
    striker_id: int | None = None
    velocity_space: str = "court"


def turn_angle(a, b) -> float:
    """Angle in degrees between two vectors; 0 if either is (near) zero."""
    na, nb = math.hypot(*a), math.hypot(*b)
    if na < SPEED_EPS or nb < SPEED_EPS:
        return 0.0
    c = (a[0] * b[0] + a[1] * b[1]) / (na * nb)
    return math.degrees(math.acos(max(-1.0, min(1.0, c))))


def speed_ratio(a, b) -> float:
    na, nb = math.hypot(*a), math.hypot(*b)
    return max(na, nb) / max(min(na, nb), SPEED_EPS)


def suppress_close_events(frames: Sequence[int], scores: Sequence[float], min_gap: int) -> list[int]:
    """Greedy non-maximum suppression in time.

    Candidates are visited by descending score (earlier frame first on ties);
    one is kept unless a kept frame lies fewer than ``min_gap`` frames away.
    """
    order = sorted(range(len(frames)), key=lambda i: (-scores[i], frames[i]))
    kept: list[int] = []
    for i in order:
        f = frames[i]
        if all(abs(f - k) >= min_gap for k in kept):
            kept.append(f)
    return sorted(kept)


def detect_shots(
    track: BallTrack,
    cfg: EventConfig,
    fps: float,
    space: str = "auto",
    refine: bool = True,
) -> list[ShotEvent]:
    """Frames where the trajectory turns sharply with a large speed change.

    ``space`` picks the coordinates velocities are taken in: ``"court"``,
    ``"image"``, or ``"auto"`` (court when projected positions exist).

    Smoothing rounds the corner a shot leaves in the trajectory, which can move
    the largest turn a frame or two away from the true contact. With
    ``refine`` each kept frame is moved, within the velocity window, to the
    peak of the velocity change measured on the unsmoothed positions.
    """
    if space == "auto":
        space = "court" if track.court_positions is not None else "image"
    img = track.positions()
    pos = track.court_positions if space == "court" else img
    if pos is None:
        raise ParameterError("court positions requested but the track is not projected")

    w = cfg.velocity_window
    n = len(pos)
    if n < 2 * w + 1:
        return []
    ok = np.all(np.isfinite(pos), axis=1)
    # window [i-w, i+w] fully available
    ok_count = np.convolve(ok.astype(int), np.ones(2 * w + 1, dtype=int), mode="valid")

    cand = []
    for i in range(w, n - w):
        if ok_count[i - w] != 2 * w + 1:
            continue
        v_in = (pos[i] - pos[i - w]) / w
        v_out = (pos[i + w] - pos[i]) / w
        ang = turn_angle(v_in, v_out)
        if ang > cfg.angle_threshold_deg and speed_ratio(v_in, v_out) >= cfg.speed_change_ratio:
            cand.append((i, ang, v_in, v_out))

    gap = cfg.gap(fps)
    kept = suppress_close_events([c[0] for c in cand], [c[1] for c in cand], gap)
    if refine:
        raw = _raw_positions(track, space)
        scores = {i: ang for i, ang, *_ in cand}
        moved = {}
        for i in kept:
            j = refine_corner(raw, i, w)
            moved[j] = max(moved.get(j, -1.0), scores[i])
        kept = suppress_close_events(list(moved), list(moved.values()), gap)

    # at a refined frame the smoothed corner is rounded off, so the reported
    # velocities come from the unsmoothed positions when those are available
    ref = _raw_positions(track, space) if refine else pos
    shots = []
    for i in kept:
        src = ref if np.all(np.isfinite(ref[[i - w, i, i + w]])) else pos
        v_in = (src[i] - src[i - w]) / w
        v_out = (src[i + w] - src[i]) / w
        ang = turn_angle(v_in, v_out)
        shots.append(
            ShotEvent(
                frame_index=int(track.frames[i]),
                turn_angle=ang,
                speed_ratio=speed_ratio(v_in, v_out),
                pre_velocity=v_in * fps,
                post_velocity=v_out * fps,
                ball_image=img[i].copy(),
                ball_court=None if track.court_positions is None else track.court_positions[i].copy(),
                velocity_space=space,
            )
        )
    return shots


def _raw_positions(track: BallTrack, space: str) -> np.ndarray:
    if space == "court":
        return track.court_raw if track.court_raw is not None else track.court_positions
    return track.centers


def refine_corner(pos: np.ndarray, i: int, w: int) -> int:
    """Frame in ``[i - w, i + w]`` with the largest stride-``w`` velocity change.

    For a path with one corner the magnitude of ``p[j+w] - 2 p[j] + p[j-w]`` is
    a tent peaking exactly at the corner.
    """
    n = len(pos)
    best, best_val = i, -1.0
    for j in range(max(w, i - w), min(n - w, i + w + 1)):
        d = pos[j + w] - 2.0 * pos[j] + pos[j - w]
        if not np.all(np.isfinite(d)):
            continue
        val = math.hypot(d[0], d[1])
        if val > best_val or (val == best_val and abs(j - i) < abs(best - i)):
            best, best_val = j, val
    return best


def _position_near(track: PlayerTrack, frame: int, window: int) -> np.ndarray | None:
    if track.court_positions is None:
        return None
    for d in range(window + 1):
        for f in (frame - d, frame + d) if d else (frame,):
            k = f - track.frames[0]
            if 0 <= k < len(track) and np.all(np.isfinite(track.court_positions[k])):
                return track.court_positions[k]
    return None


def attribute_shot(
    shot_frame: int,
    ball_court,
    players: Sequence[PlayerTrack],
    max_strike_distance: float = DEFAULT_MAX_STRIKE_DISTANCE_M,
    window: int = DEFAULT_STRIKE_WINDOW_FRAMES,
) -> int | None:
    """Id of the player nearest the ball, or ``None`` if nobody is close enough.

    Each player's court position is taken at the shot frame or the closest
    frame within ``window``. Exact ties go to the lower player id.
    """
    if ball_court is None or not np.all(np.isfinite(ball_court)):
        return None
    best = None
    for p in sorted(players, key=lambda t: t.player_id):
        pos = _position_near(p, shot_frame, window)
        if pos is None:
            continue
        d = float(np.hypot(*(np.asarray(pos) - ball_court)))
        if d <= max_strike_distance and (best is None or d < best[0]):
            best = (d, p.player_id)
    return None if best is None else best[1]


def attribute_shots(shots: Sequence[ShotEvent], players: Sequence[PlayerTrack], **kwargs) -> list[ShotEvent]:
    return [
        dataclasses.replace(s, striker_id=attribute_shot(s.frame_index, s.ball_court, players, **kwargs))
        for s in shots
    ]
