"""Player identification, ball gap filling and Kalman/RTS smoothing.

Tracks are dense over a contiguous frame range; missing samples are NaN.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .court import (
    DEFAULT_NEAR_MARGIN_PX,
    Homography,
    point_in_or_near_court,
    polygon_centroid,
    project,
    project_each,
)
from .errors import EmptyTrackError, ParameterError
from .ingest import DetectionFrame

DEFAULT_LOW_CONF = 0.4
DEFAULT_MAX_GAP_FRAMES = 30


class Provenance(str, Enum):
    DETECTED = "detected"
    INTERPOLATED = "interpolated"
    MISSING = "missing"


def _frame_range(frames: Sequence[DetectionFrame]) -> np.ndarray:
    if not frames:
        return np.zeros(0, dtype=int)
    return np.arange(frames[0].frame_index, frames[-1].frame_index + 1)


@dataclass(frozen=True, eq=False)
class BallTrack:
    frames: np.ndarray
    centers: np.ndarray
    provenance: tuple[Provenance, ...]
    confidence: np.ndarray
    smoothed: np.ndarray | None = None
    court_positions: np.ndarray | None = None
    court_raw: np.ndarray | None = None

    def __len__(self):
        return len(self.frames)

    @classmethod
    def from_frames(cls, frames: Sequence[DetectionFrame]) -> "BallTrack":
        idx = _frame_range(frames)
        n = len(idx)
        centers = np.full((n, 2), np.nan)
        conf = np.full(n, np.nan)
        prov = [Provenance.MISSING] * n
        start = idx[0] if n else 0
        for f in frames:
            if f.ball is not None:
                k = f.frame_index - start
                centers[k] = f.ball.center
                conf[k] = f.ball.confidence
                prov[k] = Provenance.DETECTED
        return cls(idx, centers, tuple(prov), conf)

    @classmethod
    def from_points(cls, points, confidence=None, start: int = 0) -> "BallTrack":
        """Build from an ``(n, 2)`` array; NaN rows are missing."""
        pts = np.array(points, dtype=float).reshape(-1, 2)
        n = len(pts)
        conf = np.ones(n) if confidence is None else np.array(confidence, dtype=float)
        present = np.all(np.isfinite(pts), axis=1)
        conf = np.where(present, conf, np.nan)
        prov = tuple(Provenance.DETECTED if p else Provenance.MISSING for p in present)
        return cls(np.arange(start, start + n), pts, prov, conf)

    def index_of(self, frame: int) -> int:
        k = int(frame - self.frames[0]) if len(self.frames) else -1
        if not 0 <= k < len(self.frames):
            raise IndexError(f"frame {frame} outside track")
        return k

    def positions(self) -> np.ndarray:
        """Best available image positions: smoothed if present."""
        return self.smoothed if self.smoothed is not None else self.centers


@dataclass(frozen=True, eq=False)
class PlayerTrack:
    player_id: int
    frames: np.ndarray
    foot_points: np.ndarray
    bboxes: np.ndarray
    confidence: np.ndarray
    court_positions: np.ndarray | None = None

    def __len__(self):
        return len(self.frames)

    def index_of(self, frame: int) -> int:
        k = int(frame - self.frames[0]) if len(self.frames) else -1
        if not 0 <= k < len(self.frames):
            raise IndexError(f"frame {frame} outside track")
        return k


@dataclass(frozen=True)
class KalmanParams:
    """Noise settings for the constant-velocity smoother.

    ``process_noise`` is the per-frame acceleration variance (px^2/frame^4,
    i.e. (px/frame^2)^2), ``measurement_noise`` the detection variance (px^2)
    and ``initial_variance`` the prior variance on position (px^2) and on
    velocity ((px/frame)^2).
    """

    process_noise: float = 1.0
    measurement_noise: float = 9.0
    initial_variance: float = 100.0

    def __post_init__(self):
        for name in ("process_noise", "measurement_noise", "initial_variance"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be > 0, got {v!r}")


# ---------------------------------------------------------------------------
# players


class Assignment(NamedTuple):
    order: tuple[int, int]
    cost: float


def associate_identities(previous, current) -> Assignment:
    """Match two current foot points to two previous identities.

    ``order[k]`` is the index in ``current`` taken by previous identity ``k``.
    Ties keep the straight pairing.
    """
    (p0, p1), (c0, c1) = np.asarray(previous, dtype=float).tolist(), np.asarray(current, dtype=float).tolist()

    def d2(a, b):
        return (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2

    straight = d2(c0, p0) + d2(c1, p1)
    crossed = d2(c1, p0) + d2(c0, p1)
    if crossed < straight:
        return Assignment((1, 0), crossed)
    return Assignment((0, 1), straight)


def identify_players(
    frames: Sequence[DetectionFrame],
    boundary,
    margin_px: float = DEFAULT_NEAR_MARGIN_PX,
) -> tuple[PlayerTrack, PlayerTrack]:
    """Pick the two players out of every frame's person detections.

    ``boundary`` is the image-space court polygon, either one ``(k, 2)`` array
    for the whole stream or one polygon per entry of ``frames``.

    Player 1 is whoever stands lower in the image (nearer the camera) at the
    first frame with two candidates; afterwards identities follow the cheaper
    of the two pairings with the last known positions.
    """
    if isinstance(boundary, (list, tuple)):
        per_frame = len(boundary) == len(frames) and np.ndim(boundary[0]) == 2
    else:
        per_frame = np.ndim(boundary) == 3
    idx = _frame_range(frames)
    n = len(idx)
    feet = np.full((2, n, 2), np.nan)
    boxes = np.full((2, n, 4), np.nan)
    conf = np.full((2, n), np.nan)
    last = None

    centroids: dict[int, tuple[float, float]] = {}
    for k, f in enumerate(frames):
        poly = boundary[k] if per_frame else boundary
        cands = [
            p for p in (f.persons or ())
            if point_in_or_near_court(p.foot_point, poly, margin_px)
        ]
        if len(cands) < 2:
            continue
        if id(poly) not in centroids:
            centroids[id(poly)] = tuple(polygon_centroid(poly))
        cx, cy = centroids[id(poly)]
        cands.sort(key=lambda p: math.hypot(p.foot_point[0] - cx, p.foot_point[1] - cy))
        chosen = cands[:2]
        pts = np.array([c.foot_point for c in chosen])
        if last is None:
            order = (0, 1) if pts[0, 1] >= pts[1, 1] else (1, 0)
        else:
            order = associate_identities(last, pts).order
        j = f.frame_index - idx[0]
        for pid in range(2):
            c = chosen[order[pid]]
            feet[pid, j] = c.foot_point
            boxes[pid, j] = c.bbox
            conf[pid, j] = c.confidence
        last = feet[:, j].copy()

    return tuple(
        PlayerTrack(pid + 1, idx.copy(), feet[pid], boxes[pid], conf[pid]) for pid in range(2)
    )


# ---------------------------------------------------------------------------
# ball


def interpolate_ball(
    track: BallTrack,
    low_conf: float = DEFAULT_LOW_CONF,
    max_gap: int = DEFAULT_MAX_GAP_FRAMES,
) -> BallTrack:
    """Fill missing and low-confidence frames linearly between anchors.

    Anchors are detected frames with confidence >= ``low_conf``; they are
    copied unchanged. A run of non-anchor frames is filled only when it has
    anchors on both sides and is at most ``max_gap`` frames long.
    """
    n = len(track)
    prov = np.array([p.value for p in track.provenance])
    conf = track.confidence
    anchors = (prov == Provenance.DETECTED.value) & (conf >= low_conf) & np.all(
        np.isfinite(track.centers), axis=1
    )
    anchor_idx = np.flatnonzero(anchors)
    if len(anchor_idx) == 0:
        raise EmptyTrackError("ball track has no high-confidence detections")

    centers = np.full((n, 2), np.nan)
    centers[anchors] = track.centers[anchors]
    out_prov = [Provenance.DETECTED if a else Provenance.MISSING for a in anchors]

    for p, s in zip(anchor_idx, anchor_idx[1:]):
        gap = s - p - 1
        if gap == 0 or gap > max_gap:
            continue
        a, b = track.centers[p], track.centers[s]
        for i in range(p + 1, s):
            t = (i - p) / (s - p)
            centers[i] = a + t * (b - a)
            out_prov[i] = Provenance.INTERPOLATED

    return BallTrack(track.frames.copy(), centers, tuple(out_prov), conf.copy())


def _runs(present: np.ndarray) -> list[tuple[int, int]]:
    """Half-open ``[start, stop)`` runs of True."""
    runs = []
    start = None
    for i, v in enumerate(present):
        if v and start is None:
            start = i
        elif not v and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(present)))
    return runs


def rts_smooth(z: np.ndarray, params: KalmanParams, fps: float) -> np.ndarray:
    """Constant-velocity Kalman filter plus Rauch-Tung-Striebel pass.

    ``z`` is an ``(n, 2)`` gap-free measurement sequence. The state per axis is
    (position, velocity) with ``dt = 1/fps``; noise settings are per frame and
    rescaled so results do not depend on ``fps``.
    """
    z = np.asarray(z, dtype=float)
    n = len(z)
    if n <= 1:
        return z.copy()
    dt = 1.0 / fps
    qa = params.process_noise * fps**4
    q11, q12, q22 = qa * dt**4 / 4, qa * dt**3 / 2, qa * dt**2
    r = params.measurement_noise
    p0 = params.initial_variance

    # 2x2 algebra written out on floats; per-sample numpy calls dominate otherwise
    out = np.empty_like(z)
    for axis in range(2):
        zs = z[:, axis].tolist()
        xf, pf, xp, pp = [None] * n, [None] * n, [None] * n, [None] * n
        x0, x1 = zs[0], (zs[1] - zs[0]) / dt
        a, b, d = p0, 0.0, p0 * fps**2
        for k in range(n):
            if k > 0:
                # x <- F x, P <- F P F' + Q with F = [[1, dt], [0, 1]]
                x0 = x0 + dt * x1
                a, b, d = a + 2 * dt * b + dt * dt * d + q11, b + dt * d + q12, d + q22
            xp[k], pp[k] = (x0, x1), (a, b, d)
            s = a + r
            k0, k1 = a / s, b / s
            innov = zs[k] - x0
            x0, x1 = x0 + k0 * innov, x1 + k1 * innov
            a, b, d = a - k0 * a, b - k0 * b, d - k1 * b
            xf[k], pf[k] = (x0, x1), (a, b, d)

        s0, s1 = xf[-1]
        res = [0.0] * n
        res[-1] = s0
        for k in range(n - 2, -1, -1):
            fa, fb, fd = pf[k]
            pa, pb, pd = pp[k + 1]
            # C = Pf F' Pp^-1
            m00, m01 = fa + dt * fb, fb
            m10, m11 = fb + dt * fd, fd
            det = pa * pd - pb * pb
            i00, i01, i11 = pd / det, -pb / det, pa / det
            c00, c01 = m00 * i00 + m01 * i01, m00 * i01 + m01 * i11
            c10, c11 = m10 * i00 + m11 * i01, m10 * i01 + m11 * i11
            e0, e1 = s0 - xp[k + 1][0], s1 - xp[k + 1][1]
            s0 = xf[k][0] + c00 * e0 + c01 * e1
            s1 = xf[k][1] + c10 * e0 + c11 * e1
            res[k] = s0
        out[:, axis] = res
    return out


def kalman_smooth(track: BallTrack, params: KalmanParams, fps: float) -> BallTrack:
    """Smooth each contiguous run of available positions independently."""
    if not (np.isfinite(fps) and fps > 0):
        raise ParameterError(f"fps must be > 0, got {fps!r}")
    present = np.all(np.isfinite(track.centers), axis=1)
    smoothed = np.full_like(track.centers, np.nan)
    for a, b in _runs(present):
        smoothed[a:b] = rts_smooth(track.centers[a:b], params, fps)
    return dataclasses.replace(track, smoothed=smoothed)


# ---------------------------------------------------------------------------
# court projection


def _project_each(points: np.ndarray, h) -> np.ndarray:
    if isinstance(h, Homography):
        return project(h, points)
    if len(h) != len(points):
        raise ValueError("need one homography per track frame")
    return project_each(np.stack([x.matrix for x in h]), points)


def project_track(track, h):
    """Fill ``court_positions`` via ``h`` (one homography or one per frame)."""
    if isinstance(track, BallTrack):
        raw = _project_each(track.centers, h)
        court = _project_each(track.smoothed, h) if track.smoothed is not None else raw
        return dataclasses.replace(track, court_positions=court, court_raw=raw)
    return dataclasses.replace(track, court_positions=_project_each(track.foot_points, h))


def order_by_court_side(players: Sequence[PlayerTrack]) -> tuple[PlayerTrack, PlayerTrack]:
    """Relabel so player 1 is on the near half (smaller court y) at the first
    frame where both are placed. Needs projected tracks."""
    a, b = players
    if a.court_positions is None or b.court_positions is None:
        return a, b
    both = np.all(np.isfinite(a.court_positions), axis=1) & np.all(np.isfinite(b.court_positions), axis=1)
    if not both.any():
        return a, b
    k = int(np.argmax(both))
    if a.court_positions[k, 1] <= b.court_positions[k, 1]:
        return a, b
    return dataclasses.replace(b, player_id=a.player_id), dataclasses.replace(a, player_id=b.player_id)


def project_tracks(tracks, h) -> list:
    return [project_track(t, h) for t in tracks]
