"""Synthetic rallies with exact ground truth.

The ball moves in straight, constant-speed court-plane segments that change
direction only at shot frames. Players follow piecewise-linear waypoints; a
responder stands still after the opponent's shot until a split step (one
frame, ``STEP_M`` metres) that marks the scripted reaction onset.

All randomness comes from numpy's PCG64 bit generator seeded with the given
64-bit integer (``numpy.random.Generator(numpy.random.PCG64(seed))``).
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .court import CourtModel, Homography, invert, itf_standard, project
from .errors import ScriptError
from .ingest import Detection, DetectionFrame, Keypoint, StreamHeader
from .tracking import DEFAULT_LOW_CONF

STEP_M = 0.5
STRIKE_OFFSET_M = 0.8
DEFAULT_APRON_M = 2.0
BALL_SIZE_PX = 8.0
BALL_CONFIDENCE = 0.9
PERSON_CONFIDENCE = 0.9
KEYPOINT_CONFIDENCE = 0.95
PLAYER_WIDTH_M = 0.8
PLAYER_HEIGHT_M = 1.8
CONTINUITY_TOL_M = 1e-6

Point = tuple[float, float]


# ---------------------------------------------------------------------------
# cameras


def look_at_camera(
    position: Sequence[float],
    target: Sequence[float] = (0.0, 0.0),
    focal_px: float = 1000.0,
    size: tuple[int, int] = (1280, 720),
    roll_deg: float = 0.0,
) -> Homography:
    """Image-to-court homography of a pinhole camera at ``position`` (x, y, z metres)
    looking at the ground point ``target``."""
    c = np.asarray(position, dtype=float)
    t = np.array([target[0], target[1], 0.0])
    fwd = t - c
    fwd /= np.linalg.norm(fwd)
    right = np.cross(fwd, [0.0, 0.0, 1.0])
    right /= np.linalg.norm(right)
    down = np.cross(fwd, right)
    r = np.vstack([right, down, fwd])
    if roll_deg:
        a = math.radians(roll_deg)
        rz = np.array([[math.cos(a), -math.sin(a), 0], [math.sin(a), math.cos(a), 0], [0, 0, 1]])
        r = rz @ r
    k = np.array([[focal_px, 0, size[0] / 2.0], [0, focal_px, size[1] / 2.0], [0, 0, 1.0]])
    court_to_image = k @ np.column_stack([r[:, 0], r[:, 1], -r @ c])
    return Homography(np.linalg.inv(court_to_image))


def broadcast_camera(size: tuple[int, int] = (1280, 720)) -> Homography:
    """Elevated view from behind the near baseline, whole court plus apron in frame."""
    return look_at_camera((0.0, -30.0, 12.0), (0.0, -1.0), focal_px=0.78 * size[0], size=size)


def overhead_camera(px_per_m: float = 25.0, size: tuple[int, int] = (1280, 720)) -> Homography:
    """Top-down view with uniform scale (an affine map, no perspective)."""
    cx, cy = size[0] / 2.0, size[1] / 2.0
    # court x along image rows, court y along image columns
    court_to_image = np.array([[0.0, px_per_m, cx], [-px_per_m, 0.0, cy], [0.0, 0.0, 1.0]])
    return Homography(np.linalg.inv(court_to_image))


def random_camera(rng: np.random.Generator, size: tuple[int, int] = (1280, 720)) -> Homography:
    """A plausible elevated camera somewhere behind the near baseline."""
    dist = rng.uniform(22.0, 34.0)
    height = rng.uniform(6.0, 18.0)
    lateral = rng.uniform(-4.0, 4.0)
    target = (rng.uniform(-1.0, 1.0), rng.uniform(-3.0, 1.0))
    focal = rng.uniform(0.6, 0.9) * size[0]
    roll = rng.uniform(-3.0, 3.0)
    return look_at_camera((lateral, -dist, height), target, focal, size, roll)


def court_to_image(camera: Homography, points) -> np.ndarray:
    return project(invert(camera), points)


# ---------------------------------------------------------------------------
# script


@dataclass(frozen=True)
class ShotSpec:
    frame: int
    striker: int
    launch: Point
    target: Point
    speed_mps: float


@dataclass(frozen=True)
class Waypoint:
    frame: int
    point: Point


@dataclass(frozen=True, eq=False)
class RallyScript:
    """Everything needed to render one rally.

    ``camera`` maps image to court. ``reaction_delays_s[k]`` is the time from
    shot ``k`` to the non-striker's first movement, ``None`` if they do not
    move before the next shot.
    """

    name: str
    fps: float
    duration_frames: int
    size: tuple[int, int]
    camera: Homography
    ball_entry: Waypoint
    shots: tuple[ShotSpec, ...]
    players: tuple[tuple[Waypoint, ...], tuple[Waypoint, ...]]
    reaction_delays_s: tuple[float | None, ...]
    spectators: tuple[Point, ...] = ()
    keypoint_interval: int = 1
    apron_m: float = DEFAULT_APRON_M

    def to_dict(self) -> dict:
        return {
            "format": "courtmetrics-rally",
            "version": 1,
            "name": self.name,
            "fps": self.fps,
            "duration_frames": self.duration_frames,
            "width": self.size[0],
            "height": self.size[1],
            "camera": self.camera.as_list(),
            "ball_entry": {"frame": self.ball_entry.frame, "point": list(self.ball_entry.point)},
            "shots": [
                {
                    "frame": s.frame,
                    "striker": s.striker,
                    "launch": list(s.launch),
                    "target": list(s.target),
                    "speed_mps": s.speed_mps,
                }
                for s in self.shots
            ],
            "players": {
                str(pid + 1): [{"frame": w.frame, "point": list(w.point)} for w in wps]
                for pid, wps in enumerate(self.players)
            },
            "reaction_delays_s": list(self.reaction_delays_s),
            "spectators": [list(p) for p in self.spectators],
            "keypoint_interval": self.keypoint_interval,
            "apron_m": self.apron_m,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RallyScript":
        try:
            if obj.get("format") != "courtmetrics-rally" or obj.get("version") != 1:
                raise ScriptError("not a version-1 rally script")

            def pt(v):
                return (float(v[0]), float(v[1]))

            def wps(items):
                return tuple(Waypoint(int(w["frame"]), pt(w["point"])) for w in items)

            return cls(
                name=str(obj.get("name", "")),
                fps=float(obj["fps"]),
                duration_frames=int(obj["duration_frames"]),
                size=(int(obj["width"]), int(obj["height"])),
                camera=Homography(np.array(obj["camera"], dtype=float)),
                ball_entry=Waypoint(int(obj["ball_entry"]["frame"]), pt(obj["ball_entry"]["point"])),
                shots=tuple(
                    ShotSpec(int(s["frame"]), int(s["striker"]), pt(s["launch"]), pt(s["target"]),
                             float(s["speed_mps"]))
                    for s in obj["shots"]
                ),
                players=(wps(obj["players"]["1"]), wps(obj["players"]["2"])),
                reaction_delays_s=tuple(
                    None if d is None else float(d) for d in obj["reaction_delays_s"]
                ),
                spectators=tuple(pt(p) for p in obj.get("spectators", [])),
                keypoint_interval=int(obj.get("keypoint_interval", 1)),
                apron_m=float(obj.get("apron_m", DEFAULT_APRON_M)),
            )
        except ScriptError:
            raise
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ScriptError(f"invalid rally script: {exc}") from None


def load_script(path) -> RallyScript:
    with open(path, encoding="utf-8") as fh:
        return RallyScript.from_dict(json.load(fh))


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    return v / n


def ball_positions(script: RallyScript) -> np.ndarray:
    """``(duration, 2)`` ground-truth ball court positions, NaN when absent."""
    n = script.duration_frames
    out = np.full((n, 2), np.nan)
    e = script.ball_entry
    s0 = script.shots[0]
    a, b = np.array(e.point), np.array(s0.launch)
    for f in range(e.frame, s0.frame):
        out[f] = a + (f - e.frame) / (s0.frame - e.frame) * (b - a)
    for k, s in enumerate(script.shots):
        launch = np.array(s.launch)
        u = _unit(np.array(s.target) - launch)
        if k + 1 < len(script.shots):
            end = script.shots[k + 1].frame - 1
        else:
            end = ball_end_frame(script)
        for f in range(s.frame, end + 1):
            out[f] = launch + s.speed_mps * (f - s.frame) / script.fps * u
    return out


def ball_end_frame(script: RallyScript) -> int:
    """Frame at which the last shot reaches its target (ball disappears after)."""
    s = script.shots[-1]
    d = math.dist(s.launch, s.target)
    return min(s.frame + round(d / s.speed_mps * script.fps), script.duration_frames - 1)


def player_positions(waypoints: Sequence[Waypoint], n: int) -> np.ndarray:
    frames = np.array([w.frame for w in waypoints], dtype=float)
    pts = np.array([w.point for w in waypoints], dtype=float)
    f = np.arange(n, dtype=float)
    return np.column_stack([np.interp(f, frames, pts[:, 0]), np.interp(f, frames, pts[:, 1])])


def movement_onset(positions: np.ndarray, start: int, stop: int) -> int | None:
    """First frame in ``(start, stop]`` where the position differs from ``start``."""
    ref = positions[start]
    for f in range(start + 1, min(stop, len(positions) - 1) + 1):
        if not np.array_equal(positions[f], ref):
            return f
    return None


def validate_script(script: RallyScript, model: CourtModel | None = None) -> None:
    model = model or itf_standard()
    if not script.fps > 0:
        raise ScriptError("fps must be > 0")
    if script.keypoint_interval < 1:
        raise ScriptError("keypoint_interval must be >= 1")
    shots = script.shots
    if not shots:
        raise ScriptError("script needs at least one shot")
    if len(script.reaction_delays_s) != len(shots):
        raise ScriptError("need one reaction delay per shot")
    for s in shots:
        if s.striker not in (1, 2):
            raise ScriptError(f"striker must be 1 or 2, got {s.striker}")
        if not s.speed_mps > 0:
            raise ScriptError("shot speed must be > 0")
        if math.dist(s.launch, s.target) == 0:
            raise ScriptError("shot launch and target coincide")
    for s, t in zip(shots, shots[1:]):
        if t.frame <= s.frame:
            raise ScriptError("shot frames must be strictly increasing")
        if t.striker == s.striker:
            raise ScriptError("strikers must alternate")
        u = _unit(np.array(s.target) - np.array(s.launch))
        reached = np.array(s.launch) + s.speed_mps * (t.frame - s.frame) / script.fps * u
        if np.linalg.norm(reached - np.array(t.launch)) > CONTINUITY_TOL_M:
            raise ScriptError(f"shot at frame {t.frame} does not start where the ball arrives")
    if not 0 <= script.ball_entry.frame < shots[0].frame:
        raise ScriptError("ball entry must precede the first shot")
    if script.duration_frames <= ball_end_frame(script) or ball_end_frame(script) <= shots[-1].frame:
        raise ScriptError("duration too short for the last shot")

    xmin, xmax, ymin, ymax = model.bounds
    a = script.apron_m

    def check(p, what):
        if not (xmin - a - 1e-9 <= p[0] <= xmax + a + 1e-9 and ymin - a - 1e-9 <= p[1] <= ymax + a + 1e-9):
            raise ScriptError(f"{what} {tuple(p)} lies outside the court apron")

    check(script.ball_entry.point, "ball entry")
    for s in shots:
        check(s.launch, "shot launch")
        check(s.target, "shot target")
    for wps in script.players:
        if not wps:
            raise ScriptError("each player needs at least one waypoint")
        fr = [w.frame for w in wps]
        if any(b <= a_ for a_, b in zip(fr, fr[1:])):
            raise ScriptError("waypoint frames must be strictly increasing")
        for w in wps:
            check(w.point, "waypoint")

    n = script.duration_frames
    pos = {pid: player_positions(script.players[pid - 1], n) for pid in (1, 2)}
    for k, s in enumerate(shots):
        stop = shots[k + 1].frame if k + 1 < len(shots) else n - 1
        onset = movement_onset(pos[3 - s.striker], s.frame, stop)
        got = None if onset is None else (onset - s.frame) / script.fps
        want = script.reaction_delays_s[k]
        if (got is None) != (want is None) or (
            got is not None and abs(got - want) > 0.5 / script.fps
        ):
            raise ScriptError(
                f"shot {k}: responder waypoints give reaction {got}, script says {want}"
            )


# ---------------------------------------------------------------------------
# generation


@dataclass(frozen=True, eq=False)
class GroundTruth:
    fps: float
    shot_frames: tuple[int, ...]
    strikers: tuple[int, ...]
    speeds_mps: tuple[float, ...]
    responders: tuple[int, ...]
    reaction_delays_s: tuple[float | None, ...]
    ball_court: np.ndarray
    player_court: dict[int, np.ndarray]
    camera: Homography

    @property
    def speeds_kmh(self) -> tuple[float, ...]:
        return tuple(v * 3.6 for v in self.speeds_mps)

    def player_interval_speeds_kmh(self, pid: int) -> list[float]:
        """Chord speed between consecutive shot frames, per player."""
        pos = self.player_court[pid]
        out = []
        for a, b in zip(self.shot_frames, self.shot_frames[1:]):
            out.append(float(np.linalg.norm(pos[b] - pos[a])) / ((b - a) / self.fps) * 3.6)
        return out

    def to_dict(self) -> dict:
        def arr(a):
            return [None if not np.all(np.isfinite(p)) else [float(p[0]), float(p[1])] for p in a]

        return {
            "fps": self.fps,
            "camera": self.camera.as_list(),
            "shots": [
                {
                    "frame": f,
                    "striker": s,
                    "speed_mps": v,
                    "speed_kmh": v * 3.6,
                    "responder": r,
                    "reaction_delay_s": d,
                }
                for f, s, v, r, d in zip(
                    self.shot_frames, self.strikers, self.speeds_mps, self.responders,
                    self.reaction_delays_s,
                )
            ],
            "ball_court": arr(self.ball_court),
            "player_court": {str(k): arr(v) for k, v in sorted(self.player_court.items())},
        }


def _people(camera_inv: Homography, points: np.ndarray) -> list[Detection]:
    """Person boxes whose bottom-centre is the projected court point."""
    points = np.asarray(points, dtype=float)
    foot = project(camera_inv, points)
    # local pixels-per-metre at the foot point sets the box size
    left = project(camera_inv, points - [0.5, 0.0])
    right = project(camera_inv, points + [0.5, 0.0])
    ppm = np.linalg.norm(right - left, axis=1)
    out = []
    for (u, v), s in zip(foot, ppm):
        w, h = PLAYER_WIDTH_M * float(s), PLAYER_HEIGHT_M * float(s)
        out.append(Detection((float(u - w / 2.0), float(v - h), w, h), PERSON_CONFIDENCE))
    return out


def generate_rally(
    script: RallyScript, model: CourtModel | None = None
) -> tuple[StreamHeader, list[DetectionFrame], GroundTruth]:
    model = model or itf_standard()
    validate_script(script, model)
    n = script.duration_frames
    inv = invert(script.camera)
    ball = ball_positions(script)
    players = {pid: player_positions(script.players[pid - 1], n) for pid in (1, 2)}
    w, h = script.size

    kp_img = project(inv, model.landmarks)
    in_view = (kp_img[:, 0] >= 0) & (kp_img[:, 0] <= w) & (kp_img[:, 1] >= 0) & (kp_img[:, 1] <= h)
    keypoints = tuple(
        Keypoint(float(x), float(y), bool(v), KEYPOINT_CONFIDENCE)
        for (x, y), v in zip(kp_img, in_view)
    )
    ball_img = project(inv, ball)
    spectators = tuple(_people(inv, np.reshape(script.spectators, (-1, 2))))
    p1 = _people(inv, players[1])
    p2 = _people(inv, players[2])

    frames = []
    for f in range(n):
        persons = (p1[f], p2[f]) + spectators
        b = None
        if np.all(np.isfinite(ball_img[f])):
            c = ball_img[f]
            b = Detection(
                (float(c[0] - BALL_SIZE_PX / 2), float(c[1] - BALL_SIZE_PX / 2), BALL_SIZE_PX, BALL_SIZE_PX),
                BALL_CONFIDENCE,
            )
        kps = keypoints if f % script.keypoint_interval == 0 else None
        frames.append(DetectionFrame(f, persons, b, kps))

    header = StreamHeader(script.fps, w, h, f"synth:{script.name}")
    truth = GroundTruth(
        fps=script.fps,
        shot_frames=tuple(s.frame for s in script.shots),
        strikers=tuple(s.striker for s in script.shots),
        speeds_mps=tuple(s.speed_mps for s in script.shots),
        responders=tuple(3 - s.striker for s in script.shots),
        reaction_delays_s=script.reaction_delays_s,
        ball_court=ball,
        player_court=players,
        camera=script.camera,
    )
    return header, frames, truth


# ---------------------------------------------------------------------------
# corruption


@dataclass(frozen=True)
class CorruptionConfig:
    position_noise_sigma_px: float = 0.0
    dropout_prob: float = 0.0
    low_conf_prob: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.position_noise_sigma_px >= 0:
            raise ScriptError("noise sigma must be >= 0")
        for name in ("dropout_prob", "low_conf_prob"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ScriptError(f"{name} must lie in [0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ScriptError("seed must be a 64-bit unsigned integer")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def corrupt(frames: Sequence[DetectionFrame], cfg: CorruptionConfig) -> list[DetectionFrame]:
    """Add pixel noise, ball dropout and low-confidence downgrades.

    Draw order per frame is fixed whatever the outcome: ball (dropout
    uniform, low-confidence uniform, replacement confidence, 2 normals), then
    2 normals per person, then 2 normals per keypoint. The same seed thus
    always perturbs the same frame the same way.
    """
    rng = make_rng(cfg.seed)
    sigma = cfg.position_noise_sigma_px
    out = []
    for fr in frames:
        u_drop, u_low, low_value = rng.random(), rng.random(), rng.uniform(0.0, DEFAULT_LOW_CONF)
        nb = rng.normal(size=2) * sigma
        ball = fr.ball
        if ball is not None:
            if u_drop < cfg.dropout_prob:
                ball = None
            else:
                x, y, bw, bh = ball.bbox
                conf = low_value if u_low < cfg.low_conf_prob else ball.confidence
                ball = Detection((x + nb[0], y + nb[1], bw, bh), conf)

        persons = fr.persons
        if persons is not None:
            noisy = []
            for p in persons:
                d = rng.normal(size=2) * sigma
                x, y, pw, ph = p.bbox
                noisy.append(Detection((x + d[0], y + d[1], pw, ph), p.confidence))
            persons = tuple(noisy)

        kps = fr.keypoints
        if kps is not None:
            d = rng.normal(size=(len(kps), 2)) * sigma
            kps = tuple(
                k if k.x is None else Keypoint(k.x + d[i, 0], k.y + d[i, 1], k.visible, k.confidence)
                for i, k in enumerate(kps)
            )
        out.append(DetectionFrame(fr.frame_index, persons, ball, kps))
    return out


# ---------------------------------------------------------------------------
# random scripts


@dataclass
class _Player:
    pid: int
    side: int  # -1 near half, +1 far half
    pos: np.ndarray
    waypoints: list[Waypoint] = field(default_factory=list)

    def add(self, frame: int, p) -> None:
        p = (float(p[0]), float(p[1]))
        if self.waypoints and self.waypoints[-1].frame == frame:
            self.waypoints[-1] = Waypoint(frame, p)
        else:
            self.waypoints.append(Waypoint(frame, p))
        self.pos = np.array(p)


def _pick_speed(rng, prev: float, lo: float, hi: float, min_ratio: float) -> float:
    for _ in range(1000):
        v = rng.uniform(lo, hi)
        if max(v, prev) / min(v, prev) >= min_ratio:
            return v
    return hi if prev * min_ratio <= hi else lo


def random_rally(
    seed: int,
    n_shots: int | None = None,
    *,
    fps: float = 30.0,
    camera: Homography | None = None,
    size: tuple[int, int] = (1280, 720),
    speeds_kmh: Sequence[float] | None = None,
    reaction_delays_s: Sequence[float] | None = None,
    speed_range_kmh: tuple[float, float] = (40.0, 120.0),
    min_speed_ratio: float = 1.4,
    name: str | None = None,
) -> RallyScript:
    """A random but valid rally of ``n_shots`` (6-12 if omitted) alternating shots.

    ``speeds_kmh`` and ``reaction_delays_s`` are cycled when given; otherwise
    consecutive speeds differ by at least ``min_speed_ratio``.
    """
    rng = make_rng(seed)
    if n_shots is None:
        n_shots = int(rng.integers(6, 13))
    camera = camera or broadcast_camera(size)
    lo, hi = speed_range_kmh

    first = int(rng.integers(1, 3))
    side = {1: -1, 2: 1}
    pl = {
        pid: _Player(pid, side[pid], np.array([rng.uniform(-1.5, 1.5), side[pid] * rng.uniform(11.0, 12.5)]))
        for pid in (1, 2)
    }

    def strike_spot(launch):
        off = STRIKE_OFFSET_M if rng.random() < 0.5 else -STRIKE_OFFSET_M
        if abs(launch[0] + off) > 5.0:
            off = -off
        return np.array([launch[0] + off, launch[1]])

    speeds = []
    prev_kmh = None
    for k in range(n_shots):
        if speeds_kmh is not None:
            v = float(speeds_kmh[k % len(speeds_kmh)])
        elif prev_kmh is None:
            v = rng.uniform(lo, hi)
        else:
            v = _pick_speed(rng, prev_kmh, lo, hi, min_speed_ratio)
        speeds.append(v / 3.6)
        prev_kmh = v

    # opening: striker waits at the first launch spot, ball comes in from mid-court
    s0 = first
    launch = np.array([rng.uniform(-3.0, 3.0), side[s0] * rng.uniform(10.5, 12.5)])
    striker_spot = strike_spot(launch)
    pl[s0].pos = striker_spot
    entry_pt = np.array([rng.uniform(-2.0, 2.0), launch[1] - side[s0] * rng.uniform(6.0, 9.0)])
    v0 = speeds[0] * 3.6
    entry_kmh = v0 / rng.uniform(1.6, 2.0) if v0 >= 70 else v0 * rng.uniform(1.6, 2.0)
    entry_frames = max(6, round(np.linalg.norm(launch - entry_pt) / (entry_kmh / 3.6) * fps))
    entry_frame = 3
    frame = entry_frame + entry_frames
    for p in pl.values():
        p.add(0, p.pos)

    delays = []
    shots = []
    striker = s0
    for k in range(n_shots):
        resp = pl[3 - striker]
        speed = speeds[k]
        # aim near where the responder stands so their run stays short
        for _ in range(1000):
            target = np.array([
                np.clip(resp.pos[0] + rng.uniform(-2.0, 2.0), -4.0, 4.0),
                np.clip(resp.pos[1] + rng.uniform(-1.0, 1.0), -12.8, 12.8),
            ])
            if abs(target[1]) < 9.0:
                target[1] = resp.side * 9.0
            d = np.linalg.norm(target - launch)
            gap = round(d / speed * fps)
            if gap >= 18:
                break
        u = (target - launch) / d
        nxt_launch = launch + speed * gap / fps * u

        if reaction_delays_s is not None:
            delay = float(reaction_delays_s[k % len(reaction_delays_s)])
        else:
            delay = rng.uniform(0.15, 0.6)
        delay_frames = max(1, round(delay * fps))
        if delay_frames > gap - 3:
            if reaction_delays_s is not None:
                raise ScriptError(
                    f"shot {k}: reaction delay {delay} s does not fit a {gap}-frame exchange"
                )
            delay_frames = max(1, gap - 3)
        onset = frame + delay_frames
        delays.append(delay_frames / fps)

        shots.append(ShotSpec(frame, striker, (float(launch[0]), float(launch[1])),
                              (float(target[0]), float(target[1])), float(speed)))

        rest = resp.pos.copy()
        dest = strike_spot(nxt_launch)
        step_dir = dest - rest
        if np.linalg.norm(step_dir) < 1e-9:
            step_dir = np.array([1.0, 0.0])
        resp.add(onset - 1, rest)
        resp.add(onset, rest + STEP_M * step_dir / np.linalg.norm(step_dir))
        resp.add(frame + gap, dest)

        if k == 0:
            pl[striker].add(frame, striker_spot)
        launch = nxt_launch
        frame += gap
        striker = 3 - striker

    duration = frame + 10
    spectators = ((-12.0, 3.0), (12.0, -4.0))
    for p in pl.values():
        if p.waypoints[-1].frame < duration - 1:
            p.add(duration - 1, p.pos)

    script = RallyScript(
        name=name or f"random-{seed}",
        fps=float(fps),
        duration_frames=duration,
        size=size,
        camera=camera,
        ball_entry=Waypoint(entry_frame, (float(entry_pt[0]), float(entry_pt[1]))),
        shots=tuple(shots),
        players=(tuple(pl[1].waypoints), tuple(pl[2].waypoints)),
        reaction_delays_s=tuple(delays),
        spectators=spectators,
    )
    return script
