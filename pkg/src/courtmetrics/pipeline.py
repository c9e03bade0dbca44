"""End-to-end analysis: detections in, tracks, shots and metrics out."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import court, events, metrics, tracking
from .court import CalibrationScale, CourtModel, HomographyFit
from .errors import CalibrationUnavailableError, ConfigError
from .events import EventConfig, ShotEvent
from .ingest import DetectionFrame, StreamHeader
from .metrics import MatchMetrics, MetricsConfig
from .tracking import BallTrack, KalmanParams, PlayerTrack

logger = logging.getLogger(__name__)


@dataclass
class Thresholds:
    low_conf: float = tracking.DEFAULT_LOW_CONF
    angle_deg: float = events.DEFAULT_ANGLE_DEG
    speed_change_ratio: float = events.DEFAULT_SPEED_CHANGE_RATIO
    min_gap_s: float = events.DEFAULT_MIN_GAP_S
    margin_px: float = court.DEFAULT_NEAR_MARGIN_PX
    movement_threshold_m: float = metrics.DEFAULT_MOVEMENT_THRESHOLD_M
    max_gap_frames: int = tracking.DEFAULT_MAX_GAP_FRAMES
    max_strike_distance_m: float = events.DEFAULT_MAX_STRIKE_DISTANCE_M
    strike_window_frames: int = events.DEFAULT_STRIKE_WINDOW_FRAMES
    velocity_window: int = events.DEFAULT_VELOCITY_WINDOW
    speed_window_frames: int = metrics.DEFAULT_SPEED_WINDOW_FRAMES


@dataclass
class KalmanSection:
    process_noise: float = KalmanParams.process_noise
    measurement_noise: float = KalmanParams.measurement_noise
    initial_variance: float = KalmanParams.initial_variance


@dataclass
class CalibrationSection:
    mode: str = "homography"
    reference: str = court.DEFAULT_REFERENCE
    min_keypoint_confidence: float = court.DEFAULT_MIN_KEYPOINT_CONFIDENCE
    robust: bool = True
    reprojection_gate_px: float = court.DEFAULT_REPROJECTION_GATE_PX
    speed_source: str = "raw"


@dataclass
class CourtSection:
    model: str = ""


@dataclass
class HeatmapSection:
    nx: int = metrics.DEFAULT_HEATMAP_GRID[0]
    ny: int = metrics.DEFAULT_HEATMAP_GRID[1]
    apron_m: float = metrics.DEFAULT_HEATMAP_APRON_M


@dataclass
class OutputSection:
    metrics: str = "metrics.json"
    shots: str = "shots.csv"
    heatmap_prefix: str = "heatmap_"
    minicourt: str = "minicourt.jsonl"
    tracks: str = "tracks.jsonl"
    manifest: str = "manifest.json"


@dataclass
class PipelineConfig:
    thresholds: Thresholds = field(default_factory=Thresholds)
    kalman: KalmanSection = field(default_factory=KalmanSection)
    calibration: CalibrationSection = field(default_factory=CalibrationSection)
    court: CourtSection = field(default_factory=CourtSection)
    heatmap: HeatmapSection = field(default_factory=HeatmapSection)
    outputs: OutputSection = field(default_factory=OutputSection)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        t = self.thresholds
        checks = [
            (0.0 <= t.low_conf <= 1.0, "thresholds.low_conf must lie in [0, 1]"),
            (0.0 < t.angle_deg < 180.0, "thresholds.angle_deg must lie in (0, 180)"),
            (t.speed_change_ratio >= 1.0, "thresholds.speed_change_ratio must be >= 1"),
            (t.min_gap_s >= 0.0, "thresholds.min_gap_s must be >= 0"),
            (t.margin_px >= 0.0, "thresholds.margin_px must be >= 0"),
            (t.movement_threshold_m >= 0.0, "thresholds.movement_threshold_m must be >= 0"),
            (t.max_gap_frames >= 0, "thresholds.max_gap_frames must be >= 0"),
            (t.max_strike_distance_m > 0.0, "thresholds.max_strike_distance_m must be > 0"),
            (t.strike_window_frames >= 0, "thresholds.strike_window_frames must be >= 0"),
            (t.velocity_window >= 2, "thresholds.velocity_window must be >= 2"),
            (t.speed_window_frames >= 1, "thresholds.speed_window_frames must be >= 1"),
            (self.kalman.process_noise > 0, "kalman.process_noise must be > 0"),
            (self.kalman.measurement_noise > 0, "kalman.measurement_noise must be > 0"),
            (self.kalman.initial_variance > 0, "kalman.initial_variance must be > 0"),
            (self.calibration.mode in ("homography", "scalar"),
             "calibration.mode must be 'homography' or 'scalar'"),
            (self.calibration.speed_source in ("raw", "smoothed"),
             "calibration.speed_source must be 'raw' or 'smoothed'"),
            (0.0 <= self.calibration.min_keypoint_confidence <= 1.0,
             "calibration.min_keypoint_confidence must lie in [0, 1]"),
            (self.calibration.reprojection_gate_px > 0, "calibration.reprojection_gate_px must be > 0"),
            (self.heatmap.nx >= 1 and self.heatmap.ny >= 1, "heatmap grid must be >= 1x1"),
            (self.heatmap.apron_m >= 0, "heatmap.apron_m must be >= 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    @classmethod
    def from_dict(cls, obj: dict) -> "PipelineConfig":
        sections = {f.name: f for f in dataclasses.fields(cls)}
        unknown = set(obj) - set(sections)
        if unknown:
            raise ConfigError(f"unknown config sections {sorted(unknown)}")
        kwargs = {}
        for name, value in obj.items():
            if not isinstance(value, dict):
                raise ConfigError(f"config section [{name}] must be a table")
            sec_cls = sections[name].default_factory
            fields = {f.name: f for f in dataclasses.fields(sec_cls)}
            bad = set(value) - set(fields)
            if bad:
                raise ConfigError(f"unknown keys in [{name}]: {sorted(bad)}")
            for k, v in value.items():
                want = type(getattr(sec_cls(), k))
                if want is float and isinstance(v, int) and not isinstance(v, bool):
                    v = float(v)
                if not isinstance(v, want) or (want is int and isinstance(v, bool)):
                    raise ConfigError(f"[{name}] {k} must be {want.__name__}")
                value = {**value, k: v}
            kwargs[name] = sec_cls(**value)
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def event_config(self, fps: float) -> EventConfig:
        t = self.thresholds
        return EventConfig(
            angle_threshold_deg=t.angle_deg,
            speed_change_ratio=t.speed_change_ratio,
            min_gap_frames=events.min_gap_for(fps, t.min_gap_s),
            velocity_window=t.velocity_window,
        )

    def kalman_params(self) -> KalmanParams:
        k = self.kalman
        return KalmanParams(k.process_noise, k.measurement_noise, k.initial_variance)

    def metrics_config(self) -> MetricsConfig:
        return MetricsConfig(
            movement_threshold_m=self.thresholds.movement_threshold_m,
            speed_window_frames=self.thresholds.speed_window_frames,
            heatmap_grid=(self.heatmap.nx, self.heatmap.ny),
            heatmap_apron_m=self.heatmap.apron_m,
            speed_source=self.calibration.speed_source,
        )


@dataclass(frozen=True, eq=False)
class AnalysisResult:
    header: StreamHeader
    fits: list[HomographyFit]
    ball: BallTrack
    players: tuple[PlayerTrack, PlayerTrack]
    shots: list[ShotEvent]
    metrics: MatchMetrics
    scale: CalibrationScale | None
    velocity_space: str


def _dense_fits(frames: Sequence[DetectionFrame], fits: list[HomographyFit], dense: np.ndarray):
    """One fit per frame of ``dense``, carrying the last stream frame's fit forward."""
    out = []
    j = 0
    for f in dense:
        while j + 1 < len(frames) and frames[j + 1].frame_index <= f:
            j += 1
        out.append(fits[j])
    return out


def _scalar_scale(frames, model: CourtModel, cfg: PipelineConfig) -> CalibrationScale:
    for f in frames:
        if f.keypoints is None:
            continue
        try:
            return court.calibrate_scale(
                f.keypoints, model, cfg.calibration.reference,
                min_confidence=cfg.calibration.min_keypoint_confidence,
            )
        except CalibrationUnavailableError:
            continue
    raise CalibrationUnavailableError(
        f"reference {cfg.calibration.reference!r} is never visible; scalar calibration impossible"
    )


def analyze(
    header: StreamHeader,
    frames: Sequence[DetectionFrame],
    cfg: PipelineConfig | None = None,
    model: CourtModel | None = None,
) -> AnalysisResult:
    cfg = cfg or PipelineConfig()
    if model is None:
        model = court.load_court_model(cfg.court.model or None)
    if not frames:
        raise CalibrationUnavailableError("stream has no frames")
    fps = header.fps
    cal = cfg.calibration
    t = cfg.thresholds

    fits = court.homography_schedule(
        frames, model,
        min_confidence=cal.min_keypoint_confidence,
        robust=cal.robust,
        gate_px=cal.reprojection_gate_px,
    )
    boundaries = {}
    polys = []
    for fit in fits:
        key = id(fit)
        if key not in boundaries:
            boundaries[key] = court.image_boundary(fit.homography, model)
        polys.append(boundaries[key])

    players = tracking.identify_players(frames, polys, t.margin_px)
    ball = tracking.interpolate_ball(tracking.BallTrack.from_frames(frames), t.low_conf, t.max_gap_frames)
    ball = tracking.kalman_smooth(ball, cfg.kalman_params(), fps)

    hs = [f.homography for f in _dense_fits(frames, fits, ball.frames)]
    ball = tracking.project_track(ball, hs)
    players = tracking.order_by_court_side([tracking.project_track(p, hs) for p in players])

    shots = events.detect_shots(ball, cfg.event_config(fps), fps, space="court")
    shots = events.attribute_shots(
        shots, players,
        max_strike_distance=t.max_strike_distance_m,
        window=t.strike_window_frames,
    )

    scale = _scalar_scale(frames, model, cfg) if cal.mode == "scalar" else None
    m = metrics.summarize(ball, players, shots, fps, cfg.metrics_config(), model.bounds, scale)
    return AnalysisResult(header, fits, ball, players, shots, m, scale, "court")
