"""Detection-stream format: parsing, serialization and validation.

A stream is JSON Lines. The first non-blank line is the header object, every
following line is one frame object. See ``docs/stream-format.md``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import OrderingError, SchemaError, StreamFormatError

N_KEYPOINTS = 14

HEADER_KEYS = ("fps", "width", "height", "source")
FRAME_KEYS = ("frame", "persons", "ball", "keypoints")

BBox = tuple[float, float, float, float]


@dataclass(frozen=True)
class StreamHeader:
    fps: float
    frame_width: int
    frame_height: int
    source_id: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.fps) and self.fps > 0):
            raise SchemaError(f"fps must be > 0, got {self.fps!r}")
        if self.frame_width <= 0 or self.frame_height <= 0:
            raise SchemaError("frame dimensions must be > 0")


@dataclass(frozen=True)
class Detection:
    """A bounding box ``(x, y, w, h)`` in pixels, origin top-left."""

    bbox: BBox
    confidence: float

    def __post_init__(self):
        x, y, w, h = self.bbox
        if not all(math.isfinite(v) for v in self.bbox):
            raise SchemaError("bbox values must be finite")
        if w <= 0 or h <= 0:
            raise SchemaError(f"bbox width/height must be > 0, got {self.bbox}")
        _check_confidence(self.confidence)

    @property
    def center(self) -> tuple[float, float]:
        x, y, w, h = self.bbox
        return (x + w / 2.0, y + h / 2.0)

    @property
    def foot_point(self) -> tuple[float, float]:
        x, y, w, h = self.bbox
        return (x + w / 2.0, y + h)


@dataclass(frozen=True)
class Keypoint:
    x: float | None
    y: float | None
    visible: bool
    confidence: float | None = None

    def __post_init__(self):
        if self.visible and (self.x is None or self.y is None):
            raise SchemaError("visible keypoint needs x and y")
        if self.confidence is not None:
            _check_confidence(self.confidence)


@dataclass(frozen=True)
class DetectionFrame:
    frame_index: int
    persons: tuple[Detection, ...] | None = None
    ball: Detection | None = None
    keypoints: tuple[Keypoint, ...] | None = None

    def __post_init__(self):
        if self.frame_index < 0:
            raise SchemaError(f"frame index must be >= 0, got {self.frame_index}")
        if self.keypoints is not None and len(self.keypoints) != N_KEYPOINTS:
            raise SchemaError(
                f"frame {self.frame_index}: expected {N_KEYPOINTS} keypoints, "
                f"got {len(self.keypoints)}"
            )

    @property
    def has_visible_keypoints(self) -> bool:
        return self.keypoints is not None and any(k.visible for k in self.keypoints)


def _check_confidence(c: float) -> None:
    if not (0.0 <= c <= 1.0):
        raise SchemaError(f"confidence must lie in [0, 1], got {c!r}")


def _number(obj, key, line, *, integer=False):
    if key not in obj:
        raise SchemaError(f"missing key {key!r}", line)
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{key!r} must be a number", line)
    if integer:
        if isinstance(value, float):
            if not value.is_integer():
                raise SchemaError(f"{key!r} must be an integer", line)
            value = int(value)
        return value
    return float(value)


def _detection(obj, line) -> Detection:
    if not isinstance(obj, dict):
        raise SchemaError("detection must be an object", line)
    unknown = set(obj) - {"bbox", "confidence"}
    if unknown:
        raise SchemaError(f"unknown detection keys {sorted(unknown)}", line)
    bbox = obj.get("bbox")
    if not isinstance(bbox, list) or len(bbox) != 4:
        raise SchemaError("bbox must be a list of 4 numbers", line)
    if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in bbox):
        raise SchemaError("bbox must be a list of 4 numbers", line)
    conf = _number(obj, "confidence", line)
    try:
        return Detection(tuple(float(v) for v in bbox), conf)
    except SchemaError as exc:
        raise SchemaError(str(exc), line) from None


def _keypoint(obj, line) -> Keypoint:
    if not isinstance(obj, dict):
        raise SchemaError("keypoint must be an object", line)
    unknown = set(obj) - {"x", "y", "visible", "confidence"}
    if unknown:
        raise SchemaError(f"unknown keypoint keys {sorted(unknown)}", line)
    visible = obj.get("visible")
    if not isinstance(visible, bool):
        raise SchemaError("keypoint 'visible' must be a boolean", line)
    x = _number(obj, "x", line) if obj.get("x") is not None else None
    y = _number(obj, "y", line) if obj.get("y") is not None else None
    conf = _number(obj, "confidence", line) if obj.get("confidence") is not None else None
    try:
        return Keypoint(x, y, visible, conf)
    except SchemaError as exc:
        raise SchemaError(str(exc), line) from None


def parse_header(obj, line: int = 1) -> StreamHeader:
    if not isinstance(obj, dict):
        raise SchemaError("header must be a JSON object", line)
    unknown = set(obj) - set(HEADER_KEYS)
    if unknown:
        raise SchemaError(f"unknown header keys {sorted(unknown)}", line)
    source = obj.get("source", "")
    if not isinstance(source, str):
        raise SchemaError("'source' must be a string", line)
    try:
        return StreamHeader(
            fps=_number(obj, "fps", line),
            frame_width=_number(obj, "width", line, integer=True),
            frame_height=_number(obj, "height", line, integer=True),
            source_id=source,
        )
    except SchemaError as exc:
        if exc.line is None:
            raise SchemaError(str(exc), line) from None
        raise


def parse_frame(obj, line: int | None = None) -> DetectionFrame:
    if not isinstance(obj, dict):
        raise SchemaError("frame must be a JSON object", line)
    unknown = set(obj) - set(FRAME_KEYS)
    if unknown:
        raise SchemaError(f"unknown frame keys {sorted(unknown)}", line)
    index = _number(obj, "frame", line, integer=True)
    if index < 0:
        raise SchemaError(f"frame index must be >= 0, got {index}", line)

    persons = None
    if "persons" in obj:
        if not isinstance(obj["persons"], list):
            raise SchemaError("'persons' must be a list", line)
        persons = tuple(_detection(p, line) for p in obj["persons"])

    ball = _detection(obj["ball"], line) if "ball" in obj else None

    keypoints = None
    if "keypoints" in obj:
        raw = obj["keypoints"]
        if not isinstance(raw, list):
            raise SchemaError("'keypoints' must be a list", line)
        if len(raw) != N_KEYPOINTS:
            raise SchemaError(
                f"frame {index}: expected {N_KEYPOINTS} keypoints, got {len(raw)}", line
            )
        keypoints = tuple(_keypoint(k, line) for k in raw)

    return DetectionFrame(index, persons, ball, keypoints)


def parse_stream(data: bytes | str) -> tuple[StreamHeader, list[DetectionFrame]]:
    """Parse a JSON Lines detection stream.

    Blank lines are ignored. Absent ``persons``/``ball``/``keypoints`` keys
    become ``None``; an empty ``persons`` list stays an empty tuple.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise StreamFormatError(f"stream is not UTF-8: {exc}") from None

    header = None
    frames: list[DetectionFrame] = []
    last_index = -1
    for lineno, text in enumerate(data.splitlines(), start=1):
        if not text.strip():
            continue
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise StreamFormatError(f"invalid JSON: {exc.msg}", lineno) from None
        if header is None:
            header = parse_header(obj, lineno)
            continue
        frame = parse_frame(obj, lineno)
        if frame.frame_index <= last_index:
            raise OrderingError(
                f"frame index {frame.frame_index} does not follow {last_index}", lineno
            )
        last_index = frame.frame_index
        frames.append(frame)

    if header is None:
        raise StreamFormatError("stream has no header line")
    return header, frames


def _detection_obj(d: Detection) -> dict:
    return {"bbox": list(d.bbox), "confidence": d.confidence}


def frame_to_obj(frame: DetectionFrame) -> dict:
    obj: dict = {"frame": frame.frame_index}
    if frame.persons is not None:
        obj["persons"] = [_detection_obj(p) for p in frame.persons]
    if frame.ball is not None:
        obj["ball"] = _detection_obj(frame.ball)
    if frame.keypoints is not None:
        kps = []
        for k in frame.keypoints:
            kobj: dict = {"visible": k.visible}
            if k.x is not None:
                kobj["x"] = k.x
            if k.y is not None:
                kobj["y"] = k.y
            if k.confidence is not None:
                kobj["confidence"] = k.confidence
            kps.append(kobj)
        obj["keypoints"] = kps
    return obj


def header_to_obj(header: StreamHeader) -> dict:
    return {
        "fps": header.fps,
        "width": header.frame_width,
        "height": header.frame_height,
        "source": header.source_id,
    }


def serialize_stream(header: StreamHeader, frames: Iterable[DetectionFrame]) -> bytes:
    """Inverse of :func:`parse_stream`. Floats use shortest round-trip repr."""
    lines = [json.dumps(header_to_obj(header), separators=(",", ":"))]
    lines.extend(json.dumps(frame_to_obj(f), separators=(",", ":")) for f in frames)
    return ("\n".join(lines) + "\n").encode("utf-8")


@dataclass(frozen=True)
class ValidationReport:
    n_frames: int
    first_frame: int | None
    last_frame: int | None
    gaps: list[tuple[int, int]] = field(default_factory=list)
    ball_coverage: float = 0.0
    keypoint_coverage: float = 0.0
    warnings: list[str] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {
            "n_frames": self.n_frames,
            "first_frame": self.first_frame,
            "last_frame": self.last_frame,
            "gaps": [list(g) for g in self.gaps],
            "ball_coverage": self.ball_coverage,
            "keypoint_coverage": self.keypoint_coverage,
            "warnings": list(self.warnings),
            "errors": list(self.errors),
            "ok": self.ok,
        }


def validate_stream(header: StreamHeader, frames: Sequence[DetectionFrame]) -> ValidationReport:
    n = len(frames)
    if n == 0:
        return ValidationReport(0, None, None, errors=["stream contains no frames"])

    errors = []
    gaps = []
    for prev, cur in zip(frames, frames[1:]):
        if cur.frame_index <= prev.frame_index:
            errors.append(
                f"frame index {cur.frame_index} does not follow {prev.frame_index}"
            )
        elif cur.frame_index > prev.frame_index + 1:
            gaps.append((prev.frame_index + 1, cur.frame_index - 1))

    ball_cov = sum(f.ball is not None for f in frames) / n
    kp_cov = sum(f.has_visible_keypoints for f in frames) / n

    warnings = []
    if kp_cov == 0.0:
        warnings.append("no visible court keypoints: court mapping is impossible")
    if ball_cov == 0.0:
        warnings.append("no ball detections")
    if not any(f.persons for f in frames):
        warnings.append("no person detections")

    return ValidationReport(
        n_frames=n,
        first_frame=frames[0].frame_index,
        last_frame=frames[-1].frame_index,
        gaps=gaps,
        ball_coverage=ball_cov,
        keypoint_coverage=kp_cov,
        warnings=warnings,
        errors=errors,
    )
