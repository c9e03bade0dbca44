"""Court model, image-to-court homography and pixel/metre calibration."""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

import numpy as np

from .errors import (
    ConfigError,
    CalibrationUnavailableError,
    DegenerateHomographyError,
    DomainError,
    InsufficientCorrespondencesError,
    PointAtInfinityError,
    SchemaError,
)

logger = logging.getLogger(__name__)

N_LANDMARKS = 14
COURT_ENV_VAR = "COURTMETRICS_COURT"

DEFAULT_MIN_KEYPOINT_CONFIDENCE = 0.5
DEFAULT_REPROJECTION_GATE_PX = 10.0
DEFAULT_NEAR_MARGIN_PX = 100.0
DEFAULT_REFERENCE = "near_doubles_baseline"

_W_EPS = 1e-12
_DET_EPS = 1e-12
_RANK_TOL = 1e-10


@dataclass(frozen=True)
class KnownLength:
    length_m: float
    landmarks: tuple[int, int]


@dataclass(frozen=True, eq=False)
class CourtModel:
    """Canonical court: 14 ground-plane landmarks in metres.

    ``boundary`` is the outer polygon (metres) in traversal order.
    """

    name: str
    landmarks: np.ndarray
    landmark_names: tuple[str, ...]
    boundary_indices: tuple[int, ...]
    known_lengths: dict[str, KnownLength]

    def __post_init__(self):
        lm = np.asarray(self.landmarks, dtype=float)
        if lm.shape != (N_LANDMARKS, 2):
            raise ConfigError(f"court model needs {N_LANDMARKS} landmarks, got {lm.shape}")
        object.__setattr__(self, "landmarks", lm)
        if not is_convex_polygon(self.boundary):
            raise ConfigError("court boundary must be a simple convex polygon")
        for name, kl in self.known_lengths.items():
            if not kl.length_m > 0:
                raise ConfigError(f"known length {name!r} must be > 0")
            i, j = kl.landmarks
            measured = float(np.linalg.norm(lm[i] - lm[j]))
            if abs(measured - kl.length_m) > 1e-6:
                raise ConfigError(
                    f"known length {name!r} ({kl.length_m} m) disagrees with its "
                    f"landmarks ({measured} m)"
                )

    @property
    def boundary(self) -> np.ndarray:
        return self.landmarks[list(self.boundary_indices)]

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """``(xmin, xmax, ymin, ymax)`` of the boundary polygon."""
        b = self.boundary
        return (b[:, 0].min(), b[:, 0].max(), b[:, 1].min(), b[:, 1].max())

    @classmethod
    def from_dict(cls, obj: dict) -> "CourtModel":
        try:
            if obj.get("format") != "courtmetrics-court" or obj.get("version") != 1:
                raise ConfigError("not a version-1 courtmetrics court document")
            entries = sorted(obj["landmarks"], key=lambda e: e["index"])
            if [e["index"] for e in entries] != list(range(N_LANDMARKS)):
                raise ConfigError(f"landmark indices must be 0..{N_LANDMARKS - 1}")
            return cls(
                name=obj.get("name", ""),
                landmarks=np.array([e["xy"] for e in entries], dtype=float),
                landmark_names=tuple(e["name"] for e in entries),
                boundary_indices=tuple(int(i) for i in obj["boundary"]),
                known_lengths={
                    k: KnownLength(float(v["length_m"]), tuple(v["landmarks"]))
                    for k, v in obj["known_lengths"].items()
                },
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid court document: {exc}") from None

    def to_dict(self) -> dict:
        return {
            "format": "courtmetrics-court",
            "version": 1,
            "name": self.name,
            "units": "m",
            "landmarks": [
                {"index": i, "name": n, "xy": [float(v) for v in self.landmarks[i]]}
                for i, n in enumerate(self.landmark_names)
            ],
            "boundary": list(self.boundary_indices),
            "known_lengths": {
                k: {"length_m": v.length_m, "landmarks": list(v.landmarks)}
                for k, v in self.known_lengths.items()
            },
        }


def load_court_model(path: str | os.PathLike | None = None) -> CourtModel:
    """Load a court document; ``None`` means ``$COURTMETRICS_COURT`` or the ITF default."""
    if path is None:
        path = os.environ.get(COURT_ENV_VAR) or None
    if path is None:
        return itf_standard()
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read court model {str(path)!r}: {exc}") from None
    return CourtModel.from_dict(obj)


def itf_standard() -> CourtModel:
    """The bundled ITF-dimension court, ignoring any override."""
    text = resources.files(__package__).joinpath("courts/itf-standard.json").read_text()
    return CourtModel.from_dict(json.loads(text))


def is_convex_polygon(poly: np.ndarray) -> bool:
    """True for a simple, strictly convex polygon (either orientation)."""
    poly = np.asarray(poly, dtype=float)
    n = len(poly)
    if n < 3:
        return False
    d1 = np.roll(poly, -1, axis=0) - poly
    d2 = np.roll(d1, -1, axis=0)
    cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    if not (np.all(cross > 0) or np.all(cross < 0)):
        return False
    # total turning of exactly one revolution rules out star polygons
    turn = np.arctan2(cross, np.einsum("ij,ij->i", d1, d2))
    return bool(abs(abs(turn.sum()) - 2 * math.pi) < 1e-6)


# ---------------------------------------------------------------------------
# homography


@dataclass(frozen=True, eq=False)
class Homography:
    """Projective map from the image plane to the court plane (metres)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float).reshape(3, 3)
        if not np.all(np.isfinite(m)):
            raise DegenerateHomographyError("homography has non-finite entries")
        if abs(m[2, 2]) > _W_EPS:
            m = m / m[2, 2]
        else:
            m = m / np.linalg.norm(m)
        det = (m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
               - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
               + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]))
        if abs(det) <= _DET_EPS:
            raise DegenerateHomographyError("homography is singular")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def as_list(self) -> list[float]:
        """Row-major 9 numbers."""
        return [float(v) for v in self.matrix.ravel()]

    def __repr__(self):
        return f"Homography({self.as_list()})"


@dataclass(frozen=True)
class HomographyFit:
    homography: Homography
    reprojection_error_px: float
    inliers: tuple[int, ...]


def project(h: Homography | np.ndarray, points) -> np.ndarray:
    """Apply ``h`` to one point ``(2,)`` or many ``(n, 2)``; NaN rows pass through."""
    m = h.matrix if isinstance(h, Homography) else np.asarray(h, dtype=float)
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    out = np.full(pts.shape, np.nan)
    ok = np.all(np.isfinite(pts), axis=1)
    if ok.any():
        p = pts[ok]
        hom = p @ m[:, :2].T + m[:, 2]
        w = hom[:, 2]
        if np.any(np.abs(w) < _W_EPS):
            raise PointAtInfinityError("point maps to infinity under the homography")
        out[ok] = hom[:, :2] / w[:, None]
    return out[0] if single else out


def project_each(matrices: np.ndarray, points) -> np.ndarray:
    """Row ``i`` of ``points`` mapped through ``matrices[i]``; NaN rows pass through."""
    m = np.asarray(matrices, dtype=float)
    pts = np.asarray(points, dtype=float)
    out = np.full(pts.shape, np.nan)
    ok = np.all(np.isfinite(pts), axis=1)
    if ok.any():
        hom = np.einsum("nij,nj->ni", m[ok, :, :2], pts[ok]) + m[ok, :, 2]
        w = hom[:, 2]
        if np.any(np.abs(w) < _W_EPS):
            raise PointAtInfinityError("point maps to infinity under the homography")
        out[ok] = hom[:, :2] / w[:, None]
    return out


def invert(h: Homography) -> Homography:
    try:
        inv = np.linalg.inv(h.matrix)
    except np.linalg.LinAlgError:
        raise DegenerateHomographyError("cannot invert singular homography") from None
    return Homography(inv)


def _normalizing_transform(pts: np.ndarray) -> np.ndarray:
    c = pts.sum(axis=0) / len(pts)
    d = float(np.hypot(*(pts - c).T).sum()) / len(pts)
    if d <= 0 or not np.isfinite(d):
        raise DegenerateHomographyError("correspondences are coincident")
    s = math.sqrt(2.0) / d
    return np.array([[s, 0.0, -s * c[0]], [0.0, s, -s * c[1]], [0.0, 0.0, 1.0]])


def _apply(t: np.ndarray, pts: np.ndarray) -> np.ndarray:
    return pts @ t[:2, :2].T + t[:2, 2]


def dlt(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Normalized direct linear transform: least-squares ``H`` with ``dst ~ H src``."""
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    n = len(src)
    if n < 4:
        raise InsufficientCorrespondencesError(f"need >= 4 correspondences, got {n}")
    ts, td = _normalizing_transform(src), _normalizing_transform(dst)
    s, d = _apply(ts, src), _apply(td, dst)

    a = np.zeros((2 * n, 9))
    x, y = s[:, 0], s[:, 1]
    u, v = d[:, 0], d[:, 1]
    a[0::2, 0], a[0::2, 1], a[0::2, 2] = -x, -y, -1.0
    a[0::2, 6], a[0::2, 7], a[0::2, 8] = u * x, u * y, u
    a[1::2, 3], a[1::2, 4], a[1::2, 5] = -x, -y, -1.0
    a[1::2, 6], a[1::2, 7], a[1::2, 8] = v * x, v * y, v

    _, sv, vt = np.linalg.svd(a)
    # the solution is one-dimensional only when 8 singular values are nonzero
    if sv[7] <= _RANK_TOL * sv[0]:
        raise DegenerateHomographyError("correspondences are in a degenerate configuration")
    hn = vt[-1].reshape(3, 3)
    return np.linalg.inv(td) @ hn @ ts


def _visible(keypoints, min_confidence: float) -> tuple[np.ndarray, np.ndarray]:
    """Indices and image coordinates of usable keypoints.

    Accepts ``Keypoint`` objects, ``(x, y)`` pairs or ``None`` per landmark, or
    an ``(14, 2)`` array with NaN for invisible points.
    """
    if len(keypoints) != N_LANDMARKS:
        raise SchemaError(f"expected {N_LANDMARKS} keypoints, got {len(keypoints)}")
    idx, pts = [], []
    for i, k in enumerate(keypoints):
        if k is None:
            continue
        if hasattr(k, "visible"):
            if not k.visible or k.x is None or k.y is None:
                continue
            if k.confidence is not None and k.confidence < min_confidence:
                continue
            xy = (k.x, k.y)
        else:
            xy = tuple(k)
        if not (math.isfinite(xy[0]) and math.isfinite(xy[1])):
            continue
        idx.append(i)
        pts.append(xy)
    return np.array(idx, dtype=int), np.array(pts, dtype=float).reshape(-1, 2)


def _reprojection_errors(h: Homography, image_pts, court_pts) -> np.ndarray:
    back = project(np.linalg.inv(h.matrix), court_pts)
    return np.hypot(*(back - image_pts).T)


def estimate_homography(
    keypoints,
    model: CourtModel,
    *,
    min_confidence: float = DEFAULT_MIN_KEYPOINT_CONFIDENCE,
    robust: bool = True,
    gate_px: float = DEFAULT_REPROJECTION_GATE_PX,
) -> HomographyFit:
    """Fit the image-to-court homography over all usable keypoints.

    With ``robust`` set, points reprojecting worse than ``gate_px`` are dropped
    and the model is fitted once more, provided 4 points remain.
    """
    idx, img = _visible(keypoints, min_confidence)
    if len(idx) < 4:
        raise InsufficientCorrespondencesError(
            f"need >= 4 visible keypoints, got {len(idx)}"
        )
    court = model.landmarks[idx]
    h = Homography(dlt(img, court))
    err = _reprojection_errors(h, img, court)

    if robust and np.any(err > gate_px):
        keep = err <= gate_px
        if keep.sum() >= 4:
            idx, img, court = idx[keep], img[keep], court[keep]
            h = Homography(dlt(img, court))
            err = _reprojection_errors(h, img, court)

    return HomographyFit(h, float(err.mean()), tuple(int(i) for i in idx))


def homography_schedule(frames, model: CourtModel, **fit_kwargs) -> list[HomographyFit]:
    """One fit per frame.

    Frames with enough usable keypoints get a fresh estimate; others reuse the
    most recent one, and frames before the first estimate reuse the first.
    """
    fits: list[HomographyFit | None] = []
    last = None
    last_key = None
    for f in frames:
        fit = None
        if f.keypoints is not None:
            key = f.keypoints
            if last is not None and key == last_key:
                fit = last
            else:
                try:
                    fit = estimate_homography(f.keypoints, model, **fit_kwargs)
                    last_key = key
                except (InsufficientCorrespondencesError, DegenerateHomographyError) as exc:
                    logger.debug("frame %d: keeping previous homography (%s)", f.frame_index, exc)
        if fit is not None:
            last = fit
        fits.append(last)

    first = next((x for x in fits if x is not None), None)
    if first is None:
        raise CalibrationUnavailableError("no frame yields a court homography")
    return [x if x is not None else first for x in fits]


def image_boundary(h: Homography, model: CourtModel) -> np.ndarray:
    """Court boundary polygon in image pixels."""
    return project(np.linalg.inv(h.matrix), model.boundary)


# ---------------------------------------------------------------------------
# scalar calibration


@dataclass(frozen=True)
class CalibrationScale:
    meters_per_pixel: float
    reference_used: str

    def __post_init__(self):
        if not (self.meters_per_pixel > 0 and math.isfinite(self.meters_per_pixel)):
            raise DomainError("meters_per_pixel must be > 0")


def scale_from_measurement(length_px: float, length_m: float, reference: str = "") -> CalibrationScale:
    """Metres per pixel from a reference of known length measured in pixels."""
    if not length_px > 0:
        raise DomainError("reference length in pixels must be > 0")
    return CalibrationScale(length_m / length_px, reference)


def calibrate_scale(
    keypoints,
    model: CourtModel,
    reference: str = DEFAULT_REFERENCE,
    *,
    min_confidence: float = DEFAULT_MIN_KEYPOINT_CONFIDENCE,
) -> CalibrationScale:
    try:
        known = model.known_lengths[reference]
    except KeyError:
        raise DomainError(f"court model has no known length {reference!r}") from None
    idx, pts = _visible(keypoints, min_confidence)
    where = {int(i): p for i, p in zip(idx, pts)}
    i, j = known.landmarks
    if i not in where or j not in where:
        raise CalibrationUnavailableError(f"reference {reference!r} endpoints not visible")
    length_px = float(np.linalg.norm(where[i] - where[j]))
    return scale_from_measurement(length_px, known.length_m, reference)


def pixel_to_meters(distance_px, scale: CalibrationScale):
    d = np.asarray(distance_px, dtype=float)
    if np.any(d < 0):
        raise DomainError("pixel distance must be >= 0")
    out = d * scale.meters_per_pixel
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# polygon tests


def _point_in_polygon(x: float, y: float, poly) -> bool:
    inside = False
    n = len(poly)
    for k in range(n):
        x1, y1 = poly[k]
        x2, y2 = poly[(k + 1) % n]
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < xc:
                inside = not inside
    return inside


def distance_to_polygon_edges(p, poly) -> float:
    x, y = float(p[0]), float(p[1])
    pts = [(float(a), float(b)) for a, b in poly]
    best = math.inf
    for k in range(len(pts)):
        x1, y1 = pts[k]
        x2, y2 = pts[(k + 1) % len(pts)]
        dx, dy = x2 - x1, y2 - y1
        ll = dx * dx + dy * dy
        t = 0.0 if ll == 0 else min(1.0, max(0.0, ((x - x1) * dx + (y - y1) * dy) / ll))
        best = min(best, math.hypot(x - (x1 + t * dx), y - (y1 + t * dy)))
    return best


def point_in_or_near_court(p, boundary, margin_px: float = DEFAULT_NEAR_MARGIN_PX) -> bool:
    """True if ``p`` lies inside the polygon or within ``margin_px`` of an edge."""
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        return False
    poly = [(float(a), float(b)) for a, b in boundary]
    if _point_in_polygon(x, y, poly):
        return True
    return distance_to_polygon_edges((x, y), poly) <= margin_px


def polygon_centroid(poly) -> np.ndarray:
    """Area centroid of a simple polygon."""
    a = np.asarray(poly, dtype=float)
    b = np.roll(a, -1, axis=0)
    cross = a[:, 0] * b[:, 1] - b[:, 0] * a[:, 1]
    area = cross.sum() / 2.0
    if abs(area) < 1e-12:
        return a.mean(axis=0)
    cx = ((a[:, 0] + b[:, 0]) * cross).sum() / (6.0 * area)
    cy = ((a[:, 1] + b[:, 1]) * cross).sum() / (6.0 * area)
    return np.array([cx, cy])


def keypoints_array(keypoints: Sequence, min_confidence: float = DEFAULT_MIN_KEYPOINT_CONFIDENCE) -> np.ndarray:
    """``(14, 2)`` array of usable keypoints, NaN elsewhere."""
    out = np.full((N_LANDMARKS, 2), np.nan)
    idx, pts = _visible(keypoints, min_confidence)
    out[idx] = pts
    return out
