"""Canonical geometry for 21-point hand-landmark frames.

Frames arrive from an upstream extractor in image coordinates (x, y roughly
in [0, 1], z relative depth). Everything downstream works on a canonical
representation: right-handed, wrist at the origin, wrist-to-middle-MCP
bone scaled to unit length. All math is float64.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

NUM_LANDMARKS = 21

# Landmark indices (MediaPipe hand layout)
WRIST = 0
THUMB_TIP = 4
INDEX_MCP = 5
INDEX_TIP = 8
MIDDLE_MCP = 9
MIDDLE_TIP = 12
RING_MCP = 13
PINKY_MCP = 17
PINKY_TIP = 20

# Reference bone for scale normalization: wrist -> middle MCP. It is rigid
# across letter shapes, unlike fingertip distances.
REFERENCE_POINT = MIDDLE_MCP
DEGENERATE_BONE_LENGTH = 1e-6
MAX_NORMALIZED_COORD = 100.0


class FrameError(ValueError):
    """Base class for frame validation failures."""


class WrongArity(FrameError):
    """Landmark array is not 21 points of 3 components."""


class NonFinite(FrameError):
    """A landmark coordinate is NaN or infinite."""


class MissingField(FrameError):
    """A required field is absent from a frame record."""


class DegenerateFrame(FrameError):
    """Reference bone collapsed; the frame cannot be normalized."""


class Handedness(Enum):
    LEFT = "left"
    RIGHT = "right"


class FeatureLayout(Enum):
    FLAT_2D = "flat2d"          # 42 values, x/y interleaved, z dropped
    POINT_CLOUD_3D = "pointcloud3d"  # 21 x 3 in landmark order


def _as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=np.float64)
    if arr.shape != (NUM_LANDMARKS, 3):
        raise WrongArity(f"expected {NUM_LANDMARKS}x3 landmarks, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFinite("landmark coordinates must be finite")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RawHandFrame:
    """One video frame's hand as delivered by the extractor."""

    points: np.ndarray
    handedness: Handedness
    timestamp_ms: int

    def __post_init__(self):
        object.__setattr__(self, "points", _as_points(self.points))
        if self.timestamp_ms < 0:
            raise FrameError(f"timestamp_ms must be non-negative, got {self.timestamp_ms}")


@dataclass(frozen=True)
class NormalizedHandFrame:
    """Hand frame in the canonical reference frame.

    Invariants: point 0 is exactly the origin, |point 9| == 1 within 1e-9,
    and no coordinate exceeds 100 in magnitude.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = _as_points(self.points)
        if np.any(pts[WRIST] != 0.0):
            raise FrameError("wrist must sit exactly at the origin")
        ref = np.linalg.norm(pts[REFERENCE_POINT])
        if abs(ref - 1.0) > 1e-9:
            raise FrameError(f"reference bone length must be 1, got {ref!r}")
        if np.max(np.abs(pts)) > MAX_NORMALIZED_COORD:
            raise DegenerateFrame("normalized coordinates exceed sanity bound")
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True)
class FeatureVector:
    """Flat classifier input extracted from a normalized frame."""

    values: np.ndarray
    layout: FeatureLayout

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        expected = 2 * NUM_LANDMARKS if self.layout is FeatureLayout.FLAT_2D else 3 * NUM_LANDMARKS
        if vals.size != expected:
            raise WrongArity(f"{self.layout.value} expects {expected} values, got {vals.size}")
        if not np.all(np.isfinite(vals)):
            raise NonFinite("feature values must be finite")
        vals = vals.reshape(-1).copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def as_points(self) -> np.ndarray:
        """Feature values as a (21, 3) point array (PointCloud3D only)."""
        if self.layout is not FeatureLayout.POINT_CLOUD_3D:
            raise WrongArity("as_points() requires the PointCloud3D layout")
        return self.values.reshape(NUM_LANDMARKS, 3)


def parse_raw_frame(payload: dict) -> RawHandFrame:
    """Validate a wire/file frame record into a RawHandFrame.

    The record shape is {"landmarks": [[x,y,z] * 21], "handedness":
    "left"|"right", "t": <int ms>}. A record with null landmarks means
    "no hand detected" and is the caller's business; it is rejected here.
    """
    for field in ("landmarks", "handedness", "t"):
        if field not in payload:
            raise MissingField(f"frame record missing {field!r}")
    if payload["landmarks"] is None:
        raise MissingField("landmarks is null (no hand); not parseable as a frame")
    try:
        handedness = Handedness(payload["handedness"])
    except ValueError:
        raise MissingField(f"unknown handedness {payload['handedness']!r}") from None
    t = payload["t"]
    if not isinstance(t, int) or isinstance(t, bool):
        raise MissingField(f"t must be an integer millisecond count, got {t!r}")
    return RawHandFrame(points=payload["landmarks"], handedness=handedness, timestamp_ms=t)


def serialize_frame(frame: RawHandFrame) -> dict:
    """Inverse of parse_raw_frame; round-trips bit-exact."""
    return {
        "landmarks": [[float(c) for c in p] for p in frame.points],
        "handedness": frame.handedness.value,
        "t": frame.timestamp_ms,
    }


def canonicalize_handedness(frame: RawHandFrame) -> RawHandFrame:
    """Mirror left hands into the right-hand canonical form.

    Right-handed frames pass through unchanged, so the operation is
    idempotent. Mirroring is x -> -x on every landmark.
    """
    if frame.handedness is Handedness.RIGHT:
        return frame
    mirrored = frame.points.copy()
    mirrored[:, 0] = -mirrored[:, 0]
    return replace(frame, points=mirrored, handedness=Handedness.RIGHT)


def normalize(frame: RawHandFrame) -> NormalizedHandFrame:
    """Translate the wrist to the origin and scale the reference bone to 1.

    p'_i = (p_i - p_0) / |p_9 - p_0|. Raises DegenerateFrame when the
    wrist-to-middle-MCP distance is at or below 1e-6 (collapsed detection),
    instead of producing exploding coordinates.
    """
    pts = frame.points
    centered = pts - pts[WRIST]
    ref = float(np.linalg.norm(centered[REFERENCE_POINT]))
    if ref <= DEGENERATE_BONE_LENGTH:
        raise DegenerateFrame(f"reference bone length {ref!r} <= {DEGENERATE_BONE_LENGTH}")
    scaled = centered / ref
    scaled[WRIST] = 0.0  # exact, not merely within rounding
    return NormalizedHandFrame(points=scaled)


def extract_features(frame: NormalizedHandFrame, layout: FeatureLayout) -> FeatureVector:
    """Flatten a normalized frame for one of the two classifier variants.

    FLAT_2D drops z and yields [x0, y0, ..., x20, y20]; POINT_CLOUD_3D
    yields the 21x3 coordinates verbatim.
    """
    if layout is FeatureLayout.FLAT_2D:
        values = frame.points[:, :2].reshape(-1)
    else:
        values = frame.points.reshape(-1)
    return FeatureVector(values=values, layout=layout)


def load_dataset(path) -> list[tuple[str, RawHandFrame]]:
    """Read a newline-delimited training dataset.

    Each line is {"label": "A".."Y" (no J/Z), "landmarks": [[x,y,z] * 21]}.
    Returns (label, frame) pairs; frames get right handedness and t=0 since
    the dataset format does not carry either.
    """
    import json

    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if "label" not in rec or "landmarks" not in rec:
                raise MissingField(f"{path}:{lineno}: dataset record needs label and landmarks")
            frame = RawHandFrame(points=rec["landmarks"], handedness=Handedness.RIGHT, timestamp_ms=0)
            records.append((rec["label"], frame))
    return records


def save_dataset(path, records) -> None:
    """Write (label, RawHandFrame) pairs in the dataset file format."""
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for label, frame in records:
            fh.write(json.dumps({
                "label": label,
                "landmarks": [[float(c) for c in p] for p in frame.points],
            }))
            fh.write("\n")
