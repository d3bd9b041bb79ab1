"""Deterministic synthetic assets: hand shapes, datasets, pose stores.

The shipped corpus contains no real capture data, so demos, benches, and
the test suite build everything from seeded generators: one distinct
canonical hand shape per letter, jittered classification datasets, and
stylized pose sequences for the store and the fingerspelling letters.
"""

from __future__ import annotations

import string

import numpy as np

from .landmarks import (
    MIDDLE_MCP,
    NUM_LANDMARKS,
    WRIST,
    FeatureLayout,
    Handedness,
    RawHandFrame,
    extract_features,
    normalize,
)
from .neuralnet import LETTERS
from .retrieval import (
    DEFAULT_FPS,
    DEFAULT_LAYOUT,
    RIGHT_HAND_OFFSET,
    PoseSequence,
    PoseStore,
    SkeletonLayout,
    assemble_store,
)

DEFAULT_SHAPE_SEED = 7


def canonical_hand_shapes(seed: int = DEFAULT_SHAPE_SEED) -> dict[str, np.ndarray]:
    """One reproducible 21x3 hand shape per letter A-Z.

    Shapes are random points in image space with the wrist pinned and a
    healthy reference bone, so they normalize cleanly and stay far apart
    relative to small jitter.
    """
    rng = np.random.default_rng(seed)
    shapes = {}
    for letter in string.ascii_uppercase:
        pts = rng.uniform(0.2, 0.8, size=(NUM_LANDMARKS, 3))
        pts[:, 2] = rng.uniform(-0.1, 0.1, size=NUM_LANDMARKS)
        pts[WRIST] = (0.5, 0.85, 0.0)
        pts[MIDDLE_MCP] = pts[WRIST] + (rng.uniform(-0.05, 0.05), -0.3, 0.02)
        shapes[letter] = pts
    return shapes


def classification_dataset(
    n_per_class: int = 200,
    sigma: float = 0.02,
    seed: int = 0,
    layout: FeatureLayout = FeatureLayout.POINT_CLOUD_3D,
    shape_seed: int = DEFAULT_SHAPE_SEED,
):
    """Jittered synthetic dataset over the 24 static letters.

    Returns (features, labels) pairs ready for train(): each sample is a
    canonical shape plus Gaussian noise, normalized to the reference frame.
    """
    rng = np.random.default_rng(seed)
    shapes = canonical_hand_shapes(shape_seed)
    dataset = []
    for label, letter in enumerate(LETTERS):
        base = shapes[letter]
        for _ in range(n_per_class):
            jittered = base + rng.normal(0.0, sigma, size=base.shape)
            frame = RawHandFrame(points=jittered, handedness=Handedness.RIGHT, timestamp_ms=0)
            dataset.append((extract_features(normalize(frame), layout), label))
    return dataset


def frame_stream(
    text: str,
    frames_per_letter: int,
    absence_frames: int,
    seed: int = 0,
    sigma: float = 0.005,
    fps: float = 30.0,
    shape_seed: int = DEFAULT_SHAPE_SEED,
) -> list[dict]:
    """Wire-format frame records spelling out text (spaces become absences).

    Each letter is held for frames_per_letter frames of its jittered
    canonical shape; a space yields absence_frames null-landmark records.
    """
    rng = np.random.default_rng(seed)
    shapes = canonical_hand_shapes(shape_seed)
    interval = int(round(1000.0 / fps))
    records = []
    t = 0
    for ch in text.upper():
        if ch == " ":
            for _ in range(absence_frames):
                records.append({"type": "frame", "t": t, "handedness": "right",
                                "landmarks": None})
                t += interval
            continue
        if ch not in LETTERS:
            raise ValueError(f"{ch!r} is not a static fingerspelling letter")
        base = shapes[ch]
        for _ in range(frames_per_letter):
            pts = base + rng.normal(0.0, sigma, size=base.shape)
            records.append({
                "type": "frame", "t": t, "handedness": "right",
                "landmarks": [[float(c) for c in p] for p in pts],
            })
            t += interval
    # Trailing absence so the last word finalizes.
    for _ in range(absence_frames):
        records.append({"type": "frame", "t": t, "handedness": "right", "landmarks": None})
        t += interval
    return records


def _pose_frames(rng: np.random.Generator, n_frames: int, layout: SkeletonLayout,
                 hand_shape: np.ndarray | None = None) -> np.ndarray:
    """Stylized skeleton motion with optional right-hand letter shape."""
    frames = np.zeros((n_frames, layout.points, 4))
    base = rng.uniform(0.3, 0.7, size=(layout.points, 3))
    drift = rng.uniform(-0.02, 0.02, size=(layout.points, 3))
    for i in range(n_frames):
        wave = 0.01 * np.sin(2.0 * np.pi * i / max(n_frames, 2))
        frames[i, :, :3] = base + i * drift / max(n_frames, 1) + wave
        frames[i, :, 3] = 1.0
    if hand_shape is not None and layout.points >= RIGHT_HAND_OFFSET + NUM_LANDMARKS:
        scaled = 0.2 * (hand_shape - hand_shape[WRIST]) + (0.65, 0.45, 0.0)
        frames[:, RIGHT_HAND_OFFSET:RIGHT_HAND_OFFSET + NUM_LANDMARKS, :3] = scaled
    return frames


def letter_pose_records(
    seed: int = DEFAULT_SHAPE_SEED,
    frames_per_letter: int = 8,
    layout: SkeletonLayout = DEFAULT_LAYOUT,
) -> list[tuple[str, np.ndarray]]:
    """(letter, frames) records for all 26 letters, J and Z included."""
    rng = np.random.default_rng(seed)
    shapes = canonical_hand_shapes(seed)
    return [(letter, _pose_frames(rng, frames_per_letter, layout, shapes[letter]))
            for letter in string.ascii_uppercase]


def gloss_pose_records(
    glosses,
    seed: int = 11,
    frames_per_gloss: int = 12,
    layout: SkeletonLayout = DEFAULT_LAYOUT,
) -> list[tuple[str, np.ndarray, None]]:
    """(gloss, frames, embedding=None) records for store assembly."""
    rng = np.random.default_rng(seed)
    return [(gloss, _pose_frames(rng, frames_per_gloss, layout), None)
            for gloss in glosses]


def demo_store(glosses, provider, layout: SkeletonLayout = DEFAULT_LAYOUT,
               fps: float = DEFAULT_FPS, seed: int = 11) -> PoseStore:
    """A complete synthetic pose store for the given gloss vocabulary."""
    return assemble_store(
        gloss_pose_records(glosses, seed=seed, layout=layout),
        letter_pose_records(layout=layout),
        provider, layout=layout, fps=fps,
    )


def write_store_inputs(entries_path, letters_path, glosses, seed: int = 11,
                       layout: SkeletonLayout = DEFAULT_LAYOUT) -> None:
    """Write entries.jsonl / letters.jsonl inputs for the build-posedb CLI."""
    import json

    with open(entries_path, "w", encoding="utf-8") as fh:
        for gloss, frames, _ in gloss_pose_records(glosses, seed=seed, layout=layout):
            fh.write(json.dumps({"gloss": gloss, "frames": frames.tolist()}))
            fh.write("\n")
    with open(letters_path, "w", encoding="utf-8") as fh:
        for letter, frames in letter_pose_records(layout=layout):
            fh.write(json.dumps({"letter": letter, "frames": frames.tolist()}))
            fh.write("\n")
