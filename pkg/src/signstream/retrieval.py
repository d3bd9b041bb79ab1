"""Production back end: embeddings, pose store, retrieval, stitching.

Glosses are matched against a file-backed store of (gloss, unit embedding,
pose sequence) records by exhaustive cosine scan; anything below the
similarity threshold is fingerspelled by stitching per-letter pose
sequences with linearly interpolated transition frames.
"""

from __future__ import annotations

import json
import logging
import os
import string
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

log = logging.getLogger(__name__)

STORE_FORMAT_VERSION = 1
DEFAULT_DIMENSION = 384
DEFAULT_FPS = 30.0
DEFAULT_THRESHOLD = 0.6
DEFAULT_TRANSITION_FRAMES = 8

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = 0xFFFFFFFFFFFFFFFF


class RetrievalError(Exception):
    pass


class UnknownToken(RetrievalError):
    pass


class RemoteFailure(RetrievalError):
    pass


class DimensionMismatch(RetrievalError):
    pass


class EmptyStore(RetrievalError):
    pass


class UnsupportedCharacter(RetrievalError):
    pass


class LayoutMismatch(RetrievalError):
    pass


class FpsMismatch(RetrievalError):
    pass


class DuplicateGloss(RetrievalError):
    pass


class MissingLetterPose(RetrievalError):
    pass


class FormatError(RetrievalError):
    pass


# ---------------------------------------------------------------------------
# Skeleton layout and pose sequences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SkeletonLayout:
    """Point schema for pose frames; manifest-driven so any layout loads."""

    name: str
    points: int

    def __post_init__(self):
        if self.points < 1:
            raise FormatError("layout needs at least one point")


# 33 body points plus 21 per hand; face points are dropped because manual
# signs do not need them and they dominate the holistic point budget.
BODY_POINTS = 33
HAND_POINTS = 21
LEFT_HAND_OFFSET = BODY_POINTS
RIGHT_HAND_OFFSET = BODY_POINTS + HAND_POINTS
DEFAULT_LAYOUT = SkeletonLayout("upper-body+hands", BODY_POINTS + 2 * HAND_POINTS)


@dataclass(frozen=True)
class PoseSequence:
    """Frames of skeletal poses: array (frames, points, 4) of x, y, z, visibility."""

    frames: np.ndarray
    fps: float = DEFAULT_FPS

    def __post_init__(self):
        arr = np.asarray(self.frames, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[0] < 1 or arr.shape[2] != 4:
            raise FormatError(f"pose frames must be (F, P, 4), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise FormatError("pose coordinates must be finite")
        vis = arr[:, :, 3]
        if np.any(vis < 0.0) or np.any(vis > 1.0):
            raise FormatError("visibility must lie in [0, 1]")
        if self.fps <= 0:
            raise FormatError("fps must be positive")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "frames", arr)

    def __len__(self) -> int:
        return self.frames.shape[0]

    @property
    def points(self) -> int:
        return self.frames.shape[1]


@dataclass(frozen=True)
class PoseEntry:
    gloss: str
    embedding: np.ndarray
    sequence: PoseSequence


@dataclass(frozen=True)
class StoreManifest:
    dimension: int
    layout: SkeletonLayout
    fps: float
    count: int
    format_version: int = STORE_FORMAT_VERSION


@dataclass
class PoseStore:
    """Immutable-after-load collection of pose entries plus letter poses."""

    manifest: StoreManifest
    entries: list[PoseEntry]
    letter_poses: dict[str, PoseSequence]
    _matrix: np.ndarray | None = field(default=None, repr=False)

    def embedding_matrix(self) -> np.ndarray:
        if self._matrix is None or self._matrix.shape[0] != len(self.entries):
            self._matrix = (np.stack([e.embedding for e in self.entries])
                            if self.entries else np.zeros((0, self.manifest.dimension)))
        return self._matrix


def as_unit_vector(values, dimension: int | None = None) -> np.ndarray:
    """Validate and L2-normalize an embedding vector."""
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    if dimension is not None and v.size != dimension:
        raise DimensionMismatch(f"expected dimension {dimension}, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise FormatError("embedding values must be finite")
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise FormatError("cannot normalize a zero embedding")
    return v / norm


def check_unit_vector(values, dimension: int | None = None) -> np.ndarray:
    """Validate a vector that must already be unit norm (within 1e-9).

    Unlike as_unit_vector this never rescales, so similarities computed
    from it stay bit-exact against the caller's vector.
    """
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    if dimension is not None and v.size != dimension:
        raise DimensionMismatch(f"expected dimension {dimension}, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise FormatError("embedding values must be finite")
    if abs(float(np.linalg.norm(v)) - 1.0) > 1e-9:
        raise FormatError("vector is not unit norm")
    return v


# ---------------------------------------------------------------------------
# Embedding providers
# ---------------------------------------------------------------------------

def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _U64
    return h


class HashedNGramProvider:
    """Deterministic stand-in embedding: hashed character trigrams.

    The lowercased text is wrapped in ^...$ sentinels, each trigram is
    FNV-1a-hashed to pick a dimension (hash mod dim) and a sign (bit 32),
    and the accumulated vector is L2-normalized. Total coverage: every
    non-empty string embeds, so retrieval never dead-ends.
    """

    def __init__(self, dimension: int = DEFAULT_DIMENSION):
        if dimension < 1:
            raise DimensionMismatch("dimension must be positive")
        self.dimension = dimension

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise UnknownToken("cannot embed empty text")
        padded = "^" + text.lower() + "$"
        acc = np.zeros(self.dimension)
        for i in range(len(padded) - 2):
            h = _fnv1a64(padded[i:i + 3].encode("utf-8"))
            sign = 1.0 if (h >> 32) & 1 else -1.0
            acc[h % self.dimension] += sign
        if not np.any(acc):
            # Signed contributions cancelled; fall back to unsigned counts.
            for i in range(len(padded) - 2):
                h = _fnv1a64(padded[i:i + 3].encode("utf-8"))
                acc[h % self.dimension] += 1.0
        return acc / np.linalg.norm(acc)


class FileBackedProvider:
    """Exact lookup in a precomputed token -> vector table."""

    def __init__(self, table: dict[str, np.ndarray], dimension: int):
        self.dimension = dimension
        self._table = {token: as_unit_vector(vec, dimension) for token, vec in table.items()}

    @classmethod
    def from_file(cls, path) -> "FileBackedProvider":
        """Load token<TAB>comma-separated-floats lines."""
        table = {}
        dimension = None
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                try:
                    token, values = line.split("\t")
                    vec = np.asarray([float(x) for x in values.split(",")])
                except ValueError:
                    raise FormatError(f"{path}:{lineno}: expected token<TAB>floats") from None
                if dimension is None:
                    dimension = vec.size
                table[token] = vec
        if dimension is None:
            raise FormatError(f"{path}: empty embedding table")
        return cls(table, dimension)

    def embed(self, text: str) -> np.ndarray:
        try:
            return self._table[text]
        except KeyError:
            raise UnknownToken(f"no precomputed embedding for {text!r}") from None


class RemoteProvider:
    """HTTP embedding endpoint: POST {"text": ...} -> {"embedding": [...]}."""

    def __init__(self, endpoint: str, dimension: int = DEFAULT_DIMENSION,
                 timeout_ms: int = 10_000):
        self.endpoint = endpoint
        self.dimension = dimension
        self.timeout_ms = timeout_ms

    def embed(self, text: str) -> np.ndarray:
        import requests

        try:
            response = requests.post(self.endpoint, json={"text": text},
                                     timeout=self.timeout_ms / 1000.0)
            response.raise_for_status()
            return as_unit_vector(response.json()["embedding"], self.dimension)
        except Exception as exc:
            raise RemoteFailure(f"embedding endpoint failed: {exc}") from exc


def make_provider(spec: str, dimension: int = DEFAULT_DIMENSION):
    """Provider from a CLI/config spec: "hashed" or "file:<path>"."""
    if spec == "hashed":
        return HashedNGramProvider(dimension)
    if spec.startswith("file:"):
        return FileBackedProvider.from_file(spec[len("file:"):])
    raise ValueError(f"unknown provider spec {spec!r}")


# ---------------------------------------------------------------------------
# Similarity and retrieval
# ---------------------------------------------------------------------------

def cosine_similarity(a, b) -> float:
    """Dot product of unit vectors, clamped into [-1, 1] against rounding."""
    va = np.asarray(a, dtype=np.float64).reshape(-1)
    vb = np.asarray(b, dtype=np.float64).reshape(-1)
    if va.size != vb.size:
        raise DimensionMismatch(f"dimension mismatch: {va.size} vs {vb.size}")
    return float(np.clip(np.dot(va, vb), -1.0, 1.0))


def query(store: PoseStore, v, threshold: float):
    """Best entry by cosine similarity, or None below the threshold.

    Exhaustive scan over the store; exact ties go to the lexicographically
    smaller gloss so retrieval is deterministic.
    """
    if not -1.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [-1, 1], got {threshold}")
    if not store.entries:
        raise EmptyStore("store has no entries")
    vec = check_unit_vector(v, store.manifest.dimension)
    sims = np.clip(store.embedding_matrix() @ vec, -1.0, 1.0)
    best = float(sims[np.argmax(sims)])
    if best < threshold:
        return None
    tied = np.flatnonzero(sims == best)
    idx = min(tied, key=lambda i: store.entries[i].gloss)
    return store.entries[idx], best


class Source(Enum):
    RETRIEVED = "retrieved"
    FINGERSPELLED = "fingerspelled"


@dataclass(frozen=True)
class RetrievalResult:
    gloss: str
    matched: tuple[str, float] | None
    source: Source
    sequence: PoseSequence


def stitch(sequences: list[PoseSequence], transition_frames: int = DEFAULT_TRANSITION_FRAMES) -> PoseSequence:
    """Concatenate sequences with linear transitions at every junction.

    Between consecutive sequences, transition frame j of T moves
    j/(T+1) of the way from the last frame of one to the first frame of
    the next (visibility interpolates the same way), so the output length
    is sum(len(S_i)) + (n-1)*T.
    """
    if not sequences:
        raise ValueError("stitch needs at least one sequence")
    if transition_frames < 0:
        raise ValueError("transition_frames must be >= 0")
    first = sequences[0]
    for seq in sequences[1:]:
        if seq.points != first.points:
            raise LayoutMismatch(f"point counts differ: {seq.points} vs {first.points}")
        if seq.fps != first.fps:
            raise FpsMismatch(f"frame rates differ: {seq.fps} vs {first.fps}")
    if len(sequences) == 1:
        return first
    parts = [sequences[0].frames]
    for prev, nxt in zip(sequences, sequences[1:]):
        a = prev.frames[-1]
        b = nxt.frames[0]
        for j in range(1, transition_frames + 1):
            t = j / (transition_frames + 1)
            parts.append((a + t * (b - a))[None, :, :])
        parts.append(nxt.frames)
    return PoseSequence(frames=np.concatenate(parts, axis=0), fps=first.fps)


def fingerspell(gloss: str, store: PoseStore,
                transition_frames: int = DEFAULT_TRANSITION_FRAMES) -> PoseSequence:
    """Stitch per-letter pose sequences for a gloss absent from the store."""
    if not gloss:
        raise ValueError("cannot fingerspell an empty gloss")
    for c in gloss:
        if c not in string.ascii_uppercase:
            raise UnsupportedCharacter(f"cannot fingerspell {c!r} in {gloss!r}")
        if c not in store.letter_poses:
            raise MissingLetterPose(f"store has no pose for letter {c!r}")
    return stitch([store.letter_poses[c] for c in gloss], transition_frames)


@dataclass(frozen=True)
class ProduceResult:
    sequence: PoseSequence | None
    results: tuple[RetrievalResult, ...]
    empty_gloss: bool
    fps: float


def produce(text: str, store: PoseStore, translator=None, provider=None,
            threshold: float = DEFAULT_THRESHOLD,
            transition_frames: int = DEFAULT_TRANSITION_FRAMES) -> ProduceResult:
    """Text -> gloss -> per-token retrieval or fingerspelling -> one stitched sequence.

    A token whose embedding misses the threshold (or cannot be embedded at
    all under a file-backed provider) falls back to fingerspelling. Stop-
    word-only input produces an empty result flagged empty_gloss.
    """
    from .gloss import translate_rule_based

    translator = translator or translate_rule_based
    provider = provider or HashedNGramProvider(store.manifest.dimension)
    sequence = translator(text)
    if not sequence.tokens:
        return ProduceResult(None, (), True, store.manifest.fps)

    results = []
    for token in sequence.tokens:
        match = None
        try:
            vec = provider.embed(token)
            match = query(store, vec, threshold)
        except (UnknownToken, RemoteFailure) as exc:
            log.warning("embedding failed for %r (%s); fingerspelling", token, exc)
        if match is not None:
            entry, sim = match
            results.append(RetrievalResult(token, (entry.gloss, sim), Source.RETRIEVED,
                                           entry.sequence))
        else:
            results.append(RetrievalResult(token, None, Source.FINGERSPELLED,
                                           fingerspell(token, store, transition_frames)))
    stitched = stitch([r.sequence for r in results], transition_frames)
    return ProduceResult(stitched, tuple(results), False, stitched.fps)


# ---------------------------------------------------------------------------
# Store construction and persistence
# ---------------------------------------------------------------------------

def detect_layout(frames) -> SkeletonLayout:
    """Layout implied by a frames array: the default name when it matches."""
    points = np.asarray(frames).shape[1] if np.asarray(frames).ndim == 3 else len(frames[0])
    if points == DEFAULT_LAYOUT.points:
        return DEFAULT_LAYOUT
    return SkeletonLayout(f"custom-{points}", points)


def assemble_store(entry_records, letter_records, provider,
                   layout: SkeletonLayout | None = None,
                   fps: float = DEFAULT_FPS) -> PoseStore:
    """Build a store from in-memory records.

    entry_records: iterable of (gloss, frames, embedding-or-None);
    letter_records: iterable of (letter, frames). Embeddings are taken
    from the record when present, otherwise computed with the provider;
    either way they are unit-normalized. With no explicit layout the
    first record's point count decides.
    """
    entry_records = list(entry_records)
    letter_records = list(letter_records)
    if layout is None:
        if entry_records:
            layout = detect_layout(entry_records[0][1])
        elif letter_records:
            layout = detect_layout(letter_records[0][1])
        else:
            layout = DEFAULT_LAYOUT
    entries = []
    seen = set()
    for gloss, frames, embedding in entry_records:
        if gloss in seen:
            raise DuplicateGloss(f"duplicate gloss {gloss!r}")
        seen.add(gloss)
        seq = PoseSequence(frames=frames, fps=fps)
        if seq.points != layout.points:
            raise LayoutMismatch(f"{gloss!r}: {seq.points} points, layout has {layout.points}")
        vec = provider.embed(gloss) if embedding is None else np.asarray(embedding)
        entries.append(PoseEntry(gloss, as_unit_vector(vec, provider.dimension), seq))

    letter_poses = {}
    for letter, frames in letter_records:
        if letter in letter_poses:
            raise FormatError(f"duplicate letter pose {letter!r}")
        seq = PoseSequence(frames=frames, fps=fps)
        if seq.points != layout.points:
            raise LayoutMismatch(f"letter {letter!r}: {seq.points} points, layout has {layout.points}")
        letter_poses[letter] = seq
    missing = sorted(set(string.ascii_uppercase) - set(letter_poses))
    if missing:
        raise MissingLetterPose(f"missing letter poses: {', '.join(missing)}")

    manifest = StoreManifest(dimension=provider.dimension, layout=layout, fps=fps,
                             count=len(entries))
    return PoseStore(manifest=manifest, entries=entries, letter_poses=letter_poses)


def _read_jsonl(path, required_fields):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            for field_name in required_fields:
                if field_name not in rec:
                    raise FormatError(f"{path}:{lineno}: missing {field_name!r}")
            yield rec


def build_store(entries_path, letters_path, provider,
                layout: SkeletonLayout | None = None,
                fps: float = DEFAULT_FPS) -> PoseStore:
    """Build a store from entries.jsonl and letters.jsonl files."""
    entry_records = [(rec["gloss"], rec["frames"], rec.get("embedding"))
                     for rec in _read_jsonl(entries_path, ("gloss", "frames"))]
    letter_records = [(rec["letter"], rec["frames"])
                      for rec in _read_jsonl(letters_path, ("letter", "frames"))]
    return assemble_store(entry_records, letter_records, provider, layout, fps)


def _fmt(x: float) -> str:
    # 17 significant digits: enough to round-trip any float64 exactly.
    return format(float(x), ".17g")


def _frames_json(frames: np.ndarray) -> str:
    return "[" + ",".join(
        "[" + ",".join(
            "[" + ",".join(_fmt(c) for c in point) + "]" for point in frame
        ) + "]" for frame in frames
    ) + "]"


def save_store(store: PoseStore, directory) -> None:
    """Write manifest.json, entries.jsonl and letters.jsonl."""
    os.makedirs(directory, exist_ok=True)
    manifest = {
        "format_version": store.manifest.format_version,
        "dimension": store.manifest.dimension,
        "layout": {"name": store.manifest.layout.name, "points": store.manifest.layout.points},
        "fps": store.manifest.fps,
        "count": len(store.entries),
    }
    with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    with open(os.path.join(directory, "entries.jsonl"), "w", encoding="utf-8") as fh:
        for entry in store.entries:
            fh.write('{"gloss":%s,"embedding":[%s],"frames":%s}\n' % (
                json.dumps(entry.gloss),
                ",".join(_fmt(x) for x in entry.embedding),
                _frames_json(entry.sequence.frames),
            ))
    with open(os.path.join(directory, "letters.jsonl"), "w", encoding="utf-8") as fh:
        for letter in sorted(store.letter_poses):
            fh.write('{"letter":%s,"frames":%s}\n' % (
                json.dumps(letter),
                _frames_json(store.letter_poses[letter].frames),
            ))


def load_store(directory) -> PoseStore:
    """Load a store directory; numeric fields round-trip bit-exact."""
    try:
        with open(os.path.join(directory, "manifest.json"), "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        if raw.get("format_version") != STORE_FORMAT_VERSION:
            raise FormatError(f"unsupported store format {raw.get('format_version')!r}")
        layout = SkeletonLayout(raw["layout"]["name"], int(raw["layout"]["points"]))
        manifest = StoreManifest(dimension=int(raw["dimension"]), layout=layout,
                                 fps=float(raw["fps"]), count=int(raw["count"]))
    except (OSError, KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"unreadable manifest: {exc}") from None

    entries = []
    seen = set()
    for rec in _read_jsonl(os.path.join(directory, "entries.jsonl"),
                           ("gloss", "embedding", "frames")):
        if rec["gloss"] in seen:
            raise DuplicateGloss(f"duplicate gloss {rec['gloss']!r}")
        seen.add(rec["gloss"])
        vec = np.asarray(rec["embedding"], dtype=np.float64)
        if vec.size != manifest.dimension:
            raise DimensionMismatch(f"{rec['gloss']!r}: dimension {vec.size}")
        if abs(float(np.linalg.norm(vec)) - 1.0) > 1e-9:
            raise FormatError(f"{rec['gloss']!r}: stored embedding is not unit norm")
        seq = PoseSequence(frames=np.asarray(rec["frames"], dtype=np.float64),
                           fps=manifest.fps)
        if seq.points != layout.points:
            raise LayoutMismatch(f"{rec['gloss']!r}: {seq.points} points")
        entries.append(PoseEntry(rec["gloss"], vec, seq))
    if len(entries) != manifest.count:
        raise FormatError(f"manifest count {manifest.count} != {len(entries)} entries")

    letter_poses = {}
    for rec in _read_jsonl(os.path.join(directory, "letters.jsonl"), ("letter", "frames")):
        if rec["letter"] in letter_poses:
            raise FormatError(f"duplicate letter pose {rec['letter']!r}")
        seq = PoseSequence(frames=np.asarray(rec["frames"], dtype=np.float64),
                           fps=manifest.fps)
        if seq.points != layout.points:
            raise LayoutMismatch(f"letter {rec['letter']!r}: {seq.points} points")
        letter_poses[rec["letter"]] = seq
    missing = sorted(set(string.ascii_uppercase) - set(letter_poses))
    if missing:
        raise MissingLetterPose(f"missing letter poses: {', '.join(missing)}")
    return PoseStore(manifest=manifest, entries=entries, letter_poses=letter_poses)
