"""Streaming letter synthesis: many classified frames in, text out.

A letter must persist over K consecutive frames before it commits, a hand
absent for A frames ends the word, and the same letter never commits more
than twice in a row. The step function is pure: replaying a frame log
reproduces the transcript exactly.
"""

from __future__ import annotations

import logging
import string
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .landmarks import (
    INDEX_MCP,
    INDEX_TIP,
    MIDDLE_MCP,
    RING_MCP,
    THUMB_TIP,
    NormalizedHandFrame,
)
from .neuralnet import LETTERS

WORD_BOUNDARY = " "

# Letters the classifiers confuse most; a closed fist varies only in thumb
# placement across these five.
AMBIGUOUS_LETTERS = frozenset("AMNST")

# Geometric constants for the thumb rules, measured on the canonical
# right-hand unit frame. Replaceable if real data disagrees.
THUMB_INDEX_TIP_DISTANCE = 0.35


@dataclass(frozen=True)
class RecognizerConfig:
    debounce_frames: int = 5
    absence_frames: int = 10
    confidence_floor: float = 0.5
    correction_enabled: bool = True
    # Fixed by the pipeline: a letter may repeat at most twice in a row.
    max_consecutive_repeat: int = field(default=2, init=False)

    def __post_init__(self):
        if self.debounce_frames < 1 or self.absence_frames < 1:
            raise ValueError("debounce_frames and absence_frames must be >= 1")
        if not 0.0 <= self.confidence_floor <= 1.0:
            raise ValueError("confidence_floor must lie in [0, 1]")


@dataclass(frozen=True)
class TranscriptState:
    """Immutable recognizer state; step() returns a fresh one."""

    pending_letter: str | None = None
    run_count: int = 0
    absence_count: int = 0
    committed: tuple[str, ...] = ()
    consecutive_repeat_of_last: int = 0


class EventKind(Enum):
    LETTER_COMMITTED = "letter"
    SPACE_COMMITTED = "space"
    WORD_FINALIZED = "word"


@dataclass(frozen=True)
class RecognitionEvent:
    kind: EventKind
    letter: str | None = None
    confidence: float | None = None
    raw_word: str | None = None
    corrected_word: str | None = None


def disambiguate(probs, frame: NormalizedHandFrame) -> tuple[str, float]:
    """Resolve {A, M, N, S, T} confusions from thumb geometry.

    Everything else passes through as (argmax letter, its probability).
    For the ambiguous set, the thumb-tip x relative to the finger MCP
    columns of the canonical right-hand frame decides; the chosen letter
    absorbs the whole probability mass of the set. Inconclusive geometry
    falls back to the argmax.
    """
    p = np.asarray(probs, dtype=np.float64)
    top = int(p.argmax())
    letter = LETTERS[top]
    if letter not in AMBIGUOUS_LETTERS:
        return letter, float(p[top])

    pts = frame.points
    tx = pts[THUMB_TIP, 0]
    ix = pts[INDEX_MCP, 0]
    mx = pts[MIDDLE_MCP, 0]
    rx = pts[RING_MCP, 0]

    chosen = None
    if tx > ix:
        chosen = "A"  # thumb beside the index finger
    elif tx < rx:
        chosen = "M"  # thumb across at least three fingers
    elif tx < mx:
        chosen = "N"  # thumb past the index and middle only
    elif float(np.linalg.norm(pts[THUMB_TIP] - pts[INDEX_TIP])) < THUMB_INDEX_TIP_DISTANCE:
        # Thumb in front, crossing the index: S buries it toward the
        # middle knuckle, T leaves it at the index side.
        chosen = "S" if tx < (ix + mx) / 2.0 else "T"
    if chosen is None:
        return letter, float(p[top])
    subset_mass = float(sum(p[LETTERS.index(c)] for c in AMBIGUOUS_LETTERS))
    return chosen, subset_mass


def step(
    state: TranscriptState,
    cfg: RecognizerConfig,
    observation: tuple[str, float] | None,
    dictionary: "dict[str, int] | SpellCorrector | None" = None,
) -> tuple[TranscriptState, list[RecognitionEvent]]:
    """Advance the state machine by one frame.

    observation is None when no hand is in the frame, otherwise a
    (letter, confidence) pair. Low-confidence observations are ignored
    outright: they neither extend a letter run nor count toward absence,
    so classifier flicker cannot insert spurious spaces.
    """
    events: list[RecognitionEvent] = []

    if observation is None:
        absence = state.absence_count + 1
        new_state = replace(state, absence_count=absence)
        if absence == cfg.absence_frames:
            new_state = replace(new_state, pending_letter=None, run_count=0)
            if state.committed and state.committed[-1] != WORD_BOUNDARY:
                new_state = replace(new_state, committed=state.committed + (WORD_BOUNDARY,),
                                    consecutive_repeat_of_last=0)
                raw = _last_word(state.committed)
                corrected = _correct_word(raw, cfg, dictionary)
                events.append(RecognitionEvent(EventKind.SPACE_COMMITTED))
                events.append(RecognitionEvent(
                    EventKind.WORD_FINALIZED, raw_word=raw, corrected_word=corrected))
        return new_state, events

    letter, confidence = observation
    if letter not in LETTERS:
        raise ValueError(f"letter {letter!r} outside the static alphabet")
    if confidence < cfg.confidence_floor:
        return state, events

    if letter == state.pending_letter:
        run = state.run_count + 1
    else:
        run = 1
    new_state = replace(state, pending_letter=letter, run_count=run, absence_count=0)

    if run == cfg.debounce_frames:
        new_state = replace(new_state, run_count=0)  # a held letter can commit again
        last = state.committed[-1] if state.committed else None
        repeat = state.consecutive_repeat_of_last + 1 if letter == last else 1
        if repeat > cfg.max_consecutive_repeat:
            return new_state, events  # suppressed third repetition
        new_state = replace(new_state, committed=new_state.committed + (letter,),
                            consecutive_repeat_of_last=repeat)
        events.append(RecognitionEvent(EventKind.LETTER_COMMITTED, letter=letter,
                                       confidence=confidence))
    return new_state, events


def _last_word(committed: tuple[str, ...]) -> str:
    letters = []
    for token in reversed(committed):
        if token == WORD_BOUNDARY:
            break
        letters.append(token)
    return "".join(reversed(letters))


def _correct_word(raw: str, cfg: RecognizerConfig, dictionary) -> str:
    if cfg.correction_enabled and dictionary and raw:
        if isinstance(dictionary, SpellCorrector):
            return dictionary.correct(raw)
        return spell_correct(raw, dictionary)
    return raw


def finalize(
    state: TranscriptState,
    cfg: RecognizerConfig | None = None,
    dictionary: "dict[str, int] | SpellCorrector | None" = None,
    sentence_hook=None,
) -> str:
    """Full transcript: committed tokens plus any flushable pending run.

    Words are corrected when the config enables it and a dictionary is
    given. Single spaces separate words, with none leading or trailing.
    sentence_hook, when configured, is an external sentence-level
    corrector (str -> str) applied after word correction; its failures
    are swallowed so the transcript always comes back.
    """
    cfg = cfg or RecognizerConfig()
    tokens = list(state.committed)
    if state.pending_letter is not None and state.run_count >= cfg.debounce_frames:
        tokens.append(state.pending_letter)
    text = "".join(tokens)
    words = [w for w in text.split(WORD_BOUNDARY) if w]
    corrected = WORD_BOUNDARY.join(_correct_word(w, cfg, dictionary) for w in words)
    if sentence_hook is not None and corrected:
        try:
            return sentence_hook(corrected)
        except Exception as exc:
            logging.getLogger(__name__).warning(
                "sentence corrector failed (%s: %s); using word-level result",
                type(exc).__name__, exc)
    return corrected


# ---------------------------------------------------------------------------
# Word-level correction
# ---------------------------------------------------------------------------

_ALPHABET = string.ascii_uppercase


def _single_edits(word: str):
    splits = [(word[:i], word[i:]) for i in range(len(word) + 1)]
    deletes = (left + right[1:] for left, right in splits if right)
    transposes = (left + right[1] + right[0] + right[2:]
                  for left, right in splits if len(right) > 1)
    replaces = (left + c + right[1:]
                for left, right in splits if right for c in _ALPHABET)
    inserts = (left + c + right for left, right in splits for c in _ALPHABET)
    return set(deletes) | set(transposes) | set(replaces) | set(inserts)


def spell_correct(word: str, dictionary: dict[str, int]) -> str:
    """Nearest dictionary word within Damerau-Levenshtein distance 2.

    Exact hits return immediately. Otherwise candidates are everything
    reachable by one or two sequential edits (insert, delete, substitute,
    adjacent transpose); the closest wins, ties broken by higher frequency
    then lexicographic order. No candidate leaves the word unchanged.
    """
    if not word or any(c not in _ALPHABET for c in word):
        raise ValueError(f"word must be non-empty uppercase A-Z, got {word!r}")
    if word in dictionary:
        return word
    one = _single_edits(word)
    candidates = {w: 1 for w in one if w in dictionary}
    for edited in one:
        for w in _single_edits(edited):
            if w in dictionary and w not in candidates:
                candidates[w] = 2
    if not candidates:
        return word
    return min(candidates, key=lambda w: (candidates[w], -dictionary[w], w))


class HttpSentenceCorrector:
    """External sentence-level corrector hook over HTTP.

    POST {"text": <sentence>} and expect {"corrected": <sentence>}. This is
    where a grammar model would sit; nothing in the pipeline requires it.
    """

    def __init__(self, endpoint: str, timeout_ms: int = 5000):
        self.endpoint = endpoint
        self.timeout_ms = timeout_ms

    def __call__(self, sentence: str) -> str:
        import requests

        response = requests.post(self.endpoint, json={"text": sentence},
                                 timeout=self.timeout_ms / 1000.0)
        response.raise_for_status()
        corrected = response.json()["corrected"]
        if not isinstance(corrected, str):
            raise ValueError(f"corrector returned {type(corrected).__name__}, not text")
        return corrected


class SpellCorrector:
    """Dictionary plus a memo; candidate enumeration for a novel word is
    costly enough to matter on the real-time path."""

    def __init__(self, dictionary: dict[str, int]):
        self.dictionary = dictionary
        self._cache: dict[str, str] = {}

    def __bool__(self) -> bool:
        return bool(self.dictionary)

    def correct(self, word: str) -> str:
        hit = self._cache.get(word)
        if hit is None:
            hit = self._cache[word] = spell_correct(word, self.dictionary)
        return hit


def load_dictionary(path) -> dict[str, int]:
    """Read a WORD<TAB>frequency file into a lookup table."""
    table: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                word, freq = line.split("\t")
                table[word] = int(freq)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: expected WORD<TAB>frequency") from None
    return table
