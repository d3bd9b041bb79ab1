"""Streaming recognition: many frames in, debounced letters out, spaces on
hand absence, and word-level spell correction.

Run: python3 demos/03_stream_recognition.py
"""

from signstream import RecognizerConfig, TranscriptState, finalize, step

DICTIONARY = {"HELLO": 100, "HELP": 50, "WORLD": 40}

# What a classifier might emit at ~30 fps while someone fingerspells
# H-E-L-L and then drops their hand. The flickery low-confidence frame and
# the absence gap are part of the story.
frames = (
    [("H", 0.92)] * 3
    + [("E", 0.95)] * 3
    + [("E", 0.31)]          # low confidence: ignored, the run survives
    + [("L", 0.97)] * 6      # held letter: commits twice (double letters work)
    + [None] * 2             # hand gone: word boundary
)

cfg = RecognizerConfig(debounce_frames=3, absence_frames=2)
state = TranscriptState()
for i, observation in enumerate(frames):
    state, events = step(state, cfg, observation, DICTIONARY)
    for event in events:
        if event.letter is not None:
            detail = f"{event.letter} ({event.confidence:.2f})"
        elif event.raw_word is not None:
            detail = f"{event.raw_word} -> {event.corrected_word}"
        else:
            detail = ""
        print(f"frame {i:2d}: {event.kind.value} {detail}")

print("transcript:", finalize(state, cfg, DICTIONARY))
print(f"{len(frames)} frames became 4 letters: x >= y holds")
