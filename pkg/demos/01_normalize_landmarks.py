"""Hand-landmark normalization: the same hand at any position or distance
maps to one canonical frame.

Run: python3 demos/01_normalize_landmarks.py
"""

import numpy as np

from signstream import Handedness, RawHandFrame, canonicalize_handedness, normalize

rng = np.random.default_rng(0)

# A hand somewhere in image space.
points = rng.uniform(0.2, 0.8, size=(21, 3))
points[0] = (0.5, 0.85, 0.0)   # wrist
points[9] = (0.5, 0.55, 0.02)  # middle-finger knuckle: the reference bone

frame = RawHandFrame(points=points, handedness=Handedness.RIGHT, timestamp_ms=0)
canonical = normalize(frame)
print("wrist lands at the origin:", canonical.points[0])
print("reference bone has unit length:", np.linalg.norm(canonical.points[9]))

# Move the signer across the room and halve their apparent size: the
# canonical frame does not move.
moved = RawHandFrame(points=(points + [0.9, -0.3, 0.1]) * 0.5,
                     handedness=Handedness.RIGHT, timestamp_ms=33)
deviation = np.max(np.abs(normalize(moved).points - canonical.points))
print(f"max deviation after translate+scale: {deviation:.2e}")

# Left hands mirror onto the right-hand canonical form before classification.
lefty = RawHandFrame(points=points, handedness=Handedness.LEFT, timestamp_ms=66)
mirrored = canonicalize_handedness(lefty)
print("left thumb x flips sign:", points[4][0], "->", mirrored.points[4][0])
