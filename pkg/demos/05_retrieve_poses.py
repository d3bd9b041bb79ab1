"""Gloss-to-pose retrieval: store hits play stored sequences, misses get
fingerspelled letter by letter, and everything stitches into one animation.

Run: python3 demos/05_retrieve_poses.py
"""

from signstream import produce
from signstream.retrieval import HashedNGramProvider, Source
from signstream.synthetic import demo_store

provider = HashedNGramProvider(dimension=128)
store = demo_store(["HELLO", "WORLD", "STORE", "GO", "TOMORROW"], provider)
print(f"store: {len(store.entries)} glosses, "
      f"{store.manifest.layout.points}-point skeleton at {store.manifest.fps:g} fps")

result = produce("I am going to the store tomorrow", store,
                 provider=provider, threshold=0.6, transition_frames=8)
for r in result.results:
    if r.source is Source.RETRIEVED:
        print(f"  {r.gloss:10} retrieved as {r.matched[0]} "
              f"(cosine {r.matched[1]:.3f}, {len(r.sequence)} frames)")
    else:
        print(f"  {r.gloss:10} fingerspelled letter-by-letter "
              f"({len(r.sequence)} frames)")

seconds = len(result.sequence) / result.fps
print(f"stitched animation: {len(result.sequence)} frames = {seconds:.1f} s of signing")
