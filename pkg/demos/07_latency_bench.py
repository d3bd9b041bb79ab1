"""Per-frame latency of the full recognition path (JSON decode, normalize,
classify, disambiguate, state step) against the real-time budget.

Run: python3 demos/07_latency_bench.py
"""

from signstream.bench import run_frame_bench

stats = run_frame_bench(n_frames=10_000, seed=0)
print(stats.summary())
print(f"budget: mean < 2 ms ({'ok' if stats.mean_ms < 2 else 'OVER'}), "
      f"p99 < 10 ms ({'ok' if stats.p99_ms < 10 else 'OVER'})")
headroom = 1000.0 / 30.0 / stats.mean_ms
print(f"a 30 fps webcam leaves {headroom:.0f}x headroom per frame")
