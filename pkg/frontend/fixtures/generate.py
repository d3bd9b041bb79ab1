"""Regenerate the recorded gateway session the frontend tests replay.

Requires the signstream package (pip install -e ..). The recording pairs
every inbound client message with the gateway's actual replies, so the
browser client's contract tests run against real server behavior with no
server process.

    python3 frontend/fixtures/generate.py
"""

import json
import os

from signstream.neuralnet import TrainConfig, build_pointnet_lite, train
from signstream.retrieval import HashedNGramProvider
from signstream.server import Gateway, GatewayConfig
from signstream.synthetic import classification_dataset, demo_store, frame_stream

HERE = os.path.dirname(os.path.abspath(__file__))


def record_session():
    dataset = classification_dataset(n_per_class=50, sigma=0.02, seed=0)
    model, _ = train(dataset, TrainConfig(epochs=25, batch_size=64, seed=1),
                     build_pointnet_lite(), lr=0.002)
    store = demo_store(["HELLO", "WORLD"], HashedNGramProvider(64),
                       seed=11)
    gateway = Gateway(
        GatewayConfig(deterministic_ids=True, threshold=0.6, transition_frames=4),
        model=model, store=store, provider=HashedNGramProvider(64),
        dictionary={"HELLO": 100, "WORLD": 50, "HI": 40})

    inbound = [{"type": "hello", "protocol_version": 1, "mode": "dual"}]
    inbound += frame_stream("HELLO", frames_per_letter=5, absence_frames=10, seed=3)
    inbound.append({"type": "produce", "text": "hello world"})

    sid, _ = gateway.connect()
    script = []
    for message in inbound:
        script.append({"dir": "in", "msg": message})
        for reply in gateway.handle_message(sid, message):
            script.append({"dir": "out", "msg": reply})
    return script


def main():
    script = record_session()
    path = os.path.join(HERE, "session_hello.jsonl")
    with open(path, "w", encoding="utf-8") as fh:
        for entry in script:
            fh.write(json.dumps(entry, sort_keys=True))
            fh.write("\n")
    letters = [e["msg"]["char"] for e in script
               if e["dir"] == "out" and e["msg"]["type"] == "letter"]
    print(f"wrote {len(script)} entries to {path}; letters: {''.join(letters)}")


if __name__ == "__main__":
    main()
