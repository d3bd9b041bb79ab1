"""The gateway protocol end to end without a socket: a recognition session
spelling HELLO and a production request, replayed deterministically.

Run: python3 demos/06_wire_protocol.py   (~5 s: trains a small model first)
"""

import json

from signstream import TrainConfig, build_pointnet_lite, train
from signstream.retrieval import HashedNGramProvider
from signstream.server import Gateway, GatewayConfig, replay_log
from signstream.synthetic import classification_dataset, demo_store, frame_stream

print("training a small recognizer...")
dataset = classification_dataset(n_per_class=50, sigma=0.02, seed=0)
model, _ = train(dataset, TrainConfig(epochs=25, batch_size=64, seed=1),
                 build_pointnet_lite(), lr=0.002)
store = demo_store(["HELLO", "WORLD"], HashedNGramProvider(64))


def gateway():
    return Gateway(GatewayConfig(deterministic_ids=True),
                   model=model, store=store, provider=HashedNGramProvider(64),
                   dictionary={"HELLO": 100, "WORLD": 50})


inbound = [json.dumps({"type": "hello", "protocol_version": 1, "mode": "dual"})]
inbound += [json.dumps(r) for r in frame_stream("HELLO", frames_per_letter=5,
                                                absence_frames=10)]
inbound.append(json.dumps({"type": "produce", "text": "hello world"}))

outbound = replay_log(gateway(), inbound)
for line in outbound:
    message = json.loads(line)
    if message["type"] == "pose_sequence":
        glosses = [(g["gloss"], g["source"]) for g in message["glosses"]]
        print(f"<- pose_sequence {len(message['frames'])} frames, glosses {glosses}")
    else:
        print("<-", line[:100])

again = replay_log(gateway(), inbound)
print("replay is byte-identical:", outbound == again)
