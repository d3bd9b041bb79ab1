import json

import jsonschema
import pytest

from signstream.neuralnet import save_model
from signstream.retrieval import HashedNGramProvider
from signstream.server import (
    Gateway,
    GatewayConfig,
    create_app,
    encode_message,
    load_config,
    replay_log,
)
from signstream.synthetic import frame_stream

DICT = {"HELLO": 100, "HELP": 50, "WORLD": 40, "HI": 30}


def make_gateway(model=None, store=None, provider=None, **overrides):
    defaults = dict(deterministic_ids=True, debounce_frames=5, absence_frames=10,
                    threshold=0.6)
    defaults.update(overrides)
    return Gateway(GatewayConfig(**defaults), model=model, store=store,
                   dictionary=dict(DICT), provider=provider)


def open_session(gateway, mode="recognition"):
    sid, msgs = gateway.connect()
    assert msgs == []
    (ack,) = gateway.handle_message(
        sid, {"type": "hello", "protocol_version": 1, "mode": mode})
    assert ack["type"] == "config_ack"
    return sid, ack


def drive(gateway, sid, records):
    out = []
    for record in records:
        out.extend(gateway.handle_message(sid, record))
    return out


class TestLifecycle:
    def test_hello_returns_effective_config(self, model):
        gateway = make_gateway(model)
        sid, ack = open_session(gateway)
        assert ack == {"type": "config_ack", "session": sid,
                       "debounce_frames": 5, "absence_frames": 10, "threshold": 0.6}

    def test_unsupported_version_closes(self, model):
        gateway = make_gateway(model)
        sid, _ = gateway.connect()
        (err,) = gateway.handle_message(
            sid, {"type": "hello", "protocol_version": 99, "mode": "recognition"})
        assert err["code"] == "VERSION_UNSUPPORTED"
        assert gateway.is_closed(sid)

    def test_session_limit(self, model):
        gateway = make_gateway(model, max_sessions=2)
        assert gateway.connect()[0] is not None
        assert gateway.connect()[0] is not None
        sid, msgs = gateway.connect()
        assert sid is None
        assert msgs[0]["code"] == "SESSION_LIMIT"

    def test_messages_before_hello_rejected(self, model):
        gateway = make_gateway(model)
        sid, _ = gateway.connect()
        (err,) = gateway.handle_message(sid, {"type": "produce", "text": "hi"})
        assert err["code"] == "NOT_READY"

    def test_unknown_type_and_bad_json(self, model):
        gateway = make_gateway(model)
        sid, _ = open_session(gateway)
        (err,) = gateway.handle_message(sid, {"type": "bogus"})
        assert err["code"] == "UNKNOWN_TYPE"
        (err,) = gateway.handle_message(sid, "{not json")
        assert err["code"] == "BAD_MESSAGE"
        # The session survived all of it.
        assert not gateway.is_closed(sid)

    def test_disconnect_emits_final_transcript(self, model):
        gateway = make_gateway(model)
        sid, _ = open_session(gateway)
        drive(gateway, sid, frame_stream("HELLO", 5, 10))
        (final,) = gateway.disconnect(sid)
        assert final == {"type": "transcript", "text": "HELLO"}


class TestRecognitionFlow:
    def test_hello_fragment_replays_recognizer_simulation(self, model):
        # The scripted stream spells HELL; correction completes the word.
        gateway = make_gateway(model)
        sid, _ = open_session(gateway)
        out = drive(gateway, sid, frame_stream("HELL", 5, 10))
        letters = [m["char"] for m in out if m["type"] == "letter"]
        words = [m for m in out if m["type"] == "word"]
        assert letters == ["H", "E", "L", "L"]
        assert words == [{"type": "word", "raw": "HELL", "corrected": "HELLO"}]
        transcripts = [m for m in out if m["type"] == "transcript"]
        assert transcripts[-1]["text"] == "HELLO"

    def test_letter_confidences_in_range(self, model):
        gateway = make_gateway(model)
        sid, _ = open_session(gateway)
        out = drive(gateway, sid, frame_stream("HI", 5, 10))
        for m in out:
            if m["type"] == "letter":
                assert 0.0 <= m["confidence"] <= 1.0

    def test_invalid_frame_then_recovery(self, model):
        gateway = make_gateway(model)
        sid, _ = open_session(gateway)
        bad = {"type": "frame", "t": 0, "handedness": "right",
               "landmarks": [[0.0, 0.0, 0.0]] * 20}
        (err,) = gateway.handle_message(sid, bad)
        assert err["code"] == "FRAME_INVALID"
        records = [dict(r, t=r["t"] + 1000) for r in frame_stream("HI", 5, 10)]
        out = drive(gateway, sid, records)
        assert [m["char"] for m in out if m["type"] == "letter"] == ["H", "I"]

    def test_null_only_stream_emits_nothing(self, model):
        gateway = make_gateway(model)
        sid, _ = open_session(gateway)
        nulls = [{"type": "frame", "t": 33 * i, "handedness": "right", "landmarks": None}
                 for i in range(40)]
        assert drive(gateway, sid, nulls) == []

    def test_absence_after_word_emits_single_boundary(self, model):
        gateway = make_gateway(model)
        sid, _ = open_session(gateway)
        records = frame_stream("HI", 5, 10)
        t = records[-1]["t"]
        for i in range(1, 60):
            records.append({"type": "frame", "t": t + 33 * i, "handedness": "right",
                            "landmarks": None})
        out = drive(gateway, sid, records)
        assert len([m for m in out if m["type"] == "word"]) == 1

    def test_degenerate_frame_counts_as_absence(self, model):
        gateway = make_gateway(model)
        sid, _ = open_session(gateway)
        collapsed = {"type": "frame", "t": 0, "handedness": "right",
                     "landmarks": [[0.5, 0.5, 0.0]] * 21}
        assert gateway.handle_message(sid, collapsed) == []
        assert gateway.sessions[sid].degenerate_frames == 1

    def test_frame_rate_cap_drops_bursts(self, model):
        gateway = make_gateway(model, frame_rate_cap=30.0)
        sid, _ = open_session(gateway)
        records = frame_stream("HI", 5, 10)
        for i, record in enumerate(records):
            record["t"] = i  # 1 ms apart: way over the cap
        drive(gateway, sid, records)
        session = gateway.sessions[sid]
        assert session.dropped_frames > 0
        assert session.frames_in + session.dropped_frames == len(records)

    def test_mode_mismatch(self, model, store):
        gateway = make_gateway(model, store)
        sid, _ = open_session(gateway, mode="production")
        (err,) = gateway.handle_message(sid, frame_stream("HI", 1, 1)[0])
        assert err["code"] == "MODE_MISMATCH"

    def test_counters_monotonic(self, model):
        gateway = make_gateway(model)
        sid, _ = open_session(gateway)
        seen = []
        for record in frame_stream("HI", 5, 10):
            gateway.handle_message(sid, record)
            session = gateway.sessions[sid]
            seen.append((session.frames_in, session.letters_out))
        for prev, nxt in zip(seen, seen[1:]):
            assert nxt[0] >= prev[0] and nxt[1] >= prev[1]


class TestProductionFlow:
    def test_exact_match_store_is_retrieved(self, store):
        provider = HashedNGramProvider(64)
        gateway = make_gateway(None, store, provider=provider)
        sid, _ = open_session(gateway, mode="production")
        (msg,) = gateway.handle_message(sid, {"type": "produce", "text": "hello"})
        assert msg["type"] == "pose_sequence"
        (g,) = msg["glosses"]
        assert g["gloss"] == "HELLO"
        assert g["matched"] == "HELLO"
        assert g["source"] == "retrieved"
        assert g["similarity"] == pytest.approx(1.0, abs=1e-12)
        assert msg["fps"] == 30.0
        assert len(msg["frames"]) > 0

    def test_nonsense_token_fingerspells(self, store):
        gateway = make_gateway(None, store, provider=HashedNGramProvider(64),
                               threshold=0.99)
        sid, _ = open_session(gateway, mode="production")
        (msg,) = gateway.handle_message(sid, {"type": "produce", "text": "qwxzv"})
        assert msg["glosses"][0]["source"] == "fingerspelled"
        assert msg["glosses"][0]["matched"] is None

    def test_text_too_long(self, store):
        gateway = make_gateway(None, store, max_produce_chars=16)
        sid, _ = open_session(gateway, mode="production")
        (err,) = gateway.handle_message(
            sid, {"type": "produce", "text": "x" * 1000})
        assert err["code"] == "TEXT_TOO_LONG"

    def test_store_unavailable(self):
        gateway = make_gateway(None, None)
        sid, _ = open_session(gateway, mode="production")
        (err,) = gateway.handle_message(sid, {"type": "produce", "text": "hello"})
        assert err["code"] == "STORE_UNAVAILABLE"

    def test_empty_gloss_flag(self, store):
        gateway = make_gateway(None, store)
        sid, _ = open_session(gateway, mode="production")
        (msg,) = gateway.handle_message(sid, {"type": "produce", "text": "the a an"})
        assert msg["empty_gloss"] is True
        assert msg["frames"] == []
        assert msg["glosses"] == []

    def test_unsupported_gloss_reports_error(self, store):
        gateway = make_gateway(None, store, threshold=0.999)
        sid, _ = open_session(gateway, mode="production")
        (err,) = gateway.handle_message(sid, {"type": "produce", "text": "route 66"})
        assert err["code"] == "UNSUPPORTED_GLOSS"


class TestIsolationAndDeterminism:
    def test_sessions_are_isolated(self, model):
        gateway = make_gateway(model)
        solo_a = make_gateway(model)
        solo_b = make_gateway(model)
        a_records = frame_stream("HELLO", 5, 10, seed=1)
        b_records = frame_stream("HI", 5, 10, seed=2)

        sid_a, _ = open_session(gateway)
        sid_b, _ = open_session(gateway)
        out_a, out_b = [], []
        for i in range(max(len(a_records), len(b_records))):
            if i < len(a_records):
                out_a.extend(gateway.handle_message(sid_a, a_records[i]))
            if i < len(b_records):
                out_b.extend(gateway.handle_message(sid_b, b_records[i]))

        ref_a, _ = open_session(solo_a)
        ref_b, _ = open_session(solo_b)
        assert [encode_message(m) for m in out_a] == \
               [encode_message(m) for m in drive(solo_a, ref_a, a_records)]
        assert [encode_message(m) for m in out_b] == \
               [encode_message(m) for m in drive(solo_b, ref_b, b_records)]

    def test_replay_is_byte_identical(self, model, store):
        inbound = [json.dumps({"type": "hello", "protocol_version": 1, "mode": "dual"})]
        inbound += [json.dumps(r) for r in frame_stream("HELLO", 5, 10)]
        inbound.append(json.dumps({"type": "produce", "text": "hello world"}))
        runs = [
            replay_log(make_gateway(model, store, provider=HashedNGramProvider(64)),
                       inbound)
            for _ in range(3)
        ]
        assert runs[0] == runs[1] == runs[2]
        assert any('"type":"pose_sequence"' in line for line in runs[0])


class TestSchemaConformance:
    def test_every_outbound_message_validates(self, model, store, wire_schema):
        validator = jsonschema.Draft7Validator(wire_schema)
        gateway = make_gateway(model, store, provider=HashedNGramProvider(64))
        sid, ack = open_session(gateway, mode="dual")
        out = [ack]
        out += drive(gateway, sid, frame_stream("HELLO WORLD", 5, 10))
        out += gateway.handle_message(sid, {"type": "produce", "text": "hello qwxzv"})
        out += gateway.handle_message(sid, {"type": "produce", "text": "the"})
        out += gateway.handle_message(sid, {"type": "bogus"})
        out += gateway.disconnect(sid)
        assert len(out) > 8
        for message in out:
            validator.validate(message)

    def test_inbound_schema_matches_what_gateway_accepts(self, wire_schema):
        validator = jsonschema.Draft7Validator(wire_schema)
        for record in frame_stream("HI", 2, 2):
            validator.validate(record)
        validator.validate({"type": "hello", "protocol_version": 1, "mode": "dual"})
        validator.validate({"type": "produce", "text": "hello"})


class TestConfigFile:
    def test_json_config(self, tmp_path, model):
        model_path = tmp_path / "model.bin"
        model_path.write_bytes(save_model(model))
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"model_path": str(model_path), "threshold": 0.7,
                                    "debounce_frames": 3}))
        cfg = load_config(path)
        assert cfg.threshold == 0.7
        assert cfg.debounce_frames == 3
        assert cfg.model_path == str(model_path)

    def test_key_value_config_with_env_override(self, tmp_path, monkeypatch):
        path = tmp_path / "config.ini"
        path.write_text("threshold=0.55\nmax_sessions=4\ncorrection_enabled=false\n")
        cfg = load_config(path)
        assert cfg.threshold == 0.55
        assert cfg.max_sessions == 4
        assert cfg.correction_enabled is False
        monkeypatch.setenv("SIGNSTREAM_MAX_SESSIONS", "9")
        assert load_config(path).max_sessions == 9

    def test_missing_artifact_path_rejected(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"model_path": str(tmp_path / "nope.bin")}))
        with pytest.raises(FileNotFoundError):
            load_config(path)


class TestWebSocketTransport:
    def test_full_round_trip_over_websocket(self, model, store):
        from fastapi.testclient import TestClient

        gateway = make_gateway(model, store, provider=HashedNGramProvider(64))
        client = TestClient(create_app(gateway))
        with client.websocket_connect("/ws") as ws:
            ws.send_text(json.dumps({"type": "hello", "protocol_version": 1,
                                     "mode": "dual"}))
            ack = json.loads(ws.receive_text())
            assert ack["type"] == "config_ack"
            ws.send_text(json.dumps({"type": "produce", "text": "hello"}))
            reply = json.loads(ws.receive_text())
            assert reply["type"] == "pose_sequence"
            assert reply["glosses"][0]["source"] == "retrieved"

    def test_version_rejection_closes_socket(self, model):
        from fastapi.testclient import TestClient

        gateway = make_gateway(model)
        client = TestClient(create_app(gateway))
        with client.websocket_connect("/ws") as ws:
            ws.send_text(json.dumps({"type": "hello", "protocol_version": 99,
                                     "mode": "recognition"}))
            err = json.loads(ws.receive_text())
            assert err["code"] == "VERSION_UNSUPPORTED"

    def test_health_endpoint(self, model):
        from fastapi.testclient import TestClient

        client = TestClient(create_app(make_gateway(model)))
        body = client.get("/healthz").json()
        assert body["status"] == "ok"
        assert body["model"] is True


class TestSentenceHookWiring:
    def test_final_transcript_goes_through_the_hook(self, model):
        gateway = make_gateway(model)
        gateway.sentence_hook = lambda text: f"[{text}]"
        sid, _ = open_session(gateway)
        drive(gateway, sid, frame_stream("HI", 5, 10))
        (final,) = gateway.disconnect(sid)
        assert final["text"] == "[HI]"
