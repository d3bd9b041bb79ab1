"""WebSocket gateway over both pipelines.

The protocol logic lives in Gateway, which maps inbound message dicts to
outbound message dicts with no transport attached, so the whole session
behavior is replayable and deterministic. A thin FastAPI app adapts it to
real WebSocket connections; heavy artifacts (model, store, dictionary)
load once and are shared read-only across sessions.
"""

from __future__ import annotations

import json
import logging
import os
import uuid
from dataclasses import dataclass, field, replace

import numpy as np
from fastapi import WebSocket, WebSocketDisconnect

from . import gloss as gloss_mod
from . import recognizer as rec
from . import retrieval
from .landmarks import DegenerateFrame, FrameError, canonicalize_handedness, extract_features, normalize, parse_raw_frame
from .neuralnet import Network, forward, load_model, softmax
from .retrieval import PoseStore, ProduceResult

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
MODES = ("recognition", "production", "dual")

# Error codes carried by {"type": "error", "code": ..., "detail": ...}
FRAME_INVALID = "FRAME_INVALID"
TEXT_TOO_LONG = "TEXT_TOO_LONG"
STORE_UNAVAILABLE = "STORE_UNAVAILABLE"
MODEL_UNAVAILABLE = "MODEL_UNAVAILABLE"
VERSION_UNSUPPORTED = "VERSION_UNSUPPORTED"
SESSION_LIMIT = "SESSION_LIMIT"
MODE_MISMATCH = "MODE_MISMATCH"
UNKNOWN_TYPE = "UNKNOWN_TYPE"
BAD_MESSAGE = "BAD_MESSAGE"
NOT_READY = "NOT_READY"
UNSUPPORTED_GLOSS = "UNSUPPORTED_GLOSS"


@dataclass
class GatewayConfig:
    host: str = "127.0.0.1"
    port: int = 8765
    model_path: str | None = None
    store_path: str | None = None
    dictionary_path: str | None = None
    threshold: float = retrieval.DEFAULT_THRESHOLD
    transition_frames: int = retrieval.DEFAULT_TRANSITION_FRAMES
    debounce_frames: int = 5
    absence_frames: int = 10
    confidence_floor: float = 0.5
    correction_enabled: bool = True
    max_sessions: int = 64
    frame_rate_cap: float = 60.0
    max_produce_chars: int = 1000
    provider: str = "hashed"
    llm_endpoint: str | None = None
    llm_model: str = "gpt-4o"
    corrector_endpoint: str | None = None  # sentence-level hook, final transcripts only
    deterministic_ids: bool = False

    def __post_init__(self):
        if self.max_sessions < 1 or self.frame_rate_cap <= 0 or self.max_produce_chars < 1:
            raise ValueError("session, rate, and text caps must be positive")

    def recognizer_config(self) -> rec.RecognizerConfig:
        return rec.RecognizerConfig(
            debounce_frames=self.debounce_frames,
            absence_frames=self.absence_frames,
            confidence_floor=self.confidence_floor,
            correction_enabled=self.correction_enabled,
        )


def load_config(path) -> GatewayConfig:
    """Read a gateway config file: JSON or key=value lines.

    Every key can also come from the environment as SIGNSTREAM_<KEY>;
    the environment wins over the file. Referenced paths must exist.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    values: dict = {}
    stripped = text.lstrip()
    if stripped.startswith("{"):
        values = json.loads(text)
    else:
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()

    cfg = GatewayConfig()
    merged = {}
    for name, default in vars(cfg).items():
        raw = os.environ.get(f"SIGNSTREAM_{name.upper()}", values.get(name, default))
        if raw is None or raw == default:
            merged[name] = raw if raw is not None else default
            continue
        if isinstance(default, bool):
            merged[name] = raw if isinstance(raw, bool) else str(raw).lower() in ("1", "true", "yes", "on")
        elif isinstance(default, int):
            merged[name] = int(raw)
        elif isinstance(default, float):
            merged[name] = float(raw)
        else:
            merged[name] = str(raw)
    cfg = GatewayConfig(**merged)
    for attr in ("model_path", "store_path", "dictionary_path"):
        value = getattr(cfg, attr)
        if value and not os.path.exists(value):
            raise FileNotFoundError(f"{attr} does not exist: {value}")
    return cfg


@dataclass
class Session:
    id: str
    mode: str | None = None  # None until hello
    state: rec.TranscriptState = field(default_factory=rec.TranscriptState)
    closed: bool = False
    last_frame_t: int | None = None
    frames_in: int = 0
    letters_out: int = 0
    produce_requests: int = 0
    dropped_frames: int = 0
    degenerate_frames: int = 0


def _error(code: str, detail: str) -> dict:
    return {"type": "error", "code": code, "detail": detail}


class Gateway:
    """Session registry plus the pure message-in, messages-out protocol."""

    def __init__(self, config: GatewayConfig, model: Network | None = None,
                 store: PoseStore | None = None, dictionary: dict[str, int] | None = None,
                 provider=None, translator=None):
        self.config = config
        self.model = model
        self.store = store
        self.dictionary = rec.SpellCorrector(dictionary or {})
        dim = store.manifest.dimension if store else retrieval.DEFAULT_DIMENSION
        self.provider = provider or retrieval.make_provider(config.provider, dim)
        self.translator = translator or self._make_translator()
        self.sentence_hook = (rec.HttpSentenceCorrector(config.corrector_endpoint)
                              if config.corrector_endpoint else None)
        self.rec_cfg = config.recognizer_config()
        self.sessions: dict[str, Session] = {}
        self._session_counter = 0
        self._min_frame_interval_ms = 1000.0 / config.frame_rate_cap

    @classmethod
    def from_config(cls, config: GatewayConfig) -> "Gateway":
        model = store = None
        dictionary: dict[str, int] = {}
        if config.model_path:
            with open(config.model_path, "rb") as fh:
                model = load_model(fh.read())
        if config.store_path:
            store = retrieval.load_store(config.store_path)
        if config.dictionary_path:
            dictionary = rec.load_dictionary(config.dictionary_path)
        return cls(config, model=model, store=store, dictionary=dictionary)

    def _make_translator(self):
        if not self.config.llm_endpoint:
            return gloss_mod.translate_rule_based
        client = gloss_mod.HttpLlmClient(gloss_mod.LlmClientConfig(
            endpoint=self.config.llm_endpoint,
            model_name=self.config.llm_model,
            prompt_template=gloss_mod.default_prompt_template(),
        ))
        return lambda text: gloss_mod.translate_via_llm(text, client)

    # -- lifecycle ---------------------------------------------------------

    def connect(self) -> tuple[str | None, list[dict]]:
        """Allocate a session slot; None when the gateway is full."""
        active = sum(1 for s in self.sessions.values() if not s.closed)
        if active >= self.config.max_sessions:
            return None, [_error(SESSION_LIMIT, f"gateway is at {self.config.max_sessions} sessions")]
        self._session_counter += 1
        if self.config.deterministic_ids:
            sid = f"s{self._session_counter:08d}"
        else:
            sid = uuid.uuid4().hex
        self.sessions[sid] = Session(id=sid)
        return sid, []

    def disconnect(self, session_id: str) -> list[dict]:
        """Finalize and drop a session; returns the final transcript message."""
        session = self.sessions.pop(session_id, None)
        if session is None or session.closed or session.mode in (None, "production"):
            return []
        text = rec.finalize(session.state, self.rec_cfg, self.dictionary,
                            sentence_hook=self.sentence_hook)
        return [{"type": "transcript", "text": text}]

    def is_closed(self, session_id: str) -> bool:
        session = self.sessions.get(session_id)
        return session is None or session.closed

    # -- dispatch ----------------------------------------------------------

    def handle_message(self, session_id: str, message) -> list[dict]:
        session = self.sessions.get(session_id)
        if session is None or session.closed:
            return [_error(BAD_MESSAGE, "session is closed")]
        if isinstance(message, (str, bytes)):
            try:
                message = json.loads(message)
            except json.JSONDecodeError as exc:
                return [_error(BAD_MESSAGE, f"not valid JSON: {exc}")]
        if not isinstance(message, dict) or "type" not in message:
            return [_error(BAD_MESSAGE, "message must be an object with a type")]

        mtype = message["type"]
        if session.mode is None and mtype != "hello":
            return [_error(NOT_READY, "hello required before any other message")]
        if mtype == "hello":
            return self._handle_hello(session, message)
        if mtype == "frame":
            return self._handle_frame(session, message)
        if mtype == "produce":
            return self._handle_produce(session, message)
        return [_error(UNKNOWN_TYPE, f"unknown message type {mtype!r}")]

    def _handle_hello(self, session: Session, message: dict) -> list[dict]:
        if session.mode is not None:
            return [_error(BAD_MESSAGE, "session already initialized")]
        version = message.get("protocol_version")
        if version != PROTOCOL_VERSION:
            session.closed = True
            return [_error(VERSION_UNSUPPORTED,
                           f"protocol {version!r} unsupported; this gateway speaks {PROTOCOL_VERSION}")]
        mode = message.get("mode")
        if mode not in MODES:
            return [_error(BAD_MESSAGE, f"mode must be one of {MODES}, got {mode!r}")]
        session.mode = mode
        return [{
            "type": "config_ack",
            "session": session.id,
            "debounce_frames": self.rec_cfg.debounce_frames,
            "absence_frames": self.rec_cfg.absence_frames,
            "threshold": self.config.threshold,
        }]

    # -- recognition -------------------------------------------------------

    def _observe(self, message: dict):
        """Frame message -> (letter, confidence) observation or None."""
        landmarks = message.get("landmarks", "missing")
        if landmarks is None:
            return None
        frame = parse_raw_frame(message)
        nframe = normalize(canonicalize_handedness(frame))
        features = extract_features(nframe, self.model.feature_layout)
        probs = softmax(forward(self.model, features))
        return rec.disambiguate(probs, nframe)

    def _handle_frame(self, session: Session, message: dict) -> list[dict]:
        if session.mode not in ("recognition", "dual"):
            return [_error(MODE_MISMATCH, "frames need a recognition or dual session")]
        if self.model is None:
            return [_error(MODEL_UNAVAILABLE, "gateway has no recognition model loaded")]
        t = message.get("t")
        if not isinstance(t, int) or isinstance(t, bool) or t < 0:
            return [_error(FRAME_INVALID, f"t must be a non-negative integer, got {t!r}")]
        if (session.last_frame_t is not None
                and t - session.last_frame_t < self._min_frame_interval_ms):
            session.dropped_frames += 1
            return []
        session.last_frame_t = t
        session.frames_in += 1

        try:
            observation = self._observe(message)
        except DegenerateFrame:
            session.degenerate_frames += 1
            observation = None
        except FrameError as exc:
            return [_error(FRAME_INVALID, str(exc))]

        session.state, events = rec.step(session.state, self.rec_cfg, observation,
                                         self.dictionary)
        out: list[dict] = []
        for event in events:
            if event.kind is rec.EventKind.LETTER_COMMITTED:
                session.letters_out += 1
                out.append({"type": "letter", "char": event.letter,
                            "confidence": float(event.confidence)})
            elif event.kind is rec.EventKind.WORD_FINALIZED:
                out.append({"type": "word", "raw": event.raw_word,
                            "corrected": event.corrected_word})
                out.append({"type": "transcript",
                            "text": rec.finalize(session.state, self.rec_cfg, self.dictionary)})
        return out

    # -- production --------------------------------------------------------

    def _handle_produce(self, session: Session, message: dict) -> list[dict]:
        if session.mode not in ("production", "dual"):
            return [_error(MODE_MISMATCH, "produce needs a production or dual session")]
        text = message.get("text")
        if not isinstance(text, str):
            return [_error(BAD_MESSAGE, "produce needs a text string")]
        if len(text) > self.config.max_produce_chars:
            return [_error(TEXT_TOO_LONG,
                           f"text is {len(text)} chars; cap is {self.config.max_produce_chars}")]
        if self.store is None:
            return [_error(STORE_UNAVAILABLE, "gateway has no pose store loaded")]
        session.produce_requests += 1
        try:
            result = retrieval.produce(
                text, self.store, translator=self.translator, provider=self.provider,
                threshold=self.config.threshold,
                transition_frames=self.config.transition_frames)
        except retrieval.UnsupportedCharacter as exc:
            return [_error(UNSUPPORTED_GLOSS, str(exc))]
        except retrieval.EmptyStore as exc:
            return [_error(STORE_UNAVAILABLE, str(exc))]
        return [self._pose_sequence_message(result)]

    def _pose_sequence_message(self, result: ProduceResult) -> dict:
        glosses = []
        for r in result.results:
            glosses.append({
                "gloss": r.gloss,
                "matched": r.matched[0] if r.matched else None,
                "similarity": r.matched[1] if r.matched else None,
                "source": r.source.value,
            })
        frames = result.sequence.frames.tolist() if result.sequence is not None else []
        message = {"type": "pose_sequence", "fps": float(result.fps),
                   "glosses": glosses, "frames": frames}
        if result.empty_gloss:
            message["empty_gloss"] = True
        return message


def encode_message(message: dict) -> str:
    """Canonical JSON encoding: sorted keys, no whitespace."""
    return json.dumps(message, sort_keys=True, separators=(",", ":"))


def replay_log(gateway: Gateway, inbound_lines) -> list[str]:
    """Drive one session through a recorded inbound log; canonical output.

    The first line must be the hello. The outbound log includes the final
    transcript from the disconnect, mirroring a real connection teardown.
    """
    sid, out = gateway.connect()
    lines = [encode_message(m) for m in out]
    if sid is None:
        return lines
    for raw in inbound_lines:
        for message in gateway.handle_message(sid, raw):
            lines.append(encode_message(message))
        if gateway.is_closed(sid):
            return lines
    for message in gateway.disconnect(sid):
        lines.append(encode_message(message))
    return lines


# ---------------------------------------------------------------------------
# WebSocket transport
# ---------------------------------------------------------------------------

def create_app(gateway: Gateway):
    """FastAPI app exposing the gateway at /ws."""
    from fastapi import FastAPI

    app = FastAPI(title="signstream gateway")
    app.state.gateway = gateway

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "protocol_version": PROTOCOL_VERSION,
            "sessions": len(gateway.sessions),
            "model": gateway.model is not None,
            "store": gateway.store is not None,
        }

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        sid, messages = gateway.connect()
        for message in messages:
            await websocket.send_text(encode_message(message))
        if sid is None:
            await websocket.close()
            return
        try:
            while True:
                raw = await websocket.receive_text()
                for message in gateway.handle_message(sid, raw):
                    await websocket.send_text(encode_message(message))
                if gateway.is_closed(sid):
                    await websocket.close()
                    gateway.sessions.pop(sid, None)
                    return
        except WebSocketDisconnect:
            gateway.disconnect(sid)

    return app


def serve(config: GatewayConfig) -> None:
    """Load artifacts once and run the gateway until interrupted."""
    import uvicorn

    gateway = Gateway.from_config(config)
    log.info("serving on ws://%s:%d/ws (model=%s store=%s)", config.host, config.port,
             config.model_path, config.store_path)
    uvicorn.run(create_app(gateway), host=config.host, port=config.port, log_level="info")
