"""English text to ASL gloss.

The default translator is a deterministic rule pipeline so the production
path works offline and is testable; an LLM-backed translator with the same
output contract can be plugged in and always falls back to the rules when
the reply is unusable.
"""

from __future__ import annotations

import logging
import os
import re
from dataclasses import dataclass, field
from importlib import resources

log = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[a-z0-9]+(?:-[a-z0-9]+)*")
_GLOSS_REPLY_RE = re.compile(r"^[A-Z0-9\- ]+$")

# Expanded before tokenization so auxiliaries inside contractions hit the
# drop lists. Possessive 's is mis-expanded to "is"; acceptable for a
# minimal normalizer.
_CONTRACTIONS = [
    (re.compile(r"n't\b"), " not"),
    (re.compile(r"'m\b"), " am"),
    (re.compile(r"'re\b"), " are"),
    (re.compile(r"'s\b"), " is"),
    (re.compile(r"'ve\b"), " have"),
    (re.compile(r"'ll\b"), " will"),
    (re.compile(r"'d\b"), " would"),
]


class MalformedReply(Exception):
    """LLM reply failed structural validation."""


@dataclass(frozen=True)
class GlossSequence:
    tokens: tuple[str, ...]
    source_text: str
    provenance: str = "rule_based"

    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class GlossRules:
    """Closed word lists driving the rule pipeline; shipped as data files."""

    articles: frozenset[str]
    copulas: frozenset[str]
    verbs: frozenset[str]
    time_adverbials: frozenset[str]


def _read_list(name: str, directory=None) -> frozenset[str]:
    if directory is not None:
        with open(os.path.join(directory, name), "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = resources.files("signstream.data").joinpath(name).read_text("utf-8")
    return frozenset(line.strip().lower() for line in text.splitlines()
                     if line.strip() and not line.startswith("#"))


def load_rules(directory=None) -> GlossRules:
    """Load the word lists, from a directory or the packaged defaults."""
    return GlossRules(
        articles=_read_list("articles.txt", directory),
        copulas=_read_list("copulas.txt", directory),
        verbs=_read_list("verbs.txt", directory),
        time_adverbials=_read_list("time_adverbials.txt", directory),
    )


_default_rules: GlossRules | None = None


def default_rules() -> GlossRules:
    global _default_rules
    if _default_rules is None:
        _default_rules = load_rules()
    return _default_rules


def _dedouble(stem: str) -> str:
    if len(stem) >= 2 and stem[-1] == stem[-2]:
        return stem[:-1]
    return stem


def _lemmatize(token: str, verbs: frozenset[str]) -> str:
    """Strip -ing/-ed/-s when a stem lands in the closed verb list."""
    if token in verbs:
        return token
    if token.endswith("ing") and len(token) > 4:
        stems = [token[:-3], _dedouble(token[:-3]), token[:-3] + "e"]
    elif token.endswith("ed") and len(token) > 3:
        stems = [token[:-2], _dedouble(token[:-2]), token[:-1]]
    elif token.endswith("es") and len(token) > 3:
        stems = [token[:-2], token[:-1]]
    elif token.endswith("s") and len(token) > 2:
        stems = [token[:-1]]
    else:
        return token
    for stem in stems:
        if len(stem) >= 2 and stem in verbs:
            return stem
    return token


def translate_rule_based(text: str, rules: GlossRules | None = None) -> GlossSequence:
    """Deterministic text-to-gloss pipeline.

    Lowercase and tokenize, drop articles and copulas/auxiliaries, drop
    "to", lemmatize against the closed verb list, move time adverbials to
    the front, uppercase. Idempotent on its own output; stop-word-only
    input yields an empty sequence.
    """
    rules = rules or default_rules()
    lowered = text.lower()
    for pattern, repl in _CONTRACTIONS:
        lowered = pattern.sub(repl, lowered)
    tokens = _TOKEN_RE.findall(lowered)
    tokens = [t for t in tokens if t not in rules.articles]
    tokens = [t for t in tokens if t not in rules.copulas]
    tokens = [t for t in tokens if t != "to"]
    tokens = [_lemmatize(t, rules.verbs) for t in tokens]
    fronted = [t for t in tokens if t in rules.time_adverbials]
    rest = [t for t in tokens if t not in rules.time_adverbials]
    return GlossSequence(tokens=tuple(t.upper() for t in fronted + rest), source_text=text)


# ---------------------------------------------------------------------------
# LLM route
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LlmClientConfig:
    endpoint: str
    model_name: str
    prompt_template: str
    timeout_ms: int = 10_000
    api_key_env: str = "SIGNSTREAM_LLM_API_KEY"

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")


def default_prompt_template() -> str:
    return resources.files("signstream.data").joinpath("prompt_template.txt").read_text("utf-8")


class HttpLlmClient:
    """Chat-completion style HTTP client for the gloss translation prompt."""

    def __init__(self, config: LlmClientConfig):
        self.config = config

    def complete(self, prompt: str) -> str:
        import requests

        body = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
        }
        headers = {}
        key = os.environ.get(self.config.api_key_env, "")
        if key:
            headers["Authorization"] = "Bearer " + key
        log.debug("llm request to %s (auth %s): %r", self.config.endpoint,
                  "redacted" if key else "none", body)
        response = requests.post(self.config.endpoint, json=body, headers=headers,
                                 timeout=self.config.timeout_ms / 1000.0)
        response.raise_for_status()
        payload = response.json()
        log.debug("llm response: %r", payload)
        try:
            return payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise MalformedReply(f"unexpected completion shape: {payload!r}") from None


def _parse_gloss_reply(reply: str, source_text: str) -> GlossSequence:
    trimmed = " ".join(reply.split())
    if not trimmed or not _GLOSS_REPLY_RE.match(trimmed):
        raise MalformedReply(f"reply is not uppercase gloss tokens: {reply!r}")
    return GlossSequence(tokens=tuple(trimmed.split(" ")), source_text=source_text,
                         provenance="llm")


def translate_via_llm(text: str, client, prompt_template: str | None = None,
                      rules: GlossRules | None = None) -> GlossSequence:
    """Translate through an external LLM, falling back to the rules.

    The client exposes complete(prompt) -> str. Replies are validated
    structurally (uppercase A-Z/0-9/hyphen tokens only); a timeout,
    transport failure, or malformed reply logs a warning and returns the
    rule-based translation tagged as a fallback. This never raises on
    client failure.
    """
    template = prompt_template if prompt_template is not None else (
        getattr(getattr(client, "config", None), "prompt_template", None) or default_prompt_template())
    try:
        reply = client.complete(template.replace("{TEXT}", text))
        return _parse_gloss_reply(reply, text)
    except Exception as exc:  # degraded mode by contract, never a pipeline failure
        log.warning("llm translation failed (%s: %s); using rule-based fallback",
                    type(exc).__name__, exc)
        result = translate_rule_based(text, rules)
        return GlossSequence(tokens=result.tokens, source_text=text,
                             provenance="rule_based_fallback")
