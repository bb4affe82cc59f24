"""Prompt templating and schema-enforced structured LLM calls.

Six prompt templates drive the whole pipeline. Templates live as data files
under ``claimtrace/templates/`` so prompt audits and swaps need no code
change; rendering fills ``{NAME}`` placeholders. Structured calls validate
the model output against a JSON schema and retry on malformed output, so
callers never see a payload that fails validation.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Callable, Mapping, Sequence

import jsonschema
import requests

from .errors import ConfigError, ExtractionError, ProviderRefusal, RenderError, TransportError

PAPER_CLAIM_EXTRACTION = "paper_claim_extraction"
ANSWER_GENERATION = "answer_generation"
ANSWER_CLAIM_EXTRACTION = "answer_claim_extraction"
RELEVANT_CLAIMS = "relevant_claims"
RELEVANT_EVIDENCE = "relevant_evidence"
CLAIM_MATCHING = "claim_matching"

TEMPLATE_IDS = (
    PAPER_CLAIM_EXTRACTION,
    ANSWER_GENERATION,
    ANSWER_CLAIM_EXTRACTION,
    RELEVANT_CLAIMS,
    RELEVANT_EVIDENCE,
    CLAIM_MATCHING,
)

_FEW_SHOT_SLOTS = {
    PAPER_CLAIM_EXTRACTION: 10,
    ANSWER_CLAIM_EXTRACTION: 2,
}

# The answerer returns free prose; every other call returns JSON validated
# against its schema.
OUTPUT_SCHEMAS: dict[str, Mapping[str, Any]] = {
    PAPER_CLAIM_EXTRACTION: {
        "type": "array",
        "items": {
            "type": "object",
            "properties": {"claim": {"type": "string"}},
            "required": ["claim"],
            "additionalProperties": False,
        },
    },
    ANSWER_GENERATION: {"type": "string"},
    ANSWER_CLAIM_EXTRACTION: {
        "type": "array",
        "items": {
            "type": "object",
            "properties": {
                "claim": {"type": "string"},
                "claim_texts": {"type": "array", "items": {"type": "string"}},
                "evidence_texts": {"type": "array", "items": {"type": "string"}},
            },
            "required": ["claim", "claim_texts", "evidence_texts"],
            "additionalProperties": False,
        },
    },
    RELEVANT_CLAIMS: {"type": "array", "items": {"type": "integer"}},
    RELEVANT_EVIDENCE: {"type": "array", "items": {"type": "integer"}},
    CLAIM_MATCHING: {
        "type": "array",
        "items": {
            "type": "object",
            "properties": {
                "answer_claim_id": {"type": "integer"},
                "paper_claim_ids": {"type": "array", "items": {"type": "integer"}},
            },
            "required": ["answer_claim_id", "paper_claim_ids"],
            "additionalProperties": False,
        },
    },
}


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    body: str
    few_shot_slots: int = 0


_PLACEHOLDER_RE = re.compile(r"\{([A-Z][A-Z0-9_]*)\}")
_template_cache: dict[str, PromptTemplate] = {}
_template_lock = threading.Lock()


def load_template(template_id: str) -> PromptTemplate:
    if template_id not in TEMPLATE_IDS:
        raise ConfigError(f"unknown template id {template_id!r}")
    with _template_lock:
        cached = _template_cache.get(template_id)
        if cached is None:
            body = (
                resources.files("claimtrace")
                .joinpath(f"templates/{template_id}.txt")
                .read_text(encoding="utf-8")
            )
            cached = PromptTemplate(
                template_id=template_id,
                body=body,
                few_shot_slots=_FEW_SHOT_SLOTS.get(template_id, 0),
            )
            _template_cache[template_id] = cached
    return cached


def render(template_id: str, bindings: Mapping[str, str]) -> str:
    """Fill every {NAME} placeholder; a missing binding is a RenderError."""
    template = load_template(template_id)

    def fill(match: re.Match) -> str:
        name = match.group(1)
        if name not in bindings:
            raise RenderError(f"template {template_id!r}: placeholder {{{name}}} is unbound")
        return str(bindings[name])

    return _PLACEHOLDER_RE.sub(fill, template.body)


def format_claim_few_shots(examples: Sequence[Mapping[str, Any]]) -> str:
    """Render paragraph->claims exemplars for the paper claim extraction prompt."""
    blocks = []
    for ex in examples:
        claims = ex["claims"]
        listing = "\n".join(f"- {c}" for c in claims) if claims else "(none)"
        blocks.append(f"Paragraph: {ex['paragraph']}\nClaims:\n{listing}")
    return "\n\n".join(blocks)


def format_decomposition_few_shots(examples: Sequence[Mapping[str, Any]]) -> str:
    """Render text->records exemplars for the answer decomposition prompt."""
    blocks = []
    for ex in examples:
        blocks.append(
            "Text: " + ex["text"] + "\nOutput: " + json.dumps(ex["records"], ensure_ascii=False)
        )
    return "\n\n".join(blocks)


def load_builtin_few_shots(name: str) -> dict:
    """Load a bundled few-shot example file (claim_extraction or answer_decomposition)."""
    return json.loads(
        resources.files("claimtrace").joinpath(f"data/few_shot_{name}.json").read_text("utf-8")
    )


@dataclass(frozen=True)
class StructuredRequest:
    template_id: str
    rendered_prompt: str
    output_schema: Mapping[str, Any]
    temperature: float = 1.0
    model_id: str = ""

    def __post_init__(self):
        if not self.rendered_prompt:
            raise ConfigError("rendered prompt must be non-empty")


@dataclass(frozen=True)
class StructuredResponse:
    payload: Any
    raw_text: str
    latency_ms: int
    attempt_count: int


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    backoff_seconds: float = 1.0
    timeout_seconds: float = 120.0


class LLMProvider(ABC):
    """Raw prompt-in, text-out client. Safe for concurrent calls."""

    model_id: str = "unknown"

    @abstractmethod
    def generate(self, request: StructuredRequest) -> str:
        """Return the raw model output for one request."""


def build_request(template_id: str, bindings: Mapping[str, str], temperature: float = 1.0,
                  model_id: str = "") -> StructuredRequest:
    return StructuredRequest(
        template_id=template_id,
        rendered_prompt=render(template_id, bindings),
        output_schema=OUTPUT_SCHEMAS[template_id],
        temperature=temperature,
        model_id=model_id,
    )


def complete_structured(
    provider: LLMProvider,
    request: StructuredRequest,
    retry: RetryPolicy = RetryPolicy(),
) -> StructuredResponse:
    """Call the provider until the output validates against the request schema.

    Transport failures and schema-invalid outputs are retried up to
    ``retry.max_attempts`` with exponential backoff; refusals are surfaced
    immediately. The returned payload always validates.
    """
    jsonschema.Draft202012Validator.check_schema(dict(request.output_schema))
    started = time.monotonic()
    last_raw = ""
    last_error: Exception | None = None
    for attempt in range(1, retry.max_attempts + 1):
        if attempt > 1 and retry.backoff_seconds > 0:
            time.sleep(retry.backoff_seconds * 2 ** (attempt - 2))
        try:
            raw = provider.generate(request)
        except TransportError as exc:
            last_error = exc
            continue
        last_raw = raw
        if request.output_schema.get("type") == "string":
            payload: Any = raw
        else:
            try:
                payload = json.loads(raw)
            except json.JSONDecodeError as exc:
                last_error = exc
                continue
        try:
            jsonschema.validate(payload, dict(request.output_schema))
        except jsonschema.ValidationError as exc:
            last_error = exc
            continue
        latency_ms = int((time.monotonic() - started) * 1000)
        return StructuredResponse(
            payload=payload, raw_text=raw, latency_ms=latency_ms, attempt_count=attempt
        )
    if isinstance(last_error, TransportError):
        raise TransportError(
            f"{request.template_id}: provider unreachable after {retry.max_attempts} attempts: {last_error}"
        )
    raise ExtractionError(
        f"{request.template_id}: output failed schema validation after "
        f"{retry.max_attempts} attempts: {last_error}",
        raw_text=last_raw,
    )


@dataclass(frozen=True)
class RawText:
    """Wrap a mock payload that must be returned verbatim (e.g. malformed JSON)."""

    text: str


class MockLLMProvider(LLMProvider):
    """Deterministic scripted provider; the whole primary suite runs on it.

    Responses are keyed by template_id. A constructor entry is a single fixed
    payload (or a callable ``fn(request) -> payload``); ``add()`` appends to a
    per-template queue whose final element repeats once reached. Payloads:

    - ``RawText`` -> returned verbatim (simulates malformed output)
    - ``Exception`` instance -> raised (simulates transport failure/refusal)
    - ``str`` for the answer template -> returned verbatim
    - anything else -> ``json.dumps`` of the payload
    """

    def __init__(self, responses: Mapping[str, Any] | None = None, model_id: str = "mock-llm"):
        self.model_id = model_id
        self._responses: dict[str, Any] = dict(responses or {})
        self._queues: dict[str, list] = {}
        self._lock = threading.Lock()
        self.calls: list[StructuredRequest] = []

    def add(self, template_id: str, *payloads: Any) -> "MockLLMProvider":
        with self._lock:
            self._queues.setdefault(template_id, []).extend(payloads)
        return self

    def generate(self, request: StructuredRequest) -> str:
        with self._lock:
            self.calls.append(request)
            tid = request.template_id
            queue = self._queues.get(tid)
            if queue:
                payload = queue.pop(0) if len(queue) > 1 else queue[0]
            elif tid in self._responses:
                payload = self._responses[tid]
            else:
                raise ConfigError(f"mock has no scripted response for {tid!r}")
        return self._materialize(payload, request)

    def _materialize(self, payload: Any, request: StructuredRequest) -> str:
        if callable(payload):
            return self._materialize(payload(request), request)
        if isinstance(payload, Exception):
            raise payload
        if isinstance(payload, RawText):
            return payload.text
        if isinstance(payload, str) and request.output_schema.get("type") == "string":
            return payload
        return json.dumps(payload)


class GeminiProvider(LLMProvider):
    """Minimal REST client for a Gemini-style generateContent endpoint.

    Structured calls pass the JSON schema through ``responseJsonSchema`` so
    the service enforces output shape. Configured from the environment:
    LLM_API_KEY, LLM_MODEL_ID, LLM_BASE_URL.
    """

    DEFAULT_MODEL = "gemini-2.5-pro-preview-05-06"
    DEFAULT_BASE_URL = "https://generativelanguage.googleapis.com"

    def __init__(
        self,
        api_key: str,
        model_id: str = DEFAULT_MODEL,
        base_url: str = DEFAULT_BASE_URL,
        timeout: float = 120.0,
        session: requests.Session | None = None,
    ):
        if not api_key:
            raise ConfigError("an API key is required for the remote LLM provider")
        self.api_key = api_key
        self.model_id = model_id
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._session = session or requests.Session()

    @classmethod
    def from_env(cls) -> "GeminiProvider":
        api_key = os.environ.get("LLM_API_KEY")
        if not api_key:
            raise ConfigError("LLM_API_KEY is not set")
        return cls(
            api_key=api_key,
            model_id=os.environ.get("LLM_MODEL_ID", cls.DEFAULT_MODEL),
            base_url=os.environ.get("LLM_BASE_URL", cls.DEFAULT_BASE_URL),
        )

    def generate(self, request: StructuredRequest) -> str:
        body: dict[str, Any] = {
            "contents": [{"parts": [{"text": request.rendered_prompt}]}],
            "generationConfig": {"temperature": request.temperature},
        }
        if request.output_schema.get("type") != "string":
            body["generationConfig"]["responseMimeType"] = "application/json"
            body["generationConfig"]["responseJsonSchema"] = dict(request.output_schema)
        url = f"{self.base_url}/v1beta/models/{self.model_id}:generateContent"
        try:
            resp = self._session.post(
                url,
                params={"key": self.api_key},
                json=body,
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise TransportError(f"LLM provider unreachable: {exc}") from exc
        if resp.status_code in (429, 500, 502, 503, 504):
            raise TransportError(f"LLM provider returned HTTP {resp.status_code}")
        if resp.status_code != 200:
            raise ExtractionError(f"LLM provider returned HTTP {resp.status_code}: {resp.text[:500]}")
        doc = resp.json()
        candidates = doc.get("candidates") or []
        if not candidates:
            reason = (doc.get("promptFeedback") or {}).get("blockReason", "no candidates")
            raise ProviderRefusal(f"LLM provider refused the request: {reason}")
        cand = candidates[0]
        if cand.get("finishReason") in ("SAFETY", "PROHIBITED_CONTENT", "BLOCKLIST"):
            raise ProviderRefusal(f"LLM provider refused: {cand['finishReason']}")
        parts = (cand.get("content") or {}).get("parts") or []
        text = "".join(p.get("text", "") for p in parts)
        if not text:
            raise TransportError("LLM provider returned an empty candidate")
        return text
