from __future__ import annotations

import json

import pytest

from claimtrace import llm
from claimtrace.errors import ConfigError, ExtractionError, ProviderRefusal, RenderError, TransportError

FAST = llm.RetryPolicy(max_attempts=3, backoff_seconds=0)


# ------------------------------------------------------------------- templates

ANCHORS = {
    llm.PAPER_CLAIM_EXTRACTION: "Atomic: Focus on a single",
    llm.ANSWER_GENERATION: "tags around each sentence",
    llm.ANSWER_CLAIM_EXTRACTION: "match the original input exactly",
    llm.RELEVANT_CLAIMS: "Return only the IDs of relevant claims",
    llm.RELEVANT_EVIDENCE: "most relevant evidence passages",
    llm.CLAIM_MATCHING: "express the same core assertion",
}


def test_templates_contain_anchor_phrases_verbatim():
    for template_id, anchor in ANCHORS.items():
        body = llm.load_template(template_id).body
        assert anchor in body, template_id


def test_answer_template_extra_anchors():
    body = llm.load_template(llm.ANSWER_GENERATION).body
    assert "300 words or fewer" in body
    assert "separate citations with semicolons" in body


def test_matching_template_omission_rule():
    assert "Omit answer claims that lack a clear match" in llm.load_template(llm.CLAIM_MATCHING).body


def test_template_ids_cover_all_six():
    assert len(llm.TEMPLATE_IDS) == 6
    assert set(llm.OUTPUT_SCHEMAS) == set(llm.TEMPLATE_IDS)


def test_render_relevant_claims():
    prompt = llm.render(
        llm.RELEVANT_CLAIMS,
        {"USER_QUESTION": "What drives cost?", "CLAIM_LIST_WITH_IDS": "ID 0: a\nID 1: b\nID 2: c"},
    )
    assert "Return only the IDs of relevant claims" in prompt
    assert "What drives cost?" in prompt
    assert "ID 2: c" in prompt
    assert "{" not in prompt.replace("{", "", 0) or "{USER_QUESTION}" not in prompt


def test_render_is_deterministic_and_order_preserving():
    examples = [
        {"paragraph": "P one.", "claims": ["c1", "c2"]},
        {"paragraph": "P two.", "claims": []},
    ]
    shots = llm.format_claim_few_shots(examples)
    assert shots.index("P one.") < shots.index("P two.")
    a = llm.render(llm.PAPER_CLAIM_EXTRACTION, {"FEW_SHOT_EXAMPLES": shots, "PARAGRAPH": "X."})
    b = llm.render(llm.PAPER_CLAIM_EXTRACTION, {"FEW_SHOT_EXAMPLES": shots, "PARAGRAPH": "X."})
    assert a == b


def test_render_unbound_placeholder_names_it():
    with pytest.raises(RenderError, match="PARAGRAPH"):
        llm.render(llm.PAPER_CLAIM_EXTRACTION, {"FEW_SHOT_EXAMPLES": "x"})


def test_builtin_few_shot_files_load():
    claims_doc = llm.load_builtin_few_shots("claim_extraction")
    assert len(claims_doc["examples"]) == 10
    decomp_doc = llm.load_builtin_few_shots("answer_decomposition")
    assert decomp_doc["examples"]


# ------------------------------------------------------------ structured calls

def _request(template_id=llm.RELEVANT_CLAIMS):
    return llm.build_request(
        template_id,
        {"USER_QUESTION": "q", "CLAIM_LIST_WITH_IDS": "ID 0: a"},
    )


def test_mock_valid_payload_first_attempt():
    provider = llm.MockLLMProvider({llm.RELEVANT_CLAIMS: [0]})
    resp = llm.complete_structured(provider, _request(), FAST)
    assert resp.payload == [0]
    assert resp.attempt_count == 1
    assert resp.raw_text == "[0]"


def test_mock_retry_until_valid():
    provider = llm.MockLLMProvider()
    provider.add(llm.RELEVANT_CLAIMS, llm.RawText("not json"), llm.RawText("{"), [1, 2])
    resp = llm.complete_structured(provider, _request(), FAST)
    assert resp.attempt_count == 3
    assert resp.payload == [1, 2]


def test_schema_violation_exhausts_attempts():
    provider = llm.MockLLMProvider({llm.RELEVANT_CLAIMS: {"nope": True}})
    with pytest.raises(ExtractionError) as err:
        llm.complete_structured(provider, _request(), FAST)
    assert err.value.raw_text == json.dumps({"nope": True})
    assert len(provider.calls) == 3


def test_transport_errors_retried_then_raised():
    provider = llm.MockLLMProvider({llm.RELEVANT_CLAIMS: TransportError("down")})
    with pytest.raises(TransportError):
        llm.complete_structured(provider, _request(), FAST)
    assert len(provider.calls) == 3


def test_transport_error_then_success():
    provider = llm.MockLLMProvider()
    provider.add(llm.RELEVANT_CLAIMS, TransportError("blip"), [0])
    resp = llm.complete_structured(provider, _request(), FAST)
    assert resp.attempt_count == 2
    assert resp.payload == [0]


def test_refusal_not_retried():
    provider = llm.MockLLMProvider({llm.RELEVANT_CLAIMS: ProviderRefusal("policy")})
    with pytest.raises(ProviderRefusal):
        llm.complete_structured(provider, _request(), FAST)
    assert len(provider.calls) == 1


def test_string_schema_passthrough():
    provider = llm.MockLLMProvider({llm.ANSWER_GENERATION: "Hello there."})
    req = llm.build_request(
        llm.ANSWER_GENERATION,
        {
            "PAPER_CONTENTS": "p",
            "TASK_DESCRIPTION": "t",
            "EDITOR_TEXT": "e",
            "CONVERSATION_HISTORY": "(none)",
            "USER_QUESTION": "q",
        },
    )
    resp = llm.complete_structured(provider, req, FAST)
    assert resp.payload == "Hello there."


def test_payload_never_fails_schema():
    provider = llm.MockLLMProvider({llm.CLAIM_MATCHING: [{"answer_claim_id": 0, "paper_claim_ids": [1]}]})
    req = llm.build_request(
        llm.CLAIM_MATCHING,
        {"ANSWER_CLAIMS_WITH_IDS": "ID 0: x", "PAPER_CLAIMS_WITH_IDS": "ID 0: y\nID 1: z"},
    )
    resp = llm.complete_structured(provider, req, FAST)
    import jsonschema

    jsonschema.validate(resp.payload, dict(req.output_schema))


def test_mock_unknown_template_is_config_error():
    provider = llm.MockLLMProvider()
    with pytest.raises(ConfigError, match="no scripted response"):
        llm.complete_structured(provider, _request(), FAST)


def test_empty_prompt_rejected():
    with pytest.raises(ConfigError, match="non-empty"):
        llm.StructuredRequest(
            template_id=llm.RELEVANT_CLAIMS,
            rendered_prompt="",
            output_schema=llm.OUTPUT_SCHEMAS[llm.RELEVANT_CLAIMS],
        )


# ------------------------------------------------------------- remote provider

class FakeResponse:
    def __init__(self, status_code=200, payload=None):
        self.status_code = status_code
        self._payload = payload or {}
        self.text = json.dumps(self._payload)

    def json(self):
        return self._payload


class FakeSession:
    def __init__(self, responses):
        self.responses = list(responses)
        self.requests = []

    def post(self, url, **kwargs):
        self.requests.append((url, kwargs))
        item = self.responses.pop(0)
        if isinstance(item, Exception):
            raise item
        return item


def test_gemini_provider_parses_candidates():
    session = FakeSession([
        FakeResponse(payload={
            "candidates": [{"content": {"parts": [{"text": "[0]"}]}, "finishReason": "STOP"}]
        })
    ])
    provider = llm.GeminiProvider(api_key="k", session=session)
    raw = provider.generate(_request())
    assert raw == "[0]"
    url, kwargs = session.requests[0]
    assert "generateContent" in url
    assert kwargs["json"]["generationConfig"]["responseMimeType"] == "application/json"
    assert kwargs["json"]["generationConfig"]["temperature"] == 1.0


def test_gemini_provider_refusal_and_transport():
    import requests

    session = FakeSession([
        FakeResponse(payload={"candidates": [], "promptFeedback": {"blockReason": "SAFETY"}}),
        FakeResponse(status_code=503),
        requests.ConnectionError("refused"),
    ])
    provider = llm.GeminiProvider(api_key="k", session=session)
    with pytest.raises(ProviderRefusal):
        provider.generate(_request())
    with pytest.raises(TransportError):
        provider.generate(_request())
    with pytest.raises(TransportError):
        provider.generate(_request())
