from __future__ import annotations

import json

import pytest

from claimtrace import llm
from claimtrace.answers import AnswerRequest
from claimtrace.errors import TransportError, TurnCancelled
from claimtrace.matching import PipelineConfig
from claimtrace.pipeline import run_qa_turn

from test_server import FAST, five_claim_corpus, scripted_provider
from claimtrace.embedding import HashEmbeddingProvider, StaticEmbeddingProvider


def embedder():
    return StaticEmbeddingProvider({}, fallback=HashEmbeddingProvider(dimension=2), model_id="static")


def run(provider, should_cancel=None):
    kwargs = {}
    if should_cancel is not None:
        kwargs["should_cancel"] = should_cancel
    return run_qa_turn(
        "t-0",
        AnswerRequest(question="What changed?"),
        five_claim_corpus(),
        PipelineConfig(),
        provider,
        embedder(),
        FAST,
        **kwargs,
    )


def test_clean_run_has_no_degradations():
    result = run(scripted_provider())
    assert result.report.degradations == ()
    assert result.report.coverage == (2, 5)
    assert result.report.unsupported_answer_claims == ("a2",)


def test_decomposition_failure_yields_zero_claims_but_turn_survives():
    provider = scripted_provider()
    provider._responses[llm.ANSWER_CLAIM_EXTRACTION] = TransportError("down")
    result = run(provider)
    assert result.answer_claims == ()
    assert "answer_claim_extraction_failed" in result.report.degradations
    assert result.report.coverage[0] == 0
    assert set(result.report.omitted) == {rc.claim.claim_id for rc in result.report.relevant_paper_claims}


def test_matching_failure_marks_all_unsupported():
    provider = scripted_provider()
    provider._responses[llm.CLAIM_MATCHING] = TransportError("down")
    result = run(provider)
    assert "claim_matching_failed" in result.report.degradations
    assert result.report.coverage[0] == 0
    assert len(result.report.unsupported_answer_claims) == len(result.answer_claims)


def test_selection_failure_uses_similarity_fallback():
    provider = scripted_provider()
    provider._responses[llm.RELEVANT_CLAIMS] = TransportError("down")
    result = run(provider)
    assert "relevant_claim_selection_fallback" in result.report.degradations
    assert len(result.report.relevant_paper_claims) == 5  # top-5 fallback


def test_cancellation_between_stages():
    calls = {"n": 0}

    def cancel_after_two():
        calls["n"] += 1
        return calls["n"] > 2

    with pytest.raises(TurnCancelled):
        run(scripted_provider(), should_cancel=cancel_after_two)


def test_turn_budget_enforced_at_stage_boundaries():
    from claimtrace.errors import TurnBudgetExceeded

    with pytest.raises(TurnBudgetExceeded, match="budget"):
        run_qa_turn(
            "t-budget",
            AnswerRequest(question="What changed?"),
            five_claim_corpus(),
            PipelineConfig(),
            scripted_provider(),
            embedder(),
            FAST,
            budget_seconds=0.0,
        )


def test_turn_serialization_is_json_stable():
    first = run(scripted_provider()).to_dict()
    second = run(scripted_provider()).to_dict()
    assert json.dumps(first, sort_keys=True) == json.dumps(second, sort_keys=True)
