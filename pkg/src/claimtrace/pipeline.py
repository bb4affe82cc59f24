"""Per-question turn orchestration: answer -> decompose -> match -> report.

Stages within one turn run strictly sequentially; turns from different
sessions run concurrently. A cancel check runs between stages so a Stop
request takes effect at the next stage boundary.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Callable

from . import answers, llm, matching
from .answers import AnswerClaim, AnswerRequest, TaggedAnswer
from .corpus import ClaimCorpus
from .embedding import EmbeddingProvider
from .errors import (
    ExtractionError,
    ProviderRefusal,
    TransportError,
    TurnBudgetExceeded,
    TurnCancelled,
)
from .matching import PipelineConfig, ProvenanceReport, ReportClaim

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TurnResult:
    turn_id: str
    request: AnswerRequest
    answer: TaggedAnswer
    answer_claims: tuple[AnswerClaim, ...]
    report: ProvenanceReport

    def to_dict(self) -> dict:
        return {
            "turn_id": self.turn_id,
            "question": self.request.question,
            "answer": self.answer.to_dict(),
            "answer_claims": [c.to_dict() for c in self.answer_claims],
            "report": self.report.to_dict(),
        }


def _no_cancel() -> bool:
    return False


def run_qa_turn(
    turn_id: str,
    request: AnswerRequest,
    corpus: ClaimCorpus,
    cfg: PipelineConfig,
    provider: llm.LLMProvider,
    embedder: EmbeddingProvider,
    retry: llm.RetryPolicy = llm.RetryPolicy(),
    should_cancel: Callable[[], bool] = _no_cancel,
    budget_seconds: float = 300.0,
) -> TurnResult:
    """Run Stages 2 and 3 for one question against a loaded corpus.

    Answer generation failures abort the turn; every later stage degrades
    instead, so the user always gets the answer plus the most conservative
    provenance the pipeline could still compute. The wall-clock budget is
    checked at every stage boundary.
    """
    degradations: list[str] = []
    deadline = time.monotonic() + budget_seconds

    def checkpoint(stage: str) -> None:
        if should_cancel():
            raise TurnCancelled(f"turn {turn_id} cancelled before {stage}")
        if time.monotonic() > deadline:
            raise TurnBudgetExceeded(
                f"turn {turn_id} exceeded its {budget_seconds:.0f}s budget before {stage}"
            )

    checkpoint("answer generation")
    answer = answers.generate_answer(request, corpus, provider, retry)

    checkpoint("answer claim extraction")
    try:
        extracted = answers.extract_answer_claims(answer.clean_text, provider, retry)
    except (TransportError, ExtractionError, ProviderRefusal) as exc:
        log.warning("turn %s: answer decomposition failed (%s); proceeding with zero claims",
                    turn_id, exc)
        extracted = []
        degradations.append("answer_claim_extraction_failed")
    answer_claims = tuple(answers.annotate_spans(answer.clean_text, extracted))

    checkpoint("relevant claim selection")
    selection = matching.select_relevant_claims(
        request.question, corpus, cfg, provider, embedder, retry
    )
    if selection.degraded:
        degradations.append("relevant_claim_selection_fallback")

    report_claims: list[ReportClaim] = []
    for claim in selection.claims:
        checkpoint("relevant evidence selection")
        picked = matching.select_relevant_evidence(
            request.question, claim, cfg, provider, embedder, retry
        )
        if picked.degraded:
            degradations.append(f"evidence_selection_fallback:{claim.claim_id}")
        report_claims.append(ReportClaim(claim=claim, selected_evidence=picked.snippets))

    checkpoint("claim matching")
    outcome = matching.match_claims(answer_claims, selection.claims, provider, retry)
    if outcome.degraded:
        degradations.append("claim_matching_failed")

    checkpoint("evidence verification")
    pool = [ev.core_text for rc in report_claims for ev in rc.selected_evidence]
    flags = matching.verify_answer_evidence(answer_claims, answer.clean_text, pool, cfg, embedder)

    report = matching.build_report(
        turn_id=turn_id,
        answer_claims=answer_claims,
        relevant=report_claims,
        matches=outcome.matches,
        flags=flags,
        degradations=degradations,
    )
    return TurnResult(
        turn_id=turn_id,
        request=request,
        answer=answer,
        answer_claims=answer_claims,
        report=report,
    )
