"""Stage 3: relevance selection, claim matching, evidence verification, coverage.

Every operation here degrades conservatively: if an LLM call fails, the
result can only claim less support (fewer matches, more flags), never more.
Similarity prefiltering cuts the candidate set before each LLM call so
prompts stay small on corpora with hundreds of claims.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import llm
from .answers import AnswerClaim
from .corpus import ClaimCorpus, EvidenceSnippet, PaperClaim
from .embedding import EmbeddingProvider, EmbeddingVector, cosine, rank_by_similarity
from .errors import ConfigError, ExtractionError, ProviderRefusal, TransportError

log = logging.getLogger(__name__)

_LLM_FAILURES = (TransportError, ExtractionError, ProviderRefusal)


@dataclass(frozen=True)
class PipelineConfig:
    evidence_threshold: float = 0.75
    flag_threshold: float = 0.55
    prefilter_top_k: int = 30
    eval_match_threshold: float = 0.9
    fallback_claims: int = 5
    fallback_evidence: int = 2

    def __post_init__(self):
        if not self.flag_threshold < self.evidence_threshold:
            raise ConfigError(
                f"flag_threshold ({self.flag_threshold}) must be below "
                f"evidence_threshold ({self.evidence_threshold})"
            )
        if self.prefilter_top_k < 1:
            raise ConfigError("prefilter_top_k must be >= 1")

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        return {
            "evidence_threshold": self.evidence_threshold,
            "flag_threshold": self.flag_threshold,
            "prefilter_top_k": self.prefilter_top_k,
            "eval_match_threshold": self.eval_match_threshold,
            "fallback_claims": self.fallback_claims,
            "fallback_evidence": self.fallback_evidence,
        }


@dataclass(frozen=True)
class ClaimMatch:
    answer_claim_id: str
    paper_claim_ids: tuple[str, ...]

    def __post_init__(self):
        if not self.paper_claim_ids:
            raise ConfigError("a ClaimMatch needs at least one paper claim id")

    def to_dict(self) -> dict:
        return {"answer_claim_id": self.answer_claim_id, "paper_claim_ids": list(self.paper_claim_ids)}


@dataclass(frozen=True)
class RelevantClaims:
    claims: tuple[PaperClaim, ...]
    degraded: bool = False


@dataclass(frozen=True)
class SelectedEvidence:
    snippets: tuple[EvidenceSnippet, ...]
    degraded: bool = False


@dataclass(frozen=True)
class MatchOutcome:
    matches: tuple[ClaimMatch, ...]
    degraded: bool = False


def select_relevant_claims(
    question: str,
    corpus: ClaimCorpus,
    cfg: PipelineConfig,
    provider: llm.LLMProvider,
    embedder: EmbeddingProvider,
    retry: llm.RetryPolicy = llm.RetryPolicy(),
) -> RelevantClaims:
    """Similarity-prefilter the claim corpus, then let the LLM pick relevant ids.

    On LLM failure the top 5 candidates by similarity are returned instead,
    flagged as degraded, so provenance never silently vanishes.
    """
    if not corpus.claims:
        return RelevantClaims(claims=())
    for claim in corpus.claims:
        if claim.embedding is None:
            raise ConfigError(f"claim {claim.claim_id!r} has no stored embedding")
    question_vec = embedder.embed(question)
    scored = rank_by_similarity(
        question_vec,
        (
            (claim, EmbeddingVector(values=claim.embedding, model_id=question_vec.model_id))
            for claim in corpus.claims
        ),
    )
    candidates = [claim for claim, _sim in scored[: cfg.prefilter_top_k]]
    listing = "\n".join(f"ID {i}: {c.claim_text}" for i, c in enumerate(candidates))
    request = llm.build_request(
        llm.RELEVANT_CLAIMS,
        {"USER_QUESTION": question, "CLAIM_LIST_WITH_IDS": listing},
        model_id=provider.model_id,
    )
    try:
        response = llm.complete_structured(provider, request, retry)
    except _LLM_FAILURES as exc:
        log.warning("relevant-claim selection failed (%s); falling back to similarity top-%d",
                    exc, cfg.fallback_claims)
        return RelevantClaims(claims=tuple(candidates[: cfg.fallback_claims]), degraded=True)
    chosen: list[PaperClaim] = []
    for idx in response.payload:
        if 0 <= idx < len(candidates):
            claim = candidates[idx]
            if claim not in chosen:
                chosen.append(claim)
        else:
            log.warning("relevant-claim selection returned unknown id %s; dropped", idx)
    return RelevantClaims(claims=tuple(chosen))


def select_relevant_evidence(
    question: str,
    claim: PaperClaim,
    cfg: PipelineConfig,
    provider: llm.LLMProvider,
    embedder: EmbeddingProvider,
    retry: llm.RetryPolicy = llm.RetryPolicy(),
) -> SelectedEvidence:
    """Pick the question-relevant subset of one claim's evidence snippets."""
    if not claim.evidence:
        return SelectedEvidence(snippets=())
    question_vec = embedder.embed(question)
    core_vecs = embedder.embed_batch([ev.core_text for ev in claim.evidence])
    scored = rank_by_similarity(question_vec, zip(claim.evidence, core_vecs))
    candidates = [ev for ev, _sim in scored[: cfg.prefilter_top_k]]
    listing = "\n".join(f"ID {i}: {ev.context_text}" for i, ev in enumerate(candidates))
    request = llm.build_request(
        llm.RELEVANT_EVIDENCE,
        {
            "USER_QUESTION": question,
            "CLAIM_TEXT": claim.claim_text,
            "EVIDENCE_LIST_WITH_IDS": listing,
        },
        model_id=provider.model_id,
    )
    try:
        response = llm.complete_structured(provider, request, retry)
    except _LLM_FAILURES as exc:
        log.warning("evidence selection failed for %s (%s); falling back to similarity top-%d",
                    claim.claim_id, exc, cfg.fallback_evidence)
        return SelectedEvidence(snippets=tuple(candidates[: cfg.fallback_evidence]), degraded=True)
    chosen: list[EvidenceSnippet] = []
    for idx in response.payload:
        if 0 <= idx < len(candidates):
            ev = candidates[idx]
            if ev not in chosen:
                chosen.append(ev)
        else:
            log.warning("evidence selection returned unknown id %s; dropped", idx)
    return SelectedEvidence(snippets=tuple(chosen))


def match_claims(
    answer_claims: Sequence[AnswerClaim],
    relevant: Sequence[PaperClaim],
    provider: llm.LLMProvider,
    retry: llm.RetryPolicy = llm.RetryPolicy(),
) -> MatchOutcome:
    """LLM claim-to-claim matching between the answer and the relevant set.

    Answer claims absent from the payload are unsupported. On LLM failure no
    matches are fabricated: everything is reported unsupported, degraded.
    """
    if not answer_claims or not relevant:
        return MatchOutcome(matches=())
    answer_listing = "\n".join(f"ID {i}: {c.claim_text}" for i, c in enumerate(answer_claims))
    paper_listing = "\n".join(f"ID {i}: {c.claim_text}" for i, c in enumerate(relevant))
    request = llm.build_request(
        llm.CLAIM_MATCHING,
        {
            "ANSWER_CLAIMS_WITH_IDS": answer_listing,
            "PAPER_CLAIMS_WITH_IDS": paper_listing,
        },
        model_id=provider.model_id,
    )
    try:
        response = llm.complete_structured(provider, request, retry)
    except _LLM_FAILURES as exc:
        log.warning("claim matching failed (%s); reporting zero matches", exc)
        return MatchOutcome(matches=(), degraded=True)

    merged: dict[str, list[str]] = {}
    order: list[str] = []
    for entry in response.payload:
        a_idx = entry["answer_claim_id"]
        if not 0 <= a_idx < len(answer_claims):
            log.warning("claim matching returned unknown answer id %s; dropped", a_idx)
            continue
        answer_id = answer_claims[a_idx].claim_id
        paper_ids = []
        for p_idx in entry["paper_claim_ids"]:
            if 0 <= p_idx < len(relevant):
                paper_ids.append(relevant[p_idx].claim_id)
            else:
                log.warning("claim matching returned unknown paper id %s; dropped", p_idx)
        if not paper_ids:
            continue
        if answer_id not in merged:
            merged[answer_id] = []
            order.append(answer_id)
        for pid in paper_ids:
            if pid not in merged[answer_id]:
                merged[answer_id].append(pid)
    matches = tuple(
        ClaimMatch(answer_claim_id=aid, paper_claim_ids=tuple(merged[aid])) for aid in order
    )
    return MatchOutcome(matches=matches)


@dataclass(frozen=True)
class FlaggedEvidence:
    answer_claim_id: str
    text: str
    spans: tuple[tuple[int, int], ...]
    best_similarity: float | None  # None when the paper-evidence pool was empty
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "answer_claim_id": self.answer_claim_id,
            "text": self.text,
            "spans": [list(s) for s in self.spans],
            "best_similarity": self.best_similarity,
            "note": self.note,
        }


def verify_answer_evidence(
    answer_claims: Sequence[AnswerClaim],
    clean_text: str,
    paper_evidence_texts: Sequence[str],
    cfg: PipelineConfig,
    embedder: EmbeddingProvider,
) -> list[FlaggedEvidence]:
    """Flag answer evidence whose best cosine against the pool is below the
    permissive threshold (strict <). An empty pool flags everything, with a
    note explaining that nothing comparable was selected from the papers.
    """
    pool_vecs = embedder.embed_batch(list(paper_evidence_texts)) if paper_evidence_texts else []
    flagged: list[FlaggedEvidence] = []
    for claim in answer_claims:
        by_text: dict[str, list[tuple[int, int]]] = {}
        for start, end in claim.evidence_spans:
            by_text.setdefault(clean_text[start:end], []).append((start, end))
        for text, spans in by_text.items():
            if not pool_vecs:
                flagged.append(
                    FlaggedEvidence(
                        answer_claim_id=claim.claim_id,
                        text=text,
                        spans=tuple(spans),
                        best_similarity=None,
                        note="no comparable paper evidence was selected for this turn",
                    )
                )
                continue
            vec = embedder.embed(text)
            best = max(cosine(vec, pv) for pv in pool_vecs)
            if best < cfg.flag_threshold:
                flagged.append(
                    FlaggedEvidence(
                        answer_claim_id=claim.claim_id,
                        text=text,
                        spans=tuple(spans),
                        best_similarity=best,
                        note="best similarity against selected paper evidence is below the flag threshold",
                    )
                )
    return flagged


@dataclass(frozen=True)
class ReportClaim:
    """A relevant paper claim together with its question-selected evidence."""

    claim: PaperClaim
    selected_evidence: tuple[EvidenceSnippet, ...] = ()

    def to_dict(self) -> dict:
        return {
            "claim_id": self.claim.claim_id,
            "claim_text": self.claim.claim_text,
            "citation_key": self.claim.citation_key,
            "section_name": self.claim.section_name,
            "evidence": [
                {
                    "core_text": ev.core_text,
                    "context_text": ev.context_text,
                    "similarity": ev.similarity,
                    "location": {
                        "section": ev.location.section,
                        "paragraph": ev.location.paragraph,
                        "sentence": ev.location.sentence,
                    },
                }
                for ev in self.selected_evidence
            ],
        }


@dataclass(frozen=True)
class ProvenanceReport:
    turn_id: str
    relevant_paper_claims: tuple[ReportClaim, ...]
    included: tuple[str, ...]  # paper claim ids matched by some answer claim
    omitted: tuple[str, ...]
    matches: tuple[ClaimMatch, ...]
    unsupported_answer_claims: tuple[str, ...]
    flagged_evidence: tuple[FlaggedEvidence, ...]
    coverage: tuple[int, int]  # (included count, relevant count)
    degradations: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "turn_id": self.turn_id,
            "relevant_paper_claims": [rc.to_dict() for rc in self.relevant_paper_claims],
            "included": list(self.included),
            "omitted": list(self.omitted),
            "matches": [m.to_dict() for m in self.matches],
            "unsupported_answer_claims": list(self.unsupported_answer_claims),
            "flagged_evidence": [f.to_dict() for f in self.flagged_evidence],
            "coverage": {"included": self.coverage[0], "relevant": self.coverage[1]},
            "degradations": list(self.degradations),
        }


def build_report(
    turn_id: str,
    answer_claims: Sequence[AnswerClaim],
    relevant: Sequence[ReportClaim],
    matches: Sequence[ClaimMatch],
    flags: Sequence[FlaggedEvidence],
    degradations: Sequence[str] = (),
) -> ProvenanceReport:
    """Partition relevant claims into included/omitted and compute coverage.

    Coverage counts distinct included paper claims, so duplicate matches
    cannot inflate it. Inconsistent ids are an internal error, not a
    user-facing degradation.
    """
    relevant_ids = [rc.claim.claim_id for rc in relevant]
    relevant_set = set(relevant_ids)
    answer_ids = {c.claim_id for c in answer_claims}
    for match in matches:
        if match.answer_claim_id not in answer_ids:
            raise AssertionError(f"match references unknown answer claim {match.answer_claim_id!r}")
        for pid in match.paper_claim_ids:
            if pid not in relevant_set:
                raise AssertionError(f"match references non-relevant paper claim {pid!r}")

    matched_paper_ids = {pid for m in matches for pid in m.paper_claim_ids}
    matched_answer_ids = {m.answer_claim_id for m in matches}
    included = tuple(cid for cid in relevant_ids if cid in matched_paper_ids)
    omitted = tuple(cid for cid in relevant_ids if cid not in matched_paper_ids)
    unsupported = tuple(c.claim_id for c in answer_claims if c.claim_id not in matched_answer_ids)
    return ProvenanceReport(
        turn_id=turn_id,
        relevant_paper_claims=tuple(relevant),
        included=included,
        omitted=omitted,
        matches=tuple(matches),
        unsupported_answer_claims=unsupported,
        flagged_evidence=tuple(flags),
        coverage=(len(included), len(relevant_ids)),
        degradations=tuple(degradations),
    )
