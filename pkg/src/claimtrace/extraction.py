"""Stage 1: offline corpus construction.

Per-paragraph LLM claim extraction, similarity-based evidence retrieval with
neighbor context, near-duplicate merging, and emission of the validated
corpus file. Builds abort on any extraction failure: the corpus is treated
as ground truth downstream, so partial builds are worse than no build.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import llm
from .corpus import (
    ClaimCorpus,
    EvidenceLocation,
    EvidenceSnippet,
    Paper,
    PaperClaim,
    Paragraph,
    corpus_from_dict,
    corpus_to_dict,
)
from .embedding import EmbeddingProvider, cosine
from .errors import ClaimTraceError, ConfigError


@dataclass(frozen=True)
class ExtractionConfig:
    evidence_threshold: float = 0.75
    context_window: int = 1
    dedup_threshold: float = 0.95
    few_shot_count: int = 10
    max_workers: int = 1
    few_shot_path: str | None = None

    def __post_init__(self):
        for name in ("evidence_threshold", "dedup_threshold"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ConfigError(f"{name} must be in (0, 1], got {value}")
        if self.context_window < 0:
            raise ConfigError("context_window must be >= 0")
        if self.max_workers < 1:
            raise ConfigError("max_workers must be >= 1")

    @classmethod
    def from_file(cls, path: str | Path) -> "ExtractionConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(**doc)


def load_few_shots(cfg: ExtractionConfig) -> tuple[str, list[dict]]:
    """Return (set_id, examples) for the claim extraction prompt.

    The selection is fixed at configuration time and recorded in
    build_metadata so builds are reproducible.
    """
    if cfg.few_shot_path:
        doc = json.loads(Path(cfg.few_shot_path).read_text(encoding="utf-8"))
    else:
        doc = llm.load_builtin_few_shots("claim_extraction")
    examples = doc["examples"][: cfg.few_shot_count]
    return doc.get("set_id", "custom"), examples


def extract_paragraph_claims(
    paragraph: Paragraph,
    cfg: ExtractionConfig,
    provider: llm.LLMProvider,
    few_shot_examples: list[dict],
    retry: llm.RetryPolicy = llm.RetryPolicy(),
) -> list[str]:
    """LLM-extract zero or more atomic claim strings from one paragraph."""
    if not paragraph.text.strip():
        raise ConfigError("paragraph text must be non-empty")
    request = llm.build_request(
        llm.PAPER_CLAIM_EXTRACTION,
        {
            "FEW_SHOT_EXAMPLES": llm.format_claim_few_shots(few_shot_examples),
            "PARAGRAPH": paragraph.text,
        },
        model_id=provider.model_id,
    )
    response = llm.complete_structured(provider, request, retry)
    return [item["claim"] for item in response.payload if item["claim"].strip()]


def retrieve_evidence(
    claim: str,
    paper: Paper,
    cfg: ExtractionConfig,
    embedder: EmbeddingProvider,
) -> list[EvidenceSnippet]:
    """Find sentences in the claim's source paper that support it.

    Scores every sentence against the claim; keeps those at or above the
    evidence threshold, sorted by similarity descending. Context adds up to
    ``context_window`` neighboring sentences on each side, clipped at the
    paragraph boundary.
    """
    entries = list(paper.iter_sentences())
    if not entries:
        raise ConfigError(f"paper {paper.paper_id!r} has no sentences")
    claim_vec = embedder.embed(claim)
    sentence_vecs = embedder.embed_batch([span.text for *_ignored, span in entries])
    snippets = []
    for (section_name, p_idx, s_idx, para, span), vec in zip(entries, sentence_vecs):
        similarity = cosine(claim_vec, vec)
        if similarity < cfg.evidence_threshold:
            continue
        lo = max(0, s_idx - cfg.context_window)
        hi = min(len(para.sentences) - 1, s_idx + cfg.context_window)
        context = para.text[para.sentences[lo].start : para.sentences[hi].end]
        snippets.append(
            EvidenceSnippet(
                core_text=span.text,
                context_text=context,
                similarity=similarity,
                location=EvidenceLocation(section=section_name, paragraph=p_idx, sentence=s_idx),
            )
        )
    snippets.sort(key=lambda s: -s.similarity)
    return snippets


def dedup_claims(
    claims: list[tuple[str, str, list[EvidenceSnippet]]],
    embeddings: list,
    threshold: float,
) -> list[tuple[str, str, list[EvidenceSnippet], object]]:
    """Merge near-duplicate claims, keeping the earliest and unioning evidence.

    ``claims`` holds (claim_text, section_name, evidence) in document order.
    Greedy earliest-wins merging keeps the retained set pairwise below the
    threshold, which makes the operation idempotent.
    """
    kept: list[tuple[str, str, list[EvidenceSnippet], object]] = []
    for (text, section, evidence), vec in zip(claims, embeddings):
        best_idx, best_sim = -1, -1.0
        for idx, (_ktext, _ksec, _kev, kvec) in enumerate(kept):
            sim = cosine(vec, kvec)
            if sim > best_sim:
                best_idx, best_sim = idx, sim
        if best_idx >= 0 and best_sim >= threshold:
            ktext, ksec, kev, kvec = kept[best_idx]
            seen = {(e.location.section, e.location.paragraph, e.location.sentence) for e in kev}
            merged = list(kev)
            for e in evidence:
                key = (e.location.section, e.location.paragraph, e.location.sentence)
                if key not in seen:
                    merged.append(e)
                    seen.add(key)
            merged.sort(key=lambda s: -s.similarity)
            kept[best_idx] = (ktext, ksec, merged, kvec)
        else:
            kept.append((text, section, list(evidence), vec))
    return kept


def build_corpus(
    papers: list[Paper],
    cfg: ExtractionConfig,
    provider: llm.LLMProvider,
    embedder: EmbeddingProvider,
    retry: llm.RetryPolicy = llm.RetryPolicy(),
    built_at: str | None = None,
) -> ClaimCorpus:
    """Run the full offline pipeline over a set of papers."""
    if not papers:
        raise ConfigError("at least one paper is required")
    few_shot_id, few_shots = load_few_shots(cfg)

    all_claims: list[PaperClaim] = []
    for paper in papers:
        jobs = [
            (section.name, para)
            for section in paper.sections
            for para in section.paragraphs
        ]

        def run(job: tuple[str, Paragraph]) -> tuple[str, list[str]]:
            section_name, para = job
            try:
                return section_name, extract_paragraph_claims(para, cfg, provider, few_shots, retry)
            except ClaimTraceError as exc:
                raise ClaimTraceError(
                    f"extraction failed in paper {paper.paper_id!r}, "
                    f"section {section_name!r}: {exc}"
                ) from exc

        if cfg.max_workers > 1:
            with ThreadPoolExecutor(max_workers=cfg.max_workers) as pool:
                results = list(pool.map(run, jobs))
        else:
            results = [run(job) for job in jobs]

        raw: list[tuple[str, str, list[EvidenceSnippet]]] = []
        for section_name, claim_texts in results:
            for text in claim_texts:
                evidence = retrieve_evidence(text, paper, cfg, embedder)
                raw.append((text, section_name, evidence))
        vectors = embedder.embed_batch([text for text, *_ in raw]) if raw else []
        merged = dedup_claims(raw, vectors, cfg.dedup_threshold)
        for idx, (text, section_name, evidence, vec) in enumerate(merged):
            all_claims.append(
                PaperClaim(
                    claim_id=f"{paper.paper_id}-c{idx:03d}",
                    claim_text=text,
                    citation_key=paper.citation_key,
                    section_name=section_name,
                    evidence=tuple(evidence),
                    embedding=vec.values,
                )
            )

    metadata = {
        "extraction_model": provider.model_id,
        "embedding_model": embedder.model_id,
        "thresholds": {
            "evidence_threshold": cfg.evidence_threshold,
            "dedup_threshold": cfg.dedup_threshold,
        },
        "context_window": cfg.context_window,
        "few_shot_count": len(few_shots),
        "few_shot_fingerprint": few_shot_id,
        "built_at": built_at or datetime.now(timezone.utc).isoformat(),
    }
    doc = {
        "metadata": metadata,
        "papers": corpus_to_dict(
            ClaimCorpus(papers={p.paper_id: p for p in papers}, claims=(), metadata=metadata)
        )["papers"],
        "claims": [
            {
                "claim_id": c.claim_id,
                "claim_text": c.claim_text,
                "citation_key": c.citation_key,
                "section_name": c.section_name,
                "evidence": [
                    {
                        "core_text": e.core_text,
                        "context_text": e.context_text,
                        "similarity": e.similarity,
                        "location": {
                            "section": e.location.section,
                            "paragraph": e.location.paragraph,
                            "sentence": e.location.sentence,
                        },
                    }
                    for e in c.evidence
                ],
                "embedding": list(c.embedding) if c.embedding is not None else None,
            }
            for c in all_claims
        ],
    }
    # round through the strict parser so an invalid build can never be emitted
    return corpus_from_dict(doc, source="<build>")
