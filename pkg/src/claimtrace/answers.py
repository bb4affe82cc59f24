"""Stage 2: answer generation, citation-tag parsing, claim decomposition, spans.

The answerer wraps each sentence in citation tags; post-processing strips
the tags, segments the clean text, attaches per-sentence citations, and
maps the extractor's verbatim claim/evidence strings back to exact
character spans. Everything here must be deterministic: identical inputs
produce identical artifacts.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from . import llm
from .corpus import ClaimCorpus, SentenceSpan, segment_sentences
from .errors import ConfigError

log = logging.getLogger(__name__)

_TAG_RE = re.compile(r"<(/?)(?!\s)([^<>]+?)(?<!\s)>")


@dataclass(frozen=True)
class AnswerRequest:
    question: str
    task_description: str = ""
    editor_text: str = ""
    history: tuple[tuple[str, str], ...] = ()
    condition: str = "provenance"

    def __post_init__(self):
        if not self.question.strip():
            raise ConfigError("question must be non-empty")
        if self.condition not in ("provenance", "baseline"):
            raise ConfigError(f"unknown condition {self.condition!r}")


@dataclass(frozen=True)
class TaggedAnswer:
    raw_text: str
    clean_text: str
    sentence_citations: tuple[tuple[SentenceSpan, tuple[str, ...]], ...]
    tag_events: tuple[tuple[int, str], ...]  # (clean offset, raw tag text) in scan order
    warnings: tuple[str, ...] = ()
    unknown_citations: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "raw_text": self.raw_text,
            "clean_text": self.clean_text,
            "sentences": [
                {
                    "start": span.start,
                    "end": span.end,
                    "text": span.text,
                    "citations": list(keys),
                }
                for span, keys in self.sentence_citations
            ],
            "warnings": list(self.warnings),
            "unknown_citations": list(self.unknown_citations),
        }


def reconstruct_raw(answer: TaggedAnswer) -> str:
    """Re-insert the logged tags into clean_text; must equal raw_text."""
    parts: list[str] = []
    cursor = 0
    for offset, tag in answer.tag_events:
        parts.append(answer.clean_text[cursor:offset])
        parts.append(tag)
        cursor = offset
    parts.append(answer.clean_text[cursor:])
    return "".join(parts)


def _split_keys(inner: str) -> list[str]:
    return [k.strip() for k in inner.split(";") if k.strip()]


def parse_tagged_answer(raw_text: str, known_citations: set[str] | None = None) -> TaggedAnswer:
    """Strip citation tags from an answer in a single left-to-right scan.

    Tolerant of malformed tagging: unmatched openers or closers are removed
    from the text but contribute no citations, with a warning recorded.
    """
    clean_parts: list[str] = []
    clean_len = 0
    tag_events: list[tuple[int, str]] = []
    warnings: list[str] = []
    # opener stack and matched ranges, all in clean-text coordinates
    stack: list[tuple[tuple[str, ...], int, str]] = []
    ranges: list[tuple[int, int, tuple[str, ...]]] = []

    cursor = 0
    for match in _TAG_RE.finditer(raw_text):
        inner = match.group(2)
        if not any(ch.isalpha() for ch in inner):
            continue  # not a citation tag (e.g. numeric comparison in prose)
        text_chunk = raw_text[cursor:match.start()]
        clean_parts.append(text_chunk)
        clean_len += len(text_chunk)
        tag_events.append((clean_len, match.group(0)))
        keys = tuple(_split_keys(inner))
        if match.group(1):  # closer
            hit = None
            for idx in range(len(stack) - 1, -1, -1):
                if stack[idx][0] == keys:
                    hit = idx
                    break
            if hit is None:
                warnings.append(f"closing tag {match.group(0)!r} has no matching opener")
            else:
                _, open_pos, open_tag = stack.pop(hit)
                ranges.append((open_pos, clean_len, keys))
        else:
            stack.append((keys, clean_len, match.group(0)))
        cursor = match.end()
    tail = raw_text[cursor:]
    clean_parts.append(tail)
    clean_len += len(tail)
    for keys, open_pos, open_tag in stack:
        warnings.append(f"unclosed tag {open_tag!r}; its citations were dropped")

    clean_text = "".join(clean_parts)
    sentences = segment_sentences(clean_text)
    sentence_citations = []
    unknown: list[str] = []
    for span in sentences:
        keys_in_order: list[str] = []
        for open_pos, close_pos, keys in ranges:
            if open_pos < span.end and close_pos > span.start:
                for key in keys:
                    if key not in keys_in_order:
                        keys_in_order.append(key)
        if known_citations is not None:
            for key in keys_in_order:
                if key not in known_citations and key not in unknown:
                    unknown.append(key)
        sentence_citations.append((span, tuple(keys_in_order)))
    for w in warnings:
        log.warning("tag parse: %s", w)
    if unknown:
        log.warning("tag parse: citations not in corpus: %s", unknown)
    return TaggedAnswer(
        raw_text=raw_text,
        clean_text=clean_text,
        sentence_citations=tuple(sentence_citations),
        tag_events=tuple(tag_events),
        warnings=tuple(warnings),
        unknown_citations=tuple(unknown),
    )


def format_paper_contents(corpus: ClaimCorpus) -> str:
    """Serialize every paper as title-headed plain text for the answer prompt."""
    blocks = []
    for paper in corpus.papers.values():
        lines = [f"Title: {paper.title} ({paper.citation_key})"]
        for section in paper.sections:
            lines.append(f"## {section.name}")
            for para in section.paragraphs:
                lines.append(para.text)
        blocks.append("\n\n".join(lines))
    return "\n\n---\n\n".join(blocks)


def format_history(history: tuple[tuple[str, str], ...]) -> str:
    if not history:
        return "(none)"
    return "\n\n".join(f"Q: {q}\nA: {a}" for q, a in history)


def generate_answer(
    request: AnswerRequest,
    corpus: ClaimCorpus,
    provider: llm.LLMProvider,
    retry: llm.RetryPolicy = llm.RetryPolicy(),
) -> TaggedAnswer:
    """Ask the answerer LLM and parse its citation tags."""
    req = llm.build_request(
        llm.ANSWER_GENERATION,
        {
            "PAPER_CONTENTS": format_paper_contents(corpus),
            "TASK_DESCRIPTION": request.task_description or "(none)",
            "EDITOR_TEXT": request.editor_text or "(none)",
            "CONVERSATION_HISTORY": format_history(request.history),
            "USER_QUESTION": request.question,
        },
        model_id=provider.model_id,
    )
    response = llm.complete_structured(provider, req, retry)
    return parse_tagged_answer(response.payload, known_citations=corpus.citation_keys)


@dataclass(frozen=True)
class ExtractedRecord:
    """One schema row from the decomposition call, before span annotation."""

    claim: str
    claim_texts: tuple[str, ...]
    evidence_texts: tuple[str, ...]


def extract_answer_claims(
    clean_text: str,
    provider: llm.LLMProvider,
    retry: llm.RetryPolicy = llm.RetryPolicy(),
    few_shot_examples: list[dict] | None = None,
) -> list[ExtractedRecord]:
    """Decompose a clean answer into claims with verbatim claim/evidence texts."""
    if not clean_text.strip():
        raise ConfigError("clean_text must be non-empty")
    if few_shot_examples is None:
        few_shot_examples = llm.load_builtin_few_shots("answer_decomposition")["examples"]
    request = llm.build_request(
        llm.ANSWER_CLAIM_EXTRACTION,
        {
            "FEW_SHOT_EXAMPLES": llm.format_decomposition_few_shots(few_shot_examples),
            "ANSWER_TEXT": clean_text,
        },
        model_id=provider.model_id,
    )
    response = llm.complete_structured(provider, request, retry)
    records = []
    for item in response.payload:
        if not item["claim"].strip():
            continue
        records.append(
            ExtractedRecord(
                claim=item["claim"],
                claim_texts=tuple(item["claim_texts"]),
                evidence_texts=tuple(item["evidence_texts"]),
            )
        )
    return records


@dataclass(frozen=True)
class AnswerClaim:
    claim_id: str
    claim_text: str
    claim_spans: tuple[tuple[int, int], ...]
    evidence_spans: tuple[tuple[int, int], ...]
    unmatched_texts: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "claim_id": self.claim_id,
            "claim_text": self.claim_text,
            "claim_spans": [list(s) for s in self.claim_spans],
            "evidence_spans": [list(s) for s in self.evidence_spans],
            "unmatched_texts": list(self.unmatched_texts),
        }


def annotate_spans(clean_text: str, extracted: list[ExtractedRecord]) -> list[AnswerClaim]:
    """Locate each verbatim extractor string in the answer text.

    Exact substring search; the first occurrence wins when a string appears
    more than once. Strings the extractor paraphrased (no exact occurrence)
    are kept in unmatched_texts rather than given fabricated spans, so the
    claim still participates in matching but renders without highlights.
    """
    claims = []
    for idx, record in enumerate(extracted):
        claim_spans: list[tuple[int, int]] = []
        evidence_spans: list[tuple[int, int]] = []
        unmatched: list[str] = []
        for text in record.claim_texts:
            pos = clean_text.find(text) if text else -1
            if pos < 0:
                unmatched.append(text)
            else:
                claim_spans.append((pos, pos + len(text)))
        for text in record.evidence_texts:
            pos = clean_text.find(text) if text else -1
            if pos < 0:
                unmatched.append(text)
            else:
                evidence_spans.append((pos, pos + len(text)))
        claims.append(
            AnswerClaim(
                claim_id=f"a{idx}",
                claim_text=record.claim,
                claim_spans=tuple(claim_spans),
                evidence_spans=tuple(evidence_spans),
                unmatched_texts=tuple(unmatched),
            )
        )
    return claims


def evidence_texts_of(claim: AnswerClaim, clean_text: str) -> list[str]:
    """The verbatim evidence strings of a claim, resolved from its spans."""
    return [clean_text[s:e] for s, e in claim.evidence_spans]
