"""Self-contained deterministic demo environment.

Builds a tiny synthetic corpus and a scripted provider whose behavior is
derived from the prompt text, so the full stack (pipeline, server,
frontend) runs offline with stable outputs. The demo answerer echoes two
corpus claims verbatim and invents one unsupported sentence, which
exercises included, omitted, and unsupported states in the interface.
"""

from __future__ import annotations

import json
import re

from . import llm
from .corpus import ClaimCorpus, parse_paper_text, segment_sentences
from .embedding import HashEmbeddingProvider
from .extraction import ExtractionConfig, build_corpus
from .server import QuestionBankEntry, ServerContext, TaskFixture
from .matching import PipelineConfig
from .pipeline import run_qa_turn
from .answers import AnswerRequest

DEMO_PAPER_1 = """\
PAPER-ID: frostline2031
TITLE: Autonomous Survey Drones for Seasonal Glacier Monitoring
CITATION-KEY: Aldersea et al., 2031

## Introduction

Seasonal monitoring of alpine glaciers has historically required crewed expeditions. Autonomous survey drones reduced per-season monitoring cost by 62 percent across the eleven glaciers studied. The drones completed 312 survey flights without a single loss of airframe.

Coverage is the second obstacle. Fixed camera stations observe less than 4 percent of a typical glacier surface. A single drone sortie maps 1.8 square kilometers at 5 cm resolution.

## Results

Mass-balance estimates from drone photogrammetry agreed with stake measurements within 6 percent. Agreement degraded on debris-covered ice, where photogrammetric error doubled. Wind gusts above 14 m/s forced early termination of 9 percent of sorties.

Battery swaps remain the dominant ground delay. Crews exchanged packs in a median of 3.5 minutes. Heated hangars cut cold-start faults by half.
"""

DEMO_PAPER_2 = """\
PAPER-ID: radarcal2029
TITLE: Field Calibration of Ice-Penetrating Radar on Temperate Glaciers
CITATION-KEY: Brandt and Okafor, 2029

## Introduction

Ice-penetrating radar depth estimates drift without field calibration. Uncalibrated radar overestimated ice thickness by up to 11 percent on temperate glaciers. Borehole-tied calibration reduced mean thickness error to 2.3 percent.

## Methods

We calibrated against 14 boreholes distributed across three glaciers. Each calibration pass took under 40 minutes of station time. Crews repeated passes at monthly intervals through the melt season.
"""

DEMO_TASKS = [
    TaskFixture(
        task_id="synthesis",
        title="Multi-paper synthesis",
        description="Edit the draft synthesis of the two survey-technology papers, using the QA panel to verify and improve it.",
        initial_draft=(
            "Recent field programs suggest that autonomous platforms are transforming glacier "
            "monitoring. Drone surveys now rival crewed expeditions at a fraction of the cost, "
            "and radar calibration workflows have matured to deliver reliable thickness maps. "
            "Together these advances point toward fully remote seasonal monitoring."
        ),
    ),
    TaskFixture(
        task_id="review",
        title="Devil's advocate review",
        description="Edit the draft defense of the drone-survey paper against likely reviewer critiques, verifying each argument.",
        initial_draft=(
            "The drone survey study is methodologically sound. Its cost reductions are "
            "well documented, the flight program was extensive, and the photogrammetric "
            "validation against stake measurements is convincing across all ice conditions."
        ),
    ),
]

DEMO_QUESTIONS = [
    {"question_id": "q-cost", "text": "How much did autonomous drones reduce monitoring cost?",
     "task_id": "synthesis", "category": {"type": "testing", "subtype": "quantitative comparison"}},
    {"question_id": "q-agreement", "text": "How well did drone photogrammetry agree with stake measurements?",
     "task_id": "synthesis", "category": {"type": "testing", "subtype": "examples"}},
    {"question_id": "q-calibration", "text": "Why does ice-penetrating radar need field calibration?",
     "task_id": "review", "category": {"type": "deep", "subtype": "rationale"}},
]


def _tail_field(prompt: str, label: str) -> str:
    """Text of the last '{label}: ...' block, running to the end of the prompt.

    Few-shot exemplars repeat some labels, so only the final occurrence is the
    live input.
    """
    marker = f"{label}: "
    idx = prompt.rfind("\n" + marker)
    if idx >= 0:
        return prompt[idx + 1 + len(marker):].strip()
    if prompt.startswith(marker):
        return prompt[len(marker):].strip()
    return ""


def _listing_items(prompt: str, label: str) -> list[str]:
    """Parse the 'ID n: text' rows of one labeled prompt section."""
    marker = f"{label}: "
    idx = prompt.rfind("\n" + marker)
    if idx < 0:
        return []
    block = prompt[idx + 1 + len(marker):]
    items: list[str] = []
    for line in block.splitlines():
        line = line.strip()
        if not line:
            if items:
                break
            continue
        m = re.match(r"ID (\d+): (.*)", line)
        if m:
            items.append(m.group(2))
        else:
            break
    return items


class DemoProvider(llm.LLMProvider):
    """Prompt-driven deterministic stand-in for the real model.

    Claim extraction returns each paragraph's first sentence verbatim (so
    hash embeddings give exact evidence hits); the answerer echoes corpus
    claims with citation tags plus one fabricated sentence; matching pairs
    textually identical claims.
    """

    model_id = "demo-llm"

    def __init__(self, corpus_hint: list[tuple[str, str]] | None = None):
        # (citation_key, claim text) pairs, filled once the corpus is built
        self.corpus_hint = corpus_hint or []

    def generate(self, request: llm.StructuredRequest) -> str:
        prompt = request.rendered_prompt
        tid = request.template_id
        if tid == llm.PAPER_CLAIM_EXTRACTION:
            paragraph = _tail_field(prompt, "Paragraph")
            sentences = segment_sentences(paragraph)
            claims = [{"claim": s.text} for s in sentences[:1] if not s.text.endswith("?")]
            return json.dumps(claims)
        if tid == llm.ANSWER_GENERATION:
            parts = []
            for key, claim_text in self.corpus_hint[:2]:
                parts.append(f"<{key}> {claim_text} </{key}>")
            parts.append("Remote monitoring also eliminates all staffing costs entirely.")
            return " ".join(parts)
        if tid == llm.ANSWER_CLAIM_EXTRACTION:
            text = _tail_field(prompt, "Text")
            records = []
            for span in segment_sentences(text):
                records.append({
                    "claim": span.text,
                    "claim_texts": [span.text],
                    "evidence_texts": [],
                })
            return json.dumps(records)
        if tid == llm.RELEVANT_CLAIMS:
            count = len(_listing_items(prompt, "Claims"))
            return json.dumps(list(range(count)))
        if tid == llm.RELEVANT_EVIDENCE:
            count = len(_listing_items(prompt, "Evidence passages"))
            return json.dumps(list(range(min(2, count))))
        if tid == llm.CLAIM_MATCHING:
            answer_claims = _listing_items(prompt, "Answer claims")
            paper_claims = _listing_items(prompt, "Paper claims")
            pairs = []
            for a_idx, a_text in enumerate(answer_claims):
                hits = [p_idx for p_idx, p_text in enumerate(paper_claims) if p_text == a_text]
                if hits:
                    pairs.append({"answer_claim_id": a_idx, "paper_claim_ids": hits})
            return json.dumps(pairs)
        raise llm.ConfigError(f"demo provider has no behavior for template {tid!r}")


def build_demo_corpus(provider: DemoProvider | None = None,
                      embedder: HashEmbeddingProvider | None = None) -> ClaimCorpus:
    provider = provider or DemoProvider()
    embedder = embedder or HashEmbeddingProvider()
    papers = [
        parse_paper_text(DEMO_PAPER_1, source="demo paper 1"),
        parse_paper_text(DEMO_PAPER_2, source="demo paper 2"),
    ]
    cfg = ExtractionConfig()
    corpus = build_corpus(papers, cfg, provider, embedder,
                          retry=llm.RetryPolicy(backoff_seconds=0),
                          built_at="2031-01-01T00:00:00+00:00")
    return corpus


def build_demo_context(log_root, pregenerate: bool = True) -> ServerContext:
    """Assemble a ready-to-serve demo ServerContext."""
    embedder = HashEmbeddingProvider()
    provider = DemoProvider()
    corpus = build_demo_corpus(provider, embedder)
    seen_keys: set[str] = set()
    for claim in corpus.claims:
        if claim.citation_key not in seen_keys:
            provider.corpus_hint.append((claim.citation_key, claim.claim_text))
            seen_keys.add(claim.citation_key)
    cfg = PipelineConfig()
    retry = llm.RetryPolicy(backoff_seconds=0)

    bank = []
    for doc in DEMO_QUESTIONS:
        pregenerated = None
        if pregenerate:
            result = run_qa_turn(
                turn_id=f"pregen:{doc['question_id']}",
                request=AnswerRequest(question=doc["text"]),
                corpus=corpus,
                cfg=cfg,
                provider=provider,
                embedder=embedder,
                retry=retry,
            )
            pregenerated = {
                "answer": result.answer.to_dict(),
                "answer_claims": [c.to_dict() for c in result.answer_claims],
                "report": result.report.to_dict(),
            }
        bank.append(QuestionBankEntry(
            question_id=doc["question_id"],
            text=doc["text"],
            task_id=doc["task_id"],
            category=doc["category"],
            pregenerated=pregenerated,
        ))

    from pathlib import Path

    return ServerContext(
        corpus=corpus,
        provider=provider,
        embedder=embedder,
        cfg=cfg,
        tasks={t.task_id: t for t in DEMO_TASKS},
        question_bank=bank,
        log_root=Path(log_root),
        retry=retry,
    )
