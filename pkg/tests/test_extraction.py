from __future__ import annotations

import json

import pytest

from claimtrace import llm
from claimtrace.corpus import Paragraph, corpus_to_dict, parse_paper_text
from claimtrace.embedding import HashEmbeddingProvider, StaticEmbeddingProvider
from claimtrace.errors import ClaimTraceError
from claimtrace.extraction import (
    ExtractionConfig,
    build_corpus,
    dedup_claims,
    extract_paragraph_claims,
    retrieve_evidence,
)

from conftest import unit_pair

FAST = llm.RetryPolicy(max_attempts=3, backoff_seconds=0)
FEW_SHOTS = llm.load_builtin_few_shots("claim_extraction")["examples"]

PAPER = parse_paper_text(
    """\
PAPER-ID: probe
TITLE: Probe Deployment Outcomes
CITATION-KEY: Quill et al., 2022

## Results

Deployment took nine days. Costs stayed under budget. Sensors drifted overnight.

The probe survived two storms.
""",
)


def para(text: str) -> Paragraph:
    return Paragraph.from_text(text)


# -------------------------------------------------------------- claim extraction

def test_zero_claims_paragraph():
    provider = llm.MockLLMProvider({llm.PAPER_CLAIM_EXTRACTION: []})
    got = extract_paragraph_claims(para("Nothing assertive here."), ExtractionConfig(), provider, FEW_SHOTS, FAST)
    assert got == []


def test_claims_preserved_in_order():
    provider = llm.MockLLMProvider(
        {llm.PAPER_CLAIM_EXTRACTION: [{"claim": "First claim."}, {"claim": "Second claim."}]}
    )
    got = extract_paragraph_claims(para("Two facts."), ExtractionConfig(), provider, FEW_SHOTS, FAST)
    assert got == ["First claim.", "Second claim."]


def test_few_shot_file_includes_procedural_zero_claim_exemplar():
    # the Declarative rule: method-only paragraphs yield no claims; the shipped
    # exemplars must demonstrate that for the prompt to teach it
    assert any(ex["claims"] == [] for ex in FEW_SHOTS)


def test_extraction_error_carries_location():
    provider = llm.MockLLMProvider({llm.PAPER_CLAIM_EXTRACTION: llm.RawText("garbage")})
    cfg = ExtractionConfig()
    with pytest.raises(ClaimTraceError, match="probe"):
        build_corpus([PAPER], cfg, provider, HashEmbeddingProvider(), FAST)


# ------------------------------------------------------------ evidence retrieval

def fixed_embedder(cosines: dict[str, float], claim_text: str) -> StaticEmbeddingProvider:
    table = {claim_text: (1.0, 0.0)}
    for text, target in cosines.items():
        table[text] = unit_pair(target)
    return StaticEmbeddingProvider(table)


def test_identity_embedding_gives_similarity_one():
    embedder = HashEmbeddingProvider()
    claim = "Costs stayed under budget."  # verbatim sentence of PAPER
    snippets = retrieve_evidence(claim, PAPER, ExtractionConfig(), embedder)
    assert snippets
    top = snippets[0]
    assert top.core_text == claim
    assert top.similarity == pytest.approx(1.0, abs=1e-9)


def test_all_below_threshold_returns_empty():
    sentences = [span.text for *_rest, span in PAPER.iter_sentences()]
    embedder = fixed_embedder({s: 0.4 for s in sentences}, "unrelated claim")
    assert retrieve_evidence("unrelated claim", PAPER, ExtractionConfig(), embedder) == []


def test_threshold_monotonicity_and_sorting():
    sentences = [span.text for *_rest, span in PAPER.iter_sentences()]
    targets = dict(zip(sentences, (0.92, 0.76, 0.52, 0.3)))
    embedder = fixed_embedder(targets, "the claim")
    by_theta = {}
    for theta in (0.5, 0.75, 0.9):
        cfg = ExtractionConfig(evidence_threshold=theta)
        got = retrieve_evidence("the claim", PAPER, cfg, embedder)
        by_theta[theta] = {s.core_text for s in got}
        sims = [s.similarity for s in got]
        assert sims == sorted(sims, reverse=True)
    assert by_theta[0.9] <= by_theta[0.75] <= by_theta[0.5]
    assert len(by_theta[0.5]) == 3
    assert len(by_theta[0.75]) == 2
    assert len(by_theta[0.9]) == 1


def test_context_clipped_at_paragraph_start():
    first = "Deployment took nine days."
    embedder = fixed_embedder({first: 0.9}, "the claim")
    embedder = StaticEmbeddingProvider(
        {**{span.text: unit_pair(0.1) for *_r, span in PAPER.iter_sentences()},
         first: unit_pair(0.9), "the claim": (1.0, 0.0)}
    )
    got = retrieve_evidence("the claim", PAPER, ExtractionConfig(context_window=1), embedder)
    assert len(got) == 1
    snippet = got[0]
    assert snippet.core_text == first
    assert snippet.context_text == "Deployment took nine days. Costs stayed under budget."
    assert snippet.location.sentence == 0


def test_context_clipped_at_paragraph_end():
    last = "Sensors drifted overnight."
    embedder = StaticEmbeddingProvider(
        {**{span.text: unit_pair(0.1) for *_r, span in PAPER.iter_sentences()},
         last: unit_pair(0.8), "c": (1.0, 0.0)}
    )
    got = retrieve_evidence("c", PAPER, ExtractionConfig(context_window=1), embedder)
    assert got[0].context_text == "Costs stayed under budget. Sensors drifted overnight."


# ------------------------------------------------------------------------ dedup

def test_dedup_merges_exact_duplicates_keeping_earliest():
    embedder = HashEmbeddingProvider()
    texts = ["Same claim.", "Different claim.", "Same claim."]
    vecs = embedder.embed_batch(texts)
    rows = [(t, "S", []) for t in texts]
    merged = dedup_claims(rows, vecs, threshold=0.95)
    assert [m[0] for m in merged] == ["Same claim.", "Different claim."]


def test_dedup_unions_evidence_without_duplicates():
    from claimtrace.corpus import EvidenceLocation, EvidenceSnippet

    ev = lambda sec, p, s, sim: EvidenceSnippet(  # noqa: E731
        core_text=f"s{p}{s}", context_text=f"s{p}{s}", similarity=sim,
        location=EvidenceLocation(section=sec, paragraph=p, sentence=s),
    )
    embedder = HashEmbeddingProvider()
    texts = ["Claim A.", "Claim A."]
    vecs = embedder.embed_batch(texts)
    rows = [
        ("Claim A.", "S", [ev("S", 0, 0, 0.9), ev("S", 0, 1, 0.8)]),
        ("Claim A.", "S", [ev("S", 0, 1, 0.8), ev("S", 1, 0, 0.85)]),
    ]
    merged = dedup_claims(rows, vecs, threshold=0.95)
    assert len(merged) == 1
    locs = [(e.location.paragraph, e.location.sentence) for e in merged[0][2]]
    assert sorted(locs) == [(0, 0), (0, 1), (1, 0)]
    sims = [e.similarity for e in merged[0][2]]
    assert sims == sorted(sims, reverse=True)


def test_dedup_idempotent():
    embedder = HashEmbeddingProvider()
    texts = ["One claim.", "Two claim.", "One claim.", "Red claim."]
    vecs = embedder.embed_batch(texts)
    rows = [(t, "S", []) for t in texts]
    once = dedup_claims(rows, vecs, threshold=0.95)
    again = dedup_claims([(t, s, e) for t, s, e, _v in once], [v for *_r, v in once], 0.95)
    assert [m[0] for m in again] == [m[0] for m in once]


# ------------------------------------------------------------------------ build

def scripted_builder_provider():
    # one claim per paragraph: echo the paragraph's first sentence
    def responder(request):
        from claimtrace.corpus import segment_sentences

        paragraph = request.rendered_prompt.rsplit("Paragraph: ", 1)[1]
        first = segment_sentences(paragraph)[0].text
        return [{"claim": first}]

    return llm.MockLLMProvider({llm.PAPER_CLAIM_EXTRACTION: responder})


def test_build_counts_and_metadata():
    provider = scripted_builder_provider()
    corpus = build_corpus([PAPER], ExtractionConfig(), provider, HashEmbeddingProvider(), FAST,
                          built_at="2026-02-02T00:00:00+00:00")
    assert len(corpus.claims) == 2  # one per paragraph
    assert corpus.claims[0].claim_id == "probe-c000"
    assert corpus.claims[0].embedding is not None
    assert corpus.metadata["thresholds"]["evidence_threshold"] == 0.75
    assert corpus.metadata["extraction_model"] == "mock-llm"
    # every claim's evidence includes its own source sentence at similarity 1.0
    assert corpus.claims[0].evidence[0].similarity == pytest.approx(1.0)


def test_build_is_deterministic_modulo_timestamp():
    doc1 = corpus_to_dict(
        build_corpus([PAPER], ExtractionConfig(), scripted_builder_provider(),
                     HashEmbeddingProvider(), FAST, built_at="2026-01-01T00:00:00+00:00")
    )
    doc2 = corpus_to_dict(
        build_corpus([PAPER], ExtractionConfig(), scripted_builder_provider(),
                     HashEmbeddingProvider(), FAST, built_at="2026-01-01T00:00:00+00:00")
    )
    assert json.dumps(doc1, sort_keys=True) == json.dumps(doc2, sort_keys=True)


def test_build_dedups_repeated_claim_across_paragraphs():
    provider = llm.MockLLMProvider({llm.PAPER_CLAIM_EXTRACTION: [{"claim": "Deployment took nine days."}]})
    corpus = build_corpus([PAPER], ExtractionConfig(), provider, HashEmbeddingProvider(), FAST)
    assert len(corpus.claims) == 1


def test_build_parallel_matches_serial():
    serial = corpus_to_dict(
        build_corpus([PAPER], ExtractionConfig(max_workers=1), scripted_builder_provider(),
                     HashEmbeddingProvider(), FAST, built_at="t")
    )
    parallel = corpus_to_dict(
        build_corpus([PAPER], ExtractionConfig(max_workers=4), scripted_builder_provider(),
                     HashEmbeddingProvider(), FAST, built_at="t")
    )
    assert serial == parallel
