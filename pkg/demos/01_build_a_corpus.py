"""Build a claim-evidence corpus from plain-text papers, then poke around in it.

Uses the bundled demo papers and offline providers, so it runs with no
network access. Swap in GeminiProvider / RemoteEmbeddingProvider for a
real build.
"""

from claimtrace.corpus import parse_paper_text, save_corpus, load_corpus
from claimtrace.demo import DEMO_PAPER_1, DEMO_PAPER_2, DemoProvider
from claimtrace.embedding import HashEmbeddingProvider
from claimtrace.extraction import ExtractionConfig, build_corpus
from claimtrace.llm import RetryPolicy

papers = [
    parse_paper_text(DEMO_PAPER_1, source="demo paper 1"),
    parse_paper_text(DEMO_PAPER_2, source="demo paper 2"),
]
print(f"loaded {len(papers)} papers:")
for paper in papers:
    sentences = sum(len(p.sentences) for s in paper.sections for p in s.paragraphs)
    print(f"  {paper.citation_key}: {len(paper.sections)} sections, {sentences} sentences")

# Stage 1: per-paragraph claim extraction, evidence retrieval at >= 0.75
# similarity, near-duplicate merging, embedding precomputation.
cfg = ExtractionConfig(evidence_threshold=0.75, context_window=1)
corpus = build_corpus(papers, cfg, DemoProvider(), HashEmbeddingProvider(),
                      retry=RetryPolicy(backoff_seconds=0))

print(f"\nbuilt corpus with {len(corpus.claims)} claims")
for claim in corpus.claims[:3]:
    print(f"\n[{claim.claim_id}] {claim.claim_text}")
    print(f"  cited as {claim.citation_key}, section {claim.section_name!r}")
    for ev in claim.evidence:
        print(f"  evidence (sim {ev.similarity:.2f}): {ev.context_text[:90]}...")

save_corpus(corpus, "/tmp/demo_corpus.json")
reloaded = load_corpus("/tmp/demo_corpus.json")
print(f"\nround trip OK: {len(reloaded.claims)} claims after save + load")
print(f"build metadata: {reloaded.metadata['extraction_model']} / "
      f"{reloaded.metadata['embedding_model']}")
