"""Run one question through the full pipeline and read the provenance report.

The turn produces: a tagged answer, atomic answer claims with exact text
spans, a relevant-claim selection from the corpus, claim-to-claim matches,
and the coverage partition (included vs omitted) plus unsupported claims.
"""

from claimtrace.answers import AnswerRequest
from claimtrace.demo import DemoProvider, build_demo_corpus
from claimtrace.embedding import HashEmbeddingProvider
from claimtrace.llm import RetryPolicy
from claimtrace.matching import PipelineConfig
from claimtrace.pipeline import run_qa_turn

embedder = HashEmbeddingProvider()
provider = DemoProvider()
corpus = build_demo_corpus(provider, embedder)
for claim in corpus.claims:
    if not any(k == claim.citation_key for k, _ in provider.corpus_hint):
        provider.corpus_hint.append((claim.citation_key, claim.claim_text))

result = run_qa_turn(
    turn_id="demo-turn",
    request=AnswerRequest(question="How much did drone surveys cut monitoring cost?"),
    corpus=corpus,
    cfg=PipelineConfig(),          # 0.75 evidence, 0.55 flag, top-30 prefilter
    provider=provider,
    embedder=embedder,
    retry=RetryPolicy(backoff_seconds=0),
)

print("ANSWER (clean text):")
print(" ", result.answer.clean_text)
print("\nper-sentence citations:")
for span, keys in result.answer.sentence_citations:
    print(f"  {span.text!r} -> {list(keys) or 'no citation'}")

print("\nanswer claims and their spans:")
for claim in result.answer_claims:
    print(f"  [{claim.claim_id}] {claim.claim_text}")
    for start, end in claim.claim_spans:
        print(f"    span {start}:{end} -> {result.answer.clean_text[start:end]!r}")

report = result.report
included, relevant = report.coverage
print(f"\nCLAIM COVERAGE: {included} of {relevant} relevant paper claims included")
print("included:", list(report.included))
print("omitted: ", list(report.omitted))
print("unsupported answer claims:", list(report.unsupported_answer_claims))
for match in report.matches:
    print(f"match: {match.answer_claim_id} == {list(match.paper_claim_ids)}")
