"""Claim-evidence provenance for document-grounded scholarly question answering.

The pipeline decomposes both source papers and model answers into atomic
claims with evidence, matches them, and reports which source claims an
answer covers, which it omits, and which of its own claims lack support.
"""

from .corpus import (
    ClaimCorpus,
    EvidenceLocation,
    EvidenceSnippet,
    Paper,
    PaperClaim,
    Paragraph,
    Section,
    SentenceSpan,
    load_corpus,
    load_papers_dir,
    parse_paper_text,
    save_corpus,
    segment_sentences,
)
from .embedding import (
    CachedEmbeddingProvider,
    EmbeddingProvider,
    EmbeddingVector,
    HashEmbeddingProvider,
    RemoteEmbeddingProvider,
    StaticEmbeddingProvider,
    cosine,
)
from .errors import (
    ClaimTraceError,
    ConfigError,
    CorpusError,
    ExtractionError,
    ProviderRefusal,
    RenderError,
    TransportError,
    TurnCancelled,
)
from .extraction import ExtractionConfig, build_corpus, extract_paragraph_claims, retrieve_evidence
from .answers import (
    AnswerClaim,
    AnswerRequest,
    TaggedAnswer,
    annotate_spans,
    extract_answer_claims,
    generate_answer,
    parse_tagged_answer,
)
from .matching import (
    ClaimMatch,
    FlaggedEvidence,
    PipelineConfig,
    ProvenanceReport,
    ReportClaim,
    build_report,
    match_claims,
    select_relevant_claims,
    select_relevant_evidence,
    verify_answer_evidence,
)
from .pipeline import TurnResult, run_qa_turn
from .evalharness import (
    EvalConfig,
    EvalResult,
    RelianceConfig,
    evaluate_extraction,
    match_claim_sets,
    reliance,
    token_levenshtein,
    trustworthiness_report,
)

__version__ = "0.1.0"
