"""Offline evaluation: extraction quality, reliance scoring, trust reporting.

Extraction quality follows the embedding-match protocol: a reference claim
counts as matched when some extracted claim's cosine similarity strictly
exceeds the match threshold (default 0.9), and symmetrically for extracted
claims. Reliance is the normalized token-level edit similarity between an
original draft and its edited version.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import llm
from .corpus import ClaimCorpus, Paragraph
from .embedding import EmbeddingProvider, cosine
from .errors import ClaimTraceError, ConfigError
from .extraction import ExtractionConfig, extract_paragraph_claims, load_few_shots
from .matching import PipelineConfig
from .pipeline import run_qa_turn

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Claim-set matching and precision/recall/F1
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvalConfig:
    match_threshold: float = 0.9
    provider_id: str = "default"

    def __post_init__(self):
        if not 0.0 < self.match_threshold <= 1.0:
            raise ConfigError(f"match_threshold must be in (0, 1], got {self.match_threshold}")


@dataclass(frozen=True)
class EvalResult:
    precision: float
    recall: float
    f1: float
    matched_reference_count: int
    matched_extracted_count: int
    reference_count: int
    extracted_count: int
    empty_extraction: bool = False
    per_sample: tuple[dict, ...] = ()
    skipped: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "matched_reference_count": self.matched_reference_count,
            "matched_extracted_count": self.matched_extracted_count,
            "reference_count": self.reference_count,
            "extracted_count": self.extracted_count,
            "empty_extraction": self.empty_extraction,
            "per_sample": list(self.per_sample),
            "skipped": list(self.skipped),
        }


def match_claim_sets(
    reference: Sequence[str],
    extracted: Sequence[str],
    cfg: EvalConfig,
    embedder: EmbeddingProvider,
) -> tuple[list[bool], list[bool]]:
    """Pairwise-similarity matching between two claim sets.

    ``ref_flags[i]`` is True iff some extracted claim strictly exceeds the
    match threshold against reference i; ``ext_flags[j]`` symmetrically.
    """
    ref_flags = [False] * len(reference)
    ext_flags = [False] * len(extracted)
    if not reference or not extracted:
        return ref_flags, ext_flags
    ref_vecs = embedder.embed_batch(list(reference))
    ext_vecs = embedder.embed_batch(list(extracted))
    for i, rv in enumerate(ref_vecs):
        for j, ev in enumerate(ext_vecs):
            if cosine(rv, ev) > cfg.match_threshold:
                ref_flags[i] = True
                ext_flags[j] = True
    return ref_flags, ext_flags


def _prf(matched_ref: int, total_ref: int, matched_ext: int, total_ext: int) -> tuple[float, float, float, bool]:
    recall = matched_ref / total_ref if total_ref else 0.0
    empty = total_ext == 0
    precision = matched_ext / total_ext if total_ext else 0.0
    f1 = (2 * precision * recall / (precision + recall)) if (precision + recall) else 0.0
    return precision, recall, f1, empty


def score_claim_sets(
    reference: Sequence[str],
    extracted: Sequence[str],
    cfg: EvalConfig,
    embedder: EmbeddingProvider,
) -> EvalResult:
    ref_flags, ext_flags = match_claim_sets(reference, extracted, cfg, embedder)
    precision, recall, f1, empty = _prf(
        sum(ref_flags), len(ref_flags), sum(ext_flags), len(ext_flags)
    )
    return EvalResult(
        precision=precision,
        recall=recall,
        f1=f1,
        matched_reference_count=sum(ref_flags),
        matched_extracted_count=sum(ext_flags),
        reference_count=len(reference),
        extracted_count=len(extracted),
        empty_extraction=empty,
    )


# ---------------------------------------------------------------------------
# Dataset evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvalSample:
    sample_id: str
    text: str
    reference_claims: tuple[str, ...]


def load_eval_dataset(path: str | Path) -> list[EvalSample]:
    """Read the neutral JSONL format: {id, text, reference_claims: [...]}."""
    samples = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            samples.append(
                EvalSample(
                    sample_id=str(doc["id"]),
                    text=doc["text"],
                    reference_claims=tuple(doc["reference_claims"]),
                )
            )
        except (json.JSONDecodeError, KeyError) as exc:
            raise ConfigError(f"{path}:{line_no}: bad dataset record: {exc}") from exc
    return samples


def evaluate_extraction(
    samples: Sequence[EvalSample],
    cfg: EvalConfig,
    provider: llm.LLMProvider,
    embedder: EmbeddingProvider,
    extraction_cfg: ExtractionConfig | None = None,
    retry: llm.RetryPolicy = llm.RetryPolicy(),
) -> EvalResult:
    """Few-shot extraction over each sample, then embedding-matched P/R/F1.

    Scores are micro-averaged over samples. Provider failures skip the
    sample and are reported separately rather than polluting the averages.
    """
    extraction_cfg = extraction_cfg or ExtractionConfig()
    _fid, few_shots = load_few_shots(extraction_cfg)
    total_ref = total_ext = matched_ref = matched_ext = 0
    per_sample: list[dict] = []
    skipped: list[str] = []
    for sample in samples:
        try:
            extracted = extract_paragraph_claims(
                Paragraph.from_text(sample.text), extraction_cfg, provider, few_shots, retry
            )
        except ClaimTraceError as exc:
            log.warning("sample %s skipped: %s", sample.sample_id, exc)
            skipped.append(sample.sample_id)
            continue
        ref_flags, ext_flags = match_claim_sets(sample.reference_claims, extracted, cfg, embedder)
        p, r, f1, empty = _prf(sum(ref_flags), len(ref_flags), sum(ext_flags), len(ext_flags))
        per_sample.append(
            {
                "id": sample.sample_id,
                "precision": p,
                "recall": r,
                "f1": f1,
                "reference_count": len(ref_flags),
                "extracted_count": len(ext_flags),
                "matched_reference_count": sum(ref_flags),
                "matched_extracted_count": sum(ext_flags),
                "empty_extraction": empty,
            }
        )
        total_ref += len(ref_flags)
        total_ext += len(ext_flags)
        matched_ref += sum(ref_flags)
        matched_ext += sum(ext_flags)
    precision, recall, f1, empty = _prf(matched_ref, total_ref, matched_ext, total_ext)
    return EvalResult(
        precision=precision,
        recall=recall,
        f1=f1,
        matched_reference_count=matched_ref,
        matched_extracted_count=matched_ext,
        reference_count=total_ref,
        extracted_count=total_ext,
        empty_extraction=empty,
        per_sample=tuple(sorted(per_sample, key=lambda row: row["id"])),
        skipped=tuple(skipped),
    )


# ---------------------------------------------------------------------------
# Reliance metric
# ---------------------------------------------------------------------------

NEGATIONS = frozenset({"no", "not", "nor", "n't"})

_TOKEN_RE = re.compile(r"[a-z]+(?:'[a-z]+)*|\d+(?:\.\d+)?")

# (suffix, replacement, minimum stem length) in match order
_SUFFIX_RULES: tuple[tuple[str, str, int], ...] = (
    ("izations", "ize", 3),
    ("ization", "ize", 3),
    ("ations", "ate", 3),
    ("ation", "ate", 3),
    ("ities", "ity", 2),
    ("sses", "ss", 2),
    ("ches", "ch", 2),
    ("shes", "sh", 2),
    ("xes", "x", 2),
    ("zes", "ze", 2),
    ("ies", "y", 2),
    ("ied", "y", 2),
    ("ves", "f", 2),
    ("ing", "", 3),
    ("ed", "", 3),
    ("es", "e", 3),
    ("s", "", 3),
)

_IRREGULARS = {
    "is": "be", "are": "be", "was": "be", "were": "be", "am": "be",
    "been": "be", "being": "be",
    "has": "have", "had": "have", "having": "have",
    "does": "do", "did": "do", "done": "do", "goes": "go", "went": "go", "gone": "go",
    "made": "make", "said": "say", "saw": "see", "seen": "see",
    "took": "take", "taken": "take", "gave": "give", "given": "give",
    "found": "find", "showed": "show", "shown": "show",
    "men": "man", "women": "woman", "children": "child", "people": "person",
    "mice": "mouse", "feet": "foot", "teeth": "tooth", "data": "datum",
}

_DOUBLES = ("bb", "dd", "ff", "gg", "mm", "nn", "pp", "rr", "tt")


def lemmatize(token: str) -> str:
    """Small rule-based suffix lemmatizer (normalizer id "suffix-v1").

    An approximation of dictionary lemmas: deterministic, and it collapses
    common inflection families (optimize/optimized/optimization). Reliance
    values are comparable only within one normalizer id.
    """
    if token in NEGATIONS or token.isdigit() or any(ch.isdigit() for ch in token):
        return token
    if token in _IRREGULARS:
        return _IRREGULARS[token]
    for suffix, replacement, min_stem in _SUFFIX_RULES:
        if token.endswith(suffix) and len(token) - len(suffix) >= min_stem:
            stem = token[: len(token) - len(suffix)] + replacement
            if suffix in ("ing", "ed"):
                if stem.endswith(_DOUBLES):
                    stem = stem[:-1]
                elif stem.endswith(("iz", "at", "yz")):
                    stem += "e"
            if suffix == "s" and stem.endswith(("s", "u", "i")):
                return token  # bus, basis, thesis style words keep their s
            return stem
    return token


@dataclass(frozen=True)
class RelianceConfig:
    stopword_list_id: str = "en-basic-1"
    negations: frozenset[str] = NEGATIONS
    normalizer_id: str = "suffix-v1"
    stopword_path: str | None = None

    def __post_init__(self):
        missing = NEGATIONS - self.negations
        if missing:
            raise ConfigError(f"negation tokens may never be removed: {sorted(missing)}")


def load_stopwords(cfg: RelianceConfig | None = None) -> frozenset[str]:
    cfg = cfg or RelianceConfig()
    if cfg.stopword_path:
        raw = Path(cfg.stopword_path).read_text(encoding="utf-8")
    else:
        raw = resources.files("claimtrace").joinpath("data/stopwords_en.txt").read_text("utf-8")
    words = {
        line.strip().lower()
        for line in raw.splitlines()
        if line.strip() and not line.startswith("#")
    }
    return frozenset(words)


def normalize_tokens(text: str, cfg: RelianceConfig | None = None,
                     stopwords: frozenset[str] | None = None) -> list[str]:
    """W(.): lowercased lemmas with stopwords removed and negations retained."""
    cfg = cfg or RelianceConfig()
    if stopwords is None:
        stopwords = load_stopwords(cfg)
    lowered = text.lower().replace("’", "'").replace("‘", "'")
    tokens: list[str] = []
    for tok in _TOKEN_RE.findall(lowered):
        if tok.endswith("n't") and len(tok) > 3:
            stem = tok[:-3]
            if stem:
                tokens.append(stem)
            tokens.append("n't")
        else:
            tokens.append(tok)
    out = []
    for tok in tokens:
        lemma = lemmatize(tok)
        if tok in cfg.negations or lemma in cfg.negations:
            out.append(lemma)
            continue
        if tok in stopwords or lemma in stopwords:
            continue
        out.append(lemma)
    return out


def token_levenshtein(a: Sequence[str], b: Sequence[str]) -> int:
    """Edit distance over token sequences (two-row dynamic program)."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ta in enumerate(a, 1):
        cur = [i] + [0] * len(b)
        for j, tb in enumerate(b, 1):
            cost = 0 if ta == tb else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return prev[-1]


def reliance(original: str, edited: str, cfg: RelianceConfig | None = None) -> float:
    """1 - LD(W(x), W(y)) / max(|W(x)|, |W(y)|), in [0, 1].

    1.0 means no edits (full reliance); 0.0 means a complete rewrite. Two
    empty normalized sequences score 1.0: no edit occurred.
    """
    cfg = cfg or RelianceConfig()
    stopwords = load_stopwords(cfg)
    wx = normalize_tokens(original, cfg, stopwords)
    wy = normalize_tokens(edited, cfg, stopwords)
    longest = max(len(wx), len(wy))
    if longest == 0:
        return 1.0
    return 1.0 - token_levenshtein(wx, wy) / longest


# ---------------------------------------------------------------------------
# Trustworthiness reporting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QAPair:
    pair_id: str
    question: str
    answer: str | None = None  # None -> generate with the answerer


def load_qa_pairs(path: str | Path) -> list[QAPair]:
    pairs = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        doc = json.loads(line)
        try:
            pairs.append(
                QAPair(
                    pair_id=str(doc["id"]),
                    question=doc["question"],
                    answer=doc.get("answer"),
                )
            )
        except KeyError as exc:
            raise ConfigError(f"{path}:{line_no}: bad qa record: {exc}") from exc
    return pairs


def trustworthiness_report(
    corpus: ClaimCorpus,
    qa_pairs: Sequence[QAPair],
    provider: llm.LLMProvider,
    embedder: EmbeddingProvider,
    cfg: PipelineConfig | None = None,
    retry: llm.RetryPolicy = llm.RetryPolicy(),
) -> dict:
    """Score each answer's coverage, unsupported claims, and omissions.

    Answers may be supplied (audit mode) or generated by the answerer. Each
    row degrades independently; one bad answer never sinks the table.
    """
    from . import answers as answers_mod
    from . import matching as matching_mod

    cfg = cfg or PipelineConfig()
    rows: list[dict] = []
    for pair in qa_pairs:
        try:
            request = answers_mod.AnswerRequest(question=pair.question)
            if pair.answer is None:
                result = run_qa_turn(
                    pair.pair_id, request, corpus, cfg, provider, embedder, retry
                )
                report = result.report
            else:
                tagged = answers_mod.parse_tagged_answer(pair.answer, corpus.citation_keys)
                if tagged.clean_text.strip():
                    extracted = answers_mod.extract_answer_claims(tagged.clean_text, provider, retry)
                else:
                    extracted = []  # empty answer: nothing to decompose, all claims omitted
                answer_claims = answers_mod.annotate_spans(tagged.clean_text, extracted)
                selection = matching_mod.select_relevant_claims(
                    pair.question, corpus, cfg, provider, embedder, retry
                )
                report_claims = []
                degradations = []
                if selection.degraded:
                    degradations.append("relevant_claim_selection_fallback")
                for claim in selection.claims:
                    picked = matching_mod.select_relevant_evidence(
                        pair.question, claim, cfg, provider, embedder, retry
                    )
                    if picked.degraded:
                        degradations.append(f"evidence_selection_fallback:{claim.claim_id}")
                    report_claims.append(
                        matching_mod.ReportClaim(claim=claim, selected_evidence=picked.snippets)
                    )
                outcome = matching_mod.match_claims(answer_claims, selection.claims, provider, retry)
                if outcome.degraded:
                    degradations.append("claim_matching_failed")
                pool = [ev.core_text for rc in report_claims for ev in rc.selected_evidence]
                flags = matching_mod.verify_answer_evidence(
                    answer_claims, tagged.clean_text, pool, cfg, embedder
                )
                report = matching_mod.build_report(
                    pair.pair_id, answer_claims, report_claims, outcome.matches, flags, degradations
                )
        except ClaimTraceError as exc:
            log.warning("qa pair %s failed: %s", pair.pair_id, exc)
            rows.append({"id": pair.pair_id, "status": "failed", "error": str(exc)})
            continue
        included, relevant = report.coverage
        rows.append(
            {
                "id": pair.pair_id,
                "status": "degraded" if report.degradations else "ok",
                "coverage_included": included,
                "coverage_relevant": relevant,
                "coverage_ratio": (included / relevant) if relevant else None,
                "unsupported_answer_claims": len(report.unsupported_answer_claims),
                "omitted_claim_ids": list(report.omitted),
                "flagged_evidence": len(report.flagged_evidence),
                "degradations": list(report.degradations),
            }
        )
    scored = [r for r in rows if r.get("coverage_ratio") is not None]
    aggregate = {
        "answers": len(rows),
        "failed": sum(1 for r in rows if r["status"] == "failed"),
        "mean_coverage": (
            sum(r["coverage_ratio"] for r in scored) / len(scored) if scored else None
        ),
        "total_unsupported": sum(r.get("unsupported_answer_claims", 0) for r in rows),
        "total_flagged_evidence": sum(r.get("flagged_evidence", 0) for r in rows),
    }
    return {"rows": rows, "aggregate": aggregate}


# ---------------------------------------------------------------------------
# Report writers
# ---------------------------------------------------------------------------

def write_json_report(doc: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_csv_rows(rows: Iterable[dict], path: str | Path) -> None:
    rows = list(rows)
    if not rows:
        Path(path).write_text("", encoding="utf-8")
        return
    fieldnames = list(rows[0].keys())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v
                             for k, v in row.items()})
