"""Claim-evidence knowledge base: domain types, sentence segmentation, corpus I/O.

The corpus is a read-only bundle of source papers plus the claims extracted
from them. It is loaded once at startup, validated strictly, and shared
freely across threads (everything here is immutable after construction).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CorpusError

# ---------------------------------------------------------------------------
# Sentence segmentation
# ---------------------------------------------------------------------------

# Tokens (lowercased, final period stripped, internal periods kept) that never
# end a sentence even when followed by whitespace and a capital/digit.
_ABBREVIATIONS = frozenset({
    "e.g", "i.e", "etc", "cf", "vs", "al", "ca", "approx",
    "fig", "figs", "eq", "eqs", "sec", "secs", "tab", "ref", "refs",
    "no", "nos", "vol", "pp", "dept", "inc", "ltd", "co",
    "dr", "mr", "mrs", "ms", "prof", "st", "jr", "sr",
    "u.s", "u.k", "e.u", "u.n", "ph.d",
})

_TERMINALS = ".!?"
_CLOSERS = ")]\"'”’»"
_OPENERS = "\"'“‘(["


@dataclass(frozen=True)
class SentenceSpan:
    """Character span of one sentence inside its parent text."""

    start: int
    end: int
    text: str


def _preceding_word(text: str, idx: int) -> str:
    """Word immediately before position idx (letters/digits/periods), lowercased."""
    k = idx - 1
    while k >= 0 and (text[k].isalnum() or text[k] in ".'-"):
        k -= 1
    return text[k + 1:idx].lower().rstrip(".")


def _is_boundary(text: str, punct_start: int, run_end: int) -> bool:
    n = len(text)
    if run_end >= n:
        return True
    if not text[run_end].isspace():
        return False
    k = run_end
    while k < n and text[k].isspace():
        k += 1
    if k == n:
        return True
    nxt = text[k]
    if not (nxt.isupper() or nxt.isdigit() or nxt in _OPENERS):
        return False
    if text[punct_start] == ".":
        # decimal guard: 3.5, 4.2 never split even if oddly spaced
        if punct_start > 0 and text[punct_start - 1].isdigit() and nxt.isdigit():
            word = _preceding_word(text, punct_start)
            if word and word.replace(".", "").isdigit():
                return False
        if _preceding_word(text, punct_start) in _ABBREVIATIONS:
            return False
    return True


def segment_sentences(text: str) -> list[SentenceSpan]:
    """Split text into sentence spans with exact character offsets.

    Deterministic rule-based segmentation: a sentence ends at a run of
    terminal punctuation (plus trailing closing quotes/brackets) that is
    followed by whitespace and a capital, digit, or opening quote/bracket.
    Abbreviations and decimal numbers never split. Offsets always satisfy
    ``text[span.start:span.end] == span.text`` and spans cover every
    non-whitespace character in order.
    """
    spans: list[SentenceSpan] = []
    n = len(text)
    start: int | None = None
    i = 0
    while i < n:
        ch = text[i]
        if start is None:
            if not ch.isspace():
                start = i
            i += 1
            continue
        if ch in _TERMINALS:
            j = i
            while j < n and text[j] in _TERMINALS:
                j += 1
            while j < n and text[j] in _CLOSERS:
                j += 1
            if _is_boundary(text, i, j):
                spans.append(SentenceSpan(start, j, text[start:j]))
                start = None
            i = j
            continue
        i += 1
    if start is not None:
        end = n
        while end > start and text[end - 1].isspace():
            end -= 1
        spans.append(SentenceSpan(start, end, text[start:end]))
    return spans


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Paragraph:
    text: str
    sentences: tuple[SentenceSpan, ...]

    @classmethod
    def from_text(cls, text: str) -> "Paragraph":
        return cls(text=text, sentences=tuple(segment_sentences(text)))


@dataclass(frozen=True)
class Section:
    name: str
    paragraphs: tuple[Paragraph, ...]


@dataclass(frozen=True)
class Paper:
    paper_id: str
    title: str
    citation_key: str
    sections: tuple[Section, ...]

    def section(self, name: str) -> Section:
        for sec in self.sections:
            if sec.name == name:
                return sec
        raise KeyError(name)

    def iter_sentences(self):
        """Yield (section_name, paragraph_index, sentence_index, paragraph, span)."""
        for sec in self.sections:
            for p_idx, para in enumerate(sec.paragraphs):
                for s_idx, span in enumerate(para.sentences):
                    yield sec.name, p_idx, s_idx, para, span


@dataclass(frozen=True)
class EvidenceLocation:
    section: str
    paragraph: int
    sentence: int


@dataclass(frozen=True)
class EvidenceSnippet:
    core_text: str
    context_text: str
    similarity: float
    location: EvidenceLocation


@dataclass(frozen=True)
class PaperClaim:
    claim_id: str
    claim_text: str
    citation_key: str
    section_name: str
    evidence: tuple[EvidenceSnippet, ...] = ()
    embedding: tuple[float, ...] | None = None


@dataclass(frozen=True)
class ClaimCorpus:
    papers: dict[str, Paper]
    claims: tuple[PaperClaim, ...]
    metadata: dict = field(default_factory=dict)

    def claim(self, claim_id: str) -> PaperClaim:
        got = self.claims_by_id().get(claim_id)
        if got is None:
            raise KeyError(claim_id)
        return got

    def claims_by_id(self) -> dict[str, PaperClaim]:
        return {c.claim_id: c for c in self.claims}

    def paper_by_citation(self, citation_key: str) -> Paper | None:
        for paper in self.papers.values():
            if paper.citation_key == citation_key:
                return paper
        return None

    @property
    def citation_keys(self) -> set[str]:
        return {p.citation_key for p in self.papers.values()}


# ---------------------------------------------------------------------------
# Corpus file format
# ---------------------------------------------------------------------------

_METADATA_REQUIRED = {"extraction_model", "embedding_model", "thresholds", "built_at"}
_METADATA_OPTIONAL = {"context_window", "few_shot_count", "few_shot_fingerprint"}
_THRESHOLD_REQUIRED = {"evidence_threshold"}
_THRESHOLD_OPTIONAL = {"dedup_threshold"}


def _check_keys(obj: dict, required: set[str], optional: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise CorpusError(f"{where}: expected an object, got {type(obj).__name__}")
    keys = set(obj)
    missing = required - keys
    if missing:
        raise CorpusError(f"{where}: missing field(s) {sorted(missing)}")
    unknown = keys - required - optional
    if unknown:
        raise CorpusError(f"{where}: unknown field(s) {sorted(unknown)}")


def _parse_paper(obj: dict, idx: int) -> Paper:
    where = f"papers[{idx}]"
    _check_keys(obj, {"paper_id", "title", "citation_key", "sections"}, set(), where)
    paper_id = obj["paper_id"]
    if not isinstance(paper_id, str) or not paper_id:
        raise CorpusError(f"{where}: paper_id must be a non-empty string")
    citation_key = obj["citation_key"]
    if not isinstance(citation_key, str) or not citation_key.strip():
        raise CorpusError(f"paper {paper_id!r}: citation_key must be non-empty")
    if any(ch in citation_key for ch in "<>;"):
        raise CorpusError(
            f"paper {paper_id!r}: citation_key {citation_key!r} may not contain '<', '>' or ';'"
        )
    sections = []
    seen_names: set[str] = set()
    if not isinstance(obj["sections"], list):
        raise CorpusError(f"paper {paper_id!r}: sections must be a list")
    for s_idx, sec in enumerate(obj["sections"]):
        _check_keys(sec, {"name", "paragraphs"}, set(), f"paper {paper_id!r} sections[{s_idx}]")
        name = sec["name"]
        if not isinstance(name, str) or not name.strip():
            raise CorpusError(f"paper {paper_id!r} sections[{s_idx}]: name must be non-empty")
        if name in seen_names:
            raise CorpusError(f"paper {paper_id!r}: duplicate section name {name!r}")
        seen_names.add(name)
        paragraphs = []
        for p_idx, para in enumerate(sec["paragraphs"]):
            _check_keys(para, {"text"}, set(), f"paper {paper_id!r} section {name!r} paragraphs[{p_idx}]")
            text = para["text"]
            if not isinstance(text, str) or not text.strip():
                raise CorpusError(
                    f"paper {paper_id!r} section {name!r} paragraphs[{p_idx}]: text must be non-empty"
                )
            paragraphs.append(Paragraph.from_text(text))
        sections.append(Section(name=name, paragraphs=tuple(paragraphs)))
    return Paper(
        paper_id=paper_id,
        title=str(obj["title"]),
        citation_key=citation_key,
        sections=tuple(sections),
    )


def _parse_claim(obj: dict, idx: int) -> PaperClaim:
    where = f"claims[{idx}]"
    _check_keys(
        obj,
        {"claim_id", "claim_text", "citation_key", "section_name", "evidence", "embedding"},
        set(),
        where,
    )
    claim_id = obj["claim_id"]
    if not isinstance(claim_id, str) or not claim_id:
        raise CorpusError(f"{where}: claim_id must be a non-empty string")
    claim_text = obj["claim_text"]
    if not isinstance(claim_text, str) or not claim_text.strip():
        raise CorpusError(f"claim {claim_id!r}: claim_text must be non-empty")
    if claim_text.rstrip().endswith("?"):
        raise CorpusError(f"claim {claim_id!r}: claim_text must be declarative, not a question")
    evidence = []
    for e_idx, ev in enumerate(obj["evidence"]):
        ewhere = f"claim {claim_id!r} evidence[{e_idx}]"
        _check_keys(ev, {"core_text", "context_text", "similarity", "location"}, set(), ewhere)
        _check_keys(ev["location"], {"section", "paragraph", "sentence"}, set(), f"{ewhere}.location")
        sim = ev["similarity"]
        if not isinstance(sim, (int, float)) or not (-1.0 <= sim <= 1.0):
            raise CorpusError(f"{ewhere}: similarity must be a number in [-1, 1]")
        if ev["core_text"] not in ev["context_text"]:
            raise CorpusError(f"{ewhere}: context_text does not contain core_text")
        evidence.append(EvidenceSnippet(
            core_text=ev["core_text"],
            context_text=ev["context_text"],
            similarity=float(sim),
            location=EvidenceLocation(
                section=ev["location"]["section"],
                paragraph=int(ev["location"]["paragraph"]),
                sentence=int(ev["location"]["sentence"]),
            ),
        ))
    embedding = obj["embedding"]
    if embedding is not None:
        if not isinstance(embedding, list) or not all(isinstance(x, (int, float)) for x in embedding):
            raise CorpusError(f"claim {claim_id!r}: embedding must be null or a list of numbers")
        embedding = tuple(float(x) for x in embedding)
    return PaperClaim(
        claim_id=claim_id,
        claim_text=claim_text,
        citation_key=obj["citation_key"],
        section_name=obj["section_name"],
        evidence=tuple(evidence),
        embedding=embedding,
    )


def _cross_validate(corpus: ClaimCorpus) -> None:
    by_citation = {}
    for paper in corpus.papers.values():
        if paper.citation_key in by_citation:
            raise CorpusError(f"duplicate citation_key {paper.citation_key!r}")
        by_citation[paper.citation_key] = paper

    evidence_threshold = corpus.metadata["thresholds"]["evidence_threshold"]
    dims = {len(c.embedding) for c in corpus.claims if c.embedding is not None}
    if len(dims) > 1:
        raise CorpusError(f"claims carry embeddings of mixed dimensionality {sorted(dims)}")

    seen_ids: set[str] = set()
    for claim in corpus.claims:
        if claim.claim_id in seen_ids:
            raise CorpusError(f"duplicate claim_id {claim.claim_id!r}")
        seen_ids.add(claim.claim_id)
        paper = by_citation.get(claim.citation_key)
        if paper is None:
            raise CorpusError(
                f"claim {claim.claim_id!r}: citation_key {claim.citation_key!r} "
                "does not match any paper in this corpus"
            )
        try:
            sec = paper.section(claim.section_name)
        except KeyError:
            raise CorpusError(
                f"claim {claim.claim_id!r}: section {claim.section_name!r} "
                f"not found in paper {paper.paper_id!r}"
            ) from None
        for ev in claim.evidence:
            if ev.similarity < evidence_threshold:
                raise CorpusError(
                    f"claim {claim.claim_id!r}: evidence similarity {ev.similarity} "
                    f"below corpus threshold {evidence_threshold}"
                )
            loc = ev.location
            try:
                loc_sec = paper.section(loc.section)
                para = loc_sec.paragraphs[loc.paragraph]
                span = para.sentences[loc.sentence]
            except (KeyError, IndexError):
                raise CorpusError(
                    f"claim {claim.claim_id!r}: evidence location "
                    f"({loc.section!r}, {loc.paragraph}, {loc.sentence}) does not resolve "
                    f"in paper {paper.paper_id!r}"
                ) from None
            if span.text != ev.core_text:
                raise CorpusError(
                    f"claim {claim.claim_id!r}: evidence core_text does not equal the "
                    f"sentence at ({loc.section!r}, {loc.paragraph}, {loc.sentence})"
                )
        _ = sec  # section existence was the check


def corpus_from_dict(doc: dict, source: str = "<corpus>") -> ClaimCorpus:
    _check_keys(doc, {"metadata", "papers", "claims"}, set(), source)
    _check_keys(doc["metadata"], _METADATA_REQUIRED, _METADATA_OPTIONAL, f"{source} metadata")
    _check_keys(
        doc["metadata"]["thresholds"], _THRESHOLD_REQUIRED, _THRESHOLD_OPTIONAL,
        f"{source} metadata.thresholds",
    )
    papers: dict[str, Paper] = {}
    for idx, pobj in enumerate(doc["papers"]):
        paper = _parse_paper(pobj, idx)
        if paper.paper_id in papers:
            raise CorpusError(f"duplicate paper_id {paper.paper_id!r}")
        papers[paper.paper_id] = paper
    claims = tuple(_parse_claim(cobj, idx) for idx, cobj in enumerate(doc["claims"]))
    corpus = ClaimCorpus(papers=papers, claims=claims, metadata=doc["metadata"])
    _cross_validate(corpus)
    return corpus


def load_corpus(path: str | Path) -> ClaimCorpus:
    """Load and validate a corpus file. Any defect is a fatal CorpusError."""
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read corpus file {path}: {exc}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"corpus file {path} is not valid JSON: {exc}") from exc
    return corpus_from_dict(doc, source=str(path))


def corpus_to_dict(corpus: ClaimCorpus) -> dict:
    return {
        "metadata": corpus.metadata,
        "papers": [
            {
                "paper_id": p.paper_id,
                "title": p.title,
                "citation_key": p.citation_key,
                "sections": [
                    {"name": s.name, "paragraphs": [{"text": para.text} for para in s.paragraphs]}
                    for s in p.sections
                ],
            }
            for p in corpus.papers.values()
        ],
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
            for c in corpus.claims
        ],
    }


def save_corpus(corpus: ClaimCorpus, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(corpus_to_dict(corpus), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


# ---------------------------------------------------------------------------
# Plain-text paper ingestion
# ---------------------------------------------------------------------------

_HEADER_RE = re.compile(r"^(PAPER-ID|TITLE|CITATION-KEY):\s*(.+)$")
_SECTION_RE = re.compile(r"^##\s+(.+)$")


def parse_paper_text(text: str, source: str = "<paper>") -> Paper:
    """Parse one pre-extracted paper: a header block, then '## Section' markers.

    Paragraphs are separated by blank lines; hard-wrapped lines inside a
    paragraph are joined with single spaces.
    """
    header: dict[str, str] = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines) and lines[i].strip():
        m = _HEADER_RE.match(lines[i].strip())
        if not m:
            raise CorpusError(f"{source}: bad header line {lines[i]!r}")
        header[m.group(1)] = m.group(2).strip()
        i += 1
    for key in ("PAPER-ID", "TITLE", "CITATION-KEY"):
        if key not in header:
            raise CorpusError(f"{source}: missing {key} header")

    sections: list[Section] = []
    current_name: str | None = None
    paragraphs: list[Paragraph] = []
    buf: list[str] = []

    def flush_paragraph() -> None:
        if buf:
            paragraphs.append(Paragraph.from_text(" ".join(buf)))
            buf.clear()

    def flush_section() -> None:
        nonlocal paragraphs
        flush_paragraph()
        if current_name is not None:
            if not paragraphs:
                raise CorpusError(f"{source}: section {current_name!r} has no paragraphs")
            sections.append(Section(name=current_name, paragraphs=tuple(paragraphs)))
            paragraphs = []

    for line in lines[i:]:
        m = _SECTION_RE.match(line.strip())
        if m:
            flush_section()
            current_name = m.group(1).strip()
            continue
        if not line.strip():
            flush_paragraph()
            continue
        if current_name is None:
            raise CorpusError(f"{source}: text before the first '## Section' marker")
        buf.append(line.strip())
    flush_section()
    if not sections:
        raise CorpusError(f"{source}: paper has no sections")

    return Paper(
        paper_id=header["PAPER-ID"],
        title=header["TITLE"],
        citation_key=header["CITATION-KEY"],
        sections=tuple(sections),
    )


def load_papers_dir(directory: str | Path) -> list[Paper]:
    """Load every *.txt paper file in a directory, sorted by filename."""
    directory = Path(directory)
    papers = []
    for path in sorted(directory.glob("*.txt")):
        papers.append(parse_paper_text(path.read_text(encoding="utf-8"), source=str(path)))
    if not papers:
        raise CorpusError(f"no .txt paper files found in {directory}")
    return papers
