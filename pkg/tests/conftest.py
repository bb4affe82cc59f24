from __future__ import annotations

import math

import numpy as np
import pytest

from claimtrace.corpus import corpus_from_dict
from claimtrace.embedding import StaticEmbeddingProvider

REF_AXIS = (1.0, 0.0)


def unit_pair(cos_target: float) -> tuple[float, float]:
    """A 2-d vector (x, y) whose float norm is exactly 1.0 and x == cos_target.

    Against the reference axis (1, 0), cosine similarity is then exactly
    cos_target with no rounding slack, which lets threshold-boundary tests
    assert strict comparisons.
    """
    x = cos_target
    y = math.sqrt(max(0.0, 1.0 - x * x))
    arr = np.array([x, y], dtype=np.float64)
    for _ in range(10_000):
        norm = float(np.linalg.norm(arr))
        if norm == 1.0:
            return float(arr[0]), float(arr[1])
        if norm > 1.0:
            arr[1] = np.nextafter(arr[1], 0.0)
        else:
            arr[1] = np.nextafter(arr[1], 2.0)
    raise AssertionError(f"no exact unit vector found for cosine {cos_target}")


def static_embedder(table: dict[str, tuple[float, float]], **kwargs) -> StaticEmbeddingProvider:
    return StaticEmbeddingProvider(table, **kwargs)


def make_corpus_doc(
    claims: list[dict] | None = None,
    evidence_threshold: float = 0.75,
) -> dict:
    """A small valid corpus document; tests mutate copies to provoke errors."""
    default_claims = [
        {
            "claim_id": "alpha-c000",
            "claim_text": "Alpha cut costs by half.",
            "citation_key": "Ardan et al., 2020",
            "section_name": "Findings",
            "evidence": [
                {
                    "core_text": "Alpha cut costs by half.",
                    "context_text": "Alpha cut costs by half. Beta ran slower under load.",
                    "similarity": 1.0,
                    "location": {"section": "Findings", "paragraph": 0, "sentence": 0},
                }
            ],
            "embedding": [1.0, 0.0],
        },
        {
            "claim_id": "alpha-c001",
            "claim_text": "Beta ran slower under load.",
            "citation_key": "Ardan et al., 2020",
            "section_name": "Findings",
            "evidence": [],
            "embedding": [0.0, 1.0],
        },
    ]
    return {
        "metadata": {
            "extraction_model": "mock-llm",
            "embedding_model": "static",
            "thresholds": {
                "evidence_threshold": evidence_threshold,
                "dedup_threshold": 0.95,
            },
            "built_at": "2026-01-01T00:00:00+00:00",
        },
        "papers": [
            {
                "paper_id": "alpha",
                "title": "Alpha and Beta Under Load",
                "citation_key": "Ardan et al., 2020",
                "sections": [
                    {
                        "name": "Findings",
                        "paragraphs": [
                            {"text": "Alpha cut costs by half. Beta ran slower under load."},
                            {"text": "Review queues stayed flat across the trial."},
                        ],
                    }
                ],
            },
            {
                "paper_id": "gamma",
                "title": "Gamma Deployment Notes",
                "citation_key": "Bell and Ng, 2021",
                "sections": [
                    {
                        "name": "Operations",
                        "paragraphs": [
                            {"text": "Gamma deployed in nine sites. Rollbacks were rare."}
                        ],
                    }
                ],
            },
        ],
        "claims": claims if claims is not None else default_claims,
    }


@pytest.fixture
def small_corpus():
    return corpus_from_dict(make_corpus_doc())
