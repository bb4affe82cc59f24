from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from claimtrace.embedding import (
    CachedEmbeddingProvider,
    EmbeddingVector,
    HashEmbeddingProvider,
    StaticEmbeddingProvider,
    cosine,
    rank_by_similarity,
)
from claimtrace.errors import ConfigError

from conftest import unit_pair


def vec(*values, model="m"):
    return EmbeddingVector(values=tuple(float(v) for v in values), model_id=model)


# ----------------------------------------------------------------- cosine math

def test_cosine_identity():
    a = vec(0.3, -1.2, 4.0)
    assert cosine(a, a) == pytest.approx(1.0, abs=1e-6)


def test_cosine_orthogonal():
    assert cosine(vec(1, 0), vec(0, 1)) == pytest.approx(0.0, abs=1e-12)


def test_cosine_hand_computed_oracle():
    # dot = 4 + 10 + 18 = 32; |a| = sqrt(14); |b| = sqrt(77)
    expected = 32.0 / (math.sqrt(14) * math.sqrt(77))
    got = cosine(vec(1, 2, 3), vec(4, 5, 6))
    assert got == pytest.approx(expected, abs=1e-12)
    assert got == pytest.approx(0.9746, abs=1e-4)


def test_cosine_zero_vector_is_domain_error():
    with pytest.raises(ValueError, match="zero vector"):
        cosine(vec(0, 0, 0), vec(1, 2, 3))


def test_cosine_model_mismatch():
    with pytest.raises(ConfigError, match="different models"):
        cosine(vec(1, 0, model="a"), vec(1, 0, model="b"))


def test_cosine_dimension_mismatch():
    with pytest.raises(ConfigError, match="dimensionality"):
        cosine(vec(1, 0), vec(1, 0, 0))


finite = st.floats(min_value=-50, max_value=50, allow_nan=False)


def _usable(v: EmbeddingVector) -> bool:
    return float(np.linalg.norm(v.as_array())) > 0.0


@given(st.lists(finite, min_size=2, max_size=8), st.lists(finite, min_size=2, max_size=8))
def test_cosine_symmetry(a_vals, b_vals):
    n = min(len(a_vals), len(b_vals))
    a, b = vec(*a_vals[:n]), vec(*b_vals[:n])
    if not _usable(a) or not _usable(b):
        return
    assert abs(cosine(a, b) - cosine(b, a)) < 1e-9
    assert -1.0 <= cosine(a, b) <= 1.0


@given(
    st.lists(finite, min_size=2, max_size=8),
    st.floats(min_value=0.001, max_value=1000, allow_nan=False),
)
def test_cosine_scale_invariance(vals, k):
    a = vec(*vals)
    scaled = vec(*(k * v for v in a.values))
    if not _usable(a) or not _usable(scaled):
        return
    b = vec(*range(1, len(vals) + 1))
    assert cosine(scaled, b) == pytest.approx(cosine(a, b), abs=1e-6)


def test_unit_pair_gives_exact_cosines():
    for target in (0.54, 0.549999, 0.55, 0.56, 0.75, 0.9):
        x, y = unit_pair(target)
        assert float(np.linalg.norm([x, y])) == 1.0
        got = cosine(vec(x, y), vec(1.0, 0.0))
        assert got == target  # exact, no tolerance


# ------------------------------------------------------------------- providers

def test_hash_provider_shape_and_determinism():
    p = HashEmbeddingProvider(dimension=16)
    out = p.embed_batch(["a"])
    assert len(out) == 1 and out[0].dimension == 16
    twice = p.embed_batch(["hello", "world", "hello"])
    assert twice[0] == twice[2]
    fresh = HashEmbeddingProvider(dimension=16)
    assert fresh.embed("hello") == twice[0]  # stable across instances


def test_hash_provider_order_preserved():
    p = HashEmbeddingProvider(dimension=8)
    texts = [f"sentinel-{i}" for i in range(100)]
    batch = p.embed_batch(texts)
    assert len(batch) == 100
    singles = [p.embed(t) for t in texts]
    assert batch == singles


def test_provider_rejects_empty_strings():
    p = HashEmbeddingProvider()
    with pytest.raises(ValueError, match="non-empty"):
        p.embed_batch(["ok", ""])


def test_static_provider_and_fallback():
    table = {"a": (1.0, 0.0), "b": (0.0, 1.0)}
    p = StaticEmbeddingProvider(table)
    assert p.embed("a").values == (1.0, 0.0)
    with pytest.raises(KeyError):
        p.embed("missing")
    chained = StaticEmbeddingProvider(table, fallback=HashEmbeddingProvider(dimension=2))
    assert chained.embed("missing").dimension == 2
    assert chained.embed("missing").model_id == "static"


def test_cached_provider_bit_identical():
    class Counting(HashEmbeddingProvider):
        def __init__(self):
            super().__init__(dimension=4)
            self.calls = 0

        def embed_batch(self, texts):
            self.calls += 1
            return super().embed_batch(texts)

    inner = Counting()
    cached = CachedEmbeddingProvider(inner)
    first = cached.embed_batch(["x", "y", "x"])
    second = cached.embed_batch(["x", "y"])
    assert inner.calls == 1
    assert first[0] == second[0]
    assert first[0].values == second[0].values


def test_rank_by_similarity_stable():
    q = vec(1.0, 0.0)
    items = [("low", vec(0.1, 1.0)), ("hi", vec(1.0, 0.1)), ("tie-a", vec(0.5, 0.5)), ("tie-b", vec(0.5, 0.5))]
    ranked = rank_by_similarity(q, items)
    assert [name for name, _ in ranked][:2] == ["hi", "tie-a"]
    assert [name for name, _ in ranked][3] == "low"
