"""Text embeddings and cosine similarity.

Every similarity decision in the pipeline (evidence retrieval, relevance
prefiltering, evidence verification, eval matching) goes through an
EmbeddingProvider. Providers must be deterministic: embedding the same
string twice yields identical vectors.
"""

from __future__ import annotations

import hashlib
import os
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
import requests

from .errors import ConfigError, TransportError


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    model_id: str

    @property
    def dimension(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Standard cosine similarity in [-1, 1].

    Vectors must come from the same model; all-zero vectors are a domain
    error rather than silently scoring 0.
    """
    if a.model_id != b.model_id:
        raise ConfigError(
            f"cannot compare embeddings from different models: {a.model_id!r} vs {b.model_id!r}"
        )
    if a.dimension != b.dimension:
        raise ConfigError(f"embedding dimensionality mismatch: {a.dimension} vs {b.dimension}")
    va, vb = a.as_array(), b.as_array()
    na, nb = float(np.linalg.norm(va)), float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    value = float(np.dot(va, vb) / (na * nb))
    return max(-1.0, min(1.0, value))


class EmbeddingProvider(ABC):
    """Deterministic text-to-vector provider, safe for concurrent calls."""

    model_id: str
    dimension: int

    @abstractmethod
    def embed_batch(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        """One vector per input, order preserved."""

    def embed(self, text: str) -> EmbeddingVector:
        return self.embed_batch([text])[0]

    def _check_inputs(self, texts: Sequence[str]) -> None:
        for i, t in enumerate(texts):
            if not isinstance(t, str) or not t:
                raise ValueError(f"embed_batch input {i} must be a non-empty string")


class HashEmbeddingProvider(EmbeddingProvider):
    """Deterministic pseudo-embeddings for offline tests and demos.

    Each text is hashed to seed an RNG that draws a unit vector, so identical
    strings always map to identical vectors and distinct strings are nearly
    orthogonal at reasonable dimension.
    """

    def __init__(self, dimension: int = 32, model_id: str | None = None):
        if dimension < 2:
            raise ConfigError("hash embedding dimension must be >= 2")
        self.dimension = dimension
        self.model_id = model_id or f"hash-{dimension}"
        self._cache: dict[str, EmbeddingVector] = {}
        self._lock = threading.Lock()

    def _vector(self, text: str) -> EmbeddingVector:
        with self._lock:
            hit = self._cache.get(text)
        if hit is not None:
            return hit
        seed = int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(self.dimension)
        v /= np.linalg.norm(v)
        vec = EmbeddingVector(values=tuple(float(x) for x in v), model_id=self.model_id)
        with self._lock:
            self._cache[text] = vec
        return vec

    def embed_batch(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        self._check_inputs(texts)
        return [self._vector(t) for t in texts]


class StaticEmbeddingProvider(EmbeddingProvider):
    """Fixed text -> vector table, for fixtures that need exact similarities."""

    def __init__(
        self,
        table: Mapping[str, Sequence[float]],
        model_id: str = "static",
        fallback: EmbeddingProvider | None = None,
    ):
        dims = {len(v) for v in table.values()}
        if len(dims) > 1:
            raise ConfigError(f"static embedding table has mixed dimensions {sorted(dims)}")
        self.dimension = dims.pop() if dims else (fallback.dimension if fallback else 0)
        self.model_id = model_id
        self._table = {k: tuple(float(x) for x in v) for k, v in table.items()}
        self._fallback = fallback

    def embed_batch(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        self._check_inputs(texts)
        out = []
        for t in texts:
            if t in self._table:
                out.append(EmbeddingVector(values=self._table[t], model_id=self.model_id))
            elif self._fallback is not None:
                inner = self._fallback.embed(t)
                out.append(EmbeddingVector(values=inner.values, model_id=self.model_id))
            else:
                raise KeyError(f"no static embedding registered for text {t!r}")
        return out


class RemoteEmbeddingProvider(EmbeddingProvider):
    """Client for an HTTP embedding service.

    Expects ``POST {base_url}/embed`` with ``{"model": ..., "texts": [...]}``
    returning ``{"embeddings": [[...], ...]}``.
    """

    def __init__(
        self,
        base_url: str,
        model_id: str,
        dimension: int,
        api_key: str | None = None,
        timeout: float = 60.0,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model_id = model_id
        self.dimension = dimension
        self.api_key = api_key
        self.timeout = timeout
        self._session = session or requests.Session()

    @classmethod
    def from_env(cls) -> "RemoteEmbeddingProvider":
        base_url = os.environ.get("EMBEDDING_BASE_URL")
        if not base_url:
            raise ConfigError("EMBEDDING_BASE_URL is not set")
        return cls(
            base_url=base_url,
            model_id=os.environ.get("EMBEDDING_MODEL_ID", "allenai/specter"),
            dimension=int(os.environ.get("EMBEDDING_DIMENSION", "768")),
            api_key=os.environ.get("EMBEDDING_API_KEY"),
        )

    def embed_batch(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        self._check_inputs(texts)
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = self._session.post(
                f"{self.base_url}/embed",
                json={"model": self.model_id, "texts": list(texts)},
                headers=headers,
                timeout=self.timeout,
            )
            resp.raise_for_status()
            payload = resp.json()
        except requests.RequestException as exc:
            raise TransportError(f"embedding service unreachable: {exc}") from exc
        vectors = payload.get("embeddings")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise TransportError("embedding service returned a malformed payload")
        out = []
        for vec in vectors:
            if len(vec) != self.dimension:
                raise ConfigError(
                    f"embedding service returned dimension {len(vec)}, expected {self.dimension}"
                )
            out.append(EmbeddingVector(values=tuple(float(x) for x in vec), model_id=self.model_id))
        return out


class CachedEmbeddingProvider(EmbeddingProvider):
    """Wrap any provider with an in-memory cache; repeats are bit-identical."""

    def __init__(self, inner: EmbeddingProvider):
        self._inner = inner
        self.model_id = inner.model_id
        self.dimension = inner.dimension
        self._cache: dict[str, EmbeddingVector] = {}
        self._lock = threading.Lock()

    def embed_batch(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        self._check_inputs(texts)
        with self._lock:
            missing = [t for t in texts if t not in self._cache]
        if missing:
            # embed each distinct text once, in first-seen order
            distinct = list(dict.fromkeys(missing))
            fresh = self._inner.embed_batch(distinct)
            with self._lock:
                for t, v in zip(distinct, fresh):
                    self._cache[t] = v
        with self._lock:
            return [self._cache[t] for t in texts]


def rank_by_similarity(
    query: EmbeddingVector,
    candidates: Iterable[tuple[object, EmbeddingVector]],
) -> list[tuple[object, float]]:
    """Sort (item, vector) pairs by cosine to the query, descending.

    Ties broken by original order (stable sort), so rankings are deterministic.
    """
    scored = [(item, cosine(query, vec)) for item, vec in candidates]
    scored.sort(key=lambda pair: -pair[1])
    return scored
