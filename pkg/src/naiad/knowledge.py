"""Retrieval subsystem: content tanks, embeddings, exact top-k search.

Tanks are small (domain notes, tool docs), so the store is an exact-scan
in-memory index with JSON persistence. Exactness is the point: every
ranking is reproducible by a brute-force cosine scan, which the test suite
exploits as an oracle.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DuplicateId, EmbedderFailure, UnknownTank
from .providers import Transport

DEFAULT_TOP_K = 10

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass
class Document:
    id: str
    tank: str
    title: str
    body: str
    origin: str = ""
    date: str = ""

    def __post_init__(self):
        if not self.body:
            raise ValueError(f"document '{self.id}': body is empty")


@dataclass
class RetrievalResult:
    document_id: str
    score: float
    rank: int


class HashEmbedder:
    """Deterministic token-hash bag-of-words embedder for hermetic tests.

    Each token is hashed into one of `dimension` buckets; the count vector
    is L2-normalized. Identical text always yields an identical vector.
    """

    def __init__(self, dimension: int = 64):
        self.dimension = dimension
        self.provider_id = f"hash-bow-{dimension}"

    def embed(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dimension), dtype=np.float64)
        for i, text in enumerate(texts):
            for token in _TOKEN_RE.findall(text.lower()):
                digest = hashlib.md5(token.encode("utf-8")).digest()
                bucket = int.from_bytes(digest[:4], "big") % self.dimension
                out[i, bucket] += 1.0
            norm = np.linalg.norm(out[i])
            if norm > 0:
                out[i] /= norm
        return out


class HttpEmbedder:
    """Remote embedding endpoint: POST {texts:[...]} -> {vectors:[[...],...]}."""

    def __init__(self, endpoint: str, model_id: str = "BAAI/bge-large-en-v1.5",
                 dimension: int = 1024, transport: Transport | None = None):
        self.endpoint = endpoint
        self.provider_id = model_id
        self.dimension = dimension
        self.transport = transport or Transport()

    def embed(self, texts: list[str]) -> np.ndarray:
        try:
            body = self.transport.post_json(self.endpoint, {"texts": texts})
        except ConnectionError as exc:
            raise EmbedderFailure(str(exc)) from exc
        vectors = np.asarray(body.get("vectors", []), dtype=np.float64)
        if vectors.shape != (len(texts), self.dimension):
            raise EmbedderFailure(
                f"expected {(len(texts), self.dimension)} vectors, got {vectors.shape}"
            )
        return vectors


@dataclass
class _Tank:
    name: str
    documents: dict = field(default_factory=dict)  # id -> Document
    embeddings: dict = field(default_factory=dict)  # id -> np.ndarray


class KnowledgeStore:
    """Named content tanks with exact cosine retrieval."""

    def __init__(self, embedder=None):
        self.embedder = embedder or HashEmbedder()
        self._tanks: dict[str, _Tank] = {}
        self._lock = threading.Lock()

    def tanks(self) -> list[str]:
        return sorted(self._tanks)

    def tank_size(self, tank: str) -> int:
        return len(self._tank(tank).documents)

    def _tank(self, name: str) -> _Tank:
        try:
            return self._tanks[name]
        except KeyError:
            raise UnknownTank(f"no content tank named '{name}'") from None

    def ingest(self, doc: Document) -> str:
        vector = self._embed_one(doc.body)
        with self._lock:
            tank = self._tanks.setdefault(doc.tank, _Tank(name=doc.tank))
            if doc.id in tank.documents:
                raise DuplicateId(f"document '{doc.id}' already in tank '{doc.tank}'")
            tank.documents[doc.id] = doc
            tank.embeddings[doc.id] = vector
        return doc.id

    def _embed_one(self, text: str) -> np.ndarray:
        vectors = self.embedder.embed([text])
        vec = np.asarray(vectors[0], dtype=np.float64)
        if not np.all(np.isfinite(vec)):
            raise EmbedderFailure("embedding contains non-finite values")
        return vec

    def retrieve(self, query: str, tank: str, k: int = DEFAULT_TOP_K) -> list[RetrievalResult]:
        """Exact top-k by cosine similarity, ties broken by document id."""
        if k < 1:
            raise ValueError("k must be >= 1")
        t = self._tank(tank)
        if not t.documents:
            return []
        qvec = self._embed_one(query)
        qnorm = np.linalg.norm(qvec)
        scored = []
        for doc_id in t.documents:
            dvec = t.embeddings[doc_id]
            denom = qnorm * np.linalg.norm(dvec)
            score = float(np.dot(qvec, dvec) / denom) if denom > 0 else 0.0
            scored.append((doc_id, score))
        scored.sort(key=lambda item: (-item[1], item[0]))
        return [
            RetrievalResult(document_id=doc_id, score=score, rank=i + 1)
            for i, (doc_id, score) in enumerate(scored[:k])
        ]

    def document(self, tank: str, doc_id: str) -> Document:
        t = self._tank(tank)
        return t.documents[doc_id]

    # --- persistence: one JSON file per tank ---------------------------------

    def save_tank(self, tank: str, path: str | Path) -> None:
        t = self._tank(tank)
        data = {
            "tank": t.name,
            "dimension": self.embedder.dimension,
            "documents": [
                {
                    "id": d.id,
                    "title": d.title,
                    "body": d.body,
                    "origin": d.origin,
                    "date": d.date,
                    "embedding": t.embeddings[d.id].tolist(),
                }
                for d in t.documents.values()
            ],
        }
        Path(path).write_text(json.dumps(data, indent=2), encoding="utf-8")

    def load_tank(self, path: str | Path) -> str:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        name = data["tank"]
        with self._lock:
            tank = self._tanks.setdefault(name, _Tank(name=name))
            for entry in data["documents"]:
                doc = Document(
                    id=entry["id"],
                    tank=name,
                    title=entry.get("title", ""),
                    body=entry["body"],
                    origin=entry.get("origin", ""),
                    date=entry.get("date", ""),
                )
                if doc.id in tank.documents:
                    raise DuplicateId(f"document '{doc.id}' already in tank '{name}'")
                tank.documents[doc.id] = doc
                tank.embeddings[doc.id] = np.asarray(entry["embedding"], dtype=np.float64)
        return name


def inject_context(stage: str, results: list[RetrievalResult], store: KnowledgeStore,
                   tank: str, budget: int = 4000) -> str:
    """Concatenate retrieved documents in rank order within a character budget.

    Documents are never split: each is included whole or not at all, and
    inclusion stops at the first document that does not fit.
    """
    if stage not in ("planning", "tool", "report"):
        raise ValueError(f"unknown stage '{stage}'")
    if not results:
        return ""
    header = f"## retrieved context ({stage})\n"
    parts = [header]
    used = 0
    for r in sorted(results, key=lambda x: x.rank):
        doc = store.document(tank, r.document_id)
        block = f"[{r.rank}] {doc.title}\n{doc.body}\n"
        if used + len(block) > budget:
            break
        parts.append(block)
        used += len(block)
    if len(parts) == 1:
        return ""
    return "".join(parts)
