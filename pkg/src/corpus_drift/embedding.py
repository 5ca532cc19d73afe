"""Text-to-vector backends: deterministic feature hashing and a remote sidecar.

Every vector leaving this module is L2-normalized to within 1e-6. The hash
backend is seeded and platform-independent so test corpora embed identically
everywhere; the remote backend speaks the sidecar wire protocol.
"""

from __future__ import annotations

import base64
import hashlib
import struct
import time
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, List, Optional, Tuple

import numpy as np
import requests

from .errors import DimensionMismatch, EmptyText, ProtocolError, RemoteUnavailable
from .langfilter import normalize_token

DEFAULT_DIMENSION = 1024
DEFAULT_HASH_SEED = 42
NORM_TOLERANCE = 1e-6


@dataclass
class EmbeddingVector:
    values: np.ndarray
    model_tag: str

    @property
    def dimension(self) -> int:
        return int(self.values.shape[0])


@dataclass
class EmbedderConfig:
    backend: str = "hash"  # "hash" | "remote"
    dimension: int = DEFAULT_DIMENSION
    endpoint_url: str = ""
    batch_size: int = 64
    timeout: float = 30.0
    retries: int = 3
    hash_seed: int = DEFAULT_HASH_SEED

    def __post_init__(self):
        if self.dimension < 2:
            raise ValueError("dimension must be >= 2")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def _token_bucket(token: str, seed: int) -> Tuple[int, float]:
    """Map a token to (bucket index space, sign) via a keyed 64-bit hash."""
    key = seed.to_bytes(8, "little", signed=False)
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=9, key=key).digest()
    index64 = int.from_bytes(digest[:8], "little")
    sign = 1.0 if digest[8] & 1 else -1.0
    return index64, sign


def hash_embed(text: str, dimension: int = DEFAULT_DIMENSION, seed: int = DEFAULT_HASH_SEED) -> EmbeddingVector:
    """Signed bag-of-tokens projection into R^dimension, L2-normalized."""
    if dimension < 2:
        raise ValueError("dimension must be >= 2")
    tokens = [t for t in (normalize_token(w) for w in text.split()) if t]
    if not tokens:
        raise EmptyText("cannot embed a text with zero tokens")
    acc = np.zeros(dimension, dtype=np.float64)
    for token in tokens:
        index64, sign = _token_bucket(token, seed)
        acc[index64 % dimension] += sign
    norm = float(np.linalg.norm(acc))
    if norm == 0.0:
        # signed counts can cancel exactly; nudge deterministically off zero
        acc[_token_bucket(tokens[0], seed)[0] % dimension] = 1.0
        norm = 1.0
    return EmbeddingVector(values=acc / norm, model_tag=f"hash-v1:dim={dimension}:seed={seed}")


def _renormalize(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ProtocolError("sidecar returned a zero-norm embedding")
    return rows / norms


def remote_embed(texts: List[str], config: EmbedderConfig) -> List[EmbeddingVector]:
    """Embed one batch through the sidecar; response re-normalized locally."""
    url = config.endpoint_url.rstrip("/") + "/embed"
    last_error: Optional[Exception] = None
    for attempt in range(config.retries + 1):
        try:
            response = requests.post(url, json={"texts": texts}, timeout=config.timeout)
            response.raise_for_status()
            break
        except requests.RequestException as exc:
            last_error = exc
            if attempt < config.retries:
                time.sleep(min(2.0**attempt * 0.1, 2.0))
    else:
        raise RemoteUnavailable(f"sidecar at {config.endpoint_url} unreachable: {last_error}")

    try:
        payload = response.json()
        model = payload["model"]
        dimension = int(payload["dimension"])
        rows = np.asarray(payload["embeddings"], dtype=np.float64)
    except (ValueError, KeyError, TypeError) as exc:
        raise ProtocolError(f"malformed sidecar response: {exc}: {response.text[:200]}")
    if dimension != config.dimension or rows.ndim != 2 or rows.shape[1] != dimension:
        raise DimensionMismatch(
            f"sidecar returned dimension {dimension} (shape {rows.shape}), expected {config.dimension}"
        )
    if rows.shape[0] != len(texts):
        raise ProtocolError(f"sidecar returned {rows.shape[0]} rows for {len(texts)} texts")
    rows = _renormalize(rows)
    return [EmbeddingVector(values=row, model_tag=model) for row in rows]


def embed_batch(texts: List[str], config: EmbedderConfig) -> List[EmbeddingVector]:
    """Embed texts in order, splitting into config.batch_size chunks.

    Output is independent of the batch partitioning.
    """
    if not texts:
        raise EmptyText("embed_batch requires at least one text")
    for text in texts:
        if not text.strip():
            raise EmptyText("embed_batch received an empty text")
    if config.backend == "hash":
        return [hash_embed(t, config.dimension, config.hash_seed) for t in texts]
    if config.backend == "remote":
        out: List[EmbeddingVector] = []
        for start in range(0, len(texts), config.batch_size):
            out.extend(remote_embed(texts[start : start + config.batch_size], config))
        return out
    raise ValueError(f"unknown backend {config.backend!r}")


def check_health(config: EmbedderConfig) -> str:
    """GET /health; returns the served model name."""
    url = config.endpoint_url.rstrip("/") + "/health"
    try:
        response = requests.get(url, timeout=config.timeout)
        response.raise_for_status()
        payload = response.json()
    except requests.RequestException as exc:
        raise RemoteUnavailable(f"health check failed: {exc}")
    except ValueError as exc:
        raise ProtocolError(f"malformed health response: {exc}")
    if payload.get("status") != "ok" or "model" not in payload:
        raise ProtocolError(f"unexpected health body: {payload!r}")
    return payload["model"]


# ---------------------------------------------------------------------------
# Embedding store: header "m=<dim> model=<tag>", then
# doc_id<TAB>year<TAB>base64(little-endian float32[m]) per line.
# ---------------------------------------------------------------------------


def write_store(
    fh: IO[str],
    dimension: int,
    model_tag: str,
    records: Iterable[Tuple[str, int, np.ndarray]],
) -> int:
    fh.write(f"m={dimension} model={model_tag}\n")
    count = 0
    for doc_id, year, values in records:
        raw = struct.pack(f"<{dimension}f", *np.asarray(values, dtype=np.float32))
        fh.write(f"{doc_id}\t{year}\t{base64.b64encode(raw).decode('ascii')}\n")
        count += 1
    return count


def read_store(fh: IO[str]) -> Tuple[int, str, Iterator[Tuple[str, int, np.ndarray]]]:
    header = fh.readline().rstrip("\n")
    if not header.startswith("m="):
        raise ProtocolError(f"bad embedding store header: {header!r}")
    dim_part, _, model_part = header.partition(" ")
    dimension = int(dim_part[2:])
    if not model_part.startswith("model="):
        raise ProtocolError(f"bad embedding store header: {header!r}")
    model_tag = model_part[len("model=") :]

    def rows() -> Iterator[Tuple[str, int, np.ndarray]]:
        for line in fh:
            doc_id, year, blob = line.rstrip("\n").split("\t")
            values = np.frombuffer(base64.b64decode(blob), dtype="<f4").astype(np.float64)
            if values.shape[0] != dimension:
                raise DimensionMismatch(
                    f"store row for {doc_id} has dimension {values.shape[0]}, header says {dimension}"
                )
            yield doc_id, int(year), values

    return dimension, model_tag, rows()
