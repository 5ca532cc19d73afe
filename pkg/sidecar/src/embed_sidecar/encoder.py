"""Encoder backends for the sidecar.

Two implementations of the same small interface:

- SentenceTransformerEncoder wraps a pretrained sentence-transformers
  model (default "BAAI/bge-large-en-v1.5") in deterministic eval mode.
- StubEncoder is a deterministic, dependency-free hash encoder used by
  the protocol test suite and for offline smoke runs (model name
  "stub:<dimension>").

Both return row-aligned, L2-normalized float arrays.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Protocol

import numpy as np


class Encoder(Protocol):
    """What the HTTP layer needs from an embedding backend."""

    model_name: str
    model_tag: str
    dimension: int

    def encode(self, texts: List[str]) -> np.ndarray:
        """Return a (len(texts), dimension) float array of unit rows."""
        ...


class ModelLoadError(RuntimeError):
    """Raised when the configured model cannot be loaded at startup."""


def _normalize_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return matrix / norms


@dataclass
class StubEncoder:
    """Deterministic keyed-hash encoder; no model weights required.

    Each text maps to a fixed pseudo-random unit vector derived from a
    blake2b stream over the text, so identical texts always produce
    identical rows and distinct texts almost surely differ.
    """

    dimension: int = 1024
    model_name: str = field(init=False)
    model_tag: str = field(init=False)

    def __post_init__(self) -> None:
        if self.dimension < 2:
            raise ValueError("stub dimension must be >= 2")
        self.model_name = f"stub:{self.dimension}"
        self.model_tag = self.model_name

    def _vector(self, text: str) -> np.ndarray:
        raw = text.encode("utf-8")
        chunks = []
        needed = self.dimension * 4
        counter = 0
        while sum(len(c) for c in chunks) < needed:
            digest = hashlib.blake2b(
                raw, digest_size=64, key=counter.to_bytes(8, "little")
            ).digest()
            chunks.append(digest)
            counter += 1
        buffer = b"".join(chunks)[:needed]
        words = np.frombuffer(buffer, dtype="<u4").astype(np.float64)
        # Center the uniform words so components take both signs.
        return words / 2**32 - 0.5

    def encode(self, texts: List[str]) -> np.ndarray:
        matrix = np.stack([self._vector(t) for t in texts])
        return _normalize_rows(matrix)


def _resolve_revision(model_name: str) -> str:
    """Best-effort commit hash of the locally cached model snapshot.

    Upstream model releases can silently change embeddings, so the tag
    pins whatever revision actually served the request. Falls back to
    "unknown" when the cache layout is not available.
    """
    try:
        from huggingface_hub.constants import HF_HUB_CACHE
    except Exception:
        return "unknown"
    repo_dir = Path(HF_HUB_CACHE) / ("models--" + model_name.replace("/", "--"))
    snapshots = repo_dir / "snapshots"
    if snapshots.is_dir():
        commits = sorted(p.name for p in snapshots.iterdir() if p.is_dir())
        if commits:
            return commits[-1]
    return "unknown"


class SentenceTransformerEncoder:
    """Pretrained sentence-transformers model in deterministic eval mode."""

    def __init__(self, model_name: str, device: str = "auto") -> None:
        try:
            import torch
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise ModelLoadError(f"sentence-transformers unavailable: {exc}")

        resolved_device: Optional[str]
        if device == "auto":
            resolved_device = None
        elif device == "gpu":
            resolved_device = "cuda"
        else:
            resolved_device = "cpu"
        try:
            self._model = SentenceTransformer(model_name, device=resolved_device)
        except Exception as exc:
            raise ModelLoadError(f"cannot load model {model_name!r}: {exc}")
        self._model.eval()
        torch.set_grad_enabled(False)

        self.model_name = model_name
        self.dimension = int(self._model.get_sentence_embedding_dimension())
        revision = _resolve_revision(model_name)
        limit = self._model.get_max_seq_length()
        self.model_tag = f"{model_name}@{revision}:truncate={limit}"

    def encode(self, texts: List[str]) -> np.ndarray:
        matrix = self._model.encode(
            texts,
            convert_to_numpy=True,
            normalize_embeddings=False,
            show_progress_bar=False,
        )
        return _normalize_rows(np.asarray(matrix, dtype=np.float64))


def load_encoder(model_name: str, device: str = "auto") -> Encoder:
    """Instantiate the backend named by model_name.

    Names of the form "stub:<dim>" select the deterministic stub;
    anything else is treated as a sentence-transformers model id.
    """
    if model_name.startswith("stub:"):
        try:
            dimension = int(model_name.split(":", 1)[1])
        except ValueError:
            raise ModelLoadError(f"bad stub spec {model_name!r}; want stub:<dim>")
        return StubEncoder(dimension=dimension)
    return SentenceTransformerEncoder(model_name, device=device)
