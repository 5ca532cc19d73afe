"""Per-cohort similarity and diversity statistics.

Mean pairwise cosine over all unordered distinct pairs (exact, compensated
summation in fixed (j, k) order) or over a seeded uniform sample of pair
indices (without replacement, via the triangular-number bijection), plus the
cohort mean vector and sample covariance.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .embedding import EmbeddingVector
from .errors import CohortTooSmall, DimensionMismatch, EmptyCohort, ZeroNorm


@dataclass
class CohortSimilarityStat:
    year: int
    mean_similarity: float
    pair_count_used: int
    total_pairs: int
    method: str  # "exact" | "sampled"
    std_error: float
    n: int
    seed: Optional[int] = None


@dataclass
class CovarianceSummary:
    trace: float
    top_eigenvalues: List[float]
    dimension: int


@dataclass
class CohortDiversityStat:
    year: int
    n: int
    trace: float
    top_eigenvalues: List[float]
    mean_vector: Optional[np.ndarray] = None


def _as_matrix(embeddings: Sequence[Union[EmbeddingVector, np.ndarray]]) -> np.ndarray:
    rows = [e.values if isinstance(e, EmbeddingVector) else np.asarray(e, dtype=np.float64) for e in embeddings]
    if rows and any(r.shape != rows[0].shape for r in rows):
        raise DimensionMismatch("cohort embeddings have mixed dimensions")
    return np.asarray(rows, dtype=np.float64)


def cosine(u, v) -> float:
    """cos(u, v) = dot/(norm*norm), clamped to [-1, 1] against fp overshoot."""
    uv = u.values if isinstance(u, EmbeddingVector) else np.asarray(u, dtype=np.float64)
    vv = v.values if isinstance(v, EmbeddingVector) else np.asarray(v, dtype=np.float64)
    if uv.shape != vv.shape:
        raise DimensionMismatch(f"cosine of shapes {uv.shape} and {vv.shape}")
    nu = float(np.linalg.norm(uv))
    nv = float(np.linalg.norm(vv))
    if nu == 0.0 or nv == 0.0:
        raise ZeroNorm("cosine undefined for zero-norm vector")
    return max(-1.0, min(1.0, float(np.dot(uv, vv)) / (nu * nv)))


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ZeroNorm("cohort contains a zero-norm vector")
    return matrix / norms


def mean_pairwise_exact(embeddings: Sequence, year: int) -> CohortSimilarityStat:
    """Average cosine over all n(n-1)/2 unordered distinct pairs."""
    matrix = _as_matrix(embeddings)
    n = matrix.shape[0]
    if n < 2:
        raise CohortTooSmall(f"exact mean requires n >= 2, got {n}")
    unit = _unit_rows(matrix)
    # row j contributes cosines with all k > j; fsum keeps the fixed-order
    # accumulation exact enough for 1e-12 oracle agreement at 1e6+ pairs
    row_sums = [math.fsum(np.clip(unit[j + 1 :] @ unit[j], -1.0, 1.0)) for j in range(n - 1)]
    total_pairs = n * (n - 1) // 2
    mean = math.fsum(row_sums) / total_pairs
    return CohortSimilarityStat(
        year=year,
        mean_similarity=mean,
        pair_count_used=total_pairs,
        total_pairs=total_pairs,
        method="exact",
        std_error=0.0,
        n=n,
    )


def pair_from_index(t: int) -> Tuple[int, int]:
    """Inverse triangular-number bijection: pair index t -> (j, k), j < k."""
    k = (1 + math.isqrt(1 + 8 * t)) // 2
    if k * (k - 1) // 2 > t:
        k -= 1
    return t - k * (k - 1) // 2, k


def mean_pairwise_sampled(
    embeddings: Sequence, year: int, num_pairs: int, seed: int
) -> CohortSimilarityStat:
    """Sampled estimator of the exact pair mean, with a standard error.

    Draws min(num_pairs, total_pairs) pair indices uniformly without
    replacement; falls back to the exact computation when the sample would
    exhaust all pairs.
    """
    matrix = _as_matrix(embeddings)
    n = matrix.shape[0]
    if n < 2:
        raise CohortTooSmall(f"sampled mean requires n >= 2, got {n}")
    if num_pairs < 2:
        raise ValueError("num_pairs must be >= 2")
    total_pairs = n * (n - 1) // 2
    if num_pairs >= total_pairs:
        return mean_pairwise_exact(embeddings, year)

    unit = _unit_rows(matrix)
    indices = sorted(random.Random(seed).sample(range(total_pairs), num_pairs))
    pairs = np.array([pair_from_index(t) for t in indices], dtype=np.int64)
    values = np.clip(np.einsum("ij,ij->i", unit[pairs[:, 0]], unit[pairs[:, 1]]), -1.0, 1.0)
    mean = math.fsum(values) / num_pairs
    sq = math.fsum((v - mean) ** 2 for v in values)
    std_error = math.sqrt(sq / (num_pairs - 1)) / math.sqrt(num_pairs)
    return CohortSimilarityStat(
        year=year,
        mean_similarity=mean,
        pair_count_used=num_pairs,
        total_pairs=total_pairs,
        method="sampled",
        std_error=std_error,
        n=n,
        seed=seed,
    )


def cohort_mean(embeddings: Sequence) -> np.ndarray:
    """Componentwise arithmetic mean (a statistic, not re-normalized)."""
    matrix = _as_matrix(embeddings)
    if matrix.shape[0] == 0:
        raise EmptyCohort("cohort mean requires n >= 1")
    return matrix.mean(axis=0)


def cohort_covariance(embeddings: Sequence) -> np.ndarray:
    """Unbiased sample covariance (divisor n - 1), materialized in full."""
    matrix = _as_matrix(embeddings)
    n = matrix.shape[0]
    if n < 2:
        raise CohortTooSmall(f"covariance requires n >= 2, got {n}")
    centered = matrix - matrix.mean(axis=0)
    return centered.T @ centered / (n - 1)


def covariance_summary(embeddings: Sequence, top_k: int = 4) -> CovarianceSummary:
    """Trace plus top-k eigenvalues of the covariance, never materializing it.

    Power iteration with deflation against the centered-data operator; fine
    for the monitoring role this summary plays (rank-deficient tails are
    noise anyway when n < m).
    """
    matrix = _as_matrix(embeddings)
    n, m = matrix.shape
    if n < 2:
        raise CohortTooSmall(f"covariance requires n >= 2, got {n}")
    centered = matrix - matrix.mean(axis=0)
    trace = float(np.sum(centered**2) / (n - 1))

    rng = np.random.RandomState(0)
    eigenvalues: List[float] = []
    eigenvectors: List[np.ndarray] = []
    for _ in range(min(top_k, m, n - 1)):
        v = rng.standard_normal(m)
        for _ in range(200):
            for w in eigenvectors:
                v -= np.dot(w, v) * w  # deflate directions already found
            cv = centered.T @ (centered @ v) / (n - 1)
            norm = np.linalg.norm(cv)
            if norm < 1e-30:
                break
            new_v = cv / norm
            if np.linalg.norm(new_v - v) < 1e-12:
                v = new_v
                break
            v = new_v
        lam = float(v @ (centered.T @ (centered @ v)) / (n - 1))
        eigenvalues.append(max(lam, 0.0))
        eigenvectors.append(v)
    return CovarianceSummary(trace=trace, top_eigenvalues=eigenvalues, dimension=m)


def diversity_trace(cov: Union[np.ndarray, CovarianceSummary]) -> float:
    """Total variance across embedding dimensions."""
    if isinstance(cov, CovarianceSummary):
        return cov.trace
    return float(np.trace(cov))


def diversity_stat(embeddings: Sequence, year: int, top_k: int = 4) -> CohortDiversityStat:
    summary = covariance_summary(embeddings, top_k=top_k)
    return CohortDiversityStat(
        year=year,
        n=len(embeddings),
        trace=summary.trace,
        top_eigenvalues=summary.top_eigenvalues,
        mean_vector=cohort_mean(embeddings),
    )
