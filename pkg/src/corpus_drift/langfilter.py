"""English detection from a bounded text prefix via stopword ratio.

Only the first ``max_words`` whitespace-delimited tokens are examined; a
document whose prefix passes is treated as English throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import FrozenSet, Optional

DEFAULT_MAX_WORDS = 2000
DEFAULT_THRESHOLD = 0.15

_PUNCT = "".join(chr(c) for c in range(33, 48)) + "".join(chr(c) for c in range(58, 65)) \
    + "".join(chr(c) for c in range(91, 97)) + "".join(chr(c) for c in range(123, 127))


@dataclass(frozen=True)
class LanguageVerdict:
    is_english: bool
    confidence: float
    words_examined: int


def load_stopwords(path: Optional[str] = None) -> FrozenSet[str]:
    """Load the stopword list: one lowercase word per line, # comments allowed."""
    if path is None:
        text = resources.files("corpus_drift").joinpath("data/stopwords_en.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.casefold())
    return frozenset(words)


@lru_cache(maxsize=1)
def _default_stopwords() -> FrozenSet[str]:
    return load_stopwords()


def truncate_words(text: str, n: int) -> str:
    """First min(n, word_count) whitespace-delimited tokens, space-joined."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return " ".join(text.split()[:n])


def normalize_token(token: str) -> str:
    """Case-fold and strip leading/trailing ASCII punctuation."""
    return token.strip(_PUNCT).casefold()


def detect_english(
    text: str,
    max_words: int = DEFAULT_MAX_WORDS,
    threshold: float = DEFAULT_THRESHOLD,
    stopwords: Optional[FrozenSet[str]] = None,
) -> LanguageVerdict:
    """Classify a text as English from the stopword ratio of its prefix.

    ratio r = (# examined tokens in the stopword list) / (# examined tokens);
    is_english iff r >= threshold; confidence = min(1, r / (2 * threshold)).
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    if stopwords is None:
        stopwords = _default_stopwords()
    tokens = text.split()[:max_words]
    if not tokens:
        return LanguageVerdict(is_english=False, confidence=0.0, words_examined=0)
    hits = sum(1 for t in tokens if normalize_token(t) in stopwords)
    ratio = hits / len(tokens)
    return LanguageVerdict(
        is_english=ratio >= threshold,
        confidence=min(1.0, ratio / (2.0 * threshold)),
        words_examined=len(tokens),
    )
