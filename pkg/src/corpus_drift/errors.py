"""Exception hierarchy shared across pipeline stages."""


class CorpusDriftError(Exception):
    """Base class for all pipeline errors."""


class MalformedHeader(CorpusDriftError):
    """WET record header could not be parsed (missing version line or Content-Length)."""

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (at byte offset {byte_offset})")
        self.byte_offset = byte_offset


class TruncatedBody(CorpusDriftError):
    """Stream ended before Content-Length body bytes were read."""

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (at byte offset {byte_offset})")
        self.byte_offset = byte_offset
        self.partial_results = True


class YearUnknown(CorpusDriftError):
    """Record carries no parseable date and no year override was supplied."""


class EmptyText(CorpusDriftError):
    """Embedding requested for a text with zero tokens."""


class RemoteUnavailable(CorpusDriftError):
    """Embedding sidecar unreachable after configured retries."""


class DimensionMismatch(CorpusDriftError):
    """Vector dimensions disagree (between vectors, or sidecar vs config)."""


class ProtocolError(CorpusDriftError):
    """Sidecar response did not match the wire protocol."""


class ZeroNorm(CorpusDriftError):
    """Cosine requested for a zero-norm vector."""


class CohortTooSmall(CorpusDriftError):
    """Statistic requires more documents than the cohort contains."""


class EmptyCohort(CorpusDriftError):
    """Statistic requires a non-empty cohort."""


class EmptyData(CorpusDriftError):
    """Fit or loss evaluation invoked with no observations."""


class TooFewPoints(CorpusDriftError):
    """Fit requires at least three distinct years."""


class DivergedLoss(CorpusDriftError):
    """Loss became non-finite during optimization."""


class InvalidFraction(CorpusDriftError):
    """Saturation fraction must lie strictly between 0 and 1."""


class ConfigError(CorpusDriftError):
    """Pipeline configuration invalid or incomplete."""


class StageError(CorpusDriftError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
