"""Service configuration."""

from __future__ import annotations

from dataclasses import dataclass

DEFAULT_MODEL = "BAAI/bge-large-en-v1.5"
DEVICES = ("auto", "cpu", "gpu")


@dataclass(frozen=True)
class SidecarConfig:
    """Startup options for the embedding service."""

    model_name: str = DEFAULT_MODEL
    host: str = "127.0.0.1"
    port: int = 8700
    max_batch: int = 256
    device: str = "auto"

    def __post_init__(self) -> None:
        if self.max_batch < 1:
            raise ValueError("max_batch must be >= 1")
        if self.device not in DEVICES:
            raise ValueError(f"device must be one of {DEVICES}")
