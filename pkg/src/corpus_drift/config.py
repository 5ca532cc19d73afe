"""Layered pipeline configuration: flag > config file > built-in default.

The config file is plain `key = value` lines with dotted keys and `#`
comments; `input` may repeat. Every key is also exposed as a CLI flag of the
same dotted name, and each resolved value records its provenance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from .errors import ConfigError


def _parse_levels(raw: str) -> List[float]:
    return [float(part) for part in raw.split(",") if part.strip()]


def _parse_year_range(raw: str) -> Tuple[int, int]:
    lo, sep, hi = raw.partition("..")
    if not sep:
        raise ConfigError(f"year range must look like MIN..MAX, got {raw!r}")
    return int(lo), int(hi)


@dataclass
class _Key:
    default: Any
    parse: Callable[[str], Any]
    help: str = ""
    repeatable: bool = False


KEYS: Dict[str, _Key] = {
    "input": _Key([], str, "input .wet/.wet.gz file (repeatable)", repeatable=True),
    "out": _Key("out", str, "output directory"),
    "domain": _Key("wikipedia.", str, "substring matched against the lowercased URI host"),
    "years.min": _Key(2013, int, "lowest year kept"),
    "years.max": _Key(2025, int, "highest year kept"),
    "year_override": _Key(None, int, "force all records into this year"),
    "lang.max_words": _Key(2000, int, "prefix length for language detection"),
    "lang.threshold": _Key(0.15, float, "stopword-ratio threshold for English"),
    "lang.stopwords_path": _Key(None, str, "override stopword list file"),
    "embed.backend": _Key("hash", str, "hash | remote"),
    "embed.dimension": _Key(1024, int, "embedding dimension"),
    "embed.endpoint": _Key("", str, "sidecar base URL (remote backend)"),
    "embed.batch_size": _Key(64, int, "texts per sidecar request"),
    "embed.timeout": _Key(30.0, float, "sidecar request timeout, seconds"),
    "embed.retries": _Key(3, int, "sidecar retry count"),
    "embed.hash_seed": _Key(42, int, "seed for the hash backend"),
    "similarity.method": _Key("exact", str, "exact | sampled"),
    "similarity.pairs": _Key(10000, int, "sampled pairs per cohort"),
    "similarity.seed": _Key(None, int, "seed for pair sampling"),
    "diversity.top_k": _Key(4, int, "eigenvalues kept in the covariance summary"),
    "fit.learning_rate": _Key(1e-3, float, "gradient-descent step size"),
    "fit.max_iterations": _Key(200000, int, "iteration cap"),
    "fit.grad_tolerance": _Key(1e-10, float, "stop when gradient inf-norm falls below"),
    "fit.init_b": _Key(0.1, float, "initial rate parameter"),
    "fit.h0": _Key(None, float, "fix baseline similarity (default: first observation)"),
    "fit.y0": _Key(None, float, "fix start year (default: first year)"),
    "report.levels": _Key([0.90, 0.95, 0.99], _parse_levels, "saturation levels"),
    "report.horizon": _Key(10.0, float, "forecast years past the last observation in the plot"),
    "workers": _Key(1, int, "parallel workers for file parsing"),
}


def parse_config_file(path: str) -> Dict[str, Any]:
    """Parse `key = value` lines; unknown keys are an error."""
    values: Dict[str, Any] = {}
    for lineno, raw_line in enumerate(Path(path).read_text("utf-8").splitlines(), 1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw_value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw_line!r}")
        key = key.strip()
        raw_value = raw_value.strip()
        if key not in KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        spec = KEYS[key]
        parsed = spec.parse(raw_value)
        if spec.repeatable:
            values.setdefault(key, []).append(parsed)
        else:
            values[key] = parsed
    return values


@dataclass
class PipelineConfig:
    values: Dict[str, Any] = field(default_factory=dict)
    provenance: Dict[str, str] = field(default_factory=dict)

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def snapshot(self) -> Dict[str, Any]:
        return {
            key: {"value": self.values[key], "source": self.provenance[key]}
            for key in sorted(self.values)
        }


def resolve_config(
    file_values: Optional[Dict[str, Any]] = None,
    flag_values: Optional[Dict[str, Any]] = None,
) -> PipelineConfig:
    """Merge defaults, config-file values, and flags, recording provenance."""
    file_values = file_values or {}
    flag_values = flag_values or {}
    cfg = PipelineConfig()
    for key, spec in KEYS.items():
        if key in flag_values and flag_values[key] is not None:
            cfg.values[key] = flag_values[key]
            cfg.provenance[key] = "flag"
        elif key in file_values:
            cfg.values[key] = file_values[key]
            cfg.provenance[key] = "config"
        else:
            cfg.values[key] = spec.default
            cfg.provenance[key] = "default"
    return cfg


def validate_for_run(cfg: PipelineConfig, need_inputs: bool = True) -> None:
    if need_inputs and not cfg["input"]:
        raise ConfigError("at least one input path is required")
    if cfg["similarity.method"] not in ("exact", "sampled"):
        raise ConfigError(f"similarity.method must be exact or sampled, got {cfg['similarity.method']!r}")
    if cfg["similarity.method"] == "sampled" and cfg["similarity.seed"] is None:
        raise ConfigError("similarity.seed is required when similarity.method = sampled")
    if cfg["embed.backend"] not in ("hash", "remote"):
        raise ConfigError(f"embed.backend must be hash or remote, got {cfg['embed.backend']!r}")
    if cfg["embed.backend"] == "remote" and not cfg["embed.endpoint"]:
        raise ConfigError("embed.endpoint is required for the remote backend")
    if cfg["years.min"] > cfg["years.max"]:
        raise ConfigError("years.min must be <= years.max")
    for level in cfg["report.levels"]:
        if not 0.0 < level < 1.0:
            raise ConfigError(f"saturation levels must be in (0, 1), got {level}")
