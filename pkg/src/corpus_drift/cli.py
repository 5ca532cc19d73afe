"""Command-line entry point: one subcommand per stage plus `pipeline`."""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any, Dict, List, Optional

from . import pipeline
from .config import KEYS, _parse_year_range, parse_config_file, resolve_config
from .errors import CorpusDriftError

ENV_CONFIG = "CORPUS_DRIFT_CONFIG"

# short aliases for the most-used dotted keys
_ALIASES = {
    "embed.backend": "--backend",
    "embed.endpoint": "--endpoint",
    "similarity.method": "--method",
    "similarity.pairs": "--pairs",
    "similarity.seed": "--seed",
    "report.levels": "--levels",
}


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help=f"config file (or ${ENV_CONFIG})")
    parser.add_argument(
        "--years", metavar="MIN..MAX", type=_parse_year_range, help="year window, e.g. 2013..2025"
    )
    for key, spec in KEYS.items():
        flags = [f"--{key}"]
        if key in _ALIASES:
            flags.append(_ALIASES[key])
        if spec.repeatable:
            parser.add_argument(*flags, dest=key, action="append", type=spec.parse, help=spec.help)
        else:
            parser.add_argument(*flags, dest=key, type=spec.parse, help=spec.help)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corpus-drift",
        description="Measure per-year semantic homogeneity of a web-text corpus "
        "and forecast similarity-saturation years.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in [
        ("ingest", "parse WET inputs into per-year document cohorts"),
        ("embed", "embed ingested documents into the embedding store"),
        ("analyze", "compute per-year similarity and diversity statistics"),
        ("fit", "fit the saturation model to the per-year means"),
        ("report", "write report.json, similarity.csv, and trend.svg"),
        ("pipeline", "run all stages in order"),
    ]:
        stage_parser = sub.add_parser(name, help=doc)
        _add_config_flags(stage_parser)
    return parser


def _flag_values(ns: argparse.Namespace) -> Dict[str, Any]:
    values = {key: getattr(ns, key, None) for key in KEYS}
    if values.get("input"):
        values["input"] = [str(p) for p in values["input"]]
    if getattr(ns, "years", None) is not None:
        values["years.min"], values["years.max"] = ns.years
    return values


def main(argv: Optional[List[str]] = None) -> int:
    ns = build_parser().parse_args(argv)
    config_path = ns.config or os.environ.get(ENV_CONFIG)
    try:
        file_values = parse_config_file(config_path) if config_path else {}
        cfg = resolve_config(file_values, _flag_values(ns))
        if ns.command == "ingest":
            counters = pipeline.stage_ingest(cfg)
            print(json.dumps(counters, indent=2, sort_keys=True))
        elif ns.command == "embed":
            count = pipeline.stage_embed(cfg)
            print(f"embedded {count} documents")
        elif ns.command == "analyze":
            payload = pipeline.stage_analyze(cfg)
            print(f"analyzed {len(payload['similarity'])} cohorts")
        elif ns.command == "fit":
            model = pipeline.stage_fit(cfg)
            print(json.dumps(model.__dict__, indent=2, sort_keys=True))
            if not model.converged:
                return 1
        elif ns.command == "report":
            pipeline.stage_report(cfg)
            print(f"report written to {cfg['out']}")
        elif ns.command == "pipeline":
            _, converged = pipeline.run_pipeline(cfg)
            print(f"pipeline complete; artifacts in {cfg['out']}")
            if not converged:
                return 1
    except CorpusDriftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
