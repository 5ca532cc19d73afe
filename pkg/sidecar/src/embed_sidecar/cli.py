"""Command-line entry point: load the model, then serve forever.

The model is loaded before the server binds, so a bad model name exits
non-zero instead of leaving a half-alive service answering /health.
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

import uvicorn

from .app import create_app
from .config import DEFAULT_MODEL, DEVICES, SidecarConfig
from .encoder import ModelLoadError, load_encoder


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-sidecar",
        description="Serve sentence embeddings over HTTP (see PROTOCOL.md)",
    )
    parser.add_argument(
        "--model",
        default=DEFAULT_MODEL,
        help=f"model id, or stub:<dim> for the offline stub (default {DEFAULT_MODEL})",
    )
    parser.add_argument("--host", default="127.0.0.1", help="bind address")
    parser.add_argument("--port", type=int, default=8700, help="bind port")
    parser.add_argument(
        "--max-batch", type=int, default=256, help="largest accepted texts batch"
    )
    parser.add_argument(
        "--device", choices=DEVICES, default="auto", help="compute device preference"
    )
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = SidecarConfig(
            model_name=args.model,
            host=args.host,
            port=args.port,
            max_batch=args.max_batch,
            device=args.device,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        encoder = load_encoder(config.model_name, device=config.device)
    except ModelLoadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"serving {encoder.model_tag} (dimension {encoder.dimension}) "
        f"on {config.host}:{config.port}",
        file=sys.stderr,
    )
    app = create_app(encoder, max_batch=config.max_batch)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
