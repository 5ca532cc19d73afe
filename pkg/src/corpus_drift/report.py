"""Result serialization: similarity CSV, saturation table, JSON report, SVG plot."""

from __future__ import annotations

import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import __version__
from .errors import EmptyData
from .fit import SaturationModel, model_eval, saturation_year
from .metrics import CohortDiversityStat, CohortSimilarityStat

DEFAULT_LEVELS = (0.90, 0.95, 0.99)


def write_similarity_csv(stats: Sequence[CohortSimilarityStat], path: str) -> None:
    """Header `year,cosine similarity`, one 6-decimal row per year, ascending."""
    if not stats:
        raise EmptyData("no similarity stats to write")
    ordered = sorted(stats, key=lambda s: s.year)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("year,cosine similarity\n")
        for stat in ordered:
            fh.write(f"{stat.year},{stat.mean_similarity:.6f}\n")


def saturation_table(model: SaturationModel, levels: Sequence[float]) -> List[Dict]:
    rows = []
    for level in levels:
        exact, reported = saturation_year(model, level)
        rows.append(
            {
                "level_percent": round(level * 100, 6),
                "exact_year": exact,
                "reported_year": reported,
            }
        )
    return rows


def build_report(
    config_snapshot: Dict,
    ingest_counters: Dict[str, int],
    similarity_stats: Sequence[CohortSimilarityStat],
    diversity_stats: Sequence[CohortDiversityStat],
    model: Optional[SaturationModel],
    levels: Sequence[float] = DEFAULT_LEVELS,
) -> Dict:
    """Assemble the full run report (top-level keys fixed by the file schema)."""
    similarity = [
        {
            "year": s.year,
            "mean_similarity": s.mean_similarity,
            "pair_count_used": s.pair_count_used,
            "total_pairs": s.total_pairs,
            "method": s.method,
            "std_error": s.std_error,
            "seed": s.seed,
            "n": s.n,
        }
        for s in sorted(similarity_stats, key=lambda s: s.year)
    ]
    diversity = [
        {
            "year": d.year,
            "n": d.n,
            "trace": d.trace,
            "top_eigenvalues": d.top_eigenvalues,
        }
        for d in sorted(diversity_stats, key=lambda d: d.year)
    ]
    fit_block = None
    saturation = []
    if model is not None:
        fit_block = {
            "h0": model.h0,
            "y0": model.y0,
            "a": model.a,
            "b": model.b,
            "final_loss": model.final_loss,
            "iterations_run": model.iterations_run,
            "converged": model.converged,
        }
        saturation = saturation_table(model, levels)
    return {
        "config": config_snapshot,
        "ingest": ingest_counters,
        "similarity": similarity,
        "diversity": diversity,
        "fit": fit_block,
        "saturation": saturation,
        "meta": {
            "tool_version": __version__,
            "generated_at": datetime.now(timezone.utc).isoformat(),
        },
    }


def write_report(report: Dict, path: str) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# SVG plot
# ---------------------------------------------------------------------------

_WIDTH, _HEIGHT = 800, 500
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 30, 30, 60


def render_plot_svg(
    stats: Sequence[CohortSimilarityStat],
    model: SaturationModel,
    path: str,
    forecast_horizon: float = 10.0,
    curve_samples: int = 200,
) -> None:
    """Observed points plus fitted curve as a self-contained, deterministic SVG."""
    if len(stats) < 2:
        raise EmptyData("plot requires at least 2 stats")
    ordered = sorted(stats, key=lambda s: s.year)
    x_min = float(ordered[0].year)
    x_max = float(ordered[-1].year) + forecast_horizon

    curve_x = [x_min + (x_max - x_min) * i / (curve_samples - 1) for i in range(curve_samples)]
    curve_y = [model_eval(model, x) for x in curve_x]
    obs_y = [s.mean_similarity for s in ordered]
    y_lo = min(min(curve_y), min(obs_y), model.h0)
    y_hi = max(max(curve_y), max(obs_y), model.h0 + model.a)
    pad = max((y_hi - y_lo) * 0.1, 1e-6)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def sx(x: float) -> float:
        return _MARGIN_L + (x - x_min) / (x_max - x_min) * (_WIDTH - _MARGIN_L - _MARGIN_R)

    def sy(y: float) -> float:
        return _HEIGHT - _MARGIN_B - (y - y_lo) / (y_hi - y_lo) * (_HEIGHT - _MARGIN_T - _MARGIN_B)

    d = " ".join(
        f"{'M' if i == 0 else 'L'} {sx(x):.2f} {sy(y):.2f}"
        for i, (x, y) in enumerate(zip(curve_x, curve_y))
    )
    markers = "".join(
        f'<circle cx="{sx(s.year):.2f}" cy="{sy(s.mean_similarity):.2f}" r="4" fill="black"/>'
        for s in ordered
    )
    formula = (
        f"h(y) = {model.h0:.4f} + {model.a:.4f}"
        f"(1 - e^(-{model.b:.4f}(y - {model.y0:.0f})))"
    )
    x_ticks = "".join(
        f'<text x="{sx(x):.2f}" y="{_HEIGHT - _MARGIN_B + 20}" text-anchor="middle" font-size="11">{int(x)}</text>'
        for x in _nice_ticks(x_min, x_max, 8)
    )
    y_ticks = "".join(
        f'<text x="{_MARGIN_L - 8}" y="{sy(y):.2f}" text-anchor="end" font-size="11">{y:.3f}</text>'
        for y in _nice_ticks(y_lo, y_hi, 6)
    )

    svg = f"""<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">
<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>
<line x1="{_MARGIN_L}" y1="{_HEIGHT - _MARGIN_B}" x2="{_WIDTH - _MARGIN_R}" y2="{_HEIGHT - _MARGIN_B}" stroke="black"/>
<line x1="{_MARGIN_L}" y1="{_MARGIN_T}" x2="{_MARGIN_L}" y2="{_HEIGHT - _MARGIN_B}" stroke="black"/>
{x_ticks}
{y_ticks}
<text x="{(_MARGIN_L + _WIDTH - _MARGIN_R) / 2:.0f}" y="{_HEIGHT - 15}" text-anchor="middle" font-size="14">Year</text>
<text x="18" y="{(_MARGIN_T + _HEIGHT - _MARGIN_B) / 2:.0f}" text-anchor="middle" font-size="14" transform="rotate(-90 18 {(_MARGIN_T + _HEIGHT - _MARGIN_B) / 2:.0f})">Average Cosine Similarity</text>
<path d="{d}" fill="none" stroke="blue" stroke-width="1.5" stroke-dasharray="6 3"/>
<g id="observations">{markers}</g>
<text x="{_MARGIN_L + 10}" y="{_MARGIN_T + 15}" font-size="12">Fit: {formula}</text>
</svg>
"""
    Path(path).write_text(svg, encoding="utf-8")


def _nice_ticks(lo: float, hi: float, target: int) -> List[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / target
    mag = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 5, 10):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12:
        ticks.append(round(t, 10))
        t += step
    return ticks
