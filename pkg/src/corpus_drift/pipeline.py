"""Stage implementations: ingest -> embed -> analyze -> fit -> report.

Each stage reads the previous stage's artifact from the output directory and
writes its own, so any stage can be re-run without repeating earlier work.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

from . import embedding, fit as fitmod, langfilter, metrics, report as reportmod, warc
from .config import PipelineConfig, validate_for_run
from .errors import EmptyData, StageError

ARTIFACTS = {
    "documents": "documents.jsonl",
    "manifest": "manifest.tsv",
    "ingest": "ingest.json",
    "store": "embeddings.store",
    "stats": "stats.json",
    "fit": "fit.json",
    "report": "report.json",
    "csv": "similarity.csv",
    "svg": "trend.svg",
}


def _out(cfg: PipelineConfig, name: str) -> Path:
    out_dir = Path(cfg["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir / ARTIFACTS[name]


def _parse_one_file(path: str, malformed_counter: List[int]) -> List[warc.WetRecord]:
    with open(path, "rb") as fh:
        return list(warc.parse_wet_stream(fh, on_malformed=lambda err: malformed_counter.append(1)))


def stage_ingest(cfg: PipelineConfig) -> Dict:
    """Parse inputs, build cohorts, write documents.jsonl + manifest + counters."""
    validate_for_run(cfg)
    paths = sorted(str(p) for p in cfg["input"])
    stopwords = langfilter.load_stopwords(cfg["lang.stopwords_path"])

    def english(text: str) -> bool:
        return langfilter.detect_english(
            text,
            max_words=cfg["lang.max_words"],
            threshold=cfg["lang.threshold"],
            stopwords=stopwords,
        ).is_english

    malformed: List[int] = []
    workers = max(1, cfg["workers"])
    if workers == 1:
        per_file = [_parse_one_file(p, malformed) for p in paths]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            # merge in sorted file-name order regardless of completion order
            per_file = list(pool.map(lambda p: _parse_one_file(p, malformed), paths))
    records = [record for batch in per_file for record in batch]

    cohorts, drops = warc.build_cohorts(
        records,
        domain_pattern=cfg["domain"],
        year_min=cfg["years.min"],
        year_max=cfg["years.max"],
        english_filter=english,
        year_override=cfg["year_override"],
    )
    if malformed:
        drops = dict(drops, malformed_records=len(malformed))

    with open(_out(cfg, "documents"), "w", encoding="utf-8", newline="\n") as fh:
        for year in sorted(cohorts):
            for doc in cohorts[year].documents:
                fh.write(json.dumps(doc.__dict__, sort_keys=True) + "\n")
    warc.write_manifest(cohorts, str(_out(cfg, "manifest")))

    counters = {
        "drops": drops,
        "cohort_sizes": {str(year): cohorts[year].n for year in sorted(cohorts)},
        "total_documents": sum(c.n for c in cohorts.values()),
    }
    _out(cfg, "ingest").write_text(json.dumps(counters, indent=2, sort_keys=True) + "\n")
    return counters


def stage_embed(cfg: PipelineConfig) -> int:
    """Embed documents.jsonl into the embedding store."""
    doc_path = _out(cfg, "documents")
    if not doc_path.exists():
        raise StageError("embed", f"missing {doc_path}; run ingest first")
    docs = [json.loads(line) for line in doc_path.read_text("utf-8").splitlines()]
    if not docs:
        raise StageError("embed", "no documents to embed")

    econfig = embedding.EmbedderConfig(
        backend=cfg["embed.backend"],
        dimension=cfg["embed.dimension"],
        endpoint_url=cfg["embed.endpoint"],
        batch_size=cfg["embed.batch_size"],
        timeout=cfg["embed.timeout"],
        retries=cfg["embed.retries"],
        hash_seed=cfg["embed.hash_seed"],
    )
    vectors = embedding.embed_batch([d["text"] for d in docs], econfig)
    with open(_out(cfg, "store"), "w", encoding="utf-8", newline="\n") as fh:
        return embedding.write_store(
            fh,
            econfig.dimension,
            vectors[0].model_tag,
            ((d["id"], d["year"], v.values) for d, v in zip(docs, vectors)),
        )


def stage_analyze(cfg: PipelineConfig) -> Dict:
    """Per-year similarity and diversity stats from the embedding store."""
    store_path = _out(cfg, "store")
    if not store_path.exists():
        raise StageError("analyze", f"missing {store_path}; run embed first")
    with open(store_path, "r", encoding="utf-8") as fh:
        _, model_tag, rows = embedding.read_store(fh)
        by_year: Dict[int, List[np.ndarray]] = {}
        for _, year, values in rows:
            by_year.setdefault(year, []).append(values)

    similarity = []
    diversity = []
    for year in sorted(by_year):
        vectors = by_year[year]
        if len(vectors) < 2:
            continue
        if cfg["similarity.method"] == "sampled":
            stat = metrics.mean_pairwise_sampled(
                vectors, year, cfg["similarity.pairs"], cfg["similarity.seed"]
            )
        else:
            stat = metrics.mean_pairwise_exact(vectors, year)
        similarity.append(stat)
        diversity.append(metrics.diversity_stat(vectors, year, top_k=cfg["diversity.top_k"]))

    payload = {
        "model_tag": model_tag,
        "similarity": [s.__dict__ for s in similarity],
        "diversity": [
            {"year": d.year, "n": d.n, "trace": d.trace, "top_eigenvalues": d.top_eigenvalues}
            for d in diversity
        ],
    }
    _out(cfg, "stats").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return payload


def _load_stats(cfg: PipelineConfig) -> Dict:
    stats_path = _out(cfg, "stats")
    if not stats_path.exists():
        raise StageError("fit", f"missing {stats_path}; run analyze first")
    return json.loads(stats_path.read_text("utf-8"))


def stage_fit(cfg: PipelineConfig) -> fitmod.SaturationModel:
    """Fit the saturation model to the per-year means."""
    payload = _load_stats(cfg)
    data = [(s["year"], s["mean_similarity"]) for s in payload["similarity"]]
    fconfig = fitmod.FitConfig(
        learning_rate=cfg["fit.learning_rate"],
        max_iterations=cfg["fit.max_iterations"],
        grad_tolerance=cfg["fit.grad_tolerance"],
        init_b=cfg["fit.init_b"],
        h0=cfg["fit.h0"],
        y0=cfg["fit.y0"],
    )
    model = fitmod.fit(data, fconfig)
    _out(cfg, "fit").write_text(json.dumps(model.__dict__, indent=2, sort_keys=True) + "\n")
    return model


def stage_report(cfg: PipelineConfig) -> Dict:
    """Assemble report.json, similarity.csv, and trend.svg from stage artifacts."""
    payload = _load_stats(cfg)
    fit_path = _out(cfg, "fit")
    if not fit_path.exists():
        raise StageError("report", f"missing {fit_path}; run fit first")
    model = fitmod.SaturationModel(**json.loads(fit_path.read_text("utf-8")))

    ingest_path = _out(cfg, "ingest")
    counters = json.loads(ingest_path.read_text("utf-8")) if ingest_path.exists() else {}

    similarity = [metrics.CohortSimilarityStat(**s) for s in payload["similarity"]]
    diversity = [
        metrics.CohortDiversityStat(
            year=d["year"], n=d["n"], trace=d["trace"], top_eigenvalues=d["top_eigenvalues"]
        )
        for d in payload["diversity"]
    ]
    report = reportmod.build_report(
        config_snapshot=cfg.snapshot(),
        ingest_counters=counters,
        similarity_stats=similarity,
        diversity_stats=diversity,
        model=model,
        levels=cfg["report.levels"],
    )
    reportmod.write_report(report, str(_out(cfg, "report")))
    reportmod.write_similarity_csv(similarity, str(_out(cfg, "csv")))
    if len(similarity) >= 2:
        reportmod.render_plot_svg(
            similarity, model, str(_out(cfg, "svg")), forecast_horizon=cfg["report.horizon"]
        )
    return report


STAGES = ("ingest", "embed", "analyze", "fit", "report")


def run_pipeline(cfg: PipelineConfig) -> Tuple[Dict, bool]:
    """Run all stages in order; returns (report, fit_converged)."""
    validate_for_run(cfg)
    stage_ingest(cfg)
    stage_embed(cfg)
    stage_analyze(cfg)
    model = stage_fit(cfg)
    report = stage_report(cfg)
    return report, model.converged
