import json

import pytest

from corpus_drift.cli import main
from corpus_drift.config import parse_config_file, resolve_config, validate_for_run
from corpus_drift.errors import ConfigError

from conftest import build_fixture_corpus

DUPLICATES = {2013: 0, 2014: 6, 2015: 8, 2016: 9, 2017: 10}
# the default 1e-10 sits below float64 resolution for noisy fixture losses
FIT_TOL = ["--fit.grad_tolerance", "1e-6"]


@pytest.fixture
def corpus(tmp_path):
    return build_fixture_corpus(tmp_path, DUPLICATES)


def run_cli(*args):
    return main([str(a) for a in args])


class TestConfig:
    def test_precedence_flag_over_file_over_default(self, tmp_path):
        config_file = tmp_path / "run.conf"
        config_file.write_text("domain = example.\nworkers = 3\n")
        cfg = resolve_config(parse_config_file(str(config_file)), {"workers": 5})
        assert cfg["domain"] == "example." and cfg.provenance["domain"] == "config"
        assert cfg["workers"] == 5 and cfg.provenance["workers"] == "flag"
        assert cfg["embed.backend"] == "hash" and cfg.provenance["embed.backend"] == "default"

    def test_repeatable_input_key(self, tmp_path):
        config_file = tmp_path / "run.conf"
        config_file.write_text("input = a.wet\ninput = b.wet\n")
        assert parse_config_file(str(config_file))["input"] == ["a.wet", "b.wet"]

    def test_unknown_key_rejected(self, tmp_path):
        config_file = tmp_path / "run.conf"
        config_file.write_text("nonsense = 1\n")
        with pytest.raises(ConfigError):
            parse_config_file(str(config_file))

    def test_sampled_requires_seed(self):
        cfg = resolve_config(flag_values={"input": ["x.wet"], "similarity.method": "sampled"})
        with pytest.raises(ConfigError, match="seed"):
            validate_for_run(cfg)

    def test_env_var_fallback(self, tmp_path, monkeypatch, capsys):
        config_file = tmp_path / "run.conf"
        config_file.write_text("similarity.method = sampled\n")
        monkeypatch.setenv("CORPUS_DRIFT_CONFIG", str(config_file))
        # sampled without a seed must fail config validation before any work
        code = run_cli("pipeline", "--input", "missing.wet", "--out", tmp_path / "out")
        assert code == 2
        assert "seed" in capsys.readouterr().err


class TestPipeline:
    def test_end_to_end_fixture(self, corpus, tmp_path, capsys):
        out = tmp_path / "out"
        code = run_cli(
            "pipeline", "--input", corpus, "--out", out,
            "--embed.dimension", "256", "--years", "2013..2025", *FIT_TOL,
        )
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert len(report["similarity"]) == 5
        assert report["fit"]["converged"]
        assert report["fit"]["b"] > 0
        years = [row["year"] for row in report["similarity"]]
        means = [row["mean_similarity"] for row in report["similarity"]]
        assert years == sorted(years)
        assert all(lo < hi for lo, hi in zip(means, means[1:]))
        assert (out / "similarity.csv").exists()
        assert (out / "trend.svg").exists()
        assert (out / "manifest.tsv").exists()

    def test_stage_composability(self, corpus, tmp_path):
        args = ["--input", corpus, "--embed.dimension", "128", *FIT_TOL]
        out_pipeline = tmp_path / "p"
        out_stages = tmp_path / "s"
        assert run_cli("pipeline", *args, "--out", out_pipeline) == 0
        for stage in ("ingest", "embed", "analyze", "fit", "report"):
            assert run_cli(stage, *args, "--out", out_stages) == 0
        assert (out_pipeline / "similarity.csv").read_bytes() == (
            out_stages / "similarity.csv"
        ).read_bytes()
        assert json.loads((out_pipeline / "fit.json").read_text()) == json.loads(
            (out_stages / "fit.json").read_text()
        )

    def test_rerun_byte_identical(self, corpus, tmp_path):
        outs = []
        for name in ("one", "two"):
            out = tmp_path / name
            assert run_cli("pipeline", "--input", corpus, "--out", out,
                           "--embed.dimension", "128", *FIT_TOL) == 0
            outs.append(out)
        assert (outs[0] / "similarity.csv").read_bytes() == (outs[1] / "similarity.csv").read_bytes()

    def test_sampled_method_runs(self, corpus, tmp_path):
        out = tmp_path / "out"
        code = run_cli(
            "pipeline", "--input", corpus, "--out", out, "--embed.dimension", "128",
            "--method", "sampled", "--pairs", "30", "--seed", "7", *FIT_TOL,
        )
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert {row["method"] for row in report["similarity"]} <= {"sampled", "exact"}

    def test_workers_invariant(self, corpus, tmp_path):
        csvs = []
        for workers in (1, 3):
            out = tmp_path / f"w{workers}"
            assert run_cli("pipeline", "--input", corpus, "--out", out,
                           "--embed.dimension", "128", "--workers", str(workers), *FIT_TOL) == 0
            csvs.append((out / "similarity.csv").read_bytes())
        assert csvs[0] == csvs[1]

    def test_missing_stage_artifact_errors(self, tmp_path, capsys):
        code = run_cli("analyze", "--input", "x.wet", "--out", tmp_path / "nothing")
        assert code == 2
        assert "embed" in capsys.readouterr().err

    def test_config_snapshot_provenance(self, corpus, tmp_path):
        out = tmp_path / "out"
        assert run_cli("pipeline", "--input", corpus, "--out", out,
                       "--embed.dimension", "128", *FIT_TOL) == 0
        snapshot = json.loads((out / "report.json").read_text())["config"]
        assert snapshot["embed.dimension"] == {"value": 128, "source": "flag"}
        assert snapshot["domain"]["source"] == "default"
