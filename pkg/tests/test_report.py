import csv
import xml.etree.ElementTree as ET

import pytest

from corpus_drift.errors import EmptyData
from corpus_drift.fit import SaturationModel
from corpus_drift.metrics import CohortSimilarityStat
from corpus_drift.report import (
    build_report,
    render_plot_svg,
    saturation_table,
    write_similarity_csv,
)

PUBLISHED = SaturationModel(h0=0.35, y0=2013, a=0.0935, b=0.1029, converged=True)


def stat(year, value, n=10):
    return CohortSimilarityStat(
        year=year,
        mean_similarity=value,
        pair_count_used=n * (n - 1) // 2,
        total_pairs=n * (n - 1) // 2,
        method="exact",
        std_error=0.0,
        n=n,
    )


class TestCsv:
    def test_format_contract(self, tmp_path):
        path = tmp_path / "similarity.csv"
        write_similarity_csv([stat(2014, 0.3591234), stat(2013, 0.35)], str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == "year,cosine similarity"
        assert lines[1] == "2013,0.350000"
        assert lines[2] == "2014,0.359123"

    def test_empty_stats_error(self, tmp_path):
        path = tmp_path / "similarity.csv"
        with pytest.raises(EmptyData):
            write_similarity_csv([], str(path))
        assert not path.exists()

    def test_byte_deterministic(self, tmp_path):
        stats = [stat(2013, 0.351), stat(2014, 0.362)]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_similarity_csv(stats, str(a))
        write_similarity_csv(stats, str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_round_trip_within_print_precision(self, tmp_path):
        stats = [stat(2013, 0.3512345678), stat(2014, 0.3623456789)]
        path = tmp_path / "similarity.csv"
        write_similarity_csv(stats, str(path))
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        for row, original in zip(rows, stats):
            assert int(row["year"]) == original.year
            assert abs(float(row["cosine similarity"]) - original.mean_similarity) < 1e-6


class TestSaturationTable:
    def test_published_levels(self):
        rows = saturation_table(PUBLISHED, [0.90, 0.95, 0.99])
        assert [r["reported_year"] for r in rows] == [2035, 2042, 2057]

    def test_empty_levels(self):
        assert saturation_table(PUBLISHED, []) == []


class TestSvg:
    def test_structural_contract(self, tmp_path):
        path = tmp_path / "trend.svg"
        render_plot_svg([stat(2013, 0.35), stat(2020, 0.40)], PUBLISHED, str(path))
        root = ET.fromstring(path.read_text())
        ns = "{http://www.w3.org/2000/svg}"
        assert root.tag == f"{ns}svg"
        assert len(root.findall(f"{ns}path")) == 1
        groups = root.findall(f"{ns}g")
        assert len(groups) == 1 and len(groups[0]) == 2
        labels = [el.text for el in root.iter(f"{ns}text")]
        assert "Year" in labels and "Average Cosine Similarity" in labels

    def test_deterministic(self, tmp_path):
        stats = [stat(2013, 0.35), stat(2020, 0.40)]
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        render_plot_svg(stats, PUBLISHED, str(a))
        render_plot_svg(stats, PUBLISHED, str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_too_few_stats(self, tmp_path):
        with pytest.raises(EmptyData):
            render_plot_svg([stat(2013, 0.35)], PUBLISHED, str(tmp_path / "x.svg"))


class TestRunReport:
    def test_schema_and_ordering(self):
        report = build_report(
            config_snapshot={"out": {"value": "out", "source": "default"}},
            ingest_counters={"drops": {"domain": 2}},
            similarity_stats=[stat(2015, 0.37), stat(2013, 0.35), stat(2014, 0.36)],
            diversity_stats=[],
            model=PUBLISHED,
        )
        assert set(report) == {"config", "ingest", "similarity", "diversity", "fit", "saturation", "meta"}
        years = [row["year"] for row in report["similarity"]]
        assert years == sorted(years) and len(set(years)) == len(years)
        assert report["fit"]["a"] == PUBLISHED.a
        assert [r["reported_year"] for r in report["saturation"]] == [2035, 2042, 2057]
