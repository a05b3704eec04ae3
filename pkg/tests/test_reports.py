import json
from pathlib import Path

import jsonschema
import pytest

from spectral_gng.config import RunConfig
from spectral_gng.main import main
from spectral_gng.reports import (
    REPORT_MODELS, ClusterReport, EvalReport, GenReport, RkEntry, cluster_report, export_schemas,
)

SCHEMA_DIR = Path(__file__).resolve().parents[1] / "schemas"


def _shipped_schema(name):
    return json.loads((SCHEMA_DIR / f"{name}.schema.json").read_text(encoding="utf-8"))


def test_non_finite_values_are_rejected():
    with pytest.raises(ValueError):
        RkEntry(k=2, dbi=float("nan"), lambda_sum=0.1, r_k=0.2)
    with pytest.raises(ValueError):
        EvalReport(metrics=["vi"], rows=[], mean={"vi": float("inf")})


def test_unknown_report_field_is_rejected():
    with pytest.raises(ValueError):
        GenReport(kind="rings", seed=0, n_points=9, n_labels=3, output="x.csv", params={}, extra=1)


def test_export_schemas(tmp_path):
    written = export_schemas(tmp_path / "schemas")
    assert sorted(p.name for p in written) == sorted(f"{name}.schema.json" for name in REPORT_MODELS)
    schema = json.loads((tmp_path / "schemas" / "cluster_report.schema.json").read_text())
    assert "chosen_k" in schema["properties"]


def test_cluster_report_from_rings(rings, rings_clustering, fast_config):
    points, labels = rings
    report = cluster_report(rings_clustering, fast_config, n_points=points.shape[0], dim=2, accuracy=0.97)
    assert report.chosen_k == rings_clustering.outcome.chosen_k
    assert report.m == 32
    assert report.timings is None and report.created_at is None
    size = rings_clustering.model.size
    assert len(report.scores) == size - 1
    assert [s.eigenvector for s in report.scores][:2] == ["e2", "e3"]
    assert sum(s.chosen for s in report.scores) == len(report.chosen_eigenvectors)
    assert [entry.k for entry in report.r_k_curve] == list(range(2, size + 1))
    assert len(report.eigenvalues) == size

    text = report.model_dump_json()
    assert "NaN" not in text and "Infinity" not in text
    assert ClusterReport.model_validate_json(text).chosen_k == report.chosen_k


def test_timings_are_opt_in(rings, rings_clustering, fast_config):
    points, _ = rings
    report = cluster_report(rings_clustering, fast_config, n_points=points.shape[0], dim=2, include_timings=True)
    assert {"gng", "spectral", "eigen_select", "r_k", "kmeans"} <= set(report.timings)
    assert report.created_at is not None


def test_degenerate_report_serializes():
    from spectral_gng.pipeline import cluster_points
    config = RunConfig()
    result = cluster_points([[1.0, 2.0]] * 4, config)
    report = cluster_report(result, config, n_points=4, dim=2)
    assert report.chosen_k == 1 and report.k_source == "degenerate"
    assert report.scores == [] and report.histogram is None
    assert "single_cluster" in [d.code for d in report.diagnostics]
    json.loads(report.model_dump_json())


@pytest.mark.parametrize("name", sorted(REPORT_MODELS))
def test_shipped_schema_matches_model(name):
    assert _shipped_schema(name) == REPORT_MODELS[name].model_json_schema()


def test_cli_reports_validate_against_shipped_schemas(tmp_path):
    points = tmp_path / "rings.csv"
    out = tmp_path / "out"
    assert main(["gen", "rings", "--count", "40", "--seed", "1", "-o", str(points)]) == 0
    assert main(["cluster", str(points), "--output-dir", str(out),
                 "--m", "20", "--max-epochs", "10", "--kmeans-restarts", "2"]) == 0

    jsonschema.validate(json.loads(points.with_suffix(".json").read_text()), _shipped_schema("gen_report"))
    report = json.loads((out / "rings_report.json").read_text())
    jsonschema.validate(report, _shipped_schema("cluster_report"))

    report["surplus"] = 1
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(report, _shipped_schema("cluster_report"))
