"""
Report models for every JSON document the CLI writes
====================================================
pydantic models reject non-finite floats, so a report that serializes is NaN-free.
`timings` and `created_at` are the only run-dependent fields and are left out unless
requested.
"""

import json
import logging
from datetime import datetime
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from spectral_gng.config import RunConfig
from spectral_gng.diagnostics import Diagnostic
from spectral_gng.eigen_select import histogram_data, score_table_rows
from spectral_gng.embed_cluster import curve_rows
from spectral_gng.gng import ElbowResult
from spectral_gng.pipeline import ClusterOutcome, PointClustering

if TYPE_CHECKING:  # pragma: no cover
    from spectral_gng.image_pipeline import SegmentRun

logger = logging.getLogger(__name__)


class ReportModel(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)


class DiagnosticEntry(ReportModel):
    stage: str
    code: str
    message: str
    details: Dict[str, Any] = Field(default_factory=dict)


class EigenScoreEntry(ReportModel):
    index: int = Field(description="0-based eigenpair index, ascending eigenvalue")
    eigenvector: str
    eigenvalue: float
    dbi_2: float
    dbi_3: float
    dbi_4: float
    r: float
    chosen: bool


class HistogramEntry(ReportModel):
    bin_width: float
    capped: bool
    edges: List[float]
    counts: List[int]
    mu: float
    sigma: float
    lower: float
    upper: float


class RkEntry(ReportModel):
    k: int
    dbi: float
    lambda_sum: float
    r_k: float


class ElbowEntry(ReportModel):
    candidates: List[int]
    errors: List[float]
    distances: List[float]
    chosen_m: int
    flat: bool


class SpectralSummary(ReportModel):
    m: int
    edge_count: int = 0
    component_count: int = 1
    chosen_k: int
    k_source: str
    eigengap_k: Optional[int] = None
    eigenvalues: List[float] = Field(default_factory=list)
    scores: List[EigenScoreEntry] = Field(default_factory=list)
    histogram: Optional[HistogramEntry] = None
    chosen_eigenvectors: List[int] = Field(default_factory=list)
    chosen_eigenvector_labels: List[str] = Field(default_factory=list)
    selection_fallback: bool = False
    k_prime: int = 0
    explained_variance_ratios: List[float] = Field(default_factory=list)
    r_k_curve: List[RkEntry] = Field(default_factory=list)
    diagnostics: List[DiagnosticEntry] = Field(default_factory=list)
    timings: Optional[Dict[str, float]] = None
    created_at: Optional[str] = None


class ClusterReport(SpectralSummary):
    input: Optional[str] = None
    n_points: int
    dim: int
    seed: int
    config: RunConfig
    elbow: Optional[ElbowEntry] = None
    accuracy: Optional[float] = None


class SegmentReport(SpectralSummary):
    """Report of one image segmentation run"""

    image: Optional[str] = None
    width: int
    height: int
    training_pixels: int
    segments: int
    seed: int
    config: RunConfig


PipelineReport = SegmentReport


class EvalRow(ReportModel):
    pred: str
    gt: str
    metrics: Dict[str, float]


class EvalReport(ReportModel):
    metrics: List[str]
    rows: List[EvalRow]
    mean: Dict[str, float]


class SweepRun(ReportModel):
    seed: int
    m: int
    chosen_k: int
    chosen_eigenvectors: int
    accuracy: Optional[float] = None
    strategy_accuracy: Optional[Dict[str, float]] = None
    strategy_k: Optional[Dict[str, int]] = None


class SweepReport(ReportModel):
    base_seed: int
    runs: int
    input: Optional[str] = None
    chosen_k_histogram: Dict[str, int]
    chosen_eigenvector_histogram: Dict[str, int]
    mean_accuracy: Optional[float] = None
    mean_accuracy_when_k_true: Optional[float] = None
    true_k: Optional[int] = None
    strategy_mean_accuracy: Optional[Dict[str, float]] = None
    per_run: List[SweepRun]


class GenReport(ReportModel):
    kind: str
    seed: int
    n_points: int
    n_labels: int
    output: str
    params: Dict[str, Any]


REPORT_MODELS = {
    "cluster_report": ClusterReport,
    "segment_report": SegmentReport,
    "eval_report": EvalReport,
    "sweep_report": SweepReport,
    "gen_report": GenReport,
}


def _diagnostic_entries(found: List[Diagnostic]) -> List[DiagnosticEntry]:
    return [DiagnosticEntry(**d.to_dict()) for d in found]


def spectral_fields(outcome: ClusterOutcome, m: int, edge_count: int, include_timings: bool) -> Dict[str, Any]:
    fields: Dict[str, Any] = {
        "m": m,
        "edge_count": edge_count,
        "component_count": outcome.component_count,
        "chosen_k": outcome.chosen_k,
        "k_source": outcome.k_source,
        "eigengap_k": outcome.eigengap_k,
        "diagnostics": _diagnostic_entries(outcome.diagnostics),
    }
    if outcome.decomposition is not None:
        fields["eigenvalues"] = [float(v) for v in outcome.decomposition.eigenvalues]
    selection = outcome.selection
    if selection is not None:
        fields.update(
            scores=[EigenScoreEntry(eigenvalue=row.pop("lambda"), **row) for row in score_table_rows(selection)],
            histogram=HistogramEntry(**histogram_data(selection)),
            chosen_eigenvectors=list(selection.chosen),
            chosen_eigenvector_labels=[f"e{i + 1}" for i in selection.chosen],
            selection_fallback=selection.fallback,
            k_prime=selection.p,
            explained_variance_ratios=list(selection.explained_variance_ratios),
        )
    if outcome.curve is not None:
        fields["r_k_curve"] = [RkEntry(**row) for row in curve_rows(outcome.curve)]
    if include_timings:
        fields["timings"] = {name: round(seconds, 6) for name, seconds in outcome.timings.items()}
        fields["created_at"] = datetime.now().isoformat()
    return fields


def elbow_entry(elbow: Optional[ElbowResult]) -> Optional[ElbowEntry]:
    if elbow is None:
        return None
    return ElbowEntry(candidates=elbow.candidates, errors=elbow.errors, distances=elbow.distances,
                      chosen_m=elbow.chosen_m, flat=elbow.flat)


def cluster_report(result: PointClustering, config: RunConfig, n_points: int, dim: int,
                   source: Optional[str] = None, accuracy: Optional[float] = None,
                   include_timings: bool = False) -> ClusterReport:
    edge_count = result.model.edge_count if result.model is not None else 0
    return ClusterReport(
        input=source, n_points=n_points, dim=dim, seed=config.seed, config=config,
        elbow=elbow_entry(result.elbow), accuracy=accuracy,
        **spectral_fields(result.outcome, result.m, edge_count, include_timings),
    )


def segment_report(run: "SegmentRun", config: RunConfig, source: Optional[str] = None,
                   include_timings: bool = False) -> SegmentReport:
    edge_count = run.model.edge_count if run.model is not None else 0
    outcome = run.outcome
    if include_timings:
        outcome.timings = {**run.timings, **outcome.timings}
    return SegmentReport(
        image=source, width=run.features.width, height=run.features.height,
        training_pixels=run.training_pixels, segments=run.label_image.k, seed=config.seed, config=config,
        **spectral_fields(outcome, run.m, edge_count, include_timings),
    )


def export_schemas(directory: Path) -> List[Path]:
    """Write <name>.schema.json for every report model"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, model in REPORT_MODELS.items():
        path = directory / f"{name}.schema.json"
        path.write_text(json.dumps(model.model_json_schema(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written.append(path)
    logger.info(f"[CLI] Wrote {len(written)} schemas to {directory}")
    return written
