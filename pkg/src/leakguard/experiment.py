"""Scenario orchestration: where resampling sits relative to the split.

A scenario runs the same sampler, splitter, and model code regardless of
placement; the only thing placement changes is the order of operations.
Running the pipeline before the split is supported on purpose, clearly
marked leaky, because demonstrating the metric inflation it causes is the
point of this package. Every run ends with a leakage audit of the final
train/test pair.
"""

from __future__ import annotations

import hashlib
import time
from collections import Counter
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import boosting, metrics, sampling
from .dataset import (
    FitScope,
    HourMode,
    SplitSpec,
    TabularDataset,
    apply_standardizer,
    engineer_time_features,
    fit_standardizer,
    stratified_split,
)

RESULT_FORMAT_VERSION = 1

METRIC_KEYS = ("accuracy", "precision", "recall", "f1", "mcc", "auc")


class ScenarioError(RuntimeError):
    """A scenario stage failed; the message names the stage."""


class Placement(str, Enum):
    NO_SAMPLING = "no_sampling"
    SAMPLING_AFTER_SPLIT = "sampling_after_split"
    SAMPLING_BEFORE_SPLIT = "sampling_before_split"


class Preprocessing(str, Enum):
    """GUARDED fits every transform on the train partition only and wraps
    hours into [0, 24); PAPER_FAITHFUL fits transforms on the full dataset
    and keeps raw hour counts, reproducing the conventional notebook flow.
    """

    GUARDED = "guarded"
    PAPER_FAITHFUL = "paper_faithful"


class Verdict(str, Enum):
    CLEAN = "clean"
    LEAKY = "leaky"


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    placement: Placement
    split: SplitSpec
    model: boosting.GbdtParams
    pipeline: sampling.SamplerPipeline | None = None
    preprocessing: Preprocessing = Preprocessing.GUARDED
    threshold: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "placement", Placement(self.placement))
        object.__setattr__(self, "preprocessing", Preprocessing(self.preprocessing))
        if not self.name:
            raise ValueError("scenario needs a name")
        if self.placement == Placement.NO_SAMPLING:
            if self.pipeline is not None:
                raise ValueError("no_sampling scenarios cannot carry a pipeline")
        elif self.pipeline is None:
            raise ValueError(f"{self.placement.value} scenarios need a pipeline")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie strictly between 0 and 1")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "placement": self.placement.value,
            "pipeline": self.pipeline.to_dict() if self.pipeline else None,
            "preprocessing": self.preprocessing.value,
            "split": self.split.to_dict(),
            "model": self.model.to_dict(),
            "threshold": self.threshold,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        pipeline = d.get("pipeline")
        return cls(
            name=d["name"],
            placement=Placement(d["placement"]),
            pipeline=sampling.SamplerPipeline.from_dict(pipeline) if pipeline else None,
            preprocessing=Preprocessing(d.get("preprocessing", "guarded")),
            split=SplitSpec.from_dict(d["split"]),
            model=boosting.GbdtParams.from_dict(d["model"]),
            threshold=d.get("threshold", 0.5),
        )


@dataclass(frozen=True)
class LeakageReport:
    """Audit of a final train/test pair.

    synthetic_rows_in_test counts test rows whose provenance is not
    Original (sampler-created rows that ended up in the evaluation set);
    duplicate_pairs_across_split counts exact feature-vector matches
    between the partitions. The verdict is Leaky exactly when either count
    is positive or the scaler saw the full dataset. near_duplicate_pairs
    is an optional diagnostic (pairs within a caller-chosen radius,
    exact matches included) and does not affect the verdict.
    """

    synthetic_rows_in_test: int
    duplicate_pairs_across_split: int
    scaler_fitted_on_full_data: bool
    verdict: Verdict
    near_duplicate_pairs: int | None = None

    def __post_init__(self):
        should_leak = (
            self.synthetic_rows_in_test > 0
            or self.duplicate_pairs_across_split > 0
            or self.scaler_fitted_on_full_data
        )
        if (self.verdict == Verdict.LEAKY) != should_leak:
            raise ValueError("verdict inconsistent with the leakage counts")

    def to_dict(self) -> dict:
        return {
            "synthetic_rows_in_test": self.synthetic_rows_in_test,
            "duplicate_pairs_across_split": self.duplicate_pairs_across_split,
            "scaler_fitted_on_full_data": self.scaler_fitted_on_full_data,
            "verdict": self.verdict.value,
            "near_duplicate_pairs": self.near_duplicate_pairs,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LeakageReport":
        return cls(
            synthetic_rows_in_test=d["synthetic_rows_in_test"],
            duplicate_pairs_across_split=d["duplicate_pairs_across_split"],
            scaler_fitted_on_full_data=d["scaler_fitted_on_full_data"],
            verdict=Verdict(d["verdict"]),
            near_duplicate_pairs=d.get("near_duplicate_pairs"),
        )


@dataclass(frozen=True)
class ScenarioResult:
    scenario: ScenarioSpec
    metrics: metrics.MetricsReport
    leakage: LeakageReport
    train_class_counts: dict[int, int]
    test_class_counts: dict[int, int]
    test_provenance_counts: dict[str, int]
    wall_time: float
    data_fingerprint: str
    test_labels: tuple[int, ...]
    test_scores: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "format_version": RESULT_FORMAT_VERSION,
            "scenario": self.scenario.to_dict(),
            "data_fingerprint": self.data_fingerprint,
            "metrics": self.metrics.to_dict(),
            "leakage": self.leakage.to_dict(),
            "train_class_counts": {str(k): v for k, v in self.train_class_counts.items()},
            "test_class_counts": {str(k): v for k, v in self.test_class_counts.items()},
            "test_provenance_counts": dict(self.test_provenance_counts),
            "wall_time": self.wall_time,
            "seeds": {
                "split": self.scenario.split.seed,
                "model": self.scenario.model.seed,
                "samplers": [s.seed for s in self.scenario.pipeline.steps]
                if self.scenario.pipeline
                else [],
            },
            "test_labels": list(self.test_labels),
            "test_scores": list(self.test_scores),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioResult":
        version = d.get("format_version")
        if version != RESULT_FORMAT_VERSION:
            raise ValueError(f"unsupported result format version {version!r}")
        m = d["metrics"]
        report = metrics.MetricsReport(
            accuracy=m["accuracy"],
            precision=m["precision"],
            recall=m["recall"],
            f1=m["f1"],
            mcc=m["mcc"],
            auc=m["auc"],
            threshold=m["threshold"],
            confusion=metrics.ConfusionMatrix(**m["confusion"]),
            positive_count=m["positive_count"],
            negative_count=m["negative_count"],
            zero_division_flags=tuple(m.get("zero_division_flags", ())),
        )
        return cls(
            scenario=ScenarioSpec.from_dict(d["scenario"]),
            metrics=report,
            leakage=LeakageReport.from_dict(d["leakage"]),
            train_class_counts={int(k): v for k, v in d["train_class_counts"].items()},
            test_class_counts={int(k): v for k, v in d["test_class_counts"].items()},
            test_provenance_counts=dict(d["test_provenance_counts"]),
            wall_time=d["wall_time"],
            data_fingerprint=d["data_fingerprint"],
            test_labels=tuple(d["test_labels"]),
            test_scores=tuple(d["test_scores"]),
        )


def dataset_fingerprint(dataset: TabularDataset) -> str:
    """Order-independent hash of all (features, label) rows."""
    total = 0
    modulus = 1 << 256
    for i in range(dataset.n_rows):
        digest = hashlib.sha256(
            dataset.features[i].tobytes() + bytes([int(dataset.labels[i])])
        ).digest()
        total = (total + int.from_bytes(digest, "big")) % modulus
    return f"{total:064x}"


def _class_counts(dataset: TabularDataset) -> dict[int, int]:
    return {
        0: int((dataset.labels == 0).sum()),
        1: int((dataset.labels == 1).sum()),
    }


def _near_duplicate_pairs(
    train: TabularDataset, test: TabularDataset, radius: float
) -> int:
    count = 0
    radius2 = radius * radius
    chunk = 256
    for start in range(0, test.n_rows, chunk):
        block = test.features[start : start + chunk]
        d2 = ((block[:, None, :] - train.features[None, :, :]) ** 2).sum(axis=2)
        count += int((d2 <= radius2).sum())
    return count


def detect_leakage(
    train: TabularDataset,
    test: TabularDataset,
    scaler_mode: FitScope,
    near_duplicate_radius: float | None = None,
) -> LeakageReport:
    """Audit a train/test pair for evaluation contamination.

    Counts non-Original provenance rows in the test partition and exact
    feature-vector matches across the partitions (hash-based), and records
    whether the standardizer saw the full dataset.
    """
    if train.n_rows == 0 or test.n_rows == 0:
        raise ValueError("both partitions must be non-empty")
    created = sum(1 for p in test.provenance if not p.is_original)
    train_counts = Counter(
        train.features[i].tobytes() for i in range(train.n_rows)
    )
    duplicate_pairs = sum(
        train_counts[test.features[i].tobytes()] for i in range(test.n_rows)
    )
    scaler_full = scaler_mode == FitScope.FULL_DATASET
    near = None
    if near_duplicate_radius is not None:
        near = _near_duplicate_pairs(train, test, near_duplicate_radius)
    leaky = created > 0 or duplicate_pairs > 0 or scaler_full
    return LeakageReport(
        synthetic_rows_in_test=created,
        duplicate_pairs_across_split=duplicate_pairs,
        scaler_fitted_on_full_data=scaler_full,
        verdict=Verdict.LEAKY if leaky else Verdict.CLEAN,
        near_duplicate_pairs=near,
    )


def _preprocess(
    train: TabularDataset,
    test: TabularDataset,
    fit_source: TabularDataset,
    scope: FitScope,
    hour_mode: HourMode,
) -> tuple[TabularDataset, TabularDataset]:
    """Standardize both partitions with parameters fitted per scope.

    Datasets with a raw Time column get the hour/day-segment treatment and
    scaled copies of Time and Amount; anything else is standardized across
    all feature columns.
    """
    if "Time" in train.feature_names:
        cols = [c for c in ("Time", "Amount") if c in train.feature_names]
        params = fit_standardizer(fit_source, cols, scope)
        return (
            engineer_time_features(train, hour_mode, params),
            engineer_time_features(test, hour_mode, params),
        )
    params = fit_standardizer(fit_source, train.feature_names, scope)
    return apply_standardizer(train, params), apply_standardizer(test, params)


def _stage(name: str):
    class _StageContext:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, ScenarioError):
                raise ScenarioError(f"stage '{name}': {exc}") from exc
            return False

    return _StageContext()


def run_scenario(data: TabularDataset, spec: ScenarioSpec) -> ScenarioResult:
    """Execute one scenario end to end and audit the outcome.

    The three placements share every code path; they differ only in when
    (or whether) the sampling pipeline runs relative to the split.
    """
    start = time.perf_counter()
    fingerprint = dataset_fingerprint(data)

    working = data
    if spec.placement == Placement.SAMPLING_BEFORE_SPLIT:
        with _stage("sampling before split"):
            working = sampling.apply_pipeline(working, spec.pipeline)

    with _stage("train/test split"):
        train_part, test_part = stratified_split(working, spec.split)

    if spec.placement == Placement.SAMPLING_AFTER_SPLIT:
        with _stage("sampling after split"):
            train_part = sampling.apply_pipeline(train_part, spec.pipeline)

    guarded = spec.preprocessing == Preprocessing.GUARDED
    scope = FitScope.TRAIN_ONLY if guarded else FitScope.FULL_DATASET
    hour_mode = HourMode.CORRECTED if guarded else HourMode.PAPER_FAITHFUL
    fit_source = train_part if guarded else data
    with _stage("preprocessing"):
        train_ready, test_ready = _preprocess(
            train_part, test_part, fit_source, scope, hour_mode
        )

    with _stage("model training"):
        model = boosting.train(train_ready, spec.model)

    with _stage("evaluation"):
        scores = boosting.predict_proba(model, test_ready.features)
        report = metrics.compute_report(test_ready.labels, scores, spec.threshold)

    with _stage("leakage detection"):
        leakage = detect_leakage(train_ready, test_ready, scope)

    provenance_counts = Counter(p.kind for p in test_ready.provenance)
    return ScenarioResult(
        scenario=spec,
        metrics=report,
        leakage=leakage,
        train_class_counts=_class_counts(train_ready),
        test_class_counts=_class_counts(test_ready),
        test_provenance_counts={
            k: provenance_counts.get(k, 0) for k in ("original", "duplicate", "synthetic")
        },
        wall_time=time.perf_counter() - start,
        data_fingerprint=fingerprint,
        test_labels=tuple(int(v) for v in test_ready.labels),
        test_scores=tuple(float(v) for v in scores),
    )


def recompute_report(result: ScenarioResult) -> metrics.MetricsReport:
    """Rebuild the metrics from the persisted labels, scores, threshold."""
    return metrics.compute_report(
        np.array(result.test_labels),
        np.array(result.test_scores),
        result.scenario.threshold,
    )


@dataclass(frozen=True)
class ComparisonReport:
    """Side-by-side metric view over scenario results.

    metric_deltas holds (minuend - subtrahend) per metric for every
    ordered pair of results; inflation is the subset where a pre-split
    scenario is measured against a post-split one. Scenarios listed in
    leaky_outperforming_clean beat every Clean scenario on f1 while
    carrying a Leaky verdict.
    """

    names: tuple[str, ...]
    table: tuple[dict, ...]
    metric_deltas: tuple[dict, ...]
    inflation: tuple[dict, ...]
    leaky_outperforming_clean: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "table": list(self.table),
            "metric_deltas": list(self.metric_deltas),
            "inflation": list(self.inflation),
            "leaky_outperforming_clean": list(self.leaky_outperforming_clean),
            "convention": "positive-class metrics (not macro-averaged)",
        }


def compare_scenarios(results: list[ScenarioResult]) -> ComparisonReport:
    """Tabulate metrics across results and quantify placement inflation.

    All results must come from the same source dataset (by fingerprint)
    and the same split seed; anything else is not a like-for-like
    comparison and is refused.
    """
    if len(results) < 2:
        raise ValueError("comparison needs at least two results")
    fingerprints = {r.data_fingerprint for r in results}
    if len(fingerprints) != 1:
        raise ValueError("results come from different source datasets")
    seeds = {r.scenario.split.seed for r in results}
    if len(seeds) != 1:
        raise ValueError("results use different split seeds")

    table = []
    for r in results:
        row = {"name": r.scenario.name, "placement": r.scenario.placement.value}
        row.update({k: getattr(r.metrics, k) for k in METRIC_KEYS})
        row["verdict"] = r.leakage.verdict.value
        table.append(row)

    deltas = []
    for i, a in enumerate(results):
        for j, b in enumerate(results):
            if i == j:
                continue
            deltas.append(
                {
                    "minuend": a.scenario.name,
                    "minuend_index": i,
                    "subtrahend": b.scenario.name,
                    "subtrahend_index": j,
                    "deltas": {
                        k: getattr(a.metrics, k) - getattr(b.metrics, k)
                        for k in METRIC_KEYS
                    },
                }
            )
    inflation = tuple(
        d
        for d in deltas
        if results[d["minuend_index"]].scenario.placement
        == Placement.SAMPLING_BEFORE_SPLIT
        and results[d["subtrahend_index"]].scenario.placement
        == Placement.SAMPLING_AFTER_SPLIT
    )

    clean_f1 = [
        r.metrics.f1 for r in results if r.leakage.verdict == Verdict.CLEAN
    ]
    flagged = tuple(
        r.scenario.name
        for r in results
        if r.leakage.verdict == Verdict.LEAKY
        and clean_f1
        and r.metrics.f1 > max(clean_f1)
    )

    return ComparisonReport(
        names=tuple(r.scenario.name for r in results),
        table=tuple(table),
        metric_deltas=tuple(deltas),
        inflation=inflation,
        leaky_outperforming_clean=flagged,
    )
