"""Metrics, outer cross-validation of select-then-classify, and comparisons."""
from __future__ import annotations

import time
import traceback
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .aode import fit, predict_proba
from .dataset import (Dataset, FeatureMask, apply_discretization, apply_mask, discretize,
                      load_dataset, stratified_folds)
from .moea import MoeaConfig, run_moea


@dataclass(frozen=True)
class PredictionRecord:
    truth: int
    distribution: tuple

    @property
    def predicted(self) -> int:
        # np.argmax returns the lowest index among ties
        return int(np.argmax(self.distribution))


def _as_arrays(records):
    if not len(records):
        raise ValueError("no prediction records")
    truth = np.array([r.truth for r in records], dtype=np.int64)
    dist = np.array([r.distribution for r in records], dtype=float)
    return truth, dist


def accuracy(records: Sequence[PredictionRecord]) -> float:
    truth, dist = _as_arrays(records)
    return float(np.mean(dist.argmax(axis=1) == truth))


def zero_one_loss(records: Sequence[PredictionRecord]) -> float:
    return 1.0 - accuracy(records)


def rmse(records: Sequence[PredictionRecord], n_classes: int) -> float:
    """Root of the squared probability error averaged over instances and classes."""
    truth, dist = _as_arrays(records)
    if dist.shape[1] != n_classes:
        raise ValueError(f"distributions have {dist.shape[1]} classes, expected {n_classes}")
    onehot = np.eye(n_classes)[truth]
    return float(np.sqrt(np.sum((dist - onehot) ** 2) / (len(truth) * n_classes)))


def make_records(truth, proba) -> List[PredictionRecord]:
    return [PredictionRecord(int(t), tuple(float(p) for p in row)) for t, row in zip(truth, proba)]


# -- cross-validation --------------------------------------------------------------

@dataclass(frozen=True)
class PipelineConfig:
    selector: str = "enora"
    classifier: str = "aode"
    m_threshold: int = 1
    bins: int = 10
    discretization: str = "equal_frequency"
    moea: MoeaConfig = field(default_factory=MoeaConfig)

    def __post_init__(self):
        if self.selector not in ("none", "enora", "nsga2"):
            raise ValueError(f"unknown selector {self.selector!r}")
        if self.classifier not in ("aode", "nb"):
            raise ValueError(f"unknown classifier {self.classifier!r}")

    def to_dict(self) -> dict:
        out = asdict(self)
        if self.selector == "none":
            out.pop("moea")
        return out


@dataclass
class FoldResult:
    fold: int
    n_test: int
    accuracy: float
    zero_one_loss: float
    rmse: float
    selected_mask: str
    n_selected: int
    select_seconds: float
    train_seconds: float
    test_seconds: float


@dataclass
class EvalReport:
    dataset: str
    n_instances: int
    n_attributes: int
    n_classes: int
    k: int
    seed: int
    config: dict
    per_fold: List[FoldResult]
    aggregate: dict

    @property
    def build_seconds(self) -> float:
        return self.aggregate["build_seconds"]


def _fold_seeds(seed: int, k: int):
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(k)]


def cross_validate_pipeline(dataset: Dataset, pipeline: PipelineConfig, k: int = 10,
                            seed: int = 0,
                            observer: Optional[Callable[[int, str, np.ndarray], None]] = None
                            ) -> EvalReport:
    """Outer k-fold CV of discretize -> select -> fit -> predict.

    Every stage before prediction sees the training split only. ``observer``
    is called as ``observer(fold, stage, row_ids)`` for stages ``discretize``,
    ``select``, ``fit`` and ``predict``.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    notify = observer or (lambda *a: None)
    plan = stratified_folds(dataset, k, seed)
    fold_seeds = _fold_seeds(seed, k)
    folds, truth_all, proba_all = [], [], []
    for f in range(k):
        train_raw = dataset.subset(plan.train_index(f))
        test_raw = dataset.subset(plan.test_index(f))
        notify(f, "discretize", train_raw.row_ids)
        train = discretize(train_raw, pipeline.discretization, pipeline.bins)
        test = apply_discretization(test_raw, train)

        t0 = time.perf_counter()
        if pipeline.selector == "none":
            mask = FeatureMask.ones(train.n_attributes)
        else:
            notify(f, "select", train.row_ids)
            cfg = MoeaConfig(pipeline.moea.population_size, pipeline.moea.generations,
                             pipeline.selector, pipeline.moea.slots, pipeline.moea.evaluator,
                             fold_seeds[f])
            mask = run_moea(train, cfg).selected
        t1 = time.perf_counter()
        notify(f, "fit", train.row_ids)
        model = fit(apply_mask(train, mask), pipeline.classifier, pipeline.m_threshold)
        t2 = time.perf_counter()
        notify(f, "predict", test.row_ids)
        proba = predict_proba(model, apply_mask(test, mask).codes)
        t3 = time.perf_counter()

        records = make_records(test.y, proba)
        acc = accuracy(records)
        folds.append(FoldResult(f, len(records), acc, 1.0 - acc,
                                rmse(records, dataset.n_classes), str(mask),
                                mask.cardinality, t1 - t0, t2 - t0, t3 - t2))
        truth_all.append(test.y)
        proba_all.append(proba)

    records = make_records(np.concatenate(truth_all), np.concatenate(proba_all))
    acc = accuracy(records)
    aggregate = {
        "accuracy": acc,
        "zero_one_loss": 1.0 - acc,
        "rmse": rmse(records, dataset.n_classes),
        "mean_selected": float(np.mean([r.n_selected for r in folds])),
        "build_seconds": float(sum(r.train_seconds for r in folds)),
        "test_seconds": float(sum(r.test_seconds for r in folds)),
    }
    return EvalReport(dataset.name, dataset.n_instances, dataset.n_attributes,
                      dataset.n_classes, k, seed, pipeline.to_dict(), folds, aggregate)


# -- win / tie / loss ----------------------------------------------------------------

@dataclass(frozen=True)
class WtlSummary:
    wins: int
    ties: int
    losses: int

    def __str__(self):
        return f"{self.wins}-{self.ties}-{self.losses}"


def win_tie_loss(metrics_a: Sequence[float], metrics_b: Sequence[float],
                 higher_is_better: bool = True, tie_tolerance: float = 0.0) -> WtlSummary:
    if len(metrics_a) != len(metrics_b):
        raise ValueError("metric lists differ in length")
    if tie_tolerance < 0:
        raise ValueError("tie_tolerance must be non-negative")
    w = t = l = 0
    for a, b in zip(metrics_a, metrics_b):
        if abs(a - b) <= tie_tolerance:
            t += 1
        elif (a > b) == higher_is_better:
            w += 1
        else:
            l += 1
    return WtlSummary(w, t, l)


# -- benchmark suite -----------------------------------------------------------------

@dataclass(frozen=True)
class SuiteEntry:
    name: str
    data: str
    class_column: Optional[str] = None
    missing_token: str = "?"


@dataclass
class SuiteRow:
    dataset: str
    instances: int = 0
    attributes: int = 0
    reduced_attributes: float = 0.0
    seconds: float = 0.0
    accuracy: float = float("nan")
    rmse: float = float("nan")
    error: str = ""
    report: Optional[EvalReport] = None


def benchmark_suite(entries: Sequence[SuiteEntry], pipeline: PipelineConfig, k: int = 10,
                    seed: int = 0) -> List[SuiteRow]:
    """One row per dataset; a failing dataset yields a row carrying its error."""
    rows = []
    for entry in entries:
        try:
            ds = load_dataset(entry.data, entry.class_column, entry.missing_token)
            rep = cross_validate_pipeline(ds, pipeline, k, seed)
        except Exception as exc:  # noqa: BLE001 - recorded in the row
            rows.append(SuiteRow(entry.name, error=f"{type(exc).__name__}: {exc}"))
            traceback.clear_frames(exc.__traceback__)
            continue
        rows.append(SuiteRow(entry.name, ds.n_instances, ds.n_attributes,
                             rep.aggregate["mean_selected"], rep.build_seconds,
                             100.0 * rep.aggregate["accuracy"], rep.aggregate["rmse"],
                             report=rep))
    return rows

