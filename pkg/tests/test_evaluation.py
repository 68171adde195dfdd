import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from enora_aode.dataset import dataset_from_codes, load_dataset
from enora_aode.evaluation import (PipelineConfig, PredictionRecord, SuiteEntry, WtlSummary,
                                   accuracy, benchmark_suite, cross_validate_pipeline,
                                   make_records, rmse, win_tie_loss, zero_one_loss)
from enora_aode.moea import EvaluatorConfig, MoeaConfig
from enora_aode.report import (compare_table, read_results, report_record, strip_times,
                               suite_csv, suite_table)

from conftest import random_nominal

# accuracy columns of the comparison table for seven datasets
# (breast, german, diabetes, heart-c, hepatitis, lymph, waveform)
OURS = [72.73, 73.0, 75.78, 83.17, 87.09, 85.81, 84.1]
AODE = [72.53, 76.42, 76.37, 82.48, 84.92, 86.25, 84.87]
WAODE = [71.91, 76.38, 75.83, 82.61, 84.14, 84.16, 83.85]

SMALL = MoeaConfig(population_size=6, generations=3, evaluator=EvaluatorConfig(inner_folds=3))


def rec(truth, dist):
    return PredictionRecord(truth, tuple(dist))


# -- metrics ---------------------------------------------------------------------

def test_accuracy_examples():
    hits = [rec(0, (0.9, 0.1))] * 3 + [rec(1, (0.9, 0.1))]
    assert accuracy(hits) == 0.75
    assert zero_one_loss(hits) == 0.25
    assert accuracy([rec(1, (0.2, 0.8))] * 4) == 1.0
    assert zero_one_loss([rec(1, (0.2, 0.8))] * 4) == 0.0
    assert accuracy([rec(0, (0.2, 0.8))] * 4) == 0.0
    with pytest.raises(ValueError):
        accuracy([])
    with pytest.raises(ValueError):
        zero_one_loss([])


def test_predicted_is_lowest_argmax():
    assert rec(0, (0.4, 0.4, 0.2)).predicted == 0
    assert rec(0, (0.1, 0.45, 0.45)).predicted == 1


def test_rmse_examples():
    assert rmse([rec(0, (1.0, 0.0)), rec(1, (0.0, 1.0))], 2) == 0.0
    assert rmse([rec(0, (0.5, 0.5)), rec(1, (0.5, 0.5))], 2) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        rmse([rec(0, (0.5, 0.5))], 3)
    with pytest.raises(ValueError):
        rmse([], 2)


record_sets = st.integers(2, 5).flatmap(lambda c: st.lists(
    st.tuples(st.integers(0, c - 1),
              st.lists(st.floats(0.0, 1.0), min_size=c, max_size=c)
              .filter(lambda v: sum(v) > 0)
              .map(lambda v: tuple(x / sum(v) for x in v))),
    min_size=1, max_size=40).map(lambda rows: (c, [rec(t, d) for t, d in rows])))


@settings(max_examples=200, deadline=None)
@given(record_sets, st.randoms(use_true_random=False))
def test_metric_identities(data, rnd):
    c, records = data
    assert zero_one_loss(records) == 1.0 - accuracy(records)
    value = rmse(records, c)
    assert 0.0 <= value <= 1.0
    shuffled = list(records)
    rnd.shuffle(shuffled)
    assert accuracy(shuffled) == accuracy(records)
    assert rmse(shuffled, c) == pytest.approx(value, abs=1e-15)


def test_make_records_round_trip():
    recs = make_records([0, 1], np.array([[0.7, 0.3], [0.1, 0.9]]))
    assert [r.predicted for r in recs] == [0, 1]


# -- win / tie / loss ---------------------------------------------------------------

def test_wtl_examples():
    assert str(win_tie_loss([73, 80], [73, 79])) == "1-1-0"
    assert win_tie_loss([73, 80], [70, 90], tie_tolerance=100) == WtlSummary(0, 2, 0)
    assert win_tie_loss([0.2, 0.3], [0.25, 0.1], higher_is_better=False) == WtlSummary(1, 0, 1)
    with pytest.raises(ValueError):
        win_tie_loss([1], [1, 2])
    with pytest.raises(ValueError):
        win_tie_loss([1], [1], tie_tolerance=-1)


def test_wtl_recomputed_from_comparison_table():
    assert str(win_tie_loss(OURS, WAODE)) == "5-0-2"
    # W L L W W L L: three wins, four losses, no exact ties
    assert str(win_tie_loss(OURS, AODE)) == "3-0-4"


@given(st.lists(st.tuples(st.floats(0, 100), st.floats(0, 100)), max_size=30),
       st.floats(0, 10))
def test_wtl_totals(pairs, tol):
    s = win_tie_loss([a for a, _ in pairs], [b for _, b in pairs], tie_tolerance=tol)
    assert s.wins + s.ties + s.losses == len(pairs)


# -- cross validation -------------------------------------------------------------------

@pytest.fixture
def mixed():
    """Numeric plus nominal attributes, one informative numeric column."""
    from enora_aode.dataset import AttributeSpec, Dataset
    rng = np.random.default_rng(0)
    n = 120
    y = rng.integers(0, 2, size=n)
    X = np.column_stack([y * 2.0 + rng.normal(0, 0.7, n), rng.integers(0, 3, n),
                         rng.normal(0, 1, n), rng.integers(0, 2, n)]).astype(float)
    X[rng.random(X.shape) < 0.05] = np.nan
    attrs = (AttributeSpec("sig", "numeric"), AttributeSpec("n1", "nominal", ("a", "b", "c")),
             AttributeSpec("n2", "numeric"), AttributeSpec("n3", "nominal", ("x", "z")))
    return Dataset(attrs, AttributeSpec("cls", "nominal", ("no", "yes")), X, y, name="mixed")


def test_no_selection_uses_all_attributes(mixed):
    rep = cross_validate_pipeline(mixed, PipelineConfig(selector="none"), k=5, seed=1)
    assert all(f.selected_mask == "1111" and f.select_seconds < 0.01 for f in rep.per_fold)
    assert rep.aggregate["mean_selected"] == 4


def test_no_selection_ignores_moea_config(mixed):
    a = cross_validate_pipeline(mixed, PipelineConfig(selector="none"), k=5, seed=1)
    b = cross_validate_pipeline(mixed, PipelineConfig(selector="none", moea=SMALL), k=5, seed=1)
    assert strip_times(report_record(a, {})) == strip_times(report_record(b, {}))


@pytest.mark.parametrize("selector", ["none", "enora", "nsga2"])
def test_report_invariants(mixed, selector):
    rep = cross_validate_pipeline(mixed, PipelineConfig(selector=selector, moea=SMALL), 4, 0)
    assert len(rep.per_fold) == 4
    assert sum(f.n_test for f in rep.per_fold) == mixed.n_instances
    for f in rep.per_fold + [None]:
        acc = rep.aggregate["accuracy"] if f is None else f.accuracy
        loss = rep.aggregate["zero_one_loss"] if f is None else f.zero_one_loss
        err = rep.aggregate["rmse"] if f is None else f.rmse
        assert loss == 1.0 - acc and 0.0 <= err <= 1.0
    pooled = sum(f.accuracy * f.n_test for f in rep.per_fold) / mixed.n_instances
    assert rep.aggregate["accuracy"] == pytest.approx(pooled, abs=1e-12)
    assert rep.aggregate["build_seconds"] == pytest.approx(
        sum(f.train_seconds for f in rep.per_fold))


def test_pipeline_is_deterministic(mixed):
    cfg = PipelineConfig(moea=SMALL)
    a = cross_validate_pipeline(mixed, cfg, 4, 9)
    b = cross_validate_pipeline(mixed, cfg, 4, 9)
    assert json.dumps(strip_times(report_record(a, {})), sort_keys=True) == \
        json.dumps(strip_times(report_record(b, {})), sort_keys=True)


def test_no_test_rows_reach_training(mixed):
    from enora_aode.dataset import stratified_folds
    k, seed = 5, 3
    seen = {}

    def observer(fold, stage, row_ids):
        seen.setdefault(fold, {}).setdefault(stage, set()).update(row_ids.tolist())

    cross_validate_pipeline(mixed, PipelineConfig(moea=SMALL), k, seed, observer=observer)
    plan = stratified_folds(mixed, k, seed)
    for f in range(k):
        test_ids = set(mixed.row_ids[plan.test_index(f)].tolist())
        for stage in ("discretize", "select", "fit"):
            assert seen[f][stage].isdisjoint(test_ids), (f, stage)
        assert seen[f]["predict"] == test_ids


def test_held_out_values_do_not_move_cut_points(mixed):
    from dataclasses import replace
    from enora_aode.dataset import stratified_folds
    plan = stratified_folds(mixed, 4, 0)
    shifted = np.array(mixed.X)
    shifted[plan.test_index(0), 0] *= 1000.0
    other = replace(mixed, X=shifted)
    cfg = PipelineConfig(selector="none")
    a = cross_validate_pipeline(mixed, cfg, 4, 0).per_fold[0]
    b = cross_validate_pipeline(other, cfg, 4, 0).per_fold[0]
    # fold 0 trains on identical rows, so only its test codes can differ
    assert a.selected_mask == b.selected_mask
    from enora_aode.dataset import discretize
    ref = discretize(mixed.subset(plan.train_index(0)))
    alt = discretize(other.subset(plan.train_index(0)))
    assert all(np.array_equal(ref.cuts[j], alt.cuts[j]) for j in ref.cuts)


def test_pipeline_validation(mixed):
    with pytest.raises(ValueError):
        PipelineConfig(selector="random")
    with pytest.raises(ValueError):
        PipelineConfig(classifier="svm")
    with pytest.raises(ValueError):
        cross_validate_pipeline(mixed, PipelineConfig(selector="none"), k=1)


# -- suite and reports ------------------------------------------------------------------------

def test_suite_rows_and_errors(tmp_path, mixed):
    good = tmp_path / "good.csv"
    ds = random_nominal(np.random.default_rng(0), n_rows=60, n_attrs=3)
    lines = ["a0,a1,a2,class"] + [",".join(str(v) if v >= 0 else "?" for v in row) + f",c{c}"
                                  for row, c in zip(ds.codes, ds.y)]
    good.write_text("\n".join(lines) + "\n")
    entries = [SuiteEntry("good", str(good)), SuiteEntry("bad", str(tmp_path / "missing.csv"))]
    rows = benchmark_suite(entries, PipelineConfig(selector="none"), k=3)
    assert [r.dataset for r in rows] == ["good", "bad"]
    assert rows[0].error == "" and 0 <= rows[0].accuracy <= 100
    assert rows[1].error and np.isnan(rows[1].accuracy)
    table = suite_table(rows)
    assert "bad" in table and "Error" in table
    assert suite_csv(rows).splitlines()[0].startswith("dataset,")
    assert benchmark_suite([], PipelineConfig()) == []


def test_read_results(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("dataset,accuracy,rmse\nbreast,72.7,0.44\nfail,,\n")
    assert read_results(p) == {"breast": 72.7}
    assert read_results(p, "rmse") == {"breast": 0.44}
    p.write_text("")
    with pytest.raises(ValueError):
        read_results(p)
    assert "+0.2" in compare_table({"a": 1.2}, {"a": 1.0}, ["a"])
