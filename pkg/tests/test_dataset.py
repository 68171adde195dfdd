import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from enora_aode.dataset import (MISSING, AttributeSpec, EmptyDatasetError, FeatureMask,
                                ParseError, SchemaError, apply_discretization, apply_mask,
                                dataset_from_codes, discretize, load_arff, load_csv,
                                load_dataset, stratified_folds, stratified_subsample)

from conftest import random_nominal, write

ARFF = """% toy
@relation toy
@attribute outlook {sunny, 'over cast', rainy}
@attribute temp numeric
@attribute play {yes,no}
@data
sunny,85,no
'over cast',?,yes
rainy,70,yes
"""


# -- CSV -------------------------------------------------------------------------

def test_csv_missing_cell_counted(tmp_path):
    ds = load_csv(write(tmp_path, "a.csv", "a,b,class\n0,1,yes\n1,?,no\n"))
    assert ds.n_instances == 2
    assert np.isnan(ds.X[1, 1])
    assert np.isnan(ds.X).sum() == 1


def test_csv_ragged_row_reports_line(tmp_path):
    p = write(tmp_path, "a.csv", "a,b,class\n0,1,yes\n0,1\n")
    with pytest.raises(ParseError, match=":3:"):
        load_csv(p)


def test_csv_missing_class_rows_dropped(tmp_path):
    full = load_csv(write(tmp_path, "a.csv", "a,class\nx,yes\ny,no\nx,no\n"))
    dropped = load_csv(write(tmp_path, "b.csv", "a,class\nx,yes\ny,no\nx,?\n"))
    assert dropped.n_instances == full.n_instances - 1


def test_csv_value_order_is_first_appearance(tmp_path):
    ds = load_csv(write(tmp_path, "a.csv", "a,class\nz,no\na,yes\nm,no\n"))
    assert ds.attributes[0].values == ("z", "a", "m")
    assert ds.class_spec.values == ("no", "yes")


def test_csv_numeric_detection_and_class_column(tmp_path):
    p = write(tmp_path, "a.csv", 'cls,x,"quoted, name"\nyes,1.5,a\nno,?,b\nyes,3,a\n')
    ds = load_csv(p, class_column="cls")
    assert [a.kind for a in ds.attributes] == ["numeric", "nominal"]
    assert ds.attributes[1].name == "quoted, name"
    assert np.isnan(ds.X[1, 0])
    with pytest.raises(SchemaError):
        load_csv(p, class_column="nope")


def test_csv_custom_missing_token(tmp_path):
    ds = load_csv(write(tmp_path, "a.csv", "a,class\nNA,yes\nx,no\n"), missing_token="NA")
    assert ds.codes[0, 0] == MISSING


def test_csv_no_usable_rows(tmp_path):
    with pytest.raises(EmptyDatasetError):
        load_csv(write(tmp_path, "a.csv", "a,class\nx,?\n"))
    with pytest.raises(EmptyDatasetError):
        load_csv(write(tmp_path, "b.csv", "a,class\n"))


# -- ARFF ------------------------------------------------------------------------

def test_arff_declared_order_and_missing(tmp_path):
    ds = load_arff(write(tmp_path, "t.arff", ARFF))
    assert ds.class_spec.values == ("yes", "no")
    assert ds.y.tolist() == [1, 0, 0]
    assert ds.attributes[0].values == ("sunny", "over cast", "rainy")
    assert ds.attributes[1].kind == "numeric"
    assert np.isnan(ds.X[1, 1])


def test_arff_class_index_zero(tmp_path):
    text = "@relation r\n@attribute a {x}\n@attribute c {yes,no}\n@data\nx,yes\nx,no\n"
    assert load_arff(write(tmp_path, "t.arff", text)).y[0] == 0


def test_arff_undeclared_value(tmp_path):
    text = "@relation r\n@attribute a {x}\n@attribute c {yes,no}\n@data\nx,maybe\n"
    with pytest.raises(SchemaError):
        load_arff(write(tmp_path, "t.arff", text))


def test_arff_without_data_section(tmp_path):
    with pytest.raises(ParseError):
        load_arff(write(tmp_path, "t.arff", "@relation r\n@attribute c {yes,no}\n"))


def test_arff_sparse_rejected(tmp_path):
    text = "@relation r\n@attribute a {x,y}\n@attribute c {yes,no}\n@data\n{0 y, 1 no}\n"
    with pytest.raises(ParseError):
        load_arff(write(tmp_path, "t.arff", text))


def test_arff_class_attribute_option(tmp_path):
    ds = load_arff(write(tmp_path, "t.arff", ARFF), class_attribute="outlook")
    assert ds.n_classes == 3
    assert [a.name for a in ds.attributes] == ["temp", "play"]


def test_load_dataset_dispatch(tmp_path):
    assert load_dataset(write(tmp_path, "t.arff", ARFF)).n_instances == 3
    with pytest.raises(ValueError):
        load_dataset(write(tmp_path, "t.xlsx", ""))


# -- schema invariants -------------------------------------------------------------

def test_attribute_spec_rejects_duplicates():
    with pytest.raises(SchemaError):
        AttributeSpec("a", "nominal", ("x", "x"))
    with pytest.raises(SchemaError):
        AttributeSpec("a", "nominal", ())


def test_dataset_rejects_out_of_range_codes():
    with pytest.raises(SchemaError):
        dataset_from_codes([[2]], [0], [2], 2)
    with pytest.raises(SchemaError):
        dataset_from_codes([[0]], [0], [2], 1)


# -- discretization ------------------------------------------------------------------

def _numeric(values, y=None):
    values = np.asarray(values, dtype=float)
    y = np.arange(len(values)) % 2 if y is None else np.asarray(y)
    from enora_aode.dataset import Dataset
    return Dataset((AttributeSpec("x", "numeric"),),
                   AttributeSpec("c", "nominal", ("a", "b")), values[:, None], y)


def test_equal_frequency_median_split():
    ds = discretize(_numeric([1, 2, 3, 4]), "equal_frequency", 2)
    assert ds.codes[:, 0].tolist() == [0, 0, 1, 1]


@pytest.mark.parametrize("strategy", ["equal_frequency", "equal_width"])
def test_constant_column_single_bin(strategy):
    ds = discretize(_numeric([5, 5, 5, 5]), strategy, 4)
    assert set(ds.codes[:, 0]) == {0}
    assert ds.attributes[0].cardinality == 1


@pytest.mark.parametrize("strategy", ["equal_frequency", "equal_width"])
def test_single_bin(strategy):
    ds = discretize(_numeric([1, 7, np.nan, 3]), strategy, 1)
    assert ds.codes[:, 0].tolist() == [0, 0, MISSING, 0]


def test_equal_width_edges():
    ds = discretize(_numeric([0, 1, 2, 3, 4, 10]), "equal_width", 2)
    assert ds.codes[:, 0].tolist() == [0, 0, 0, 0, 0, 1]


def test_tied_values_keep_requested_bins():
    # heavy ties at the low end must not swallow the quantile cut points
    values = [0] * 10 + list(range(1, 31))
    ds = discretize(_numeric(values), "equal_frequency", 4)
    assert ds.attributes[0].cardinality == 4


@settings(max_examples=50, deadline=None)
@given(st.lists(st.one_of(st.floats(-1e6, 1e6), st.just(float("nan"))), min_size=2,
                max_size=60),
       st.integers(1, 12), st.sampled_from(["equal_frequency", "equal_width"]))
def test_discretize_properties(values, bins, strategy):
    ds = _numeric(values)
    out = discretize(ds, strategy, bins)
    codes = out.codes[:, 0]
    assert out.attributes[0].cardinality <= bins
    assert np.array_equal(codes == MISSING, np.isnan(ds.X[:, 0]))
    # ordering is preserved: larger value never lands in a lower bin
    present = ~np.isnan(ds.X[:, 0])
    order = np.argsort(ds.X[present, 0], kind="stable")
    assert np.all(np.diff(codes[present][order]) >= 0)
    # replaying the recorded cuts on the same split is exact
    replay = apply_discretization(ds, out)
    assert np.array_equal(replay.codes, out.codes)


def test_replay_on_held_out_rows():
    train = discretize(_numeric([1, 2, 3, 4, 5, 6]), "equal_frequency", 3)
    test = apply_discretization(_numeric([-100, 3.5, 100]), train)
    assert test.codes[:, 0].tolist() == [0, 1, 2]
    assert test.attributes == train.attributes


# -- folds ---------------------------------------------------------------------------

def test_folds_one_per_class_each():
    ds = dataset_from_codes(np.zeros((10, 1)), [0] * 5 + [1] * 5, [1], 2)
    plan = stratified_folds(ds, 5, seed=3)
    for f in range(5):
        assert sorted(ds.y[plan.test_index(f)].tolist()) == [0, 1]


def test_folds_small_class_spread():
    y = [0] * 3 + [1] * 30
    ds = dataset_from_codes(np.zeros((33, 1)), y, [1], 2)
    plan = stratified_folds(ds, 10, seed=0)
    folds_of_minority = plan.assignments[:3]
    assert len(set(folds_of_minority.tolist())) == 3


def test_folds_deterministic_and_argument_errors():
    ds = random_nominal(np.random.default_rng(0), n_rows=40)
    a = stratified_folds(ds, 7, seed=11).assignments
    b = stratified_folds(ds, 7, seed=11).assignments
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        stratified_folds(ds, 41, seed=0)
    with pytest.raises(ValueError):
        stratified_folds(ds, 1, seed=0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 12))
def test_fold_invariants(seed, k):
    rng = np.random.default_rng(seed)
    ds = random_nominal(rng, n_rows=int(rng.integers(k, 150)))
    plan = stratified_folds(ds, k, seed)
    tests = [plan.test_index(f) for f in range(k)]
    joined = np.sort(np.concatenate(tests))
    assert np.array_equal(joined, np.arange(ds.n_instances))  # union, disjoint
    sizes = plan.sizes()
    assert sizes.max() - sizes.min() <= 1
    for c in range(ds.n_classes):
        per_fold = [np.sum(ds.y[t] == c) for t in tests]
        assert max(per_fold) - min(per_fold) <= 1
    for f in range(k):
        assert np.intersect1d(plan.train_index(f), tests[f]).size == 0


def test_stratified_subsample_cap_and_proportions():
    y = [0] * 300 + [1] * 100
    ds = dataset_from_codes(np.zeros((400, 1)), y, [1], 2)
    idx = stratified_subsample(ds, 100, seed=1)
    assert len(idx) == 100
    assert np.sum(ds.y[idx] == 0) == 75
    assert np.array_equal(stratified_subsample(ds, 1000, seed=1), np.arange(400))


# -- masks ---------------------------------------------------------------------------

def test_mask_identity_and_selection():
    ds = random_nominal(np.random.default_rng(1), n_rows=20, n_attrs=3)
    same = apply_mask(ds, FeatureMask.ones(3))
    assert np.array_equal(same.codes, ds.codes) and same.attributes == ds.attributes
    sub = apply_mask(ds, FeatureMask([1, 0, 1]))
    assert [a.name for a in sub.attributes] == ["a0", "a2"]
    assert np.array_equal(sub.codes, ds.codes[:, [0, 2]])
    assert np.array_equal(sub.y, ds.y)


def test_empty_mask_rejected():
    with pytest.raises(ValueError):
        FeatureMask([0, 0, 0])
    ds = random_nominal(np.random.default_rng(1), n_rows=20, n_attrs=3)
    with pytest.raises(ValueError):
        apply_mask(ds, [0, 0, 0])
    with pytest.raises(ValueError):
        apply_mask(ds, [1, 0])


def test_mask_basics():
    m = FeatureMask.from_indices(5, [0, 3])
    assert str(m) == "10010"
    assert m.cardinality == 2 and m.indices.tolist() == [0, 3]
    assert m == FeatureMask([1, 0, 0, 1, 0]) and hash(m) == hash(FeatureMask("10010"))
    assert m.key != FeatureMask([1, 0, 0, 1, 0, 0]).key


def test_mask_cuts_follow_columns():
    from enora_aode.dataset import Dataset
    X = np.array([[1.0, 0, 5.0], [2.0, 1, 6.0], [3.0, 0, 7.0], [4.0, 1, 8.0]])
    ds = Dataset((AttributeSpec("p", "numeric"), AttributeSpec("q", "nominal", ("a", "b")),
                  AttributeSpec("r", "numeric")),
                 AttributeSpec("c", "nominal", ("a", "b")), X, np.array([0, 1, 0, 1]))
    disc = discretize(ds, bins=2)
    sub = apply_mask(disc, FeatureMask([0, 1, 1]))
    assert set(sub.cuts) == {1}
    assert np.array_equal(sub.cuts[1], disc.cuts[2])


def test_iter_blocks_covers_rows_once():
    ds = random_nominal(np.random.default_rng(2), n_rows=103)
    seen = np.concatenate([ids for _, _, ids in ds.iter_blocks(10)])
    assert np.array_equal(np.sort(seen), ds.row_ids)
