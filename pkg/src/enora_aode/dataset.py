"""Tabular classification datasets: loading, discretization, folds and masks.

Cells are stored in a float matrix with ``NaN`` marking a missing value. For
nominal attributes a cell holds the index of its label in
``AttributeSpec.values``; ``Dataset.codes`` exposes the same matrix as
integers with ``MISSING`` (-1) for absent cells.
"""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

MISSING = -1


class DatasetError(ValueError):
    """Base class for dataset loading and validation failures."""


class ParseError(DatasetError):
    pass


class SchemaError(DatasetError):
    pass


class EmptyDatasetError(DatasetError):
    pass


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    kind: str = "nominal"
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in ("nominal", "numeric"):
            raise SchemaError(f"unknown attribute kind {self.kind!r}")
        if self.kind == "nominal":
            if not self.values:
                raise SchemaError(f"nominal attribute {self.name!r} has no values")
            if len(set(self.values)) != len(self.values):
                raise SchemaError(f"nominal attribute {self.name!r} has duplicate values")
        object.__setattr__(self, "values", tuple(self.values))

    @property
    def is_nominal(self) -> bool:
        return self.kind == "nominal"

    @property
    def cardinality(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable table of predictive attributes plus a nominal class column.

    ``row_ids`` identify rows of the originally loaded table and survive
    subsetting, so pipeline stages can be audited for fold leakage. ``cuts``
    maps an attribute index to the cut points used to discretize it.
    """

    attributes: tuple
    class_spec: AttributeSpec
    X: np.ndarray
    y: np.ndarray
    row_ids: np.ndarray = None
    cuts: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        attrs = tuple(self.attributes)
        X = np.array(self.X, dtype=float, copy=True).reshape(len(self.y), len(attrs))
        y = np.array(self.y, dtype=np.int64, copy=True)
        ids = np.arange(len(y)) if self.row_ids is None else np.array(self.row_ids, dtype=np.int64)
        if not self.class_spec.is_nominal:
            raise SchemaError("class attribute must be nominal")
        if self.class_spec.cardinality < 2:
            raise SchemaError("class attribute needs at least two values")
        if len(y) and (y.min() < 0 or y.max() >= self.class_spec.cardinality):
            raise SchemaError("class index out of range")
        for j, spec in enumerate(attrs):
            if spec.is_nominal:
                col = X[:, j]
                seen = col[~np.isnan(col)]
                if seen.size and (seen.min() < 0 or seen.max() >= spec.cardinality
                                  or np.any(seen != np.floor(seen))):
                    raise SchemaError(f"attribute {spec.name!r} holds an invalid value index")
        for arr in (X, y, ids):
            arr.setflags(write=False)
        object.__setattr__(self, "attributes", attrs)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "row_ids", ids)

    @property
    def n_attributes(self) -> int:
        return len(self.attributes)

    @property
    def n_instances(self) -> int:
        return len(self.y)

    @property
    def n_classes(self) -> int:
        return self.class_spec.cardinality

    @property
    def is_nominal(self) -> bool:
        return all(a.is_nominal for a in self.attributes)

    @property
    def cardinalities(self) -> np.ndarray:
        return np.array([a.cardinality for a in self.attributes], dtype=np.int64)

    @property
    def codes(self) -> np.ndarray:
        """Integer cell matrix with ``MISSING`` for absent values."""
        cached = self.__dict__.get("_codes")
        if cached is None:
            if not self.is_nominal:
                raise SchemaError("dataset has numeric attributes; discretize first")
            cached = np.where(np.isnan(self.X), MISSING, np.nan_to_num(self.X)).astype(np.int64)
            cached.setflags(write=False)
            self.__dict__["_codes"] = cached
        return cached

    def subset(self, index) -> "Dataset":
        index = np.asarray(index)
        return replace(self, X=self.X[index], y=self.y[index], row_ids=self.row_ids[index])

    def iter_blocks(self, size: int = 4096) -> Iterator[tuple]:
        """Yield ``(codes, y, row_ids)`` blocks covering each row exactly once."""
        codes = self.codes
        for start in range(0, self.n_instances, size):
            stop = start + size
            yield codes[start:stop], self.y[start:stop], self.row_ids[start:stop]


@dataclass(frozen=True, eq=False)
class FoldPlan:
    k: int
    assignments: np.ndarray

    def test_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)


class FeatureMask:
    """Non-empty selection of attribute columns."""

    __slots__ = ("bits", "_key")

    def __init__(self, bits):
        if isinstance(bits, str):
            bits = [c == "1" for c in bits]
        bits = np.array(bits, dtype=bool).ravel()
        if not bits.any():
            raise ValueError("feature mask must select at least one attribute")
        bits.setflags(write=False)
        self.bits = bits
        self._key = None

    @classmethod
    def ones(cls, n: int) -> "FeatureMask":
        return cls(np.ones(n, dtype=bool))

    @classmethod
    def from_indices(cls, n: int, indices) -> "FeatureMask":
        bits = np.zeros(n, dtype=bool)
        bits[list(indices)] = True
        return cls(bits)

    @property
    def cardinality(self) -> int:
        return int(self.bits.sum())

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    @property
    def key(self) -> bytes:
        if self._key is None:
            self._key = np.packbits(self.bits).tobytes() + len(self.bits).to_bytes(4, "little")
        return self._key

    def __len__(self):
        return len(self.bits)

    def __eq__(self, other):
        return isinstance(other, FeatureMask) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __str__(self):
        return "".join("1" if b else "0" for b in self.bits)

    def __repr__(self):
        return f"FeatureMask('{self}')"


# -- loading -----------------------------------------------------------------

def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def _build(name, header, columns, class_col, missing_token, declared=None):
    """Assemble a Dataset from raw string columns; drops missing-class rows."""
    keep = [i for i, c in enumerate(columns[class_col]) if c != missing_token]
    if not keep:
        raise EmptyDatasetError(f"{name}: no rows with a known class")
    specs, cells = [], []
    for j, head in enumerate(header):
        col = [columns[j][i] for i in keep]
        if declared is not None:
            spec = declared[j]
        else:
            present = [c for c in col if c != missing_token]
            if j != class_col and present and all(_is_number(c) for c in present):
                spec = AttributeSpec(head, "numeric")
            else:
                spec = AttributeSpec(head, "nominal", tuple(dict.fromkeys(present)) or ("?",))
        if spec.is_nominal:
            lookup = {v: i for i, v in enumerate(spec.values)}
            values = []
            for c in col:
                if c == missing_token:
                    values.append(np.nan)
                elif c in lookup:
                    values.append(lookup[c])
                else:
                    raise SchemaError(f"{name}: value {c!r} not declared for attribute {head!r}")
        else:
            values = [np.nan if c == missing_token else float(c) for c in col]
        specs.append(spec)
        cells.append(values)
    class_spec = specs[class_col]
    y = np.array(cells[class_col], dtype=float)
    attrs = [s for j, s in enumerate(specs) if j != class_col]
    X = np.array([c for j, c in enumerate(cells) if j != class_col], dtype=float).T
    X = X.reshape(len(keep), len(attrs))
    return Dataset(tuple(attrs), class_spec, X, y.astype(np.int64), name=name)


def load_csv(path, class_column: Optional[str] = None, missing_token: str = "?") -> Dataset:
    """Read a headed CSV file; the class is the last column unless named."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, skipinitialspace=True)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyDatasetError(f"{path}: file is empty") from None
        rows = []
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{reader.line_num}: expected {len(header)} fields, "
                                 f"got {len(row)}")
            rows.append([c.strip() for c in row])
    if class_column is None:
        class_col = len(header) - 1
    elif class_column in header:
        class_col = header.index(class_column)
    else:
        raise SchemaError(f"{path}: class column {class_column!r} not in header")
    if not rows:
        raise EmptyDatasetError(f"{path}: no data rows")
    columns = list(zip(*rows))
    return _build(path.stem, header, columns, class_col, missing_token)


_ARFF_TOKEN = re.compile(r"""\s*('(?:[^'\\]|\\.)*'|"(?:[^"\\]|\\.)*"|[^,{}\s][^,{}]*?)\s*(?:,|$)""")


def _unquote(token: str) -> str:
    token = token.strip()
    if len(token) >= 2 and token[0] == token[-1] and token[0] in "'\"":
        return re.sub(r"\\(.)", r"\1", token[1:-1])
    return token


def _split_arff(text: str) -> list:
    out, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _ARFF_TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"cannot tokenize {text!r}")
        out.append(_unquote(m.group(1)))
        pos = m.end()
    return out


def load_arff(path, class_attribute: Optional[str] = None) -> Dataset:
    """Read a dense ARFF file (nominal and numeric attributes only)."""
    path = Path(path)
    header, specs, rows = [], [], []
    in_data = False
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("%"):
                continue
            if in_data:
                if line.startswith("{"):
                    raise ParseError(f"{path}:{lineno}: sparse ARFF data is not supported")
                cells = _split_arff(line)
                if len(cells) != len(specs):
                    raise ParseError(f"{path}:{lineno}: expected {len(specs)} values, "
                                     f"got {len(cells)}")
                rows.append(cells)
                continue
            lower = line.lower()
            if lower.startswith("@relation"):
                continue
            if lower.startswith("@attribute"):
                rest = line[len("@attribute"):].strip()
                m = re.match(r"""('(?:[^'\\]|\\.)*'|"(?:[^"\\]|\\.)*"|\S+)\s+(.*)$""", rest)
                if not m:
                    raise ParseError(f"{path}:{lineno}: malformed @attribute")
                name, kind = _unquote(m.group(1)), m.group(2).strip()
                if kind.startswith("{"):
                    if not kind.endswith("}"):
                        raise ParseError(f"{path}:{lineno}: unterminated nominal list")
                    specs.append(AttributeSpec(name, "nominal", _split_arff(kind[1:-1])))
                elif kind.lower() in ("numeric", "real", "integer"):
                    specs.append(AttributeSpec(name, "numeric"))
                else:
                    raise SchemaError(f"{path}:{lineno}: unsupported attribute type {kind!r}")
                header.append(name)
                continue
            if lower.startswith("@data"):
                in_data = True
                continue
            raise ParseError(f"{path}:{lineno}: unexpected line {line!r}")
    if not in_data:
        raise ParseError(f"{path}: missing @data section")
    if not specs:
        raise SchemaError(f"{path}: no attributes declared")
    if class_attribute is None:
        class_col = len(specs) - 1
    elif class_attribute in header:
        class_col = header.index(class_attribute)
    else:
        raise SchemaError(f"{path}: class attribute {class_attribute!r} not declared")
    if not specs[class_col].is_nominal:
        raise SchemaError(f"{path}: class attribute must be nominal")
    if not rows:
        raise EmptyDatasetError(f"{path}: no data rows")
    columns = list(zip(*rows))
    return _build(path.stem, header, columns, class_col, "?", declared=specs)


def load_dataset(path, class_column: Optional[str] = None, missing_token: str = "?") -> Dataset:
    """Dispatch on file extension (``.arff`` or anything else as CSV)."""
    path = Path(path)
    if path.suffix.lower() == ".arff":
        return load_arff(path, class_attribute=class_column)
    return load_csv(path, class_column=class_column, missing_token=missing_token)


# -- discretization ----------------------------------------------------------

def _equal_frequency_cuts(values: np.ndarray, bins: int) -> np.ndarray:
    values = np.sort(values)
    n = len(values)
    # positions k where values[k-1] < values[k]; a cut may only sit there
    changes = np.flatnonzero(np.diff(values) > 0) + 1
    if not changes.size:
        return np.empty(0)
    cuts = []
    for b in range(1, bins):
        target = b * n / bins
        k = changes[np.argmin(np.abs(changes - target))]
        cuts.append((values[k - 1] + values[k]) / 2.0)
    return np.unique(np.array(cuts, dtype=float))


def _equal_width_cuts(values: np.ndarray, bins: int) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        return np.empty(0)
    width = (hi - lo) / bins
    return np.unique(lo + width * np.arange(1, bins))


def _bin_labels(cuts: np.ndarray) -> tuple:
    edges = ["-inf"] + [repr(float(c)) for c in cuts] + ["inf"]
    return tuple(f"({edges[i]}..{edges[i + 1]}]" for i in range(len(cuts) + 1))


def _apply_cuts(column: np.ndarray, cuts: np.ndarray) -> np.ndarray:
    out = np.searchsorted(cuts, column, side="left").astype(float)
    out[np.isnan(column)] = np.nan
    return out


def discretize(dataset: Dataset, strategy: str = "equal_frequency", bins: int = 10) -> Dataset:
    """Turn every numeric attribute nominal using cut points from ``dataset`` alone.

    A value ``v`` lands in the first bin whose upper cut is ``>= v``.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if strategy not in ("equal_frequency", "equal_width"):
        raise ValueError(f"unknown discretization strategy {strategy!r}")
    finder = _equal_frequency_cuts if strategy == "equal_frequency" else _equal_width_cuts
    X = np.array(dataset.X)
    attrs = list(dataset.attributes)
    cuts = dict(dataset.cuts)
    for j, spec in enumerate(attrs):
        if spec.is_nominal:
            continue
        col = X[:, j]
        present = col[~np.isnan(col)]
        c = finder(present, bins) if present.size and bins > 1 else np.empty(0)
        cuts[j] = c
        X[:, j] = _apply_cuts(col, c)
        attrs[j] = AttributeSpec(spec.name, "nominal", _bin_labels(c))
    return replace(dataset, attributes=tuple(attrs), X=X, cuts=cuts)


def apply_discretization(dataset: Dataset, reference: Dataset) -> Dataset:
    """Replay the cut points recorded on ``reference`` onto ``dataset``."""
    if dataset.n_attributes != reference.n_attributes:
        raise SchemaError("attribute count differs from the reference dataset")
    X = np.array(dataset.X)
    attrs = list(dataset.attributes)
    for j, c in reference.cuts.items():
        if dataset.attributes[j].is_nominal:
            raise SchemaError(f"attribute {attrs[j].name!r} is already nominal")
        X[:, j] = _apply_cuts(X[:, j], c)
        attrs[j] = reference.attributes[j]
    return replace(dataset, attributes=tuple(attrs), X=X, cuts=dict(reference.cuts))


# -- folds and masks -----------------------------------------------------------

def stratified_folds(dataset: Dataset, k: int, seed) -> FoldPlan:
    """Shuffle each class with a seeded stream and deal members round-robin."""
    n = dataset.n_instances
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of instances ({n})")
    rng = np.random.default_rng(seed)
    order = []
    for c in range(dataset.n_classes):
        members = np.flatnonzero(dataset.y == c)
        order.append(rng.permutation(members))
    order = np.concatenate(order)
    assignments = np.empty(n, dtype=np.int64)
    assignments[order] = np.arange(n) % k
    assignments.setflags(write=False)
    return FoldPlan(k, assignments)


def stratified_subsample(dataset: Dataset, cap: int, seed) -> np.ndarray:
    """Row indices of a class-proportional subsample of at most ``cap`` rows."""
    n = dataset.n_instances
    if n <= cap:
        return np.arange(n)
    rng = np.random.default_rng(seed)
    chosen = []
    counts = np.bincount(dataset.y, minlength=dataset.n_classes)
    quota = np.floor(counts * cap / n).astype(int)
    # hand leftover slots to the largest remainders
    rema = counts * cap / n - quota
    for c in np.argsort(-rema, kind="stable")[: cap - quota.sum()]:
        quota[c] += 1
    for c in range(dataset.n_classes):
        members = np.flatnonzero(dataset.y == c)
        chosen.append(rng.permutation(members)[: quota[c]])
    return np.sort(np.concatenate(chosen))


def apply_mask(dataset: Dataset, mask) -> Dataset:
    if not isinstance(mask, FeatureMask):
        mask = FeatureMask(mask)
    if len(mask) != dataset.n_attributes:
        raise ValueError(f"mask length {len(mask)} != {dataset.n_attributes} attributes")
    keep = mask.indices
    cuts = {int(np.searchsorted(keep, j)): c for j, c in dataset.cuts.items() if mask.bits[j]}
    return replace(dataset, attributes=tuple(dataset.attributes[j] for j in keep),
                   X=dataset.X[:, keep], cuts=cuts)


def dataset_from_codes(codes: Sequence, y: Sequence, cardinalities: Sequence[int],
                       n_classes: int, name: str = "") -> Dataset:
    """Build an all-nominal Dataset from integer codes (``MISSING`` allowed)."""
    codes = np.asarray(codes, dtype=float)
    codes = codes.reshape(len(y), len(cardinalities))
    X = np.where(codes < 0, np.nan, codes)
    attrs = tuple(AttributeSpec(f"a{j}", "nominal", tuple(str(v) for v in range(card)))
                  for j, card in enumerate(cardinalities))
    cls = AttributeSpec("class", "nominal", tuple(f"c{c}" for c in range(n_classes)))
    return Dataset(attrs, cls, X, np.asarray(y, dtype=np.int64), name=name)
