"""Frequency-table Bayesian classifiers: naive Bayes and AODE.

Both models are built from one pass over the training rows. AODE keeps the
class/attribute/attribute count table; for every attribute pair ``i < j`` the
block of ``v_i x v_j`` counts is stored once and read symmetrically.

Estimators (add-one smoothing throughout)::

    P(y, x_i=v)         = (F(y, i=v) + 1) / (K_i + C * v_i)
    P(x_j=w | y, x_i=v) = (F(y, i=v, j=w) + 1) / (F_ij(y, i=v) + v_j)
    P(y)                = (F(y) + 1) / (K + C)
    P(x_j=w | y)        = (F(y, j=w) + 1) / (F_j(y) + v_j)

``K_i`` counts rows where attribute ``i`` is present and ``F_ij(y, i=v)`` counts
class ``y`` rows with ``x_i = v`` where attribute ``j`` is present too.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import MISSING, AttributeSpec, Dataset, SchemaError

FORMAT_VERSION = 1
_DENSE_LIMIT = 4096


class FrequencyCube:
    """Class-conditional counts of single values and value pairs.

    Attribute values are flattened into one global index: value ``v`` of
    attribute ``i`` lives at ``offsets[i] + v``. Pair counts for ``i < j``
    occupy ``joint3[:, base[j] + (offsets[i] + v) * v_j + w]``, i.e. each
    attribute ``j`` owns one contiguous ``offsets[j] x v_j`` block holding
    every partner ``i < j``.
    """

    def __init__(self, cardinalities, n_classes: int, with_pairs: bool = True):
        self.cards = np.asarray(cardinalities, dtype=np.int64)
        self.n_classes = int(n_classes)
        self.n_attributes = len(self.cards)
        self.offsets = np.concatenate([[0], np.cumsum(self.cards)[:-1]]).astype(np.int64)
        self.n_values = int(self.cards.sum())
        block = self.offsets * self.cards
        self.base = np.concatenate([[0], np.cumsum(block)[:-1]]).astype(np.int64)
        self.n_pair_cells = int(block.sum())
        self.with_pairs = with_pairs
        self.class_counts = np.zeros(self.n_classes, dtype=np.int64)
        self.joint2 = np.zeros((self.n_classes, self.n_values), dtype=np.int64)
        self.joint3 = np.zeros((self.n_classes, self.n_pair_cells if with_pairs else 0),
                               dtype=np.int64)
        self.attr_counts = np.zeros(self.n_attributes, dtype=np.int64)
        self.pair_counts = np.zeros((self.n_attributes, self.n_attributes), dtype=np.int64)
        self.n_seen = 0
        self._pack = None

    @property
    def cell_count(self) -> int:
        return self.joint3.size + self.joint2.size + self.class_counts.size

    def _pack_index(self) -> np.ndarray:
        # flat positions in a V x V co-occurrence matrix, in packed-pair order
        if self._pack is None:
            parts = []
            V = self.n_values
            for j in range(self.n_attributes):
                rows = np.arange(self.offsets[j])
                cols = self.offsets[j] + np.arange(self.cards[j])
                parts.append((rows[:, None] * V + cols[None, :]).ravel())
            self._pack = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
        return self._pack

    def _one_hot(self, codes: np.ndarray) -> np.ndarray:
        B = codes.shape[0]
        onehot = np.zeros((B, self.n_values), dtype=np.float64)
        present = codes != MISSING
        r, c = np.nonzero(present)
        onehot[r, self.offsets[c] + codes[r, c]] = 1.0
        return onehot

    def accumulate(self, codes: np.ndarray, y: np.ndarray) -> None:
        """Add the counts of one block of rows."""
        codes = np.asarray(codes, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        if codes.shape[1] != self.n_attributes:
            raise ValueError("block width does not match the attribute count")
        self.n_seen += len(y)
        self.class_counts += np.bincount(y, minlength=self.n_classes)
        present = (codes != MISSING).astype(np.int64)
        self.attr_counts += present.sum(axis=0)
        self.pair_counts += present.T @ present
        onehot = self._one_hot(codes)
        for c in range(self.n_classes):
            rows = onehot[y == c]
            if not len(rows):
                continue
            self.joint2[c] += np.rint(rows.sum(axis=0)).astype(np.int64)
            if not self.with_pairs or not self.n_pair_cells:
                continue
            if self.n_values <= _DENSE_LIMIT:
                gram = rows.T @ rows
                self.joint3[c] += np.rint(gram.ravel()[self._pack_index()]).astype(np.int64)
            else:
                for j in range(1, self.n_attributes):
                    o, v = self.offsets[j], self.cards[j]
                    blk = rows[:, :o].T @ rows[:, o:o + v]
                    self.joint3[c, self.base[j]:self.base[j] + o * v] += \
                        np.rint(blk.ravel()).astype(np.int64)

    def merge(self, other: "FrequencyCube") -> "FrequencyCube":
        """Elementwise sum of two cubes built over the same schema."""
        if not np.array_equal(self.cards, other.cards) or self.n_classes != other.n_classes:
            raise ValueError("cannot merge cubes with different schemas")
        out = FrequencyCube(self.cards, self.n_classes, self.with_pairs and other.with_pairs)
        out.class_counts = self.class_counts + other.class_counts
        out.joint2 = self.joint2 + other.joint2
        if out.with_pairs:
            out.joint3 = self.joint3 + other.joint3
        out.attr_counts = self.attr_counts + other.attr_counts
        out.pair_counts = self.pair_counts + other.pair_counts
        out.n_seen = self.n_seen + other.n_seen
        return out

    def pair_index(self, i: int, v: int, j: int, w: int) -> int:
        if i == j:
            raise ValueError("pair index needs two distinct attributes")
        if i > j:
            i, v, j, w = j, w, i, v
        return int(self.base[j] + (self.offsets[i] + v) * self.cards[j] + w)

    def count3(self, y: int, i: int, v: int, j: int, w: int) -> int:
        return int(self.joint3[y, self.pair_index(i, v, j, w)])

    def count2(self, y: int, i: int, v: int) -> int:
        return int(self.joint2[y, self.offsets[i] + v])

    def freeze(self) -> None:
        for arr in (self.class_counts, self.joint2, self.joint3, self.attr_counts,
                    self.pair_counts):
            arr.setflags(write=False)


def build_cube(train: Dataset, with_pairs: bool = True, block_size: int = 4096) -> FrequencyCube:
    if not train.is_nominal:
        raise SchemaError("classifier needs nominal attributes; discretize first")
    if train.n_instances < 1:
        raise ValueError("training set is empty")
    cube = FrequencyCube(train.cardinalities, train.n_classes, with_pairs)
    for codes, y, _ in train.iter_blocks(block_size):
        cube.accumulate(codes, y)
    cube.freeze()
    return cube


@dataclass(frozen=True, eq=False)
class NbModel:
    cube: FrequencyCube
    attributes: tuple
    class_spec: AttributeSpec

    @property
    def n_classes(self) -> int:
        return self.cube.n_classes

    @property
    def n_attributes(self) -> int:
        return self.cube.n_attributes


@dataclass(frozen=True, eq=False)
class AodeModel:
    cube: FrequencyCube
    attributes: tuple
    class_spec: AttributeSpec
    m_threshold: int = 1
    smoothing: float = 1.0

    @property
    def n_classes(self) -> int:
        return self.cube.n_classes

    @property
    def n_attributes(self) -> int:
        return self.cube.n_attributes

    @property
    def value_totals(self) -> np.ndarray:
        """F(x_i = v) summed over classes, indexed by global value."""
        cached = self.__dict__.get("_value_totals")
        if cached is None:
            cached = self.cube.joint2.sum(axis=0)
            self.__dict__["_value_totals"] = cached
        return cached

    @property
    def parent_bases(self) -> np.ndarray:
        """``F_ij(y, i=v)`` as an array ``(C, V, n)``; zero where ``j == i``."""
        cached = self.__dict__.get("_parent_bases")
        if cached is None:
            cube = self.cube
            C, V, n = cube.n_classes, cube.n_values, cube.n_attributes
            cached = np.zeros((C, V, n), dtype=np.int64)
            for a in range(1, n):
                o, va = cube.offsets[a], cube.cards[a]
                blk = cube.joint3[:, cube.base[a]:cube.base[a] + o * va].reshape(C, o, va)
                # parent i < a, child a: sum over the child's values
                cached[:, :o, a] = blk.sum(axis=2)
                # parent a, child j < a: sum over each child's value span
                red = np.add.reduceat(blk, cube.offsets[:a], axis=1)
                cached[:, o:o + va, :a] = red.transpose(0, 2, 1)
            cached.setflags(write=False)
            self.__dict__["_parent_bases"] = cached
        return cached


def fit_nb(train: Dataset) -> NbModel:
    cube = build_cube(train, with_pairs=False)
    return NbModel(cube, train.attributes, train.class_spec)


def fit_aode(train: Dataset, m_threshold: int = 1) -> AodeModel:
    """Count every class/value/value triple in a single pass over ``train``."""
    if m_threshold < 1:
        raise ValueError("m_threshold must be a positive integer")
    cube = build_cube(train, with_pairs=True)
    return AodeModel(cube, train.attributes, train.class_spec, int(m_threshold))


# -- point estimates -----------------------------------------------------------

def smoothed_class_joint(model: AodeModel, y: int, i: int, v: int) -> float:
    cube = model.cube
    num = cube.count2(y, i, v) + 1
    den = cube.attr_counts[i] + cube.n_classes * cube.cards[i]
    return float(num / den)


def smoothed_conditional(model: AodeModel, j: int, w: int, y: int, i: int, v: int) -> float:
    if i == j:
        raise ValueError("child and parent attribute must differ")
    cube = model.cube
    num = cube.count3(y, i, v, j, w) + 1
    den = model.parent_bases[y, cube.offsets[i] + v, j] + cube.cards[j]
    return float(num / den)


# -- batched log-domain terms ----------------------------------------------------

@dataclass(frozen=True, eq=False)
class NbTerms:
    """Per-instance log factors of naive Bayes: prior ``(C,)``, cond ``(T, C, n)``."""

    prior: np.ndarray
    cond: np.ndarray


@dataclass(frozen=True, eq=False)
class AodeTerms:
    """Per-instance log factors of every SPODE.

    ``parent[t, c, i]`` is ``log P(y=c, x_i)`` (``-inf`` when ``i`` cannot be a
    parent), ``cond[t, c, i, j]`` is ``log P(x_j | y=c, x_i)`` with zeros for
    ``j == i`` and for missing cells, and ``eligible[t, i]`` flags parents.
    """

    parent: np.ndarray
    cond: np.ndarray
    eligible: np.ndarray
    fallback: NbTerms


def _check_codes(codes, n_attributes) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64)
    if codes.ndim == 1:
        codes = codes[None, :]
    if codes.shape[1] != n_attributes:
        raise ValueError(f"instance length {codes.shape[1]} != {n_attributes} attributes")
    return codes


def nb_terms(model, codes) -> NbTerms:
    cube = model.cube
    codes = _check_codes(codes, cube.n_attributes)
    present = codes != MISSING
    g = cube.offsets[None, :] + np.where(present, codes, 0)
    prior = np.log(cube.class_counts + 1.0) - np.log(cube.n_seen + cube.n_classes)
    # F_j(y): class-y rows where attribute j is present
    attr_class = np.add.reduceat(cube.joint2, cube.offsets, axis=1) if cube.n_values else \
        np.zeros((cube.n_classes, 0))
    num = np.log(cube.joint2[:, g] + 1.0)                      # (C, T, n)
    den = np.log(attr_class + cube.cards[None, :])[:, None, :]  # (C, 1, n)
    cond = np.where(present[None], num - den, 0.0).transpose(1, 0, 2)
    return NbTerms(prior, np.ascontiguousarray(cond))


def aode_terms(model: AodeModel, codes) -> AodeTerms:
    cube = model.cube
    codes = _check_codes(codes, cube.n_attributes)
    T, n = codes.shape
    C = cube.n_classes
    present = codes != MISSING
    safe = np.where(present, codes, 0)
    g = cube.offsets[None, :] + safe                                   # (T, n)
    eligible = present & (model.value_totals[g] >= model.m_threshold)

    parent_den = np.log(cube.attr_counts + C * cube.cards)             # (n,)
    parent = np.log(cube.joint2[:, g] + 1.0) - parent_den[None, None, :]  # (C, T, n)
    parent = np.where(eligible[None], parent, -np.inf).transpose(1, 0, 2)

    # packed index of F(y, x_i, x_j) for every ordered pair
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    lo_attr, hi_attr = np.minimum(ii, jj), np.maximum(ii, jj)
    lo_val = np.where(ii < jj, safe[:, ii], safe[:, jj])              # (T, n, n)
    hi_val = np.where(ii < jj, safe[:, jj], safe[:, ii])
    idx = cube.base[hi_attr] + (cube.offsets[lo_attr] + lo_val) * cube.cards[hi_attr] + hi_val
    idx = np.where(ii == jj, 0, idx)
    counts = cube.joint3[:, idx] if cube.n_pair_cells else np.zeros((C, T, n, n))
    bases = model.parent_bases[:, g, :]                                # (C, T, n, n)
    cond = np.log(counts + 1.0) - np.log(bases + cube.cards[None, None, None, :])
    valid = present[:, :, None] & present[:, None, :] & (ii != jj)[None]
    cond = np.where(valid[None], cond, 0.0).transpose(1, 0, 2, 3)
    return AodeTerms(np.ascontiguousarray(parent), np.ascontiguousarray(cond), eligible,
                     nb_terms(model, codes))


def _normalize(logits: np.ndarray) -> np.ndarray:
    logits = logits - logits.max(axis=1, keepdims=True)
    p = np.exp(logits)
    return p / p.sum(axis=1, keepdims=True)


def nb_log_scores(terms: NbTerms, mask=None) -> np.ndarray:
    cond = terms.cond if mask is None else terms.cond[:, :, mask]
    return terms.prior[None, :] + cond.sum(axis=2)


def aode_log_scores(terms: AodeTerms, mask=None) -> np.ndarray:
    """Unnormalized log class scores ``(T, C)`` using only attributes in ``mask``."""
    if mask is None:
        parent, cond, eligible = terms.parent, terms.cond, terms.eligible
    else:
        mask = np.flatnonzero(np.asarray(mask)) if np.asarray(mask).dtype == bool else mask
        parent = terms.parent[:, :, mask]
        cond = terms.cond[:, :, mask][:, :, :, mask]
        eligible = terms.eligible[:, mask]
    spode = parent + cond.sum(axis=3)                                  # (T, C, |P|)
    n_par = eligible.sum(axis=1)
    top = spode.max(axis=2, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        scores = np.log(np.exp(spode - top).sum(axis=2)) + top[:, :, 0]
        scores = scores - np.log(np.maximum(n_par, 1))[:, None]
    empty = n_par == 0
    if empty.any():
        scores[empty] = nb_log_scores(terms.fallback, mask)[empty]
    return scores


def predict_proba_nb(model: NbModel, codes, mask=None) -> np.ndarray:
    return _normalize(nb_log_scores(nb_terms(model, codes), mask))


def predict_proba_aode(model: AodeModel, codes, mask=None, batch: int = 512) -> np.ndarray:
    codes = _check_codes(codes, model.n_attributes)
    out = [_normalize(aode_log_scores(aode_terms(model, codes[s:s + batch]), mask))
           for s in range(0, len(codes), batch)]
    return np.concatenate(out) if out else np.empty((0, model.n_classes))


def predict_nb(model: NbModel, instance) -> np.ndarray:
    """Class distribution for a single instance (value indices, ``MISSING`` allowed)."""
    return predict_proba_nb(model, _check_codes(instance, model.n_attributes))[0]


def predict_aode(model: AodeModel, instance) -> np.ndarray:
    """Class distribution for a single instance (value indices, ``MISSING`` allowed)."""
    return predict_proba_aode(model, _check_codes(instance, model.n_attributes))[0]


def predict_proba(model, codes) -> np.ndarray:
    if isinstance(model, AodeModel):
        return predict_proba_aode(model, codes)
    return predict_proba_nb(model, codes)


def fit(train: Dataset, algo: str = "aode", m_threshold: int = 1):
    if algo == "aode":
        return fit_aode(train, m_threshold)
    if algo == "nb":
        return fit_nb(train)
    raise ValueError(f"unknown classifier {algo!r}")


# -- serialization ----------------------------------------------------------------

def _spec_dict(spec: AttributeSpec) -> dict:
    return {"name": spec.name, "kind": spec.kind, "values": list(spec.values)}


def model_to_dict(model) -> dict:
    cube = model.cube
    out = {
        "format": "enora-aode-model",
        "version": FORMAT_VERSION,
        "type": "aode" if isinstance(model, AodeModel) else "nb",
        "attributes": [_spec_dict(a) for a in model.attributes],
        "class": _spec_dict(model.class_spec),
        "n_seen": int(cube.n_seen),
        "class_counts": cube.class_counts.tolist(),
        "joint2": cube.joint2.tolist(),
        "attr_counts": cube.attr_counts.tolist(),
        "pair_counts": cube.pair_counts.tolist(),
    }
    if isinstance(model, AodeModel):
        out["joint3"] = cube.joint3.tolist()
        out["m_threshold"] = model.m_threshold
        out["smoothing"] = model.smoothing
    return out


def model_from_dict(data: dict):
    if data.get("format") != "enora-aode-model":
        raise ValueError("not a serialized model")
    if data.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {data.get('version')!r}")
    attrs = tuple(AttributeSpec(a["name"], a["kind"], tuple(a["values"]))
                  for a in data["attributes"])
    cls = AttributeSpec(data["class"]["name"], "nominal", tuple(data["class"]["values"]))
    is_aode = data["type"] == "aode"
    cube = FrequencyCube([a.cardinality for a in attrs], cls.cardinality, with_pairs=is_aode)
    cube.n_seen = int(data["n_seen"])
    cube.class_counts = np.array(data["class_counts"], dtype=np.int64)
    cube.joint2 = np.array(data["joint2"], dtype=np.int64).reshape(cube.joint2.shape)
    cube.attr_counts = np.array(data["attr_counts"], dtype=np.int64)
    cube.pair_counts = np.array(data["pair_counts"], dtype=np.int64).reshape(
        cube.pair_counts.shape)
    if is_aode:
        cube.joint3 = np.array(data["joint3"], dtype=np.int64).reshape(cube.joint3.shape)
        cube.freeze()
        return AodeModel(cube, attrs, cls, int(data["m_threshold"]), float(data["smoothing"]))
    cube.freeze()
    return NbModel(cube, attrs, cls)


def save_model(model, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)), encoding="utf-8")


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
