"""Information-gain term ranking and TF-IDF document vectors."""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

log = logging.getLogger(__name__)

FEATURES_FORMAT = "flusense-features/1"
DEFAULT_GRID = (250, 500, 1000, 2000, 4000)

DocVector = Mapping[int, float]


def _entropy2(p: np.ndarray) -> np.ndarray:
    """Binary entropy in bits, elementwise, with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(np.where(p > 0, p * np.log2(p), 0.0) + np.where(q > 0, q * np.log2(q), 0.0))
    return h


def _ig_from_counts(n_pos_with, n_with, n_pos, n) -> np.ndarray:
    n_pos_with = np.asarray(n_pos_with, dtype=float)
    n_with = np.asarray(n_with, dtype=float)
    n_without = n - n_with
    with np.errstate(divide="ignore", invalid="ignore"):
        h_with = _entropy2(np.where(n_with > 0, n_pos_with / n_with, 0.0))
        h_without = _entropy2(np.where(n_without > 0, (n_pos - n_pos_with) / n_without, 0.0))
    ig = _entropy2(n_pos / n) - (n_with / n) * h_with - (n_without / n) * h_without
    return np.maximum(ig, 0.0)


def ig_score(presence: Sequence[int | bool], labels: Sequence[int | bool]) -> float:
    """Information gain (bits) of a binary presence feature about a binary label."""
    x = np.asarray(presence, dtype=bool)
    y = np.asarray(labels)
    if x.size == 0:
        raise ValueError("information gain needs at least one document")
    if x.size != y.size:
        raise ValueError("presence and labels differ in length")
    y = y > 0
    return float(_ig_from_counts(np.sum(x & y), np.sum(x), np.sum(y), x.size))


@dataclass(frozen=True)
class FeatureSpace:
    vocabulary: tuple[str, ...]
    doc_freq: tuple[int, ...]
    n_docs: int
    ig: tuple[float, ...]
    selected: tuple[str, ...]
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.selected)})
        df = dict(zip(self.vocabulary, self.doc_freq))
        object.__setattr__(self, "_df", df)

    @property
    def index(self) -> dict[str, int]:
        return self._index

    def df(self, token: str) -> int:
        return self._df[token]  # type: ignore[attr-defined]

    def ranking(self) -> list[str]:
        """Whole vocabulary by descending IG, ties by token."""
        order = sorted(range(len(self.vocabulary)), key=lambda i: (-self.ig[i], self.vocabulary[i]))
        return [self.vocabulary[i] for i in order]

    def with_k(self, k: int) -> "FeatureSpace":
        if k < 1:
            raise ValueError("k must be >= 1")
        if k > len(self.vocabulary):
            log.warning("k=%d exceeds vocabulary size %d; selecting all terms", k, len(self.vocabulary))
        return replace(self, selected=tuple(self.ranking()[:k]))

    def save(self, path: str | Path) -> None:
        sel_rank = {t: r for r, t in enumerate(self.selected)}
        lines = [FEATURES_FORMAT, f"n_docs\t{self.n_docs}", f"n_selected\t{len(self.selected)}",
                 "token\tdoc_freq\tig\tselected_rank"]
        for t, d, g in zip(self.vocabulary, self.doc_freq, self.ig):
            lines.append(f"{t}\t{d}\t{g:.17g}\t{sel_rank.get(t, -1)}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "FeatureSpace":
        lines = Path(path).read_text(encoding="utf-8").split("\n")
        if lines[0] != FEATURES_FORMAT:
            raise ValueError(f"{path}: unsupported feature-space format {lines[0]!r}")
        n_docs = int(lines[1].split("\t")[1])
        n_sel = int(lines[2].split("\t")[1])
        vocab, dfs, igs = [], [], []
        selected = [None] * n_sel
        for line in lines[4:]:
            if not line:
                continue
            t, d, g, r = line.split("\t")
            vocab.append(t)
            dfs.append(int(d))
            igs.append(float(g))
            if int(r) >= 0:
                selected[int(r)] = t
        return cls(tuple(vocab), tuple(dfs), n_docs, tuple(igs), tuple(selected))


def fit_feature_space(docs: Sequence[Sequence[str]], labels: Sequence[int], k: int) -> FeatureSpace:
    """Score every term by IG on binary presence and keep the top ``k``."""
    if len(docs) == 0:
        raise ValueError("cannot fit a feature space on an empty corpus")
    if len(docs) != len(labels):
        raise ValueError("docs and labels differ in length")
    y = np.asarray(labels) > 0
    df = Counter()
    df_pos = Counter()
    for doc, pos in zip(docs, y):
        terms = set(doc)
        df.update(terms)
        if pos:
            df_pos.update(terms)
    vocab = tuple(sorted(df))
    n_with = np.array([df[t] for t in vocab], dtype=float)
    n_pos_with = np.array([df_pos[t] for t in vocab], dtype=float)
    ig = _ig_from_counts(n_pos_with, n_with, float(y.sum()), float(len(docs)))
    space = FeatureSpace(vocab, tuple(int(v) for v in n_with), len(docs), tuple(float(g) for g in ig), ())
    return space.with_k(k)


def idf(doc_freq: int, n_docs: int) -> float:
    return math.log((1 + n_docs) / (1 + doc_freq)) + 1.0


def tfidf_transform(doc: Sequence[str], space: FeatureSpace) -> dict[int, float]:
    """Raw-count TF times smoothed IDF over the selected terms, L2-normalised."""
    index = space.index
    tf = Counter(t for t in doc if t in index)
    weights = {index[t]: c * idf(space.df(t), space.n_docs) for t, c in tf.items()}
    norm = math.sqrt(sum(w * w for w in weights.values()))
    if norm == 0:
        return {}
    return {i: w / norm for i, w in sorted(weights.items())}


def to_matrix(vectors: Sequence[DocVector], dim: int) -> sp.csr_matrix:
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for v in vectors:
        for i, w in sorted(v.items()):
            indices.append(i)
            data.append(w)
        indptr.append(len(indices))
    return sp.csr_matrix((np.asarray(data, dtype=float), np.asarray(indices, dtype=np.int64),
                          np.asarray(indptr, dtype=np.int64)), shape=(len(vectors), dim))


def stratified_split(labels: Sequence[int], test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Index arrays (train, test), each sorted, stratified by label."""
    rng = np.random.default_rng(seed)
    y = np.asarray(labels) > 0
    train, test = [], []
    for cls in (False, True):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.size)]
        n_test = int(round(test_fraction * idx.size))
        test.extend(idx[:n_test])
        train.extend(idx[n_test:])
    return np.sort(np.asarray(train, dtype=int)), np.sort(np.asarray(test, dtype=int))


@dataclass
class SweepResult:
    best_k: int
    table: list[dict]  # one row per grid value: k, n_selected, train_accuracy, test_accuracy
    space: FeatureSpace
    model: object
    report: object  # EvalReport of the chosen model on the test split
    train_idx: np.ndarray
    test_idx: np.ndarray


def sweep_dimensions(docs: Sequence[Sequence[str]], labels: Sequence[int], grid: Sequence[int] = DEFAULT_GRID,
                     seed: int = 0, test_fraction: float = 0.2, C: float = 1.0,
                     kernel: str = "rbf", gamma: float | None = None, tol: float = 1e-3) -> SweepResult:
    """Train an SVM for each feature count in ``grid`` and keep the best by held-out accuracy.

    Ties go to the smaller k. IG is fitted on the training split only.
    """
    from .classifier import Kernel, evaluate, train_svm

    if not grid:
        raise ValueError("empty dimension grid")
    y = np.where(np.asarray(labels) > 0, 1, -1)
    train_idx, test_idx = stratified_split(y, test_fraction, seed)
    if len(set(y[train_idx])) < 2 or len(set(y[test_idx])) < 2:
        raise ValueError("train/test split is missing a class")
    train_docs = [docs[i] for i in train_idx]
    base = fit_feature_space(train_docs, y[train_idx], 1)

    table = []
    best = None
    for k in grid:
        space = base.with_k(k)
        dim = len(space.selected)
        Xtr = to_matrix([tfidf_transform(docs[i], space) for i in train_idx], dim)
        Xte = to_matrix([tfidf_transform(docs[i], space) for i in test_idx], dim)
        kern = Kernel(kernel, gamma if gamma is not None else 1.0 / dim)
        model = train_svm(Xtr, y[train_idx], kern, C=C, tol=tol)
        train_rep = evaluate(model, Xtr, y[train_idx])
        test_rep = evaluate(model, Xte, y[test_idx])
        table.append({"k": k, "n_selected": dim, "train_accuracy": train_rep.accuracy,
                      "test_accuracy": test_rep.accuracy})
        if best is None or test_rep.accuracy > best[0]:
            best = (test_rep.accuracy, k, space, model, test_rep)
    _, best_k, space, model, rep = best
    return SweepResult(best_k, table, space, model, rep, train_idx, test_idx)
