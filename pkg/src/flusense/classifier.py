"""Binary kernel SVM trained by SMO, plus confusion-matrix metrics.

Training solves the standard C-SVM dual

    max_a  sum(a) - 1/2 a^T Q a,   Q_ij = y_i y_j K(x_i, x_j)
    s.t.   0 <= a_i <= C,  sum(a_i y_i) = 0

two variables at a time, picking the maximal violating pair each step
(first index wins ties, so the result does not depend on hash order).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Label
from .features import DocVector, FeatureSpace, tfidf_transform, to_matrix

MODEL_FORMAT = "flusense-svm/1"


class SvmError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, msg: str, iterations: int, gap: float):
        super().__init__(f"{msg} (iterations={iterations}, kkt_gap={gap:.3g})")
        self.iterations = iterations
        self.gap = gap


@dataclass(frozen=True)
class Kernel:
    name: str = "rbf"
    gamma: float = 1.0

    def __post_init__(self):
        if self.name not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel {self.name!r}")
        if self.name == "rbf" and not self.gamma > 0:
            raise ValueError("rbf gamma must be positive")

    def matrix(self, A, B) -> np.ndarray:
        """Gram matrix between the rows of A and B (dense or sparse)."""
        dot = A @ B.T
        dot = dot.toarray() if sp.issparse(dot) else np.asarray(dot, dtype=float)
        if self.name == "linear":
            return dot
        sa = _row_sqnorms(A)
        sb = _row_sqnorms(B)
        d2 = np.maximum(sa[:, None] + sb[None, :] - 2.0 * dot, 0.0)
        return np.exp(-self.gamma * d2)

    def __call__(self, x, z) -> float:
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        if self.name == "linear":
            return float(x @ z)
        return float(np.exp(-self.gamma * np.sum((x - z) ** 2)))


def _row_sqnorms(A) -> np.ndarray:
    if sp.issparse(A):
        return np.asarray(A.multiply(A).sum(axis=1)).ravel()
    A = np.asarray(A, dtype=float)
    return np.einsum("ij,ij->i", A, A)


@dataclass
class SvmModel:
    support_vectors: object  # (n_sv, d) dense array or CSR matrix
    dual_coef: np.ndarray    # alpha_i * y_i
    bias: float
    kernel: Kernel
    C: float
    n_iter: int = 0
    objective_trace: list[float] = field(default_factory=list, repr=False)

    @property
    def dim(self) -> int:
        return self.support_vectors.shape[1]

    def decision_function(self, X) -> np.ndarray:
        X = _as_2d(X)
        if X.shape[1] != self.dim:
            raise SvmError(f"dimension mismatch: model has {self.dim}, input has {X.shape[1]}")
        if self.dual_coef.size == 0:
            return np.full(X.shape[0], self.bias)
        return self.kernel.matrix(X, self.support_vectors) @ self.dual_coef + self.bias

    def decision_value(self, x) -> float:
        return float(self.decision_function(x)[0])

    def predict(self, X) -> np.ndarray:
        return np.where(self.decision_function(X) >= 0, 1, -1)

    def save(self, path: str | Path) -> None:
        sv = self.support_vectors
        sv = sp.csr_matrix(sv)
        rows = [
            {int(j): float(v) for j, v in zip(sv.indices[sv.indptr[i]:sv.indptr[i + 1]],
                                             sv.data[sv.indptr[i]:sv.indptr[i + 1]])}
            for i in range(sv.shape[0])
        ]
        payload = {
            "format": MODEL_FORMAT,
            "kernel": self.kernel.name,
            "gamma": self.kernel.gamma,
            "C": self.C,
            "bias": self.bias,
            "dim": sv.shape[1],
            "dual_coef": [float(a) for a in self.dual_coef],
            "support_vectors": [{str(k): v for k, v in sorted(r.items())} for r in rows],
        }
        Path(path).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "SvmModel":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format") != MODEL_FORMAT:
            raise SvmError(f"{path}: unsupported model format {payload.get('format')!r}")
        rows = [{int(k): v for k, v in r.items()} for r in payload["support_vectors"]]
        return cls(
            support_vectors=to_matrix(rows, payload["dim"]),
            dual_coef=np.asarray(payload["dual_coef"], dtype=float),
            bias=float(payload["bias"]),
            kernel=Kernel(payload["kernel"], float(payload["gamma"])),
            C=float(payload["C"]),
        )


def _as_2d(X):
    if sp.issparse(X):
        return X.tocsr()
    X = np.asarray(X, dtype=float)
    return X.reshape(1, -1) if X.ndim == 1 else X


def train_svm(X, y: Sequence[int], kernel: Kernel | None = None, C: float = 1.0,
              tol: float = 1e-3, max_iter: int = 100_000,
              track_objective: bool = False) -> SvmModel:
    """Train a C-SVM with SMO. ``y`` holds +1/-1 labels; ``X`` is dense or sparse."""
    X = _as_2d(X)
    y = np.asarray(y, dtype=float)
    if X.shape[0] != y.size:
        raise SvmError(f"{X.shape[0]} vectors but {y.size} labels")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise SvmError("labels must be +1 or -1")
    if np.all(y == y[0]):
        raise SvmError("training set has a single class")
    if not C > 0:
        raise SvmError("C must be positive")
    kernel = kernel or Kernel("rbf", 1.0 / X.shape[1])

    K = kernel.matrix(X, X)
    Q = K * np.outer(y, y)
    qdiag = np.diag(Q).copy()
    n = y.size
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 1/2 a^T Q a - sum(a)
    tau = 1e-12
    trace = [0.0] if track_objective else []

    it = 0
    gap = np.inf
    while True:
        yg = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        i = int(np.argmax(np.where(up, yg, -np.inf)))
        j = int(np.argmin(np.where(low, yg, np.inf)))
        gap = yg[i] - yg[j]
        if gap < tol:
            break
        if it >= max_iter:
            raise ConvergenceError("SMO did not converge", it, float(gap))
        it += 1

        # analytic two-variable step along a_i += y_i t, a_j -= y_j t
        eta = max(qdiag[i] + qdiag[j] - 2.0 * y[i] * y[j] * Q[i, j], tau)
        t = gap / eta
        # box limits on t
        t_i = C - alpha[i] if y[i] > 0 else alpha[i]
        t_j = alpha[j] if y[j] > 0 else C - alpha[j]
        t = min(t, t_i, t_j)
        new_i = alpha[i] + y[i] * t
        new_j = alpha[j] - y[j] * t
        # land exactly on the box edge when a limit is hit
        if t == t_i:
            new_i = C if y[i] > 0 else 0.0
        if t == t_j:
            new_j = 0.0 if y[j] > 0 else C
        # an unclipped step can stop a rounding error short of the edge
        new_i, new_j = _snap(new_i, C), _snap(new_j, C)
        d_i, d_j = new_i - alpha[i], new_j - alpha[j]
        alpha[i], alpha[j] = new_i, new_j
        grad += Q[:, i] * d_i + Q[:, j] * d_j
        if track_objective:
            trace.append(float(alpha.sum() - 0.5 * alpha @ (Q @ alpha)))

    bias = _bias(alpha, y, grad, C)
    sv = alpha > 0
    idx = np.flatnonzero(sv)
    support = X[idx]
    return SvmModel(support_vectors=support, dual_coef=alpha[idx] * y[idx], bias=bias,
                    kernel=kernel, C=C, n_iter=it, objective_trace=trace)


def _snap(a: float, C: float) -> float:
    eps = 1e-12 * C
    if a < eps:
        return 0.0
    if a > C - eps:
        return C
    return a


def _bias(alpha, y, grad, C) -> float:
    yg = -y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(np.mean(yg[free]))
    # midpoint of the feasible interval for b
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    lo = np.max(yg[up]) if up.any() else np.min(yg)
    hi = np.min(yg[low]) if low.any() else np.max(yg)
    return float((lo + hi) / 2.0)


def dual_objective(model: SvmModel) -> float:
    """Dual objective value of a trained model."""
    K = model.kernel.matrix(model.support_vectors, model.support_vectors)
    a = model.dual_coef
    return float(np.sum(np.abs(a)) - 0.5 * a @ K @ a)


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float | None:
        return (self.tp + self.tn) / self.total if self.total else None

    @property
    def precision(self) -> float | None:
        d = self.tp + self.fp
        return self.tp / d if d else None

    @property
    def recall(self) -> float | None:
        d = self.tp + self.fn
        return self.tp / d if d else None

    def to_json(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
                "accuracy": self.accuracy, "precision": self.precision, "recall": self.recall}


def confusion(y_true: Sequence[int], y_pred: Sequence[int]) -> EvalReport:
    t = np.asarray(y_true) > 0
    p = np.asarray(y_pred) > 0
    return EvalReport(tp=int(np.sum(t & p)), fp=int(np.sum(~t & p)),
                      tn=int(np.sum(~t & ~p)), fn=int(np.sum(t & ~p)))


def evaluate(model: SvmModel, X, y: Sequence[int]) -> EvalReport:
    y = np.asarray(y)
    if y.size == 0:
        raise SvmError("empty test set")
    return confusion(y, model.predict(X))


def label_corpus(model: SvmModel, posts, space: FeatureSpace):
    """Label tokenized posts Influenza (+1) or Noise (-1). Returns new Post objects."""
    posts = list(posts)
    if not posts:
        return []
    vecs: list[DocVector] = [tfidf_transform(p.tokens, space) for p in posts]
    pred = model.predict(to_matrix(vecs, len(space.selected)))
    return [replace(p, label=Label.INFLUENZA if s > 0 else Label.NOISE) for p, s in zip(posts, pred)]
