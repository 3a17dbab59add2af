"""Skip-gram word embeddings with negative sampling, similarity queries, and the
per-region word networks built from them."""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .io import write_csv

DEFAULT_SEEDS = ("influenza", "cold", "cough", "fever", "sneeze", "rhinobyon")


@dataclass(frozen=True)
class SgnsParams:
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    min_count: int = 5
    lr: float = 0.025
    min_lr: float = 1e-4
    ns_exponent: float = 0.75


@dataclass
class EmbeddingModel:
    vocab: list[str]
    input_vectors: np.ndarray
    output_vectors: np.ndarray
    params: SgnsParams
    seed: int
    counts: list[int] = field(default_factory=list)
    epoch_loss: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.vocab)}

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def vector(self, token: str) -> np.ndarray:
        return self.input_vectors[self._idx(token)]

    def _idx(self, token: str) -> int:
        try:
            return self.index[token]
        except KeyError:
            raise KeyError(f"token {token!r} is not in the embedding vocabulary") from None

    def cosine(self, a: str, b: str) -> float:
        return _cos(self.vector(a), self.vector(b))

    def save(self, path: str | Path) -> None:
        lines = [f"{len(self.vocab)} {self.dim}"]
        for tok, row in zip(self.vocab, self.input_vectors):
            name = "_".join(tok.split())
            lines.append(name + " " + " ".join(f"{v:.8g}" for v in row))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cos(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


class EmptyVocabularyError(ValueError):
    pass


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def _sigmoid(x):
    return np.exp(_log_sigmoid(x))


def sgns_loss_grad(v: np.ndarray, u_pos: np.ndarray, u_neg: np.ndarray):
    """Loss and gradients for one (center, context, negatives) example.

    loss = -log s(u_pos . v) - sum_k log s(-u_neg[k] . v)

    Returns ``(loss, d_v, d_u_pos, d_u_neg)``.
    """
    u_neg = np.atleast_2d(u_neg)
    sp = float(u_pos @ v)
    sn = u_neg @ v
    loss = -float(_log_sigmoid(sp)) - float(np.sum(_log_sigmoid(-sn)))
    gp = float(_sigmoid(sp)) - 1.0      # d loss / d sp
    gn = _sigmoid(sn)                    # d loss / d sn
    d_v = gp * u_pos + gn @ u_neg
    d_u_pos = gp * v
    d_u_neg = gn[:, None] * v[None, :]
    return loss, d_v, d_u_pos, d_u_neg


def build_vocab(corpus: Iterable[Sequence[str]], min_count: int) -> tuple[list[str], list[int]]:
    counts = Counter(t for doc in corpus for t in doc)
    kept = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
    return kept, [counts[t] for t in kept]


def train_sgns(corpus: Sequence[Sequence[str]], params: SgnsParams = SgnsParams(), seed: int = 0) -> EmbeddingModel:
    """Single-threaded SGD on the SGNS objective; identical output for identical input and seed."""
    vocab, counts = build_vocab(corpus, params.min_count)
    if not vocab:
        raise EmptyVocabularyError(f"no token reaches min_count={params.min_count}")
    index = {t: i for i, t in enumerate(vocab)}
    docs = [np.array([index[t] for t in doc if t in index], dtype=np.int64) for doc in corpus]
    docs = [d for d in docs if d.size > 1]

    rng = np.random.default_rng(seed)
    V, d = len(vocab), params.dim
    w_in = (rng.random((V, d)) - 0.5) / d
    w_out = np.zeros((V, d))
    noise = np.asarray(counts, dtype=float) ** params.ns_exponent
    noise_cdf = np.cumsum(noise / noise.sum())
    noise_cdf[-1] = 1.0

    total = params.epochs * sum(doc.size for doc in docs)
    seen = 0
    epoch_loss = []
    for _ in range(params.epochs):
        loss_sum, n_pairs = 0.0, 0
        for doc in docs:
            n = doc.size
            spans = rng.integers(1, params.window + 1, size=n)
            for pos in range(n):
                lr = max(params.lr * (1.0 - seen / total), params.min_lr)
                seen += 1
                c = doc[pos]
                b = spans[pos]
                ctx = np.concatenate([doc[max(0, pos - b):pos], doc[pos + 1:pos + 1 + b]])
                if ctx.size == 0:
                    continue
                negs = np.searchsorted(noise_cdf, rng.random((ctx.size, params.negatives)), side="right")
                for o, neg in zip(ctx, negs):
                    neg = neg[neg != o]
                    v = w_in[c]
                    loss, d_v, d_pos, d_neg = sgns_loss_grad(v, w_out[o], w_out[neg])
                    w_out[o] -= lr * d_pos
                    if neg.size:
                        np.add.at(w_out, neg, -lr * d_neg)
                    w_in[c] = v - lr * d_v
                    loss_sum += loss
                    n_pairs += 1
        epoch_loss.append(loss_sum / max(n_pairs, 1))
    return EmbeddingModel(vocab, w_in, w_out, params, seed, counts, epoch_loss)


def most_similar(model: EmbeddingModel, token: str, k: int = 10) -> list[tuple[str, float]]:
    """Top-k tokens by cosine of input vectors, query excluded, ties by token."""
    if k < 1:
        raise ValueError("k must be >= 1")
    i = model._idx(token)
    W = model.input_vectors
    norms = np.linalg.norm(W, axis=1)
    norms[norms == 0] = 1.0
    sims = np.clip((W @ W[i]) / (norms * norms[i]), -1.0, 1.0)
    ranked = sorted((t for j, t in enumerate(model.vocab) if j != i), key=lambda t: (-sims[model.index[t]], t))
    return [(t, float(sims[model.index[t]])) for t in ranked[:k]]


class Side(str, enum.Enum):
    NORTH_ONLY = "NorthOnly"
    SOUTH_ONLY = "SouthOnly"
    COMMON = "Common"


@dataclass
class WordNetwork:
    seed: str
    edges: list[tuple[str, Side, float]]  # neighbor, side, cosine

    def neighbors(self, side: Side) -> set[str]:
        return {t for t, s, _ in self.edges if s is side}


def build_word_network(seeds: Sequence[str], north: EmbeddingModel, south: EmbeddingModel, k: int = 100,
                       stoplist: Iterable[str] = ()) -> tuple[list[WordNetwork], list[str]]:
    """Split each seed's top-k neighbours into north-only, south-only and common sets.

    Seeds missing from either vocabulary are returned in the second list. The
    stop list is applied after the top-k lists are computed. Common edges carry
    the mean of the two cosines.
    """
    stop = set(stoplist)
    networks, missing = [], []
    for seed in seeds:
        if seed not in north or seed not in south:
            missing.append(seed)
            continue
        nn = {t: c for t, c in most_similar(north, seed, k) if t not in stop}
        ns = {t: c for t, c in most_similar(south, seed, k) if t not in stop}
        edges = []
        for t in sorted(nn.keys() | ns.keys()):
            if t in nn and t in ns:
                edges.append((t, Side.COMMON, (nn[t] + ns[t]) / 2))
            elif t in nn:
                edges.append((t, Side.NORTH_ONLY, nn[t]))
            else:
                edges.append((t, Side.SOUTH_ONLY, ns[t]))
        networks.append(WordNetwork(seed, edges))
    return networks, missing


def write_network_csv(path: str | Path, networks: Sequence[WordNetwork]) -> Path:
    rows = [(n.seed, t, s.value, c) for n in networks for t, s, c in n.edges]
    return write_csv(path, ("seed", "neighbor", "annotation", "cosine"), rows)
