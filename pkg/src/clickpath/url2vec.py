"""Skip-gram URL embeddings trained with negative sampling.

Co-visited URLs get nearby vectors: every (center, context) pair inside
a +-c window of one session is a positive example, and k negatives per
pair are drawn from the unigram distribution of contexts raised to 0.75.
An exact full-softmax trainer is included for desk-scale cross-checks.

Initialization and the negative table are keyed by the order in which
ids first appear in the pair list, so training commutes with any
relabeling of URL ids (the trained table is permuted, nothing else).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import EmptyCorpus, IndexOutOfRange
from .numerics import matrix_from_json, matrix_to_json, sigmoid, softmax
from .paths import ActionPath
from .vocab import NUM_MARKS, is_mark

NEGATIVE_POWER = 0.75


@dataclass(frozen=True)
class Url2VecConfig:
    window: int = 2
    dim: int = 16
    negatives: int = 5
    epochs: int = 10
    learning_rate: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.window < 1 or self.dim < 2 or self.negatives < 1:
            raise ValueError("window >= 1, dim >= 2, negatives >= 1 required")

    def to_json_dict(self) -> dict:
        return {
            "window": self.window,
            "dim": self.dim,
            "negatives": self.negatives,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "seed": self.seed,
        }


@dataclass
class EmbeddingTable:
    """Input (center) and output (context) vectors, one row per vocab id."""

    input_vectors: np.ndarray
    output_vectors: np.ndarray

    @property
    def vocab_size(self) -> int:
        return self.input_vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    def save(self, fp: IO[str], config: Url2VecConfig) -> None:
        json.dump(
            {
                "config": config.to_json_dict(),
                "vocab_size": self.vocab_size,
                "input_vectors": matrix_to_json(self.input_vectors),
                "output_vectors": matrix_to_json(self.output_vectors),
            },
            fp,
        )
        fp.write("\n")

    @classmethod
    def load(cls, fp: IO[str]) -> tuple["EmbeddingTable", Url2VecConfig]:
        obj = json.load(fp)
        table = cls(
            input_vectors=matrix_from_json(obj["input_vectors"]),
            output_vectors=matrix_from_json(obj["output_vectors"]),
        )
        return table, Url2VecConfig(**obj["config"])


def build_pairs(
    paths: Sequence[ActionPath] | Sequence[Sequence[int]], window: int
) -> list[tuple[int, int]]:
    """All (center, context) pairs within +-window inside each session.

    Pairs never cross session boundaries. Mark ids are rejected: the
    corpus must contain real URLs only.
    """
    pairs: list[tuple[int, int]] = []
    for path in paths:
        ids = list(path.url_ids) if isinstance(path, ActionPath) else list(path)
        if any(is_mark(i) for i in ids):
            raise ValueError("mark ids are not allowed in embedding corpora")
        n = len(ids)
        for t in range(n):
            lo = max(0, t - window)
            hi = min(n - 1, t + window)
            for j in range(lo, hi + 1):
                if j != t:
                    pairs.append((ids[t], ids[j]))
    return pairs


def _appearance_order(pairs: Sequence[tuple[int, int]], vocab_size: int) -> list[int]:
    """Ids ordered by first appearance in the pair list, then the rest."""
    order: list[int] = []
    seen: set[int] = set()
    for c, x in pairs:
        for i in (c, x):
            if i not in seen:
                seen.add(i)
                order.append(i)
    order.extend(i for i in range(vocab_size) if i not in seen)
    return order


def _init_tables(
    pairs: Sequence[tuple[int, int]], vocab_size: int, config: Url2VecConfig
) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(config.seed)
    bound = 0.5 / config.dim
    inp = np.empty((vocab_size, config.dim))
    out = np.empty((vocab_size, config.dim))
    for i in _appearance_order(pairs, vocab_size):
        inp[i] = rng.uniform(-bound, bound, size=config.dim)
        out[i] = rng.uniform(-bound, bound, size=config.dim)
    return inp, out


class _NegativeSampler:
    """Unigram^0.75 sampler over pair contexts, slots in appearance order."""

    def __init__(self, pairs: Sequence[tuple[int, int]]):
        counts: dict[int, int] = {}
        slots: list[int] = []
        for _, ctx in pairs:
            if ctx not in counts:
                counts[ctx] = 0
                slots.append(ctx)
            counts[ctx] += 1
        weights = np.array([counts[i] ** NEGATIVE_POWER for i in slots])
        self.slots = np.array(slots)
        self.cum = np.cumsum(weights / weights.sum())

    def draw(self, rng: np.random.Generator, k: int) -> np.ndarray:
        u = rng.random(k)
        return self.slots[np.searchsorted(self.cum, u, side="right")]


def train_embeddings(
    pairs: Sequence[tuple[int, int]], vocab_size: int, config: Url2VecConfig
) -> EmbeddingTable:
    """Negative-sampling SGD over the pair corpus; deterministic per seed.

    With ``config.epochs == 0`` the seeded initialization is returned
    untouched, which gives tests a fixed reference point.
    """
    if not pairs:
        raise EmptyCorpus("no training pairs")
    if max(max(p) for p in pairs) >= vocab_size:
        raise IndexOutOfRange("pair id outside vocab_size")

    inp, out = _init_tables(pairs, vocab_size, config)
    if config.epochs == 0:
        return EmbeddingTable(input_vectors=inp, output_vectors=out)

    sampler = _NegativeSampler(pairs)
    rng = np.random.default_rng(config.seed + 1)
    lr = config.learning_rate
    indices = np.arange(len(pairs))
    for _ in range(config.epochs):
        rng.shuffle(indices)
        for idx in indices:
            center, ctx = pairs[idx]
            v = inp[center]
            dv = np.zeros_like(v)
            negs = sampler.draw(rng, config.negatives)
            # positive update then negatives, in draw order
            s = sigmoid(out[ctx] @ v)
            g = lr * (1.0 - s)
            dv += g * out[ctx]
            out[ctx] += g * v
            for n in negs:
                if n == ctx:
                    continue
                s = sigmoid(out[n] @ v)
                g = lr * (0.0 - s)
                dv += g * out[n]
                out[n] += g * v
            inp[center] += dv
    return EmbeddingTable(input_vectors=inp, output_vectors=out)


def train_embeddings_exact(
    pairs: Sequence[tuple[int, int]], vocab_size: int, config: Url2VecConfig
) -> tuple[EmbeddingTable, list[float]]:
    """Full-softmax, full-batch gradient descent reference trainer.

    Only viable for toy vocabularies; serves as an independent check on
    the negative-sampling route. Returns the table and the per-iteration
    loss history (mean cross-entropy), which decreases monotonically for
    a sane learning rate.
    """
    if not pairs:
        raise EmptyCorpus("no training pairs")
    inp, out = _init_tables(pairs, vocab_size, config)
    history: list[float] = []
    n = len(pairs)
    for _ in range(config.epochs):
        loss = 0.0
        g_in = np.zeros_like(inp)
        g_out = np.zeros_like(out)
        for center, ctx in pairs:
            v = inp[center]
            p = softmax(out @ v)
            loss -= float(np.log(max(p[ctx], 1e-300)))
            d = p.copy()
            d[ctx] -= 1.0
            g_out += np.outer(d, v)
            g_in[center] += out.T @ d
        history.append(loss / n)
        inp -= config.learning_rate * g_in / n
        out -= config.learning_rate * g_out / n
    return EmbeddingTable(input_vectors=inp, output_vectors=out), history


def ns_loss(
    inp: np.ndarray,
    out: np.ndarray,
    samples: Sequence[tuple[int, int, Sequence[int]]],
) -> float:
    """Mean negative-sampling loss over (center, context, negatives) triples."""
    total = 0.0
    for center, ctx, negs in samples:
        v = inp[center]
        total -= float(np.log(max(sigmoid(out[ctx] @ v), 1e-300)))
        for n in negs:
            total -= float(np.log(max(sigmoid(-(out[n] @ v)), 1e-300)))
    return total / len(samples)


def ns_loss_and_grads(
    inp: np.ndarray,
    out: np.ndarray,
    samples: Sequence[tuple[int, int, Sequence[int]]],
) -> tuple[float, np.ndarray, np.ndarray]:
    """Analytic gradients of :func:`ns_loss` for gradient checking."""
    g_in = np.zeros_like(inp)
    g_out = np.zeros_like(out)
    total = 0.0
    scale = 1.0 / len(samples)
    for center, ctx, negs in samples:
        v = inp[center]
        s = sigmoid(out[ctx] @ v)
        total -= float(np.log(max(s, 1e-300)))
        coef = scale * (s - 1.0)
        g_out[ctx] += coef * v
        g_in[center] += coef * out[ctx]
        for n in negs:
            s = sigmoid(out[n] @ v)
            total -= float(np.log(max(1.0 - s, 1e-300)))
            coef = scale * s
            g_out[n] += coef * v
            g_in[center] += coef * out[n]
    return total * scale, g_in, g_out


def similarity(table: EmbeddingTable, a: int, b: int) -> float:
    """Cosine similarity of the input vectors of two ids."""
    for i in (a, b):
        if not 0 <= i < table.vocab_size:
            raise IndexOutOfRange(f"id {i} outside vocabulary of {table.vocab_size}")
    va, vb = table.input_vectors[a], table.input_vectors[b]
    na, nb = float(np.linalg.norm(va)), float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(va @ vb / (na * nb))


def nearest(table: EmbeddingTable, u: int, n: int) -> list[tuple[int, float]]:
    """Top-n ids by cosine to ``u``, skipping marks and ``u`` itself."""
    if not 0 <= u < table.vocab_size:
        raise IndexOutOfRange(f"id {u} outside vocabulary of {table.vocab_size}")
    if n < 1:
        raise ValueError("n must be >= 1")
    scored = [
        (i, similarity(table, u, i))
        for i in range(NUM_MARKS, table.vocab_size)
        if i != u
    ]
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored[:n]


def predicted_distribution(table: EmbeddingTable, center: int) -> np.ndarray:
    """Model probability of each id following ``center`` (full softmax)."""
    if not 0 <= center < table.vocab_size:
        raise IndexOutOfRange(f"id {center} outside vocabulary of {table.vocab_size}")
    return softmax(table.output_vectors @ table.input_vectors[center])


def pair_count_formula(lengths: Iterable[int], window: int) -> int:
    """Closed-form pair count: per position, window clipped to the path."""
    total = 0
    for L in lengths:
        for t in range(1, L + 1):
            total += min(L, t + window) - max(1, t - window)
    return total
