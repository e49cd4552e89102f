"""The Action Path Model: a duration-gated recurrent encoder-decoder.

The recurrent cell is a GRU-like unit whose update gate additionally
receives the squashed stay duration d/(d+1) of the consumed page, so the
network can weigh a page by how long the user actually looked at it. The
default ("paper") candidate state is

    Z = sigmoid(Pz u + Qz h + squash(d))
    R = sigmoid(Pr u + Qr h)
    h' = (1 - Z) * tanh(Ph u + Qh h) + Z * h

with R computed but not consumed; ``candidate_mode="standard"`` switches
the candidate to tanh(Ph u + Qh (R * h)), the conventional GRU form.

An encoder consumes [SOA, u_1..u_n, COI] with durations [0, d_1..d_n, 0]
and yields a context vector; a decoder starts from that context at the
SOP token and emits URLs until a typed EOA mark, which doubles as the
behavior classification. All gradients are computed analytically by
backpropagation through time and are verified against finite differences
in the test suite.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import IO, Sequence

import numpy as np

from .errors import EmptyDataset, EmptyPath, LabelMissing, ShapeMismatch
from .events import Behavior
from .numerics import AdamState, adam_step, matrix_from_json, matrix_to_json, sigmoid, softmax
from .paths import ActionPath
from .vocab import COI, EOA_MARKS, SOA, SOP, eoa_id_for, is_mark

CELL_KEYS = ("pz", "qz", "pr", "qr", "ph", "qh")
PARAM_NAMES = (
    ("emb",)
    + tuple(f"enc_{k}" for k in CELL_KEYS)
    + tuple(f"dec_{k}" for k in CELL_KEYS)
    + ("w_out", "b_out")
)

_EOA_IDS = np.array(EOA_MARKS)
_LABELS = (Behavior.TRG, Behavior.PUR, Behavior.EXP)


def squash(d: float) -> float:
    """Map a non-negative duration (seconds) into [0, 1) via d / (d + 1)."""
    if d < 0 or not math.isfinite(d):
        raise ValueError(f"duration must be finite and >= 0, got {d!r}")
    return d / (d + 1.0)


@dataclass
class TrainConfig:
    epochs: int = 500
    batch_size: int = 32
    learning_rate: float = 0.001
    l2_lambda: float = 1e-7
    early_stop_patience: int = 1000
    seed: int = 0

    def __post_init__(self):
        if min(self.epochs, self.batch_size, self.early_stop_patience) < 1:
            raise ValueError("epochs, batch_size, early_stop_patience must be >= 1")
        if self.learning_rate <= 0 or self.l2_lambda < 0:
            raise ValueError("learning_rate > 0 and l2_lambda >= 0 required")

    def to_json_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "l2_lambda": self.l2_lambda,
            "early_stop_patience": self.early_stop_patience,
            "seed": self.seed,
        }


@dataclass
class ApmParams:
    """All trainable weights, addressable by name for optimization."""

    vocab_size: int
    embed_dim: int
    latent_dim: int
    candidate_mode: str
    arrays: dict[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def to_list(self) -> list[np.ndarray]:
        return [self.arrays[n] for n in PARAM_NAMES]

    def with_arrays(self, arrays: Sequence[np.ndarray]) -> "ApmParams":
        return replace(self, arrays=dict(zip(PARAM_NAMES, arrays)))

    def copy(self) -> "ApmParams":
        return replace(self, arrays={n: a.copy() for n, a in self.arrays.items()})

    def parameter_counts(self) -> dict[str, int]:
        counts = {n: int(a.size) for n, a in self.arrays.items()}
        counts["total"] = sum(counts.values())
        return counts


def init_params(
    vocab_size: int,
    embed_dim: int = 16,
    latent_dim: int = 10,
    candidate_mode: str = "paper",
    seed: int = 0,
    embedding_init: np.ndarray | None = None,
) -> ApmParams:
    """Seeded initialization; the embedding row table may come from url2vec."""
    if candidate_mode not in ("paper", "standard"):
        raise ValueError(f"unknown candidate_mode {candidate_mode!r}")
    rng = np.random.default_rng(seed)
    h, e, v = latent_dim, embed_dim, vocab_size

    def glorot(rows: int, cols: int) -> np.ndarray:
        limit = math.sqrt(6.0 / (rows + cols))
        return rng.uniform(-limit, limit, size=(rows, cols))

    if embedding_init is not None:
        if embedding_init.shape != (v, e):
            raise ShapeMismatch(
                f"embedding init {embedding_init.shape} != ({v}, {e})"
            )
        emb = np.array(embedding_init, dtype=np.float64)
    else:
        emb = rng.uniform(-0.5 / e, 0.5 / e, size=(v, e))

    arrays: dict[str, np.ndarray] = {"emb": emb}
    for side in ("enc", "dec"):
        for k in CELL_KEYS:
            arrays[f"{side}_{k}"] = glorot(h, e if k.startswith("p") else h)
    arrays["w_out"] = rng.uniform(-0.05, 0.05, size=(v, h))
    arrays["b_out"] = np.zeros(v)
    return ApmParams(
        vocab_size=v,
        embed_dim=e,
        latent_dim=h,
        candidate_mode=candidate_mode,
        arrays=arrays,
    )


def cell_step(
    weights: dict[str, np.ndarray],
    u: np.ndarray,
    h_prev: np.ndarray,
    d: float,
    mode: str = "paper",
) -> np.ndarray:
    """One recurrent step; ``weights`` holds keys pz..qh for one cell."""
    if weights["pz"].shape[1] != u.shape[0] or weights["qz"].shape[1] != h_prev.shape[0]:
        raise ShapeMismatch(
            f"input {u.shape} / state {h_prev.shape} do not fit cell weights"
        )
    z = sigmoid(weights["pz"] @ u + weights["qz"] @ h_prev + squash(d))
    if mode == "standard":
        r = sigmoid(weights["pr"] @ u + weights["qr"] @ h_prev)
        c = np.tanh(weights["ph"] @ u + weights["qh"] @ (r * h_prev))
    else:
        c = np.tanh(weights["ph"] @ u + weights["qh"] @ h_prev)
    return (1.0 - z) * c + z * h_prev


def _cell_arrays(params: ApmParams, side: str) -> dict[str, np.ndarray]:
    return {k: params.arrays[f"{side}_{k}"] for k in CELL_KEYS}


def encoder_tokens(path_ids: Sequence[int], dwells: Sequence[float]) -> tuple[list[int], list[float]]:
    """Mark-delimited encoder input: SOA and COI carry duration 0."""
    return [SOA, *path_ids, COI], [0.0, *dwells, 0.0]


def encode(params: ApmParams, path: ActionPath) -> np.ndarray:
    """Context tensor summarizing the whole path (final encoder state)."""
    if len(path.actions) == 0:
        raise EmptyPath(f"path {path.session_id!r} has no actions")
    ids, durs = encoder_tokens(path.url_ids, path.dwells)
    return _run_cell(params, "enc", ids, durs, np.zeros(params.latent_dim))


def _run_cell(
    params: ApmParams,
    side: str,
    tokens: Sequence[int],
    durations: Sequence[float],
    h: np.ndarray,
) -> np.ndarray:
    w = _cell_arrays(params, side)
    emb = params.arrays["emb"]
    mode = params.candidate_mode
    for tok, d in zip(tokens, durations):
        h = cell_step(w, emb[tok], h, d, mode)
    return h


def decode_greedy(params: ApmParams, ctx: np.ndarray, max_len: int) -> list[int]:
    """Greedy decoding from a context tensor.

    Emits the argmax token at each step (ties resolved to the lowest id),
    feeds it back with duration 0, and stops after any EOA mark or after
    ``max_len`` tokens. The returned list includes the EOA mark when one
    was emitted.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    w = _cell_arrays(params, "dec")
    emb = params.arrays["emb"]
    w_out, b_out = params.arrays["w_out"], params.arrays["b_out"]
    mode = params.candidate_mode
    h = np.asarray(ctx, dtype=np.float64)
    tok = SOP
    out: list[int] = []
    for _ in range(max_len):
        h = cell_step(w, emb[tok], h, 0.0, mode)
        nxt = int(np.argmax(w_out @ h + b_out))
        out.append(nxt)
        if nxt in EOA_MARKS:
            break
        tok = nxt
    return out


@dataclass(frozen=True)
class TrainExample:
    """One teacher-forcing item: observed prefix -> continuation + EOA."""

    session_id: str
    prefix: tuple[tuple[int, float], ...]
    continuation: tuple[int, ...]
    label: Behavior

    def target_ids(self) -> list[int]:
        return [*self.continuation, eoa_id_for(self.label)]


def examples_from_paths(
    paths: Sequence[ActionPath],
    objective: str = "classify",
    fractions: Sequence[float] = (0.25, 0.5, 0.75),
) -> list[TrainExample]:
    """Convert labeled paths into training examples.

    ``classify`` uses the whole path as the observed prefix with an empty
    continuation (the decoder only learns the typed EOA mark). ``mixed``
    additionally emits, per path and per fraction, a prefix/suffix
    example so the decoder also learns to continue a partial session.
    """
    if objective not in ("classify", "mixed"):
        raise ValueError(f"unknown objective {objective!r}")
    if not paths:
        raise EmptyDataset("no paths")
    examples: list[TrainExample] = []
    for path in paths:
        if path.label is None:
            raise LabelMissing(f"path {path.session_id!r} has no label")
        if len(path.actions) == 0:
            raise EmptyPath(f"path {path.session_id!r} has no actions")
        examples.append(
            TrainExample(path.session_id, tuple(path.actions), (), path.label)
        )
        if objective == "mixed":
            n = len(path.actions)
            cut_points = sorted({min(n, max(1, math.ceil(f * n))) for f in fractions})
            for cut in cut_points:
                if cut < n:
                    examples.append(
                        TrainExample(
                            path.session_id,
                            tuple(path.actions[:cut]),
                            tuple(a for a, _ in path.actions[cut:]),
                            path.label,
                        )
                    )
    return examples


def _zero_grads(params: ApmParams) -> dict[str, np.ndarray]:
    return {n: np.zeros_like(a) for n, a in params.arrays.items()}


def _sig(x: np.ndarray) -> np.ndarray:
    # hot-path sigmoid; callers hold an errstate(over="ignore") scope, and
    # exp overflow saturates to the mathematically correct 0.0
    return 1.0 / (1.0 + np.exp(-x))


def _cell_forward(w, emb, tokens, durations, h, standard):
    """Run one recurrent side; returns final state and per-step cache."""
    pz, qz, pr, qr, ph, qh = w
    cache = []
    for tok, d in zip(tokens, durations):
        u = emb[tok]
        z = _sig(pz @ u + qz @ h + d / (d + 1.0))
        if standard:
            r = _sig(pr @ u + qr @ h)
            c = np.tanh(ph @ u + qh @ (r * h))
        else:
            r = None
            c = np.tanh(ph @ u + qh @ h)
        h_new = (1.0 - z) * c + z * h
        cache.append((tok, u, h, z, r, c))
        h = h_new
    return h, cache


def _cell_backward(w, gw, gemb, cache, dh, inject, standard):
    """BPTT over one side's cache; ``inject[j]`` adds dL/dh at step j."""
    pz, qz, pr, qr, ph, qh = w
    gpz, gqz, gpr, gqr, gph, gqh = gw
    for j in range(len(cache) - 1, -1, -1):
        if inject is not None:
            dh = dh + inject[j]
        tok, u, h_prev, z, r, c = cache[j]
        daz = (dh * (h_prev - c)) * (z * (1.0 - z))
        dah = (dh * (1.0 - z)) * (1.0 - c * c)
        gpz += np.outer(daz, u)
        gqz += np.outer(daz, h_prev)
        gph += np.outer(dah, u)
        du = pz.T @ daz + ph.T @ dah
        dh_prev = dh * z + qz.T @ daz
        if standard:
            gqh += np.outer(dah, r * h_prev)
            drh = qh.T @ dah
            dar = (drh * h_prev) * (r * (1.0 - r))
            gpr += np.outer(dar, u)
            gqr += np.outer(dar, h_prev)
            du += pr.T @ dar
            dh_prev += drh * r + qr.T @ dar
        else:
            gqh += np.outer(dah, h_prev)
            dh_prev += qh.T @ dah
        gemb[tok] += du
        dh = dh_prev
    return dh


def _decoder_rollout(params: ApmParams, ex: TrainExample):
    """Teacher-forced encoder+decoder forward pass shared by loss paths."""
    arrays = params.arrays
    emb = arrays["emb"]
    standard = params.candidate_mode == "standard"
    enc_w = tuple(arrays["enc_" + k] for k in CELL_KEYS)
    dec_w = tuple(arrays["dec_" + k] for k in CELL_KEYS)
    enc_ids, enc_durs = encoder_tokens(
        [a for a, _ in ex.prefix], [d for _, d in ex.prefix]
    )
    ctx, enc_cache = _cell_forward(
        enc_w, emb, enc_ids, enc_durs, np.zeros(params.latent_dim), standard
    )
    dec_inputs = [SOP, *ex.continuation]
    h, dec_cache = _cell_forward(
        dec_w, emb, dec_inputs, [0.0] * len(dec_inputs), ctx, standard
    )
    # decoder states after each step: next step's h_prev, then the final h
    hs = np.vstack([c[2] for c in dec_cache[1:]] + [h])
    return enc_cache, dec_cache, hs


def _output_loss(params: ApmParams, hs: np.ndarray, targets: list[int]):
    logits = hs @ params.arrays["w_out"].T + params.arrays["b_out"]
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    probs = e / e.sum(axis=1, keepdims=True)
    rows = np.arange(len(targets))
    picked = np.maximum(probs[rows, targets], 1e-300)
    loss = -float(np.log(picked).sum()) / len(targets)
    return loss, probs, rows


def _example_loss(params: ApmParams, ex: TrainExample) -> float:
    """Forward-only mean cross-entropy of one example (no L2)."""
    with np.errstate(over="ignore"):
        _, _, hs = _decoder_rollout(params, ex)
        loss, _, _ = _output_loss(params, hs, ex.target_ids())
    return loss


def _example_loss_and_backprop(
    params: ApmParams, ex: TrainExample, grads: dict[str, np.ndarray]
) -> float:
    """Forward + BPTT for one example; accumulates parameter gradients.

    Returns the example's mean cross-entropy over its target tokens. The
    gradient of that mean is added into ``grads`` (no batch scaling here).
    Callers wrap batches in errstate(over="ignore"); see :func:`_sig`.
    """
    arrays = params.arrays
    standard = params.candidate_mode == "standard"
    enc_cache, dec_cache, hs = _decoder_rollout(params, ex)

    targets = ex.target_ids()
    loss, probs, rows = _output_loss(params, hs, targets)
    inv_t = 1.0 / len(targets)
    dlogits = probs * inv_t
    dlogits[rows, targets] -= inv_t
    grads["w_out"] += dlogits.T @ hs
    grads["b_out"] += dlogits.sum(axis=0)
    inject = dlogits @ arrays["w_out"]

    enc_w = tuple(arrays["enc_" + k] for k in CELL_KEYS)
    dec_w = tuple(arrays["dec_" + k] for k in CELL_KEYS)
    enc_g = tuple(grads["enc_" + k] for k in CELL_KEYS)
    dec_g = tuple(grads["dec_" + k] for k in CELL_KEYS)
    gemb = grads["emb"]
    dh = _cell_backward(
        dec_w, dec_g, gemb, dec_cache, np.zeros(params.latent_dim), inject, standard
    )
    _cell_backward(enc_w, enc_g, gemb, enc_cache, dh, None, standard)
    return loss


def loss_and_grads(
    params: ApmParams, examples: Sequence[TrainExample], l2_lambda: float
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean teacher-forced loss over ``examples`` plus L2, with gradients."""
    if not examples:
        raise EmptyDataset("no examples")
    grads = _zero_grads(params)
    total = 0.0
    with np.errstate(over="ignore"):
        for ex in examples:
            total += _example_loss_and_backprop(params, ex, grads)
    inv_b = 1.0 / len(examples)
    total *= inv_b
    for name in grads:
        grads[name] *= inv_b
    if l2_lambda > 0.0:
        for name, a in params.arrays.items():
            total += l2_lambda * float(np.sum(a * a))
            grads[name] += 2.0 * l2_lambda * a
    return total, grads


def dataset_loss(
    params: ApmParams, examples: Sequence[TrainExample]
) -> float:
    """Mean cross-entropy over examples, forward only (no L2 term)."""
    if not examples:
        raise EmptyDataset("no examples")
    return sum(_example_loss(params, ex) for ex in examples) / len(examples)


def train(
    train_examples: Sequence[TrainExample],
    val_examples: Sequence[TrainExample],
    params: ApmParams,
    config: TrainConfig,
) -> tuple[ApmParams, list[dict]]:
    """Mini-batch Adam training with best-validation snapshotting.

    Batches are drawn in a seeded shuffled order each epoch, so a run is
    fully reproducible from (params, config, data). Training stops early
    when the validation loss has not improved for
    ``config.early_stop_patience`` epochs; either way the parameters with
    the best validation loss are returned, along with the per-epoch
    train/validation loss history.
    """
    if not train_examples:
        raise EmptyDataset("no training examples")
    if not val_examples:
        raise EmptyDataset("no validation examples")
    train_ids = {ex.session_id for ex in train_examples}
    if train_ids & {ex.session_id for ex in val_examples}:
        raise ValueError("train and validation splits share session ids")

    params = params.copy()
    rng = np.random.default_rng(config.seed)
    states = {
        n: AdamState.for_param(a, config.learning_rate)
        for n, a in params.arrays.items()
    }
    order = np.arange(len(train_examples))
    history: list[dict] = []
    best_val = math.inf
    best_params = params.copy()
    best_epoch = -1

    for epoch in range(config.epochs):
        rng.shuffle(order)
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, len(order), config.batch_size):
            batch = [train_examples[i] for i in order[start : start + config.batch_size]]
            loss, grads = loss_and_grads(params, batch, config.l2_lambda)
            epoch_loss += loss
            n_batches += 1
            for name in PARAM_NAMES:
                params.arrays[name], states[name] = adam_step(
                    params.arrays[name], grads[name], states[name]
                )
        val_loss = dataset_loss(params, val_examples)
        history.append(
            {
                "epoch": epoch,
                "train_loss": epoch_loss / n_batches,
                "val_loss": val_loss,
            }
        )
        if val_loss < best_val:
            best_val = val_loss
            best_params = params.copy()
            best_epoch = epoch
        elif epoch - best_epoch >= config.early_stop_patience:
            break
    return best_params, history


def classify(
    params: ApmParams, path: ActionPath, strict: bool = False
) -> tuple[Behavior | None, np.ndarray]:
    """Behavior label plus the (TRG, PUR, EXP) probability triple.

    The decoder's first-step distribution is restricted to the three EOA
    logits and renormalized, so even an undertrained model commits to a
    label; ties break in TRG < PUR < EXP order. ``strict=True`` instead
    takes the argmax over the full vocabulary and returns label None when
    that argmax is not an EOA mark.
    """
    if len(path.actions) == 0:
        raise EmptyPath(f"path {path.session_id!r} has no actions")
    ctx = encode(params, path)
    w = _cell_arrays(params, "dec")
    h = cell_step(w, params.arrays["emb"][SOP], ctx, 0.0, params.candidate_mode)
    logits = params.arrays["w_out"] @ h + params.arrays["b_out"]
    triple = softmax(logits[_EOA_IDS])
    label = _LABELS[int(np.argmax(triple))]
    if strict and int(np.argmax(logits)) not in EOA_MARKS:
        return None, triple
    return label, triple


def predict_suffix(
    params: ApmParams, prefix: ActionPath, max_len: int
) -> list[int]:
    """Greedy continuation of a partial session; marks are stripped."""
    if len(prefix.actions) == 0:
        raise EmptyPath(f"path {prefix.session_id!r} has no actions")
    ctx = encode(params, prefix)
    tokens = decode_greedy(params, ctx, max_len)
    return [t for t in tokens if not is_mark(t)]


def save_checkpoint(
    fp: IO[str],
    params: ApmParams,
    train_config: TrainConfig | None = None,
    loss_history: Sequence[dict] | None = None,
) -> None:
    obj = {
        "latent_dim": params.latent_dim,
        "embedding_dim": params.embed_dim,
        "vocab_size": params.vocab_size,
        "candidate_mode": params.candidate_mode,
        "weights": {n: matrix_to_json(a) for n, a in params.arrays.items()},
        "train_config": train_config.to_json_dict() if train_config else None,
        "loss_history": list(loss_history) if loss_history else [],
    }
    json.dump(obj, fp)
    fp.write("\n")


def load_checkpoint(fp: IO[str]) -> tuple[ApmParams, TrainConfig | None, list[dict]]:
    obj = json.load(fp)
    arrays = {n: matrix_from_json(m) for n, m in obj["weights"].items()}
    arrays["b_out"] = arrays["b_out"].ravel()
    params = ApmParams(
        vocab_size=obj["vocab_size"],
        embed_dim=obj["embedding_dim"],
        latent_dim=obj["latent_dim"],
        candidate_mode=obj["candidate_mode"],
        arrays=arrays,
    )
    cfg = TrainConfig(**obj["train_config"]) if obj.get("train_config") else None
    return params, cfg, obj.get("loss_history", [])
