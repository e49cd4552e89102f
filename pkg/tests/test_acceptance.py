"""Acceptance suite: every shipping criterion at its stated tolerance.

Each test prints one ``ACCEPTANCE <name>: PASS|FAIL`` line (visible with
``pytest -s``). The classification/curve criteria share one trained model
built by the module fixture at the reference scale: 132 training paths,
38 validation, 19 test, latent dimension 10, batch size 32, 500 epochs.
"""

import json
import math
import time
from itertools import combinations

import numpy as np
import pytest

from clickpath import apm, url2vec
from clickpath.apm import PARAM_NAMES, TrainConfig, TrainExample
from clickpath.cli import run as cli_run
from clickpath.datasets import load_dataset, write_dataset
from clickpath.evaluation import (
    classification_accuracy, fraction_curve, mann_whitney_one_tailed,
)
from clickpath.events import Behavior
from clickpath.numerics import grad_check
from clickpath.paths import ActionPath
from clickpath.patterns import (
    biconnected_components, build_graph, find_breadth_stars,
    find_concentrated_clusters, find_overlaps, mine_patterns,
)
from clickpath.synthgen import GenParams, gen_dataset
from clickpath.url2vec import (
    Url2VecConfig, build_pairs, nearest, ns_loss, ns_loss_and_grads,
    similarity, train_embeddings, train_embeddings_exact,
)

from test_evaluation import enumeration_oracle
from test_patterns import (
    brute_force_articulations, brute_force_blocks, cluster_detour_path,
    graph_from_edges, random_graph,
)

SEED = 7
TRAIN_FRACTIONS = (0.25, 0.5, 0.75, 0.9)


@pytest.fixture
def announce(capsys):
    """Print the criterion verdict straight to the terminal, uncaptured."""

    def _announce(name: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})", flush=True)

    return _announce


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    """The reference-scale seeded pipeline shared by criteria 1 and 2."""
    root = tmp_path_factory.mktemp("acceptance")
    dataset = gen_dataset((132, 38, 19), GenParams(seed=SEED), seed=SEED)
    write_dataset(dataset, root / "data")
    data = load_dataset(root / "data")

    emb_cfg = Url2VecConfig(dim=16, epochs=10, seed=SEED)
    pairs = build_pairs(data.split("train") + data.split("val"), emb_cfg.window)
    table = train_embeddings(pairs, len(data.vocab), emb_cfg)

    train_ex = apm.examples_from_paths(
        data.split("train"), objective="mixed", fractions=TRAIN_FRACTIONS
    )
    val_ex = apm.examples_from_paths(
        data.split("val"), objective="mixed", fractions=TRAIN_FRACTIONS
    )
    params = apm.init_params(
        vocab_size=len(data.vocab), embed_dim=16, latent_dim=10,
        candidate_mode="paper", seed=SEED, embedding_init=table.input_vectors,
    )
    config = TrainConfig(epochs=500, batch_size=32, learning_rate=0.002, seed=SEED)
    start = time.monotonic()
    model, history = apm.train(train_ex, val_ex, params, config)
    train_seconds = time.monotonic() - start
    return {
        "data": data,
        "model": model,
        "history": history,
        "train_seconds": train_seconds,
    }


def test_criterion_behavior_classification(trained, announce):
    """Held-out accuracy >= 0.95 at the reference split, within 10 minutes."""
    acc = classification_accuracy(trained["model"], trained["data"].split("test"))
    seconds = trained["train_seconds"]
    ok = acc >= 0.95 and seconds <= 600.0
    announce("behavior-classification", ok, f"accuracy={acc:.3f}, train={seconds:.0f}s")
    assert acc >= 0.95
    assert seconds <= 600.0


def test_criterion_fraction_curve_shape(trained, announce):
    """accuracy(0.9) - accuracy(0.2) >= 0.15; point at 0.99 equals
    classification accuracy exactly."""
    model = trained["model"]
    test_paths = trained["data"].split("test")
    points = dict(fraction_curve(model, test_paths, [0.2, 0.9, 0.99]))
    gap = points[0.9] - points[0.2]
    cls_acc = classification_accuracy(model, test_paths)
    ok = gap >= 0.15 and points[0.99] == cls_acc
    announce(
        "fraction-curve-shape", ok,
        f"acc(0.9)={points[0.9]:.3f}, acc(0.2)={points[0.2]:.3f}, gap={gap:.3f}, "
        f"endpoint={points[0.99]:.3f} vs classification={cls_acc:.3f}",
    )
    assert gap >= 0.15
    assert points[0.99] == cls_acc


def _apm_grad_error(mode: str) -> float:
    params = apm.init_params(
        vocab_size=10, embed_dim=3, latent_dim=3, candidate_mode=mode, seed=21
    )
    paths = [
        ActionPath("u", "a", ((7, 0.5), (8, 3.0), (9, 1.0)), Behavior.TRG),
        ActionPath("u", "b", ((9, 2.0), (7, 0.0)), Behavior.EXP),
    ]
    examples = apm.examples_from_paths(paths, objective="mixed", fractions=(0.5,))

    def loss_fn(arrays):
        return apm.loss_and_grads(params.with_arrays(arrays), examples, 1e-7)[0]

    def grad_fn(arrays):
        grads = apm.loss_and_grads(params.with_arrays(arrays), examples, 1e-7)[1]
        return [grads[n] for n in PARAM_NAMES]

    # larger step than the 1e-5 default: the L2-only coordinates carry
    # ~1e-8 gradients where FD roundoff would dominate, and the L2 term
    # is exactly quadratic so central differences stay exact
    return grad_check(loss_fn, params.to_list(), grad_fn, h=3e-4)


def test_criterion_gradient_correctness(announce):
    """Full APM loss (both candidate modes) and url2vec NS loss match
    central finite differences with max relative error < 1e-4."""
    err_paper = _apm_grad_error("paper")
    err_standard = _apm_grad_error("standard")

    rng = np.random.default_rng(2)
    inp = rng.normal(scale=0.3, size=(8, 4))
    out = rng.normal(scale=0.3, size=(8, 4))
    samples = [(7, 3, (2, 5)), (6, 2, (3, 3, 1)), (5, 7, (0,))]
    err_ns = grad_check(
        lambda ps: ns_loss(ps[0], ps[1], samples),
        [inp, out],
        lambda ps: list(ns_loss_and_grads(ps[0], ps[1], samples)[1:]),
    )
    ok = max(err_paper, err_standard, err_ns) < 1e-4
    announce(
        "gradient-correctness", ok,
        f"apm paper={err_paper:.2e}, standard={err_standard:.2e}, url2vec={err_ns:.2e}",
    )
    assert err_paper < 1e-4
    assert err_standard < 1e-4
    assert err_ns < 1e-4


def test_criterion_overfit_sanity(announce):
    """One path memorized to loss < 0.01; 80%-prefix suffix exact."""
    ids = [7, 9, 8, 10, 11, 8, 12, 13]
    dwells = [1.0, 2.0, 0.5, 4.0, 1.0, 2.5, 1.0, 3.0]
    path = ActionPath("u", "train-1", tuple(zip(ids, dwells)), Behavior.PUR)
    cut = math.ceil(0.8 * len(ids))
    ex = TrainExample("train-1", tuple(path.actions[:cut]),
                      tuple(i for i, _ in path.actions[cut:]), Behavior.PUR)
    val = TrainExample("val-1", ex.prefix, ex.continuation, ex.label)
    params = apm.init_params(vocab_size=14, embed_dim=8, latent_dim=10, seed=3)
    config = TrainConfig(epochs=500, batch_size=1, learning_rate=0.01, seed=3)
    best, _ = apm.train([ex], [val], params, config)
    loss = apm.dataset_loss(best, [ex])
    prefix = ActionPath("u", "q", ex.prefix, Behavior.PUR)
    predicted = apm.predict_suffix(best, prefix, max_len=10)
    ok = loss < 0.01 and predicted == list(ex.continuation)
    announce("overfit-sanity", ok, f"loss={loss:.4f}, suffix_exact={predicted == list(ex.continuation)}")
    assert loss < 0.01
    assert predicted == list(ex.continuation)


def test_criterion_url2vec_structure(announce):
    """Two-group cosine gap >= 0.2; NS and exact-softmax rankings agree."""
    rng = np.random.default_rng(23)
    g1, g2 = [7, 8, 9, 10], [11, 12, 13, 14]
    paths = []
    for group in (g1, g2):
        for _ in range(20):
            paths.append([int(rng.choice(group)) for _ in range(15)])
    pairs = build_pairs(paths, 2)
    table = train_embeddings(
        pairs, 15, Url2VecConfig(window=2, dim=16, negatives=5, epochs=20, seed=23)
    )
    intra = [similarity(table, a, b) for grp in (g1, g2) for a in grp for b in grp if a < b]
    inter = [similarity(table, a, b) for a in g1 for b in g2]
    gap = float(np.mean(intra) - np.mean(inter))

    toy_pairs = build_pairs([[7, 8] * 100, [9]], 1)
    ns_table = train_embeddings(
        toy_pairs, 10, Url2VecConfig(window=1, dim=8, negatives=5, epochs=50, seed=11)
    )
    exact_table, _ = train_embeddings_exact(
        toy_pairs, 10, Url2VecConfig(window=1, dim=8, epochs=300, learning_rate=0.5, seed=11)
    )
    ns_rank = [i for i, _ in nearest(ns_table, 7, 3)]
    exact_rank = [i for i, _ in nearest(exact_table, 7, 3)]
    ok = gap >= 0.2 and ns_rank == exact_rank
    announce("url2vec-structure", ok, f"cosine gap={gap:.3f}, rankings {ns_rank} == {exact_rank}")
    assert gap >= 0.2
    assert ns_rank == exact_rank


def test_criterion_pattern_fixtures(announce):
    """Hesitation leaves exactly {4,8,14}; star roots exactly {4,7};
    four-user overlap non-empty; brute-force agreement on 200 graphs."""
    g4 = build_graph(cluster_detour_path())
    rep4 = mine_patterns(g4)
    leaf_orders = sorted(g4.order_of(n) for l in rep4.hesitation_leaves for n in l.nodes)

    r, a, b, s, c, d, t, e, f, g_ = range(7, 17)
    g5 = build_graph(
        ActionPath("u", "fanout-1", tuple((i, 1.0) for i in
                                      [r, a, b, s, c, s, d, s, t, e, t, f, t, g_]), None)
    )
    star_orders = sorted(g5.order_of(star.root) for star in find_breadth_stars(g5))

    graphs = [
        build_graph(ActionPath(f"u{i}", f"s{i}", tuple((x, 1.0) for x in ids), None))
        for i, ids in enumerate([[7, 8, 9, 10], [11, 8, 12, 10], [13, 14, 8], [15, 8, 16]])
    ]
    overlaps = find_overlaps(graphs)

    rng = np.random.default_rng(77)
    agree = 0
    trials = 200
    for _ in range(trials):
        n, edges0 = random_graph(rng)
        g = graph_from_edges(n, edges0)
        blocks, artic = biconnected_components(g.undirected_adjacency())
        und = [(7 + x, 7 + y) for x, y in edges0]
        nodes = list(g.nodes)
        if set(blocks) == brute_force_blocks(nodes, und) and artic == brute_force_articulations(nodes, und):
            agree += 1

    ok = (
        leaf_orders == [4, 8, 14]
        and star_orders == [4, 7]
        and len(overlaps) > 0
        and agree == trials
    )
    announce(
        "pattern-fixtures", ok,
        f"leaves={leaf_orders}, star_roots={star_orders}, "
        f"overlaps={len(overlaps)}, brute_force={agree}/{trials}",
    )
    assert leaf_orders == [4, 8, 14]
    assert star_orders == [4, 7]
    assert len(overlaps) > 0
    assert agree == trials


def test_criterion_statistics_oracle(announce):
    """Exact permutation p equals the full-enumeration oracle for all
    pooled sizes <= 10 (100 seeded trials); U test of [1,2] vs [3,4]
    with alternative 'less' gives exactly 1/6."""
    u, p = mann_whitney_one_tailed([1, 2], [3, 4], "less")
    textbook_ok = (u == 0.0 and p == 1 / 6)

    rng = np.random.default_rng(17)
    agree = 0
    trials = 100
    for _ in range(trials):
        n1 = int(rng.integers(1, 6))
        n2 = int(rng.integers(1, min(6, 11 - n1)))
        x = [float(v) for v in rng.integers(0, 8, size=n1)]
        y = [float(v) for v in rng.integers(0, 8, size=n2)]
        alternative = "greater" if rng.random() < 0.5 else "less"
        u_i, p_i = mann_whitney_one_tailed(x, y, alternative)
        u_o, p_o = enumeration_oracle(x, y, alternative)
        if u_i == u_o and p_i == p_o:
            agree += 1
    ok = textbook_ok and agree == trials
    announce("statistics-oracle", ok, f"textbook p={p:.4f}, oracle agreement={agree}/{trials}")
    assert textbook_ok
    assert agree == trials


_PIPELINE_ARTIFACTS = [
    "data/events.jsonl", "data/manifest.json", "emb.json", "vocab.json",
    "model.json", "curve.csv", "curve.json", "report.json", "graph.dot",
    "stats.json", "stats.csv",
]


def _run_pipeline(root) -> None:
    data = root / "data"
    steps = [
        ["gen", "--counts", "3,3,3", "--seed", "5", "--out", str(data)],
        ["embed", "--data", str(data), "--epochs", "2", "--seed", "5",
         "--out", str(root / "emb.json"), "--vocab-out", str(root / "vocab.json")],
        ["train", "--data", str(data), "--embeddings", str(root / "emb.json"),
         "--epochs", "3", "--batch", "4", "--latent", "5", "--seed", "5",
         "--out", str(root / "model.json")],
        ["eval-curve", "--model", str(root / "model.json"), "--data", str(data),
         "--fractions", "0.5,0.99", "--out", str(root / "curve.csv")],
        ["patterns", "--data", str(data), "--session", "train-trg-000",
         "--out", str(root / "report.json")],
        ["patterns", "--data", str(data), "--session", "train-trg-000",
         "--dot", "--out", str(root / "graph.dot")],
        ["stats", "--data", str(data), "--measure", "actions",
         "--out", str(root / "stats.json"), "--csv", str(root / "stats.csv")],
    ]
    for argv in steps:
        assert cli_run(argv) == 0, f"pipeline step failed: {argv}"


def test_criterion_determinism(tmp_path, capsys, announce):
    """Identical seeds and inputs give byte-identical JSON/CSV/DOT outputs."""
    a = tmp_path / "a"
    b = tmp_path / "b"
    a.mkdir()
    b.mkdir()
    _run_pipeline(a)
    _run_pipeline(b)
    capsys.readouterr()  # swallow pipeline stdout
    mismatched = [
        rel for rel in _PIPELINE_ARTIFACTS
        if (a / rel).read_bytes() != (b / rel).read_bytes()
    ]
    announce("determinism", not mismatched,
             f"{len(_PIPELINE_ARTIFACTS) - len(mismatched)}/{len(_PIPELINE_ARTIFACTS)} artifacts identical")
    assert mismatched == [], f"non-deterministic artifacts: {mismatched}"