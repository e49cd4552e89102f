"""Skip-gram embedding training: pairs, negative sampling, oracles."""

import io
from collections import Counter

import numpy as np
import pytest

from clickpath.errors import EmptyCorpus, IndexOutOfRange
from clickpath.numerics import grad_check
from clickpath.url2vec import (
    EmbeddingTable, Url2VecConfig, build_pairs, nearest, ns_loss,
    ns_loss_and_grads, pair_count_formula, predicted_distribution,
    similarity, train_embeddings, train_embeddings_exact,
)

A, B, C = 7, 8, 9


class TestBuildPairs:
    def test_window_one_enumeration(self):
        pairs = build_pairs([[A, B, C]], window=1)
        assert Counter(pairs) == Counter([(A, B), (B, A), (B, C), (C, B)])

    def test_single_token_yields_nothing(self):
        assert build_pairs([[A]], window=3) == []

    def test_window_two_adds_second_neighbors(self):
        pairs = set(build_pairs([[A, B, C]], window=2))
        assert pairs == {(A, B), (B, A), (B, C), (C, B), (A, C), (C, A)}

    def test_pairs_never_cross_sessions(self):
        pairs = build_pairs([[A, B], [C]], window=4)
        assert (B, C) not in pairs and (C, B) not in pairs

    def test_count_matches_closed_form(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            lengths = rng.integers(1, 12, size=rng.integers(1, 5))
            window = int(rng.integers(1, 5))
            paths = [list(range(7, 7 + L)) for L in lengths]
            pairs = build_pairs(paths, window)
            assert len(pairs) == pair_count_formula([int(L) for L in lengths], window)

    def test_marks_rejected(self):
        with pytest.raises(ValueError):
            build_pairs([[3, 7]], window=1)


def alternating_corpus(n=200):
    """A,B,A,B,... plus a lone C so the third URL exists in the vocab."""
    return [[A, B] * (n // 2), [C]]


class TestTrainEmbeddings:
    def test_zero_epochs_returns_seeded_init(self):
        pairs = build_pairs(alternating_corpus(), 1)
        cfg = Url2VecConfig(window=1, dim=8, epochs=0, seed=5)
        t1 = train_embeddings(pairs, 10, cfg)
        t2 = train_embeddings(pairs, 10, cfg)
        assert np.array_equal(t1.input_vectors, t2.input_vectors)
        bound = 0.5 / cfg.dim
        assert np.all(np.abs(t1.input_vectors) <= bound)

    def test_deterministic_given_seed(self):
        pairs = build_pairs(alternating_corpus(), 1)
        cfg = Url2VecConfig(window=1, dim=8, epochs=3, seed=5)
        t1 = train_embeddings(pairs, 10, cfg)
        t2 = train_embeddings(pairs, 10, cfg)
        assert np.array_equal(t1.input_vectors, t2.input_vectors)
        assert np.array_equal(t1.output_vectors, t2.output_vectors)

    def test_empty_corpus_raises(self):
        with pytest.raises(EmptyCorpus):
            train_embeddings([], 10, Url2VecConfig())

    def test_alternating_corpus_puts_b_after_a(self):
        pairs = build_pairs(alternating_corpus(), 1)
        cfg = Url2VecConfig(window=1, dim=8, negatives=5, epochs=50, seed=11)
        table = train_embeddings(pairs, 10, cfg)
        p = predicted_distribution(table, A)
        assert p[B] > p[C]
        assert int(np.argmax(p[7:])) + 7 == B

    def test_exact_softmax_oracle_agrees_on_toy(self):
        pairs = build_pairs(alternating_corpus(), 1)
        ns_cfg = Url2VecConfig(window=1, dim=8, negatives=5, epochs=50, seed=11)
        ns_table = train_embeddings(pairs, 10, ns_cfg)
        cfg = Url2VecConfig(window=1, dim=8, epochs=300, learning_rate=0.5, seed=11)
        table, history = train_embeddings_exact(pairs, 10, cfg)
        p = predicted_distribution(table, A)
        assert p[B] > p[C]
        # both training routes impose the same nearest-neighbor ranking
        ns_rank = [i for i, _ in nearest(ns_table, A, 3)]
        exact_rank = [i for i, _ in nearest(table, A, 3)]
        assert ns_rank == exact_rank
        # full-batch descent on a smooth objective: monotone loss
        assert all(b <= a + 1e-12 for a, b in zip(history, history[1:]))

    def test_shared_context_tokens_become_nearest_neighbors(self):
        # A and B always appear in the same context (around hub H), so
        # their input vectors align and each is the other's neighbor
        H = 10
        corpus = [[H, A, H, B] * 50, [C]]
        pairs = build_pairs(corpus, 1)
        cfg = Url2VecConfig(window=1, dim=8, negatives=5, epochs=50, seed=11)
        table = train_embeddings(pairs, 11, cfg)
        assert nearest(table, A, 1)[0][0] == B
        assert nearest(table, B, 1)[0][0] == A

    def test_relabeling_equivariance(self):
        base = [[7, 8, 9, 7, 8], [9, 8, 7, 7]]
        perm = {7: 9, 8: 7, 9: 8}
        relabeled = [[perm[i] for i in path] for path in base]
        cfg = Url2VecConfig(window=2, dim=6, epochs=4, seed=3)
        t1 = train_embeddings(build_pairs(base, 2), 10, cfg)
        t2 = train_embeddings(build_pairs(relabeled, 2), 10, cfg)
        for old, new in perm.items():
            assert np.array_equal(t1.input_vectors[old], t2.input_vectors[new])
            assert np.array_equal(t1.output_vectors[old], t2.output_vectors[new])


def two_group_corpus(rng, group1, group2, sessions=20, length=15):
    paths = []
    for group in (group1, group2):
        for _ in range(sessions):
            paths.append([int(rng.choice(group)) for _ in range(length)])
    return paths


class TestGroupStructure:
    def test_intra_group_cosine_beats_inter_group(self):
        rng = np.random.default_rng(23)
        g1, g2 = [7, 8, 9, 10], [11, 12, 13, 14]
        paths = two_group_corpus(rng, g1, g2)
        pairs = build_pairs(paths, 2)
        cfg = Url2VecConfig(window=2, dim=16, negatives=5, epochs=20, seed=23)
        table = train_embeddings(pairs, 15, cfg)
        intra = [similarity(table, a, b) for grp in (g1, g2)
                 for a in grp for b in grp if a < b]
        inter = [similarity(table, a, b) for a in g1 for b in g2]
        gap = np.mean(intra) - np.mean(inter)
        assert gap >= 0.2, f"cosine gap {gap:.3f}"


class TestNsGradients:
    def test_loss_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        inp = rng.normal(scale=0.3, size=(8, 4))
        out = rng.normal(scale=0.3, size=(8, 4))
        samples = [(7, 3, (2, 5)), (6, 2, (3, 3, 1)), (5, 7, (0,))]

        def loss_fn(ps):
            return ns_loss(ps[0], ps[1], samples)

        def grad_fn(ps):
            _, gi, go = ns_loss_and_grads(ps[0], ps[1], samples)
            return [gi, go]

        assert grad_check(loss_fn, [inp, out], grad_fn) < 1e-4

    def test_loss_matches_grad_variant(self):
        rng = np.random.default_rng(3)
        inp = rng.normal(size=(6, 3))
        out = rng.normal(size=(6, 3))
        samples = [(1, 2, (3, 4))]
        assert abs(ns_loss(inp, out, samples) - ns_loss_and_grads(inp, out, samples)[0]) < 1e-12


class TestSimilarityNearest:
    def _table(self, rows):
        arr = np.array(rows, dtype=float)
        return EmbeddingTable(input_vectors=arr, output_vectors=arr.copy())

    def test_self_similarity_is_one(self):
        t = self._table(np.vstack([np.zeros((7, 2)), [[1.0, 2.0], [0.5, 1.0]]]))
        assert similarity(t, 7, 7) == pytest.approx(1.0)

    def test_orthogonal_is_zero(self):
        t = self._table(np.vstack([np.zeros((7, 2)), [[1.0, 0.0], [0.0, 3.0]]]))
        assert similarity(t, 7, 8) == pytest.approx(0.0)

    def test_opposite_is_minus_one(self):
        t = self._table(np.vstack([np.zeros((7, 2)), [[1.0, 1.0], [-2.0, -2.0]]]))
        assert similarity(t, 7, 8) == pytest.approx(-1.0)

    def test_zero_norm_vector_gives_zero(self):
        t = self._table(np.vstack([np.zeros((7, 2)), [[0.0, 0.0], [1.0, 1.0]]]))
        assert similarity(t, 7, 8) == 0.0

    def test_scalar_multiple_ranks_first_with_cosine_one(self):
        t = self._table(np.vstack([np.zeros((7, 2)), [[1.0, 2.0], [2.0, 4.0], [9.0, -1.0]]]))
        top = nearest(t, 7, 1)
        assert top[0][0] == 8
        assert top[0][1] == pytest.approx(1.0)

    def test_n_larger_than_vocab_returns_all_others(self):
        t = self._table(np.vstack([np.zeros((7, 2)), np.eye(2), [[1.0, 1.0]]]))
        result = nearest(t, 7, 100)
        assert [i for i, _ in result] == [9, 8]  # ties after marks/self excluded

    def test_ties_break_ascending_id(self):
        t = self._table(np.vstack([np.zeros((7, 2)), [[1.0, 0.0]] * 3]))
        result = nearest(t, 9, 2)
        assert [i for i, _ in result] == [7, 8]

    def test_bad_index_raises(self):
        t = self._table(np.zeros((8, 2)))
        with pytest.raises(IndexOutOfRange):
            similarity(t, 0, 99)
        with pytest.raises(IndexOutOfRange):
            nearest(t, 99, 1)


class TestSerialization:
    def test_save_load_roundtrip(self):
        pairs = build_pairs([[A, B, A]], 1)
        cfg = Url2VecConfig(window=1, dim=4, epochs=2, seed=1)
        table = train_embeddings(pairs, 10, cfg)
        buf = io.StringIO()
        table.save(buf, cfg)
        buf.seek(0)
        loaded, cfg2 = EmbeddingTable.load(buf)
        assert cfg2 == cfg
        assert np.array_equal(loaded.input_vectors, table.input_vectors)
        assert np.array_equal(loaded.output_vectors, table.output_vectors)
