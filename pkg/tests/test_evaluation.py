"""Metrics, k-fold splitting, and the Mann-Whitney U test."""

from itertools import combinations

import numpy as np
import pytest

from clickpath.apm import TrainConfig, examples_from_paths, init_params, train
from clickpath.errors import EmptyDataset, EmptySample, EmptyTruth, InvalidK
from clickpath.evaluation import (
    classification_accuracy, curve_to_csv, fraction_curve, kfold_split,
    mann_whitney_one_tailed, token_accuracy,
)
from clickpath.events import Behavior
from clickpath.paths import ActionPath
from clickpath.vocab import EOA_TRG


def make_path(ids, label=Behavior.TRG, sid="p"):
    return ActionPath("u", sid, tuple((i, 1.0) for i in ids), label)


class TestTokenAccuracy:
    def test_identical(self):
        assert token_accuracy([1, 2, 3], [1, 2, 3]) == 1.0

    def test_disjoint(self):
        assert token_accuracy([4, 5], [1, 2]) == 0.0

    def test_truth_length_is_the_denominator(self):
        assert token_accuracy([1, 2], [1, 3, 4]) == pytest.approx(1 / 3)

    def test_long_prediction_gains_nothing(self):
        assert token_accuracy([1, 2, 3, 4], [1, 2]) == 1.0

    def test_empty_truth_raises(self):
        with pytest.raises(EmptyTruth):
            token_accuracy([1], [])


def rigged_model(favored=EOA_TRG, vocab=12):
    params = init_params(vocab, 4, 3, seed=1)
    params.arrays["b_out"] = np.zeros_like(params.arrays["b_out"])
    params.arrays["b_out"][favored] = 50.0
    return params


class TestClassificationAccuracy:
    def test_all_correct(self):
        model = rigged_model(EOA_TRG)
        paths = [make_path([7, 8], Behavior.TRG, f"p{i}") for i in range(3)]
        assert classification_accuracy(model, paths) == 1.0

    def test_all_wrong(self):
        model = rigged_model(EOA_TRG)
        paths = [make_path([7, 8], Behavior.EXP, f"p{i}") for i in range(3)]
        assert classification_accuracy(model, paths) == 0.0

    def test_two_of_three(self):
        model = rigged_model(EOA_TRG)
        paths = [
            make_path([7], Behavior.TRG, "a"),
            make_path([8], Behavior.TRG, "b"),
            make_path([9], Behavior.EXP, "c"),
        ]
        assert classification_accuracy(model, paths) == pytest.approx(2 / 3)

    def test_empty_dataset(self):
        with pytest.raises(EmptyDataset):
            classification_accuracy(rigged_model(), [])


def memorizing_model():
    """Train one 4-action path at every cut so all fractions reproduce it."""
    path = make_path([7, 9, 8, 10], Behavior.PUR, "train-1")
    train_ex = examples_from_paths([path], objective="mixed",
                                   fractions=(0.25, 0.5, 0.75))
    val_path = ActionPath("u", "val-1", path.actions, path.label)
    val_ex = examples_from_paths([val_path], objective="mixed",
                                 fractions=(0.25, 0.5, 0.75))
    params = init_params(11, 8, 10, seed=4)
    config = TrainConfig(epochs=400, batch_size=4, learning_rate=0.02, seed=4)
    best, _ = train(train_ex, val_ex, params, config)
    return best, path


class TestFractionCurve:
    def test_memorizing_model_is_perfect_everywhere(self):
        model, path = memorizing_model()
        points = fraction_curve(model, [path], [0.2, 0.4, 0.6, 0.8, 0.99])
        assert all(acc == 1.0 for _, acc in points)

    def test_endpoint_equals_classification_accuracy_exactly(self):
        # holds structurally for any model, trained or not
        model = init_params(12, 4, 3, seed=7)
        paths = [
            make_path([7, 8, 9], Behavior.TRG, "a"),
            make_path([9, 8], Behavior.PUR, "b"),
            make_path([10, 7, 11], Behavior.EXP, "c"),
        ]
        points = fraction_curve(model, paths, [0.99])
        assert points[0][1] == classification_accuracy(model, paths)

    def test_invalid_fraction_rejected(self):
        model = init_params(12, 4, 3, seed=7)
        with pytest.raises(ValueError):
            fraction_curve(model, [make_path([7])], [0.0])
        with pytest.raises(ValueError):
            fraction_curve(model, [make_path([7])], [1.2])

    def test_empty_dataset_rejected(self):
        model = init_params(12, 4, 3, seed=7)
        with pytest.raises(EmptyDataset):
            fraction_curve(model, [], [0.5])

    def test_csv_rendering(self):
        text = curve_to_csv([(0.2, 0.5), (0.9, 0.75)])
        assert text == "fraction,accuracy\n0.2,0.5\n0.9,0.75\n"


class TestKfoldSplit:
    def _paths(self, n, labels=None):
        labels = labels or [Behavior.TRG] * n
        return [make_path([7 + i % 3], labels[i], f"s{i}") for i in range(n)]

    def test_ten_items_five_folds_of_two(self):
        folds = kfold_split(self._paths(10), 5, seed=0)
        assert [len(f) for f in folds] == [2, 2, 2, 2, 2]

    def test_eleven_items_sizes_within_one(self):
        folds = kfold_split(self._paths(11), 5, seed=0)
        assert sorted(len(f) for f in folds) == [2, 2, 2, 2, 3]

    def test_same_seed_identical_folds(self):
        paths = self._paths(9)
        a = kfold_split(paths, 3, seed=5)
        b = kfold_split(paths, 3, seed=5)
        assert [[p.session_id for p in f] for f in a] == [
            [p.session_id for p in f] for f in b
        ]

    def test_folds_partition_the_dataset(self):
        paths = self._paths(11)
        folds = kfold_split(paths, 4, seed=2)
        ids = sorted(p.session_id for f in folds for p in f)
        assert ids == sorted(p.session_id for p in paths)

    def test_class_stratified(self):
        labels = [Behavior.TRG] * 3 + [Behavior.PUR] * 3 + [Behavior.EXP] * 3
        folds = kfold_split(self._paths(9, labels), 3, seed=1)
        for fold in folds:
            assert sorted(p.label.value for p in fold) == ["EXP", "PUR", "TRG"]

    def test_invalid_k(self):
        with pytest.raises(InvalidK):
            kfold_split(self._paths(5), 1, seed=0)
        with pytest.raises(InvalidK):
            kfold_split(self._paths(5), 6, seed=0)


def pairwise_u(x, y):
    """U from pairwise comparisons: wins + half-ties (independent route)."""
    u = 0.0
    for xi in x:
        for yj in y:
            if xi > yj:
                u += 1.0
            elif xi == yj:
                u += 0.5
    return u


def enumeration_oracle(x, y, alternative):
    """Full enumeration of group assignments using the pairwise-count U."""
    pooled = list(x) + list(y)
    n1 = len(x)
    u_obs = pairwise_u(x, y)
    hits = total = 0
    for combo in combinations(range(len(pooled)), n1):
        xs = [pooled[i] for i in combo]
        ys = [pooled[i] for i in range(len(pooled)) if i not in set(combo)]
        u = pairwise_u(xs, ys)
        total += 1
        if alternative == "greater":
            hits += u >= u_obs
        else:
            hits += u <= u_obs
    return u_obs, hits / total


class TestMannWhitney:
    def test_textbook_example_exact_sixth(self):
        u, p = mann_whitney_one_tailed([1, 2], [3, 4], "less")
        assert u == 0.0
        assert p == pytest.approx(1 / 6)

    def test_identical_singletons_no_evidence(self):
        _, p = mann_whitney_one_tailed([5.0], [5.0], "greater")
        assert p >= 0.5

    def test_u_statistics_sum_to_n1_n2_without_ties(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            x = list(rng.permutation(100)[: rng.integers(2, 6)].astype(float))
            y = list(rng.permutation(200)[: rng.integers(2, 6)].astype(float) + 0.5)
            ux, _ = mann_whitney_one_tailed(x, y, "greater")
            uy, _ = mann_whitney_one_tailed(y, x, "greater")
            assert ux + uy == pytest.approx(len(x) * len(y))

    def test_exact_p_matches_full_enumeration_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            n1 = int(rng.integers(1, 6))
            n2 = int(rng.integers(1, min(6, 11 - n1)))
            x = [float(v) for v in rng.integers(0, 8, size=n1)]
            y = [float(v) for v in rng.integers(0, 8, size=n2)]
            alternative = "greater" if rng.random() < 0.5 else "less"
            u_impl, p_impl = mann_whitney_one_tailed(x, y, alternative)
            u_oracle, p_oracle = enumeration_oracle(x, y, alternative)
            assert u_impl == pytest.approx(u_oracle)
            assert p_impl == pytest.approx(p_oracle)

    def test_normal_approximation_close_to_exact_for_small_samples(self):
        # integers from a range wide enough that ties stay occasional;
        # the continuity-corrected asymptotic p is coarse at n=3 (it pins
        # to 0.5 whenever U sits at its mean), so sizes 4-6 are exercised
        rng = np.random.default_rng(29)
        for _ in range(50):
            n1 = int(rng.integers(4, 7))
            n2 = int(rng.integers(4, 7))
            x = [float(v) for v in rng.integers(0, 50, size=n1)]
            y = [float(v) for v in rng.integers(0, 50, size=n2)]
            _, p_exact = mann_whitney_one_tailed(x, y, "greater", method="exact")
            _, p_normal = mann_whitney_one_tailed(x, y, "greater", method="normal")
            assert abs(p_exact - p_normal) < 0.05

    def test_large_samples_use_normal_path(self):
        rng = np.random.default_rng(31)
        x = list(rng.normal(1.0, 1.0, size=30))
        y = list(rng.normal(0.0, 1.0, size=30))
        _, p = mann_whitney_one_tailed(x, y, "greater")
        assert 0.0 < p < 0.01  # clearly shifted samples

    def test_empty_sample_rejected(self):
        with pytest.raises(EmptySample):
            mann_whitney_one_tailed([], [1.0], "greater")

    def test_bad_alternative_rejected(self):
        with pytest.raises(ValueError):
            mann_whitney_one_tailed([1.0], [2.0], "two-sided")
