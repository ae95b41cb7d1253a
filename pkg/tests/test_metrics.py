import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synthanom.metrics import (
    ScoredSet,
    UndefinedMetricError,
    auroc,
    average_precision,
    reduce_to_slices,
)
from synthanom.rng import RngStream


def oracle_ap(scores, targets):
    """Threshold-sweep brute force with the same arithmetic order."""
    n_pos = sum(targets)
    ap = 0.0
    prev_recall = 0.0
    for th in sorted(set(scores), reverse=True):
        tp = sum(1 for s, t in zip(scores, targets) if t and s >= th)
        fp = sum(1 for s, t in zip(scores, targets) if not t and s >= th)
        precision = tp / (tp + fp)
        recall = tp / n_pos
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def oracle_auroc(scores, targets):
    """All positive/negative pairs, half credit for ties."""
    pos = [s for s, t in zip(scores, targets) if t]
    neg = [s for s, t in zip(scores, targets) if not t]
    wins = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1.0
            elif p == n:
                wins += 0.5
    return wins / (len(pos) * len(neg))


class TestAveragePrecision:
    def test_perfect_separation(self):
        s = ScoredSet([0.9, 0.8, 0.2, 0.1], [True, True, False, False])
        assert average_precision(s) == 1.0

    def test_interleaved_example(self):
        s = ScoredSet([0.9, 0.8, 0.7, 0.6], [True, False, True, False])
        expected = 0.5 * 1.0 + 0.5 * (2.0 / 3.0)
        assert average_precision(s) == pytest.approx(expected, abs=1e-12)
        assert average_precision(s) == oracle_ap([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0])

    def test_constant_scores_give_prevalence(self):
        s = ScoredSet([0.4] * 10, [True] * 3 + [False] * 7)
        assert average_precision(s) == pytest.approx(0.3, abs=1e-12)

    def test_no_positives(self):
        with pytest.raises(UndefinedMetricError):
            average_precision(ScoredSet([0.1, 0.2], [False, False]))

    def test_random_scores_mean_prevalence(self):
        # step AP can dip below prevalence for adversarial rankings (e.g.
        # scores (0.1, 0.5, 0.5) with targets (T, F, T) gives 7/12 < 2/3),
        # but random scorings average out to prevalence
        gen = RngStream(3, 0).generator()
        targets = gen.random(50_000) < 0.3
        scores = gen.random(50_000)
        value = average_precision(ScoredSet(scores, targets))
        assert abs(value - 0.3) <= 0.01


class TestAuroc:
    def test_perfect_separation(self):
        assert auroc(ScoredSet([3.0, 2.0, 1.0], [True, False, False])) == 1.0

    def test_middle_positive(self):
        assert auroc(ScoredSet([1.0, 2.0, 3.0], [False, True, False])) == 0.5

    def test_single_class(self):
        with pytest.raises(UndefinedMetricError):
            auroc(ScoredSet([1.0, 2.0], [True, True]))

    def test_random_scores_near_half(self):
        gen = RngStream(1, 0).generator()
        scores = gen.random(100_000)
        targets = gen.random(100_000) < 0.3
        value = auroc(ScoredSet(scores, targets))
        assert abs(value - 0.5) <= 0.01

    def test_complement_identity(self):
        gen = RngStream(2, 0).generator()
        scores = gen.permutation(40).astype(float)  # tie-free
        targets = gen.random(40) < 0.4
        if targets.any() and (~targets).any():
            s = ScoredSet(scores, targets)
            flipped = ScoredSet(-scores, targets)
            assert auroc(s) + auroc(flipped) == pytest.approx(1.0, abs=1e-12)


class TestOracleEquivalence:
    def test_exhaustive_small_inputs(self):
        # every multiset of (score, target) pairs up to length 6 here;
        # the acceptance suite extends this to length 8
        alphabet = [(s, t) for s in (0.1, 0.5, 0.9) for t in (False, True)]
        checked = 0
        for n in range(1, 7):
            for combo in itertools.combinations_with_replacement(alphabet, n):
                scores = [c[0] for c in combo]
                targets = [c[1] for c in combo]
                if any(targets):
                    assert average_precision(ScoredSet(scores, targets)) == oracle_ap(
                        scores, targets
                    )
                if any(targets) and not all(targets):
                    assert auroc(ScoredSet(scores, targets)) == oracle_auroc(scores, targets)
                checked += 1
        assert checked == 923  # sum of C(n+5, 5) for n = 1..6

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(
            st.tuples(st.floats(0, 1, width=32), st.booleans()), min_size=2, max_size=30
        )
    )
    def test_rank_invariance(self, pairs):
        scores = np.array([p[0] for p in pairs])
        targets = np.array([p[1] for p in pairs])
        if not (targets.any() and (~targets).any()):
            return
        # strictly increasing transform that cannot collapse float values:
        # map each score to the square of its dense rank
        ranks = np.searchsorted(np.unique(scores), scores).astype(float)
        transformed = (ranks + 1.0) ** 2
        a = ScoredSet(scores, targets)
        b = ScoredSet(transformed, targets)
        assert auroc(a) == pytest.approx(auroc(b), abs=1e-12)
        assert average_precision(a) == pytest.approx(average_precision(b), abs=1e-12)


class TestReduceToSlices:
    def test_all_zero_labels(self):
        scores = np.zeros((4, 5, 5))
        out = reduce_to_slices(scores, np.zeros((4, 5, 5)), axis=0)
        assert not out.targets.any()

    def test_single_anomalous_voxel(self):
        labels = np.zeros((6, 4, 4))
        labels[3, 1, 2] = 0.9
        out = reduce_to_slices(np.zeros((6, 4, 4)), labels, axis=0)
        assert out.targets.tolist() == [False, False, False, True, False, False]

    def test_max_reducer_takes_maxima(self):
        scores = np.zeros((3, 2, 2))
        scores[0, 0, 0] = 0.1
        scores[1, 1, 1] = 0.9
        scores[2, 0, 1] = 0.4
        out = reduce_to_slices(scores, np.zeros((3, 2, 2)), axis=0, reducer="max")
        assert out.scores.tolist() == [0.1, 0.9, 0.4]

    def test_axis_and_reducer_validation(self):
        with pytest.raises(ValueError):
            reduce_to_slices(np.zeros((3, 3)), np.zeros((3, 3)), axis=5)
        with pytest.raises(ValueError):
            reduce_to_slices(np.zeros((3, 3)), np.zeros((3, 3)), reducer="median")
        with pytest.raises(ValueError):
            reduce_to_slices(np.zeros((3, 3)), np.zeros((4, 3)))
