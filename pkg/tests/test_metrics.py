import itertools

import numpy as np
import pytest

from ahmca.errors import EmptyTruthError, UnknownLabelError
from ahmca.metrics import (
    MetricsReport,
    hierarchy_violation_rate,
    macro_f1,
    macro_precision_recall,
    precision_at_k,
    top_k_indices,
)


def brute_force_macro(predicted, truth, classes):
    """Independent per-class confusion counting by full enumeration."""
    ps, rs = [], []
    for c in classes:
        tp = sum(1 for p, t in zip(predicted, truth) if c in p and c in t)
        fp = sum(1 for p, t in zip(predicted, truth) if c in p and c not in t)
        fn = sum(1 for p, t in zip(predicted, truth) if c not in p and c in t)
        ps.append(tp / (tp + fp) if tp + fp else 0.0)
        rs.append(tp / (tp + fn) if tp + fn else 0.0)
    return sum(ps) / len(classes), sum(rs) / len(classes)


def test_macro_hand_fixture():
    classes = ["a", "b"]
    predicted = [{"a"}, {"a"}, {"b"}, {"b"}]
    truth = [{"a"}, {"b"}, {"b"}, {"a"}]
    p, r = macro_precision_recall(predicted, truth, classes)
    assert p == pytest.approx(0.5)
    assert r == pytest.approx(0.5)
    assert macro_f1(p, r) == pytest.approx(0.5)


def test_macro_perfect():
    classes = ["a", "b", "c"]
    sets = [{"a"}, {"b", "c"}, {"c"}]
    p, r = macro_precision_recall(sets, sets, classes)
    assert p == r == 1.0
    assert macro_f1(p, r) == 1.0


def test_macro_asymmetric_fixture():
    # a: tp=1 fn=1, b: tp=1, c: tp=1, d: fp=1
    classes = ["a", "b", "c", "d"]
    predicted = [{"a"}, {"b"}, {"c"}, {"d"}]
    truth = [{"a"}, {"b"}, {"c"}, {"a"}]
    p, r = macro_precision_recall(predicted, truth, classes)
    assert p == pytest.approx(0.75)
    assert r == pytest.approx(0.625)
    assert macro_f1(p, r) == pytest.approx(2 * 0.75 * 0.625 / 1.375)


def test_macro_zero_guard():
    assert macro_f1(0.0, 0.0) == 0.0
    p, r = macro_precision_recall([set()], [set()], ["a"])
    assert (p, r) == (0.0, 0.0)


def test_macro_unknown_label():
    with pytest.raises(UnknownLabelError):
        macro_precision_recall([{"zzz"}], [{"a"}], ["a"])


def test_macro_matches_brute_force():
    rng = np.random.default_rng(11)
    classes = ["c%d" % i for i in range(6)]
    for _ in range(200):
        n = int(rng.integers(1, 9))
        predicted = [{c for c in classes if rng.random() < 0.3} for _ in range(n)]
        truth = [{c for c in classes if rng.random() < 0.3} for _ in range(n)]
        got = macro_precision_recall(predicted, truth, classes)
        want = brute_force_macro(predicted, truth, classes)
        assert got[0] == pytest.approx(want[0])
        assert got[1] == pytest.approx(want[1])


def test_macro_document_permutation_invariant():
    rng = np.random.default_rng(12)
    classes = ["x", "y", "z"]
    predicted = [{c for c in classes if rng.random() < 0.5} for _ in range(7)]
    truth = [{c for c in classes if rng.random() < 0.5} for _ in range(7)]
    base = macro_precision_recall(predicted, truth, classes)
    perm = list(rng.permutation(7))
    shuffled = macro_precision_recall([predicted[i] for i in perm],
                                      [truth[i] for i in perm], classes)
    assert base == pytest.approx(shuffled)


def test_top_k_ties_prefer_lower_index():
    assert list(top_k_indices([0.5, 0.9, 0.5], 2)) == [1, 0]
    assert list(top_k_indices([1.0, 1.0, 1.0], 2)) == [0, 1]


def test_precision_at_k_hand_values():
    classes = ["a", "b", "c"]
    scores = [np.array([0.9, 0.1, 0.5])]
    truth = [{"a"}]
    assert precision_at_k(scores, truth, 1, classes) == 1.0
    assert precision_at_k(scores, truth, 2, classes) == 0.5


def test_precision_at_k_mean_over_docs():
    classes = ["a", "b"]
    scores = [np.array([0.9, 0.1]), np.array([0.1, 0.9])]
    truth = [{"a"}, {"a"}]
    assert precision_at_k(scores, truth, 1, classes) == pytest.approx(0.5)


def test_precision_at_k_empty_truth():
    with pytest.raises(EmptyTruthError):
        precision_at_k([np.array([0.5])], [set()], 1, ["a"])


def test_precision_at_k_times_k_monotone():
    # the raw hit count (p@k * k) can only grow as k increases
    rng = np.random.default_rng(13)
    classes = ["c%d" % i for i in range(8)]
    scores = [rng.uniform(size=8) for _ in range(5)]
    truth = [{c for c in rng.choice(classes, size=3, replace=False)} for _ in range(5)]
    hits = [precision_at_k(scores, truth, k, classes) * k for k in range(1, 9)]
    assert all(b >= a - 1e-12 for a, b in zip(hits, hits[1:]))


def test_precision_at_k_brute_force():
    rng = np.random.default_rng(14)
    classes = ["c%d" % i for i in range(5)]
    for _ in range(50):
        scores = [rng.uniform(size=5) for _ in range(3)]
        truth = [{classes[int(rng.integers(5))]} for _ in range(3)]
        k = int(rng.integers(1, 6))
        got = precision_at_k(scores, truth, k, classes)
        # oracle: sort (score, -index) pairs explicitly
        total = 0.0
        for s, t in zip(scores, truth):
            ranked = sorted(range(5), key=lambda i: (-s[i], i))[:k]
            total += len({classes[i] for i in ranked} & t) / k
        assert got == pytest.approx(total / 3)


def test_violation_rate(two_level_tax):
    sets = [
        {"A", "A1"},        # consistent
        {"A1"},             # parent missing -> violation
        {"B", "B1", "A2"},  # one of two non-root labels violates
    ]
    rate = hierarchy_violation_rate(sets, two_level_tax)
    # non-root predictions: A1, A1, B1, A2 -> 2 violations of 4
    assert rate == pytest.approx(0.5)


def test_violation_rate_empty(two_level_tax):
    assert hierarchy_violation_rate([], two_level_tax) == 0.0
    assert hierarchy_violation_rate([{"A"}, {"B"}], two_level_tax) == 0.0


def test_report_json_roundtrip():
    import json
    rep = MetricsReport(macro_p=0.5, macro_r=0.25, macro_f1=1 / 3,
                        p_at_k={1: 0.9, 3: 0.7}, violation_rate=0.0,
                        n_documents=10, n_classes=5)
    d = json.loads(rep.to_json())
    assert d["macro_p"] == 0.5
    assert d["p_at_k"]["3"] == 0.7
    assert d["n_documents"] == 10
