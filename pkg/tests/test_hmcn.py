import numpy as np
import pytest

from ahmca.errors import DimMismatchError
from ahmca.hmcn import (
    Prediction,
    child_parent_index_pairs,
    fuse,
    global_predict,
    global_step,
    head_backward,
    head_forward,
    head_loss,
    init_head_params,
    local_predict,
    loss,
    violation_penalty,
)
from ahmca.numerics import grad_check


def test_global_step_zero_weights():
    out = global_step(None, np.ones(4), np.zeros((3, 4)), np.zeros(3))
    assert np.array_equal(out, np.zeros(3))


def test_global_step_concatenation_order():
    A_prev = np.array([1.0, 2.0])
    x = np.array([3.0])
    W = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    out = global_step(A_prev, x, W, np.zeros(2))
    assert np.array_equal(out, [1.0, 3.0])  # A_prev comes first, then x_h


def test_global_predict_zero_weights_half():
    p = global_predict(np.ones(3), np.ones(2), np.zeros((5, 5)), np.zeros(5))
    assert np.allclose(p, 0.5)


def test_local_predict_zero_weights_half():
    p = local_predict(np.ones(4), np.zeros((3, 4)), np.zeros(3),
                      np.zeros((2, 3)), np.zeros(2))
    assert np.allclose(p, 0.5)


def test_fuse_endpoints():
    pl = [np.array([0.2, 0.4]), np.array([0.6])]
    pg = np.array([0.9, 0.1, 0.5])
    assert np.array_equal(fuse(pl, pg, 0.0), pg)
    assert np.array_equal(fuse(pl, pg, 1.0), [0.2, 0.4, 0.6])


def test_fuse_betweenness():
    rng = np.random.default_rng(0)
    pl = [rng.uniform(size=3), rng.uniform(size=2)]
    pg = rng.uniform(size=5)
    cat = np.concatenate(pl)
    for beta in (0.25, 0.5, 0.75):
        f = fuse(pl, pg, beta)
        assert np.all(f >= np.minimum(cat, pg) - 1e-12)
        assert np.all(f <= np.maximum(cat, pg) + 1e-12)


def test_fuse_dim_mismatch():
    with pytest.raises(DimMismatchError):
        fuse([np.zeros(2)], np.zeros(3), 0.5)


def test_violation_penalty_hand_value(two_level_tax):
    pairs = child_parent_index_pairs(two_level_tax)
    # order is A, B, A1, A2, B1: make A1 exceed its parent A by 0.5
    scores = np.array([0.2, 0.9, 0.7, 0.1, 0.3])
    assert violation_penalty(scores, pairs, 0.1) == pytest.approx(0.1 * 0.5 ** 2)


def test_violation_penalty_consistent_is_zero(two_level_tax):
    pairs = child_parent_index_pairs(two_level_tax)
    scores = np.array([0.9, 0.8, 0.5, 0.4, 0.3])
    assert violation_penalty(scores, pairs, 1.0) == 0.0


def test_child_parent_pairs(two_level_tax):
    pairs = child_parent_index_pairs(two_level_tax)
    # A=0, B=1, A1=2, A2=3, B1=4
    assert set(pairs) == {(2, 0), (3, 0), (4, 1)}


def test_loss_at_half_scores(two_level_tax):
    # all probabilities 0.5 -> every BCE term is log 2, penalty is zero
    pred = Prediction(global_scores=np.full(5, 0.5),
                      local_scores=[np.full(2, 0.5), np.full(3, 0.5)],
                      fused_scores=np.full(5, 0.5))
    targets = [np.array([1.0, 0.0]), np.array([1.0, 0.0, 0.0])]
    val = loss(pred, targets, two_level_tax, lam=0.1)
    assert val == pytest.approx(3 * np.log(2))


def test_loss_target_length_mismatch(two_level_tax):
    pred = Prediction(np.full(5, 0.5), [np.full(2, 0.5), np.full(3, 0.5)],
                      np.full(5, 0.5))
    with pytest.raises(DimMismatchError):
        loss(pred, [np.zeros(3), np.zeros(3)], two_level_tax)


def _head_setup(seed=0, use_x0=True):
    rng = np.random.default_rng(seed)
    k, g, d_local = 3, 5, 4
    level_sizes = [2, 3]
    params = init_head_params(k, g, d_local, level_sizes, rng,
                              use_x0=use_x0, dtype=np.float64)
    # nudge biases off zero so relu pre-activations avoid the kink
    for name in params:
        params[name] = params[name] + rng.normal(0, 0.01, params[name].shape)
    xs = [rng.standard_normal(2 * k) for _ in range(3)]
    targets = [np.array([1.0, 0.0]), np.array([0.0, 1.0, 0.0])]
    return params, xs, targets, level_sizes


def test_head_forward_matches_public_ops():
    params, xs, targets, level_sizes = _head_setup()
    cache = head_forward(xs, params, level_sizes, use_x0=True)
    A1 = global_step(None, xs[1], params["global.W1"], params["global.b1"])
    A2 = global_step(A1, xs[2], params["global.W2"], params["global.b2"])
    pg = global_predict(A2, xs[0], params["global.Wout"], params["global.bout"])
    assert np.allclose(cache["p_g"], pg, atol=1e-12)
    p1 = local_predict(A1, params["local.Wt1"], params["local.bt1"],
                       params["local.Wc1"], params["local.bc1"])
    assert np.allclose(cache["local"][0]["p"], p1, atol=1e-12)


def test_head_loss_matches_prob_loss(two_level_tax):
    params, xs, targets, level_sizes = _head_setup()
    cache = head_forward(xs, params, level_sizes, use_x0=True)
    pairs = child_parent_index_pairs(two_level_tax)
    via_logits = head_loss(cache, targets, pairs, lam=0.1)
    sizes = level_sizes
    locals_ = [cache["local"][h]["p"] for h in range(2)]
    pred = Prediction(cache["p_g"], locals_, fuse(locals_, cache["p_g"], 0.5))
    via_probs = loss(pred, targets, two_level_tax, lam=0.1)
    assert via_logits == pytest.approx(via_probs, rel=1e-9)


@pytest.mark.parametrize("use_x0", [True, False])
@pytest.mark.parametrize("lam", [0.0, 0.1])
def test_head_gradients(two_level_tax, use_x0, lam):
    params, xs, targets, level_sizes = _head_setup(seed=3, use_x0=use_x0)
    pairs = child_parent_index_pairs(two_level_tax)

    def f(p):
        cache = head_forward(xs, p, level_sizes, use_x0=use_x0)
        L = head_loss(cache, targets, pairs, lam)
        grads, _ = head_backward(cache, targets, pairs, lam, p)
        return L, grads

    rep = grad_check(f, params, tolerance=1e-4)
    assert rep.passed, rep.max_rel_error


def test_head_embedding_gradients(two_level_tax):
    # finite differences on the document embeddings themselves
    params, xs, targets, level_sizes = _head_setup(seed=4)
    pairs = child_parent_index_pairs(two_level_tax)

    def L(xs_):
        cache = head_forward(xs_, params, level_sizes, use_x0=True)
        return head_loss(cache, targets, pairs, lam=0.1)

    cache = head_forward(xs, params, level_sizes, use_x0=True)
    _, dxs = head_backward(cache, targets, pairs, 0.1, params)
    h = 1e-6
    for i in range(3):
        for j in range(len(xs[i])):
            orig = xs[i][j]
            xs[i][j] = orig + h
            lp = L(xs)
            xs[i][j] = orig - h
            lm = L(xs)
            xs[i][j] = orig
            num = (lp - lm) / (2 * h)
            assert abs(num - dxs[i][j]) <= 1e-5 * max(1.0, abs(num))
