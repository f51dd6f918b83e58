"""Global/local prediction head and the training loss.

The global flow chains relu layers across levels (each consuming the
previous layer spliced with that level's document embedding) and ends in a
sigmoid classifier over all classes; each level also has a local relu +
sigmoid classifier.  The final score is the beta-weighted convex
combination of the two.  The loss is binary cross-entropy on both flows
plus a squared-hinge penalty whenever a child's global score exceeds its
parent's.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatchError
from .numerics import relu, sigmoid
from .taxonomy import Taxonomy


@dataclass(frozen=True)
class Prediction:
    """Per-level local scores, global scores and the fused scores, all in
    taxonomy order (levels 1..H concatenated)."""
    global_scores: np.ndarray
    local_scores: list
    fused_scores: np.ndarray


def init_head_params(k, g, d_local, level_sizes, rng, use_x0=True, dtype=np.float32):
    """Fan-in-scaled uniform weights, zero biases."""
    def mat(out_dim, in_dim):
        s = 1.0 / np.sqrt(in_dim)
        return rng.uniform(-s, s, (out_dim, in_dim)).astype(dtype)

    H = len(level_sizes)
    total = sum(level_sizes)
    params = {}
    for h in range(1, H + 1):
        in_dim = 2 * k if h == 1 else g + 2 * k
        params[f"global.W{h}"] = mat(g, in_dim)
        params[f"global.b{h}"] = np.zeros(g, dtype=dtype)
    out_in = g + (2 * k if use_x0 else 0)
    params["global.Wout"] = mat(total, out_in)
    params["global.bout"] = np.zeros(total, dtype=dtype)
    for h in range(1, H + 1):
        params[f"local.Wt{h}"] = mat(d_local, g)
        params[f"local.bt{h}"] = np.zeros(d_local, dtype=dtype)
        params[f"local.Wc{h}"] = mat(level_sizes[h - 1], d_local)
        params[f"local.bc{h}"] = np.zeros(level_sizes[h - 1], dtype=dtype)
    return params


def _affine(W, b, x):
    if W.shape[1] != x.shape[0]:
        raise DimMismatchError(f"affine: W {W.shape} vs x {x.shape}")
    return W @ x + b


def global_step(A_prev, x_h, W, b):
    """One global-flow layer: relu(W [A_prev; x_h] + b); A_prev is None at
    level 1, where the input is x_1 alone."""
    inp = x_h if A_prev is None else np.concatenate([A_prev, x_h])
    return relu(_affine(W, b, inp))


def global_predict(A_last, x0, W, b):
    """Final global classifier; x0 is spliced in when given (None disables)."""
    inp = A_last if x0 is None else np.concatenate([A_last, x0])
    return sigmoid(_affine(W, b, inp))


def local_predict(A_g, Wt, bt, Wc, bc):
    """Per-level local flow: relu transition then sigmoid classifier."""
    A_l = relu(_affine(Wt, bt, A_g))
    return sigmoid(_affine(Wc, bc, A_l))


def fuse(local_scores, global_scores, beta):
    """Convex combination beta * concat(locals) + (1 - beta) * globals."""
    pl = np.concatenate([np.asarray(p) for p in local_scores])
    pg = np.asarray(global_scores)
    if pl.shape != pg.shape:
        raise DimMismatchError(f"local concat {pl.shape} != global {pg.shape}")
    return beta * pl + (1 - beta) * pg


def child_parent_index_pairs(tax: Taxonomy):
    """(child, parent) positions in the concatenated level-1..H ordering
    for every non-root label."""
    return [(tax.global_index(lab.id), tax.global_index(lab.parent))
            for lab in tax.labels if lab.parent is not None]


def violation_penalty(global_scores, pairs, lam):
    v = 0.0
    for ci, pi in pairs:
        d = global_scores[ci] - global_scores[pi]
        if d > 0:
            v += d * d
    return lam * v


def _bce(p, y):
    p = np.clip(np.asarray(p, dtype=np.float64), 1e-12, 1 - 1e-12)
    y = np.asarray(y)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


def loss(pred: Prediction, targets, tax: Taxonomy, lam=0.1):
    """BCE on the global flow + per-level BCE on the local flows + the
    hierarchy violation penalty on the global scores."""
    sizes = tax.level_sizes()
    for h, (t, n) in enumerate(zip(targets, sizes), start=1):
        if len(t) != n:
            raise DimMismatchError(f"level {h} target length {len(t)} != {n}")
    y_global = np.concatenate([np.asarray(t, dtype=np.float64) for t in targets])
    total = _bce(pred.global_scores, y_global)
    for p_l, t in zip(pred.local_scores, targets):
        total += _bce(p_l, np.asarray(t, dtype=np.float64))
    total += violation_penalty(pred.global_scores, child_parent_index_pairs(tax), lam)
    return total


# --- cached forward / backward used by training -------------------------

def head_forward(xs, params, level_sizes, use_x0=True):
    """Forward through both flows from document embeddings xs = [x0..xH].

    Returns (Prediction-parts dict, cache).  Scores are returned with
    their pre-sigmoid logits so the loss can be computed stably.
    """
    H = len(level_sizes)
    A = [None]
    zs = []
    inputs = []
    for h in range(1, H + 1):
        inp = xs[h] if h == 1 else np.concatenate([A[h - 1], xs[h]])
        z = _affine(params[f"global.W{h}"], params[f"global.b{h}"], inp)
        inputs.append(inp)
        zs.append(z)
        A.append(relu(z))
    out_in = np.concatenate([A[H], xs[0]]) if use_x0 else A[H]
    z_out = _affine(params["global.Wout"], params["global.bout"], out_in)
    p_g = sigmoid(z_out)

    local = []
    for h in range(1, H + 1):
        zt = _affine(params[f"local.Wt{h}"], params[f"local.bt{h}"], A[h])
        a_l = relu(zt)
        zc = _affine(params[f"local.Wc{h}"], params[f"local.bc{h}"], a_l)
        local.append({"zt": zt, "a_l": a_l, "zc": zc, "p": sigmoid(zc)})

    cache = {"xs": xs, "A": A, "zs": zs, "inputs": inputs, "out_in": out_in,
             "z_out": z_out, "p_g": p_g, "local": local, "use_x0": use_x0,
             "level_sizes": level_sizes}
    return cache


def head_loss(cache, targets, pairs, lam):
    """Loss from a head_forward cache, via logits for stability."""
    y_global = np.concatenate([np.asarray(t) for t in targets])
    z = cache["z_out"]
    total = float(np.mean(np.maximum(z, 0) - z * y_global + np.log1p(np.exp(-np.abs(z)))))
    for lv, t in zip(cache["local"], targets):
        zc = lv["zc"]
        t = np.asarray(t)
        total += float(np.mean(np.maximum(zc, 0) - zc * t + np.log1p(np.exp(-np.abs(zc)))))
    total += violation_penalty(cache["p_g"], pairs, lam)
    return total


def head_backward(cache, targets, pairs, lam, params):
    """Gradients of head_loss wrt head params and the embeddings xs."""
    level_sizes = cache["level_sizes"]
    H = len(level_sizes)
    dtype = cache["z_out"].dtype
    y_global = np.concatenate([np.asarray(t, dtype=dtype) for t in targets])
    total = y_global.shape[0]

    p_g = cache["p_g"]
    dp_g = np.zeros_like(p_g)
    for ci, pi in pairs:
        d = p_g[ci] - p_g[pi]
        if d > 0:
            dp_g[ci] += 2 * lam * d
            dp_g[pi] -= 2 * lam * d
    dz_out = (p_g - y_global) / total + dp_g * p_g * (1 - p_g)

    grads = {}
    grads["global.Wout"] = np.outer(dz_out, cache["out_in"])
    grads["global.bout"] = dz_out
    d_out_in = params["global.Wout"].T @ dz_out

    g = cache["A"][1].shape[0]
    dA = [np.zeros_like(a) if a is not None else None for a in cache["A"]]
    dxs = [None] * (H + 1)
    if cache["use_x0"]:
        dA[H] += d_out_in[:g]
        dxs[0] = d_out_in[g:]
    else:
        dA[H] += d_out_in
        dxs[0] = np.zeros_like(cache["xs"][0])

    for h in range(1, H + 1):
        lv = cache["local"][h - 1]
        t = np.asarray(targets[h - 1], dtype=dtype)
        dzc = (lv["p"] - t) / t.shape[0]
        grads[f"local.Wc{h}"] = np.outer(dzc, lv["a_l"])
        grads[f"local.bc{h}"] = dzc
        da_l = params[f"local.Wc{h}"].T @ dzc
        dzt = da_l * (lv["zt"] > 0)
        grads[f"local.Wt{h}"] = np.outer(dzt, cache["A"][h])
        grads[f"local.bt{h}"] = dzt
        dA[h] += params[f"local.Wt{h}"].T @ dzt

    for h in range(H, 0, -1):
        dz = dA[h] * (cache["zs"][h - 1] > 0)
        grads[f"global.W{h}"] = np.outer(dz, cache["inputs"][h - 1])
        grads[f"global.b{h}"] = dz
        dinp = params[f"global.W{h}"].T @ dz
        if h == 1:
            dxs[1] = dinp
        else:
            dA[h - 1] += dinp[:g]
            dxs[h] = dinp[g:]
    return grads, dxs
