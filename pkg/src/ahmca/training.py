"""Training loop (per-document Adam with batch accumulation), evaluation,
prediction decoding, and the binary checkpoint container.

Runs are fully deterministic given the config seed: shuffling uses one
seeded generator, gradients are reduced in example order, and history /
checkpoint files are byte-stable.
"""

from __future__ import annotations

import io
import json
import struct
import time
import warnings
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import metrics as M
from .corpus import Corpus, Document
from .embedding import EmbeddingTable
from .errors import (
    BadMagicError,
    ConfigRangeError,
    ConfigTypeError,
    CorruptPayloadError,
    EmptyTextError,
    NonFiniteLossError,
    TaxonomyMismatchError,
    UnknownConfigKeyError,
    VersionMismatchError,
)
from .metrics import MetricsReport
from .model import Model
from .taxonomy import Taxonomy, load_taxonomy

CHECKPOINT_MAGIC = b"AHMCAMDL"
CHECKPOINT_VERSION = 1

_MODES = ("sum_normalized", "none", "softmax")
_SIMS = ("dot", "cosine")


@dataclass(frozen=True)
class TrainConfig:
    k: int = 32
    g: int = 384
    d_L: int = 384
    beta: float = 0.5
    lambda_: float = 0.1
    learning_rate: float = 5e-3
    epochs: int = 20
    batch_size: int = 16
    seed: int = 0
    attention_mode: str = "sum_normalized"
    similarity: str = "dot"
    freeze_embeddings: bool = False
    use_x0_in_global: bool = True
    early_stop_patience: int = 5

    def validate(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigRangeError(f"beta must be in [0, 1], got {self.beta}")
        if self.lambda_ < 0:
            raise ConfigRangeError(f"lambda must be >= 0, got {self.lambda_}")
        for name in ("k", "g", "d_L", "epochs", "batch_size"):
            if getattr(self, name) < 1:
                raise ConfigRangeError(f"{name} must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigRangeError("learning_rate must be positive")
        if self.early_stop_patience < 1:
            raise ConfigRangeError("early_stop_patience must be >= 1")
        if self.attention_mode not in _MODES:
            raise ConfigRangeError(f"attention_mode must be one of {_MODES}")
        if self.similarity not in _SIMS:
            raise ConfigRangeError(f"similarity must be one of {_SIMS}")

    def to_dict(self):
        d = asdict(self)
        d["lambda"] = d.pop("lambda_")
        return d


def load_config(source) -> TrainConfig:
    """Build a TrainConfig from a JSON object; unknown keys are rejected,
    missing keys take their defaults."""
    obj = json.loads(source) if isinstance(source, (str, bytes)) else dict(source)
    if not isinstance(obj, dict):
        raise ConfigTypeError("config must be a JSON object")
    if "lambda" in obj:
        obj["lambda_"] = obj.pop("lambda")
    known = {f.name: f.type for f in fields(TrainConfig)}
    extra = set(obj) - set(known)
    if extra:
        raise UnknownConfigKeyError(f"unknown config keys: {sorted(extra)}")
    for name, val in obj.items():
        want_bool = name in ("freeze_embeddings", "use_x0_in_global")
        want_str = name in ("attention_mode", "similarity")
        want_int = name in ("k", "g", "d_L", "epochs", "batch_size", "seed",
                            "early_stop_patience")
        if want_bool and not isinstance(val, bool):
            raise ConfigTypeError(f"{name} must be a boolean")
        if want_str and not isinstance(val, str):
            raise ConfigTypeError(f"{name} must be a string")
        if want_int and (isinstance(val, bool) or not isinstance(val, int)):
            raise ConfigTypeError(f"{name} must be an integer")
        if not (want_bool or want_str or want_int) and not isinstance(val, (int, float)):
            raise ConfigTypeError(f"{name} must be a number")
    cfg = TrainConfig(**obj)
    cfg.validate()
    return cfg


@dataclass(frozen=True)
class Checkpoint:
    version: int
    config: TrainConfig
    taxonomy_json: str
    taxonomy_hash: str
    label_order: tuple
    embedding_tokens: tuple
    arrays: dict                 # name -> float32 ndarray (includes embedding.*)

    def build_model(self) -> tuple[Model, Taxonomy]:
        tax = load_taxonomy(self.taxonomy_json)
        if tax.content_hash() != self.taxonomy_hash:
            raise TaxonomyMismatchError("embedded taxonomy does not match its hash")
        cfg = self.config
        table = EmbeddingTable.from_pairs(
            cfg.k,
            list(zip(self.embedding_tokens, self.arrays["embedding.vectors"])),
            unk=self.arrays["embedding.unk"],
            frozen=cfg.freeze_embeddings,
        )
        params = {k: v.copy() for k, v in self.arrays.items()
                  if not k.startswith("embedding.") or not cfg.freeze_embeddings}
        model = Model(tax, table, k=cfg.k, g=cfg.g, d_local=cfg.d_L,
                      beta=cfg.beta, lam=cfg.lambda_,
                      attention_mode=cfg.attention_mode, similarity=cfg.similarity,
                      freeze_embeddings=cfg.freeze_embeddings,
                      use_x0=cfg.use_x0_in_global, params=params)
        return model, tax


def save_checkpoint(ckpt: Checkpoint) -> bytes:
    names = sorted(ckpt.arrays)
    manifest = []
    offset = 0
    blobs = []
    for name in names:
        arr = np.ascontiguousarray(ckpt.arrays[name], dtype="<f4")
        manifest.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blob = arr.tobytes()
        offset += len(blob)
        blobs.append(blob)
    meta = {
        "config": ckpt.config.to_dict(),
        "taxonomy": ckpt.taxonomy_json,
        "taxonomy_hash": ckpt.taxonomy_hash,
        "label_order": list(ckpt.label_order),
        "embedding_tokens": list(ckpt.embedding_tokens),
        "arrays": manifest,
    }
    meta_bytes = json.dumps(meta, ensure_ascii=False, sort_keys=True).encode("utf-8")
    out = io.BytesIO()
    out.write(CHECKPOINT_MAGIC)
    out.write(struct.pack("<I", ckpt.version))
    out.write(struct.pack("<Q", len(meta_bytes)))
    out.write(meta_bytes)
    for blob in blobs:
        out.write(blob)
    return out.getvalue()


def load_checkpoint(data: bytes) -> Checkpoint:
    if len(data) < 20 or data[:8] != CHECKPOINT_MAGIC:
        raise BadMagicError("not a checkpoint file")
    (version,) = struct.unpack_from("<I", data, 8)
    if version != CHECKPOINT_VERSION:
        raise VersionMismatchError(f"unsupported checkpoint version {version}")
    (meta_len,) = struct.unpack_from("<Q", data, 12)
    meta_end = 20 + meta_len
    if meta_end > len(data):
        raise CorruptPayloadError("metadata block truncated")
    try:
        meta = json.loads(data[20:meta_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CorruptPayloadError(f"bad metadata: {e}") from None
    arrays = {}
    payload = data[meta_end:]
    for ent in meta["arrays"]:
        n = int(np.prod(ent["shape"])) if ent["shape"] else 1
        start = ent["offset"]
        end = start + 4 * n
        if end > len(payload):
            raise CorruptPayloadError(f"array {ent['name']} truncated")
        arrays[ent["name"]] = np.frombuffer(
            payload[start:end], dtype="<f4").reshape(ent["shape"]).copy()
    cfg = load_config(meta["config"])
    return Checkpoint(
        version=version, config=cfg,
        taxonomy_json=meta["taxonomy"], taxonomy_hash=meta["taxonomy_hash"],
        label_order=tuple(meta["label_order"]),
        embedding_tokens=tuple(meta["embedding_tokens"]),
        arrays=arrays,
    )


def _checkpoint_from_model(model: Model, cfg: TrainConfig, tax: Taxonomy) -> Checkpoint:
    arrays = {k: np.asarray(v, dtype=np.float32) for k, v in model.params.items()}
    if cfg.freeze_embeddings:
        arrays["embedding.vectors"] = model.table.vectors.astype(np.float32)
        arrays["embedding.unk"] = model.table.unk_vector.astype(np.float32)
    order = [lid for i in range(1, tax.depth + 1) for lid in tax.labels_at_level(i)]
    return Checkpoint(
        version=CHECKPOINT_VERSION, config=cfg,
        taxonomy_json=tax.serialize(), taxonomy_hash=tax.content_hash(),
        label_order=tuple(order),
        embedding_tokens=model.table.tokens,
        arrays=arrays,
    )


# --- history ------------------------------------------------------------

@dataclass
class History:
    records: list = field(default_factory=list)  # dicts with the CSV columns

    def append(self, epoch, train_loss, val_macro_f1_at_1, val_p_at_1):
        if self.records and epoch != self.records[-1]["epoch"] + 1:
            raise ValueError("history epochs must be contiguous")
        self.records.append({
            "epoch": epoch, "train_loss": train_loss,
            "val_macro_f1_at_1": val_macro_f1_at_1, "val_p_at_1": val_p_at_1,
        })

    def to_csv(self) -> str:
        lines = ["epoch,train_loss,val_macro_f1_at_1,val_p_at_1"]
        for r in self.records:
            lines.append("%d,%r,%r,%r" % (
                r["epoch"], r["train_loss"],
                r["val_macro_f1_at_1"], r["val_p_at_1"]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "History":
        h = cls()
        lines = [ln for ln in text.splitlines() if ln.strip()]
        for ln in lines[1:]:
            e, tl, f1, p1 = ln.split(",")
            h.append(int(e), float(tl), float(f1), float(p1))
        return h


# --- optimizer ----------------------------------------------------------

class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params, grads):
        self.t += 1
        b1t = 1 - self.b1 ** self.t
        b2t = 1 - self.b2 ** self.t
        for name in params:
            g = grads[name].astype(params[name].dtype, copy=False)
            self.m[name] = self.b1 * self.m[name] + (1 - self.b1) * g
            self.v[name] = self.b2 * self.v[name] + (1 - self.b2) * g * g
            mhat = self.m[name] / b1t
            vhat = self.v[name] / b2t
            params[name] = params[name] - self.lr * mhat / (np.sqrt(vhat) + self.eps)


# --- evaluation / prediction -------------------------------------------

def _leaf_slice(model):
    start = sum(model.level_sizes[:-1])
    return start, start + model.level_sizes[-1]


def evaluate_model(model: Model, data: Corpus, ks=(1, 3, 5),
                   threshold=0.5) -> MetricsReport:
    tax = model.tax
    if data.taxonomy_hash != tax.content_hash():
        raise TaxonomyMismatchError("corpus bound to a different taxonomy")
    leaf_classes = tax.labels_at_level(tax.depth)
    all_order = [lid for i in range(1, tax.depth + 1)
                 for lid in tax.labels_at_level(i)]
    lo, hi = _leaf_slice(model)

    leaf_scores, leaf_truth, top1_sets, thresh_sets = [], [], [], []
    for doc in data:
        pred = model.predict_scores(doc)
        scores = pred.fused_scores[lo:hi]
        leaf_scores.append(scores)
        leaf_truth.append(set(doc.leaf_labels))
        top1_sets.append({leaf_classes[int(np.argsort(-scores, kind='stable')[0])]})
        thresh_sets.append({all_order[j]
                            for j in np.nonzero(pred.fused_scores >= threshold)[0]})

    p_at_k = {}
    n_leaves = len(leaf_classes)
    for k in ks:
        kk = k
        if k > n_leaves:
            warnings.warn(f"k={k} exceeds leaf count {n_leaves}; clamping")
            kk = n_leaves
        p_at_k[k] = M.precision_at_k(leaf_scores, leaf_truth, kk, leaf_classes)

    mp, mr = M.macro_precision_recall(top1_sets, leaf_truth, leaf_classes)
    return MetricsReport(
        macro_p=mp, macro_r=mr, macro_f1=M.macro_f1(mp, mr),
        p_at_k=p_at_k,
        violation_rate=M.hierarchy_violation_rate(thresh_sets, tax),
        n_documents=len(data), n_classes=tax.total_classes,
    )


def predict(model: Model, doc: Document, top_n=5, threshold=0.5,
            enforce_consistency=True):
    """Decode a document: fused scores, top-n leaf labels, and thresholded
    per-level label sets (optionally dropping children whose parent is
    absent)."""
    if not doc.tokens:
        raise EmptyTextError("cannot predict on an empty document")
    tax = model.tax
    pred = model.predict_scores(doc)
    lo, hi = _leaf_slice(model)
    leaf_classes = tax.labels_at_level(tax.depth)
    scores = pred.fused_scores[lo:hi]
    order = np.argsort(-scores, kind="stable")[:top_n]
    top = [(leaf_classes[int(i)], float(scores[int(i)])) for i in order]

    all_order = [lid for i in range(1, tax.depth + 1)
                 for lid in tax.labels_at_level(i)]
    picked = {all_order[j] for j in np.nonzero(pred.fused_scores >= threshold)[0]}
    if enforce_consistency:
        kept = set()
        for i in range(1, tax.depth + 1):
            for lid in tax.labels_at_level(i):
                if lid in picked:
                    parent = tax.label(lid).parent
                    if parent is None or parent in kept:
                        kept.add(lid)
        picked = kept
    per_level = [sorted(l for l in picked if tax.label(l).level == i)
                 for i in range(1, tax.depth + 1)]
    return {
        "fused_scores": pred.fused_scores,
        "top_leaves": top,
        "level_sets": per_level,
    }


# --- training loop ------------------------------------------------------

def train(cfg: TrainConfig, train_c: Corpus, val_c: Corpus, tax: Taxonomy,
          table: EmbeddingTable, log=None):
    """Mini-batch Adam over the whole pipeline; returns the
    best-validation checkpoint and the per-epoch history."""
    cfg.validate()
    if table.dim != cfg.k:
        raise ConfigRangeError(f"embedding dim {table.dim} != config k {cfg.k}")
    for c in (train_c, val_c):
        if c.taxonomy_hash != tax.content_hash():
            raise TaxonomyMismatchError("corpus bound to a different taxonomy")

    model = Model(tax, table, k=cfg.k, g=cfg.g, d_local=cfg.d_L,
                  beta=cfg.beta, lam=cfg.lambda_,
                  attention_mode=cfg.attention_mode, similarity=cfg.similarity,
                  freeze_embeddings=cfg.freeze_embeddings,
                  use_x0=cfg.use_x0_in_global, seed=cfg.seed)
    opt = Adam(model.params, cfg.learning_rate)
    rng = np.random.default_rng(cfg.seed)
    docs = list(train_c.documents)
    history = History()
    best_f1 = -1.0
    best_params = None
    stale = 0

    for epoch in range(1, cfg.epochs + 1):
        t0 = time.time()
        perm = rng.permutation(len(docs))
        losses = []
        for start in range(0, len(perm), cfg.batch_size):
            batch = perm[start:start + cfg.batch_size]
            acc = None
            for idx in batch:
                loss, grads = model.loss_and_grads(docs[idx])
                if not np.isfinite(loss):
                    raise NonFiniteLossError(f"loss diverged at epoch {epoch}")
                losses.append(loss)
                if acc is None:
                    acc = grads
                else:
                    for name in acc:
                        acc[name] = acc[name] + grads[name]
            scale = 1.0 / len(batch)
            for name in acc:
                acc[name] = acc[name] * scale
            opt.step(model.params, acc)

        report = evaluate_model(model, val_c, ks=(1,))
        train_loss = float(np.mean(losses))
        history.append(epoch, train_loss, report.macro_f1, report.p_at_k[1])
        if log:
            log(f"epoch {epoch}: train_loss={train_loss:.4f} "
                f"val_macro_f1@1={report.macro_f1:.4f} "
                f"val_p@1={report.p_at_k[1]:.4f} ({time.time() - t0:.1f}s)")

        if report.macro_f1 > best_f1:
            best_f1 = report.macro_f1
            best_params = {k: v.copy() for k, v in model.params.items()}
            stale = 0
        else:
            stale += 1
            if stale >= cfg.early_stop_patience:
                break

    model.params = best_params
    return _checkpoint_from_model(model, cfg, tax), history
