"""Full pipeline: embeddings -> BiLSTM -> level attention -> global/local
head, with reverse-mode gradients for every trainable parameter group.

One Model instance owns the taxonomy binding, the embedding table and the
parameter dict; forward and backward run per document (variable-length
sequences, no padding).
"""

from __future__ import annotations

import numpy as np

from .attention import attention_backward, attention_forward, splice_level
from .corpus import Document, tokenize
from .embedding import EmbeddingTable
from .encoder import bilstm_backward, bilstm_encode, init_lstm_params
from .errors import EmptyTextError
from .hmcn import (
    Prediction,
    fuse,
    child_parent_index_pairs,
    head_backward,
    head_forward,
    head_loss,
    init_head_params,
)
from .taxonomy import Taxonomy


class Model:
    def __init__(self, tax: Taxonomy, table: EmbeddingTable, *,
                 k, g, d_local, beta=0.5, lam=0.1,
                 attention_mode="sum_normalized", similarity="dot",
                 freeze_embeddings=True, use_x0=True,
                 seed=0, dtype=np.float32, params=None):
        assert table.dim == k, "embedding dim must equal k"
        self.tax = tax
        self.table = table.astype(dtype)
        self.k, self.g, self.d_local = k, g, d_local
        self.beta, self.lam = beta, lam
        self.attention_mode = attention_mode
        self.similarity = similarity
        self.freeze_embeddings = freeze_embeddings
        self.use_x0 = use_x0
        self.dtype = dtype
        self.level_sizes = tax.level_sizes()
        self.pairs = child_parent_index_pairs(tax)

        if params is None:
            rng = np.random.default_rng(seed)
            params = init_lstm_params(k, rng, dtype)
            params.update(init_head_params(k, g, d_local, self.level_sizes, rng,
                                           use_x0=use_x0, dtype=dtype))
            if not freeze_embeddings:
                params["embedding.vectors"] = self.table.vectors.copy()
                params["embedding.unk"] = self.table.unk_vector.copy()
        self.params = params

        # token-row recipe for each label's text (mean of word rows)
        self._label_rows = []
        for i in range(1, tax.depth + 1):
            level_rows = []
            for lid in tax.labels_at_level(i):
                words = tokenize(tax.label(lid).text)
                level_rows.append([self.table.row_of(w) for w in words])
            self._label_rows.append(level_rows)
        self._static_label_mats = None
        if freeze_embeddings:
            self._static_label_mats = self._build_label_mats(
                self.table.vectors, self.table.unk_vector)

    # --- embedding access -------------------------------------------------

    def _vectors(self):
        if self.freeze_embeddings:
            return self.table.vectors, self.table.unk_vector
        return self.params["embedding.vectors"], self.params["embedding.unk"]

    def _rows(self, tokens):
        return [self.table.row_of(t) for t in tokens]

    def _gather(self, rows, vectors, unk):
        return np.stack([vectors[r] if r >= 0 else unk for r in rows])

    def _build_label_mats(self, vectors, unk):
        mats = []
        for level_rows in self._label_rows:
            mats.append(np.stack([
                np.mean([vectors[r] if r >= 0 else unk for r in rows], axis=0)
                for rows in level_rows
            ]))
        return mats

    def label_matrices(self):
        if self._static_label_mats is not None:
            return self._static_label_mats
        return self._build_label_mats(*self._vectors())

    # --- forward ----------------------------------------------------------

    def forward(self, doc: Document, with_cache=False):
        tokens = doc.tokens
        if not tokens:
            raise EmptyTextError(f"document {doc.id!r} has no tokens")
        vectors, unk = self._vectors()
        rows = self._rows(tokens)
        X = self._gather(rows, vectors, unk)
        kw_rows = self._rows(doc.keywords)
        Ke = self._gather(kw_rows, vectors, unk) if kw_rows else None

        label_mats = self.label_matrices()
        contexts = [splice_level(T, Ke) for T in label_mats]

        (H_fwd, H_bwd), enc_cache = bilstm_encode(X, self.params, with_cache=True)
        xs, att_cache = attention_forward(H_fwd, H_bwd, contexts,
                                          mode=self.attention_mode,
                                          similarity=self.similarity)
        head_cache = head_forward(xs, self.params, self.level_sizes,
                                  use_x0=self.use_x0)
        if with_cache:
            return head_cache, {"enc": enc_cache, "att": att_cache,
                                "rows": rows, "kw_rows": kw_rows}
        return head_cache

    def predict_scores(self, doc: Document) -> Prediction:
        cache = self.forward(doc)
        p_g = cache["p_g"]
        locals_ = [lv["p"] for lv in cache["local"]]
        return Prediction(global_scores=p_g, local_scores=locals_,
                          fused_scores=fuse(locals_, p_g, self.beta))

    def targets_for(self, doc: Document):
        out = []
        for i in range(1, self.tax.depth + 1):
            t = np.zeros(self.level_sizes[i - 1], dtype=self.dtype)
            for lid in doc.level_labels[i - 1]:
                t[self.tax.level_index[lid]] = 1.0
            out.append(t)
        return out

    # --- backward ---------------------------------------------------------

    def loss_and_grads(self, doc: Document, targets=None):
        if targets is None:
            targets = self.targets_for(doc)
        head_cache, extra = self.forward(doc, with_cache=True)
        loss = head_loss(head_cache, targets, self.pairs, self.lam)
        grads, dxs = head_backward(head_cache, targets, self.pairs, self.lam,
                                   self.params)
        dH_fwd, dH_bwd, dcontexts = attention_backward(dxs, extra["att"])
        dX, lstm_grads = bilstm_backward(dH_fwd, dH_bwd, extra["enc"], self.params)
        grads.update(lstm_grads)

        if not self.freeze_embeddings:
            vectors, unk = self._vectors()
            dvec = np.zeros_like(vectors)
            dunk = np.zeros_like(unk)

            def scatter(row, g):
                if row >= 0:
                    dvec[row] += g
                else:
                    dunk[...] += g

            for row, g in zip(extra["rows"], dX):
                scatter(row, g)
            n_kw = len(extra["kw_rows"])
            for li, dctx in enumerate(dcontexts):
                n_labels = self.level_sizes[li]
                for pos, rows in enumerate(self._label_rows[li]):
                    share = dctx[pos] / len(rows)
                    for r in rows:
                        scatter(r, share)
                if n_kw:
                    for j, r in enumerate(extra["kw_rows"]):
                        scatter(r, dctx[n_labels + j])
            grads["embedding.vectors"] = dvec
            grads["embedding.unk"] = dunk
        return loss, grads
