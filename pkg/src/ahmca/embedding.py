"""Word-vector table, word2vec-text loading, and the label / keyword
matrices the attention layer consumes.

Lookup is total: out-of-vocabulary tokens map to a single shared unk
vector (the mean of the vocabulary), so downstream code never deals with
missing words.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import tokenize
from .errors import (
    CountMismatchError,
    DuplicateTokenError,
    EmptyInputError,
    EmptyLabelTextError,
    MalformedHeaderError,
    RowArityError,
)
from .taxonomy import Taxonomy


@dataclass
class EmbeddingTable:
    dim: int
    tokens: tuple[str, ...]           # stable row order
    vectors: np.ndarray               # (V, dim)
    unk_vector: np.ndarray            # (dim,)
    frozen: bool = True
    index: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_pairs(cls, dim, pairs, unk=None, frozen=True):
        tokens = tuple(t for t, _ in pairs)
        vectors = np.asarray([v for _, v in pairs], dtype=np.float32).reshape(len(pairs), dim)
        if unk is None:
            unk = vectors.mean(axis=0) if len(pairs) else np.zeros(dim, dtype=np.float32)
        table = cls(dim=dim, tokens=tokens, vectors=vectors,
                    unk_vector=np.asarray(unk, dtype=np.float32), frozen=frozen)
        table.index = {t: i for i, t in enumerate(tokens)}
        return table

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.index

    def lookup(self, token):
        i = self.index.get(token)
        return self.vectors[i] if i is not None else self.unk_vector

    def row_of(self, token):
        """Row index for gradient scatter; -1 means the unk vector."""
        return self.index.get(token, -1)

    def astype(self, dtype):
        out = EmbeddingTable(
            dim=self.dim, tokens=self.tokens,
            vectors=self.vectors.astype(dtype),
            unk_vector=self.unk_vector.astype(dtype),
            frozen=self.frozen,
        )
        out.index = self.index
        return out


def load_embeddings(source: str) -> EmbeddingTable:
    """Parse word2vec text format: header "vocab_size dim", then one
    "token v1 ... v_dim" line per word."""
    lines = [ln for ln in source.splitlines() if ln.strip()]
    if not lines:
        raise MalformedHeaderError("empty embedding file")
    head = lines[0].split()
    if len(head) != 2:
        raise MalformedHeaderError(f"bad header: {lines[0]!r}")
    try:
        vocab_size, dim = int(head[0]), int(head[1])
    except ValueError:
        raise MalformedHeaderError(f"bad header: {lines[0]!r}") from None
    if vocab_size < 1 or dim < 1:
        raise MalformedHeaderError(f"non-positive header values: {lines[0]!r}")

    pairs = []
    seen = set()
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != dim + 1:
            raise RowArityError(f"expected {dim} components: {ln!r}")
        tok = parts[0]
        if tok in seen:
            raise DuplicateTokenError(f"duplicate token {tok!r}")
        seen.add(tok)
        try:
            vec = np.array([float(x) for x in parts[1:]], dtype=np.float32)
        except ValueError:
            raise RowArityError(f"non-numeric component in row {tok!r}") from None
        pairs.append((tok, vec))
    if len(pairs) != vocab_size:
        raise CountMismatchError(f"header says {vocab_size} rows, found {len(pairs)}")
    return EmbeddingTable.from_pairs(dim, pairs)


def save_embeddings(table: EmbeddingTable) -> str:
    lines = [f"{len(table)} {table.dim}"]
    for tok, vec in zip(table.tokens, table.vectors):
        lines.append(tok + " " + " ".join(repr(float(x)) for x in vec))
    return "\n".join(lines) + "\n"


def random_table(tokens, dim, seed, frozen=True) -> EmbeddingTable:
    """Seeded random unit-vector table (synthetic / no-pretrained-file mode)."""
    rng = np.random.default_rng(seed)
    vecs = rng.standard_normal((len(tokens), dim))
    vecs /= np.maximum(np.linalg.norm(vecs, axis=1, keepdims=True), 1e-12)
    return EmbeddingTable.from_pairs(dim, list(zip(tokens, vecs.astype(np.float32))),
                                     frozen=frozen)


def embed_sequence(tokens, table: EmbeddingTable) -> np.ndarray:
    """N x k matrix, one row per token (unk row for OOV)."""
    if not tokens:
        raise EmptyInputError("cannot embed an empty token sequence")
    return np.stack([table.lookup(t) for t in tokens])


def build_label_matrices(tax: Taxonomy, table: EmbeddingTable) -> list[np.ndarray]:
    """One |C^i| x k matrix per level; each label row is the mean of the
    word vectors of its tokenized label text."""
    mats = []
    for i in range(1, tax.depth + 1):
        rows = []
        for lid in tax.labels_at_level(i):
            words = tokenize(tax.label(lid).text)
            if not words:
                raise EmptyLabelTextError(f"label {lid!r} has empty text")
            rows.append(np.mean([table.lookup(w) for w in words], axis=0))
        mats.append(np.stack(rows))
    return mats
