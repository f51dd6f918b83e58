"""Documents, JSONL corpus loading, deterministic splits and the synthetic
corpus generator used by the desk-scale benchmark.

Input records carry leaf labels only; labels at intermediate levels are
always derived by ancestor closure against the bound taxonomy.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyTextError,
    MalformedRecordError,
    SpecInvalidError,
    TooFewDocumentsError,
    UnknownLabelError,
)
from .taxonomy import Taxonomy

_EDGE_PUNCT = re.compile(r"^\W+|\W+$", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercased whitespace tokens with punctuation stripped at token edges."""
    out = []
    for raw in text.lower().split():
        tok = _EDGE_PUNCT.sub("", raw)
        if tok:
            out.append(tok)
    return out


@dataclass(frozen=True)
class Document:
    id: str
    title_tokens: tuple[str, ...]
    abstract_tokens: tuple[str, ...]
    keywords: tuple[str, ...]
    leaf_labels: tuple[str, ...]
    level_labels: tuple[frozenset, ...]  # index 0 = level 1

    @property
    def tokens(self) -> list[str]:
        """Spliced title + abstract + keywords sequence fed to the encoder."""
        return list(self.title_tokens) + list(self.abstract_tokens) + list(self.keywords)


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...]
    taxonomy_hash: str

    def __len__(self):
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)


def _level_closure(leaves, tax: Taxonomy):
    sets = [set() for _ in range(tax.depth)]
    for leaf in leaves:
        sets[tax.depth - 1].add(leaf)
        for anc in tax.ancestors_of(leaf):
            sets[tax.label(anc).level - 1].add(anc)
    return tuple(frozenset(s) for s in sets)


def _field_tokens(rec, key):
    val = rec.get(key, "")
    if isinstance(val, str):
        return tokenize(val)
    if isinstance(val, list) and all(isinstance(t, str) for t in val):
        return list(val)
    raise MalformedRecordError(f"field {key!r} must be a string or token list: {val!r}")


def make_document(rec: dict, tax: Taxonomy) -> Document:
    if not isinstance(rec, dict) or "id" not in rec or "labels" not in rec:
        raise MalformedRecordError(f"record missing id/labels: {rec!r}")
    if not isinstance(rec["labels"], list) or not rec["labels"]:
        raise MalformedRecordError(f"record {rec.get('id')!r} has no labels")
    title = _field_tokens(rec, "title")
    abstract = _field_tokens(rec, "abstract")
    kw_field = rec.get("keywords", [])
    if not isinstance(kw_field, list):
        raise MalformedRecordError(f"keywords must be a list: {kw_field!r}")
    keywords = []
    for kw in kw_field:
        if not isinstance(kw, str):
            raise MalformedRecordError(f"keyword must be a string: {kw!r}")
        keywords.extend(tokenize(kw))

    leaves = []
    for lab in rec["labels"]:
        info = tax.label(lab)  # raises UnknownLabelError
        if info.level != tax.depth:
            raise UnknownLabelError(f"label {lab!r} is not a leaf (level {info.level})")
        if lab not in leaves:
            leaves.append(lab)

    if not (title or abstract or keywords):
        raise EmptyTextError(f"record {rec['id']!r} has no text")

    return Document(
        id=str(rec["id"]),
        title_tokens=tuple(title),
        abstract_tokens=tuple(abstract),
        keywords=tuple(keywords),
        leaf_labels=tuple(leaves),
        level_labels=_level_closure(leaves, tax),
    )


def make_unlabeled_document(rec: dict, tax: Taxonomy) -> Document:
    """Document for prediction: labels are ignored and may be absent."""
    rec = dict(rec)
    rec.setdefault("id", "")
    title = _field_tokens(rec, "title")
    abstract = _field_tokens(rec, "abstract")
    keywords = []
    for kw in rec.get("keywords", []):
        if not isinstance(kw, str):
            raise MalformedRecordError(f"keyword must be a string: {kw!r}")
        keywords.extend(tokenize(kw))
    if not (title or abstract or keywords):
        raise EmptyTextError(f"record {rec['id']!r} has no text")
    return Document(
        id=str(rec["id"]),
        title_tokens=tuple(title),
        abstract_tokens=tuple(abstract),
        keywords=tuple(keywords),
        leaf_labels=(),
        level_labels=tuple(frozenset() for _ in range(tax.depth)),
    )


def load_corpus(source: str, tax: Taxonomy) -> Corpus:
    """Parse a JSON Lines corpus and validate every record against tax."""
    docs = []
    seen = set()
    for ln, line in enumerate(source.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise MalformedRecordError(f"line {ln}: invalid JSON ({e})") from None
        doc = make_document(rec, tax)
        if doc.id in seen:
            raise MalformedRecordError(f"line {ln}: duplicate document id {doc.id!r}")
        seen.add(doc.id)
        docs.append(doc)
    return Corpus(documents=tuple(docs), taxonomy_hash=tax.content_hash())


def save_corpus(c: Corpus) -> str:
    lines = []
    for d in c.documents:
        lines.append(json.dumps({
            "id": d.id,
            "title": list(d.title_tokens),
            "abstract": list(d.abstract_tokens),
            "keywords": list(d.keywords),
            "labels": list(d.leaf_labels),
        }, ensure_ascii=False))
    return "\n".join(lines) + "\n"


def split(c: Corpus, ratios, seed: int):
    """Deterministic stratified split into (train, val, test).

    Stratification groups documents by their first leaf label; groups with
    fewer documents than the ratio total are pooled and split together.
    Within each group the val/test shares are floored and the remainder
    goes to train.
    """
    r_train, r_val, r_test = ratios
    if min(r_train, r_val, r_test) <= 0:
        raise SpecInvalidError("split ratios must be positive")
    parts = r_train + r_val + r_test
    if len(c) < parts:
        raise TooFewDocumentsError(f"need at least {parts} documents, have {len(c)}")

    groups: dict[str, list[Document]] = {}
    for doc in c.documents:
        groups.setdefault(doc.leaf_labels[0], []).append(doc)

    rng = np.random.default_rng(seed)
    pooled: list[Document] = []
    train, val, test = [], [], []

    def allocate(docs):
        order = rng.permutation(len(docs))
        n_val = len(docs) * r_val // parts
        n_test = len(docs) * r_test // parts
        for pos, idx in enumerate(order):
            if pos < n_val:
                val.append(docs[idx])
            elif pos < n_val + n_test:
                test.append(docs[idx])
            else:
                train.append(docs[idx])

    for leaf in sorted(groups):
        docs = groups[leaf]
        if len(docs) >= parts:
            allocate(docs)
        else:
            pooled.extend(docs)
    if pooled:
        allocate(pooled)

    key = {d.id: i for i, d in enumerate(c.documents)}
    mk = lambda docs: Corpus(
        documents=tuple(sorted(docs, key=lambda d: key[d.id])),
        taxonomy_hash=c.taxonomy_hash,
    )
    return mk(train), mk(val), mk(test)


@dataclass(frozen=True)
class SynthSpec:
    level_sizes: tuple[int, ...]
    docs_per_leaf: int
    doc_length: int
    keywords_per_doc: int
    leaf_vocab_size: int
    noise_rate: float
    seed: int
    embedding_dim: int = 32

    def validate(self):
        if not self.level_sizes or any(n < 1 for n in self.level_sizes):
            raise SpecInvalidError("level_sizes must be non-empty positive counts")
        for i in range(1, len(self.level_sizes)):
            if self.level_sizes[i] < self.level_sizes[i - 1]:
                raise SpecInvalidError("each level must be at least as wide as its parent level")
        for name in ("docs_per_leaf", "doc_length", "keywords_per_doc",
                     "leaf_vocab_size", "embedding_dim"):
            if getattr(self, name) < 1:
                raise SpecInvalidError(f"{name} must be >= 1")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise SpecInvalidError("noise_rate must be in [0, 1]")

    @classmethod
    def from_json(cls, source: str) -> "SynthSpec":
        obj = json.loads(source)
        known = {f for f in cls.__dataclass_fields__}
        extra = set(obj) - known
        if extra:
            raise SpecInvalidError(f"unknown SynthSpec keys: {sorted(extra)}")
        if "level_sizes" in obj:
            obj["level_sizes"] = tuple(obj["level_sizes"])
        spec = cls(**obj)
        spec.validate()
        return spec


def generate_synthetic(spec: SynthSpec):
    """Build a (Taxonomy, Corpus, EmbeddingTable) triple, fully seeded.

    Every leaf (and every internal label) owns a disjoint sub-vocabulary;
    document tokens come from the leaf's plus its parent's lexicon except
    for a noise_rate fraction drawn from the global vocabulary.  Keywords
    are the first few tokens of the leaf lexicon, label text is one
    reserved token per label, and embeddings are seeded random unit
    vectors.
    """
    from .embedding import EmbeddingTable
    from .taxonomy import load_taxonomy

    spec.validate()
    rng = np.random.default_rng(spec.seed)

    # taxonomy: children spread round-robin over the previous level
    records = []
    prev_ids: list[str] = []
    for li, n in enumerate(spec.level_sizes, start=1):
        ids = [f"L{li}_{j}" for j in range(n)]
        for j, lid in enumerate(ids):
            parent = prev_ids[j % len(prev_ids)] if prev_ids else None
            records.append({"id": lid, "text": f"lab_{lid}", "level": li, "parent": parent})
        prev_ids = ids
    tax = load_taxonomy({"labels": records})

    # tokens are generated pre-normalized (lowercase) so they match the
    # embedding vocabulary after tokenize() runs over keywords and label text
    lexicon = {lab.id: [f"w_{lab.id}_{j}".lower() for j in range(spec.leaf_vocab_size)]
               for lab in tax.labels}
    vocab = [tok for lab in tax.labels for tok in lexicon[lab.id]]
    label_tokens = [f"lab_{lab.id}".lower() for lab in tax.labels]

    docs = []
    leaves = tax.labels_at_level(tax.depth)
    for leaf in leaves:
        parent = tax.label(leaf).parent
        own = lexicon[leaf] + (lexicon[parent] if parent else [])
        kws = lexicon[leaf][:spec.keywords_per_doc]
        for d in range(spec.docs_per_leaf):
            toks = []
            for _ in range(spec.doc_length):
                if rng.random() < spec.noise_rate:
                    toks.append(vocab[rng.integers(len(vocab))])
                else:
                    toks.append(own[rng.integers(len(own))])
            n_title = min(5, len(toks))
            docs.append({
                "id": f"{leaf}_doc{d}",
                "title": toks[:n_title],
                "abstract": toks[n_title:],
                "keywords": kws,
                "labels": [leaf],
            })
    corpus = load_corpus("\n".join(json.dumps(r) for r in docs), tax)

    all_tokens = vocab + label_tokens
    vecs = rng.standard_normal((len(all_tokens), spec.embedding_dim))
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    table = EmbeddingTable.from_pairs(
        spec.embedding_dim,
        list(zip(all_tokens, vecs.astype(np.float32))),
    )
    return tax, corpus, table
