"""Command-line entry point: train / eval / predict / gen-synth / inspect.

Exit codes: 0 success, 1 internal error, 2 usage or input error,
3 taxonomy / corpus validation failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .corpus import (
    SynthSpec,
    generate_synthetic,
    load_corpus,
    make_unlabeled_document,
    save_corpus,
)
from .embedding import load_embeddings, random_table, save_embeddings
from .errors import (
    AhmcaError,
    ConfigError,
    CheckpointError,
    CorpusError,
    EmbeddingError,
    TaxonomyError,
    TaxonomyMismatchError,
)
from .taxonomy import load_taxonomy
from .training import (
    TrainConfig,
    evaluate_model,
    load_checkpoint,
    load_config,
    predict as decode_prediction,
    save_checkpoint,
    train,
)


def _build_parser():
    p = argparse.ArgumentParser(prog="ahmca", description="Hierarchical multi-label "
                                "text classifier with label-splicing attention")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a model")
    t.add_argument("--config", required=False, help="JSON config file")
    t.add_argument("--train", required=True, dest="train_path")
    t.add_argument("--val", required=True)
    t.add_argument("--taxonomy", required=True)
    t.add_argument("--embeddings", help="word2vec text file; omit for seeded random init")
    t.add_argument("--out", required=True, help="checkpoint output path")
    t.add_argument("--history", required=True, help="history CSV output path")

    e = sub.add_parser("eval", help="evaluate a checkpoint")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--k", default="1,3,5", help="comma-separated k values")
    e.add_argument("--out", help="write the metrics JSON here as well")

    pr = sub.add_parser("predict", help="classify documents from a JSONL file")
    pr.add_argument("--model", required=True)
    pr.add_argument("--input", required=True, help="JSONL documents (labels optional)")
    pr.add_argument("--top", type=int, default=5)
    pr.add_argument("--threshold", type=float, default=0.5)

    gs = sub.add_parser("gen-synth", help="generate a synthetic benchmark")
    gs.add_argument("--spec", required=True, help="SynthSpec JSON file")
    gs.add_argument("--out-dir", required=True)
    gs.add_argument("--seed", type=int, help="override the spec's seed")

    ins = sub.add_parser("inspect", help="print a checkpoint manifest")
    ins.add_argument("--model", required=True)
    return p


def _read(path):
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        print(f"error: cannot read {path}: {e}", file=sys.stderr)
        raise SystemExit(2)


def _read_bytes(path):
    try:
        return Path(path).read_bytes()
    except OSError as e:
        print(f"error: cannot read {path}: {e}", file=sys.stderr)
        raise SystemExit(2)


def _cmd_train(args):
    cfg = load_config(_read(args.config)) if args.config else TrainConfig()
    tax = load_taxonomy(_read(args.taxonomy))
    train_c = load_corpus(_read(args.train_path), tax)
    val_c = load_corpus(_read(args.val), tax)
    if args.embeddings:
        table = load_embeddings(_read(args.embeddings))
    else:
        vocab = sorted({t for d in train_c for t in d.tokens}
                       | {t for d in val_c for t in d.tokens})
        table = random_table(vocab, cfg.k, cfg.seed)
    ckpt, history = train(cfg, train_c, val_c, tax, table, log=print)
    Path(args.out).write_bytes(save_checkpoint(ckpt))
    Path(args.history).write_text(history.to_csv(), encoding="utf-8")
    print(f"wrote {args.out} and {args.history}")
    return 0


def _cmd_eval(args):
    ckpt = load_checkpoint(_read_bytes(args.model))
    model, tax = ckpt.build_model()
    data = load_corpus(_read(args.data), tax)
    ks = tuple(int(x) for x in args.k.split(",") if x)
    report = evaluate_model(model, data, ks=ks)
    text = report.to_json()
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    return 0


def _cmd_predict(args):
    ckpt = load_checkpoint(_read_bytes(args.model))
    model, tax = ckpt.build_model()
    for line in _read(args.input).splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        doc = make_unlabeled_document(rec, tax)
        out = decode_prediction(model, doc, top_n=args.top, threshold=args.threshold)
        print(json.dumps({
            "id": doc.id,
            "top_leaves": out["top_leaves"],
            "level_sets": out["level_sets"],
        }, ensure_ascii=False))
    return 0


def _cmd_gen_synth(args):
    spec = SynthSpec.from_json(_read(args.spec))
    if args.seed is not None:
        from dataclasses import replace
        spec = replace(spec, seed=args.seed)
    tax, corpus, table = generate_synthetic(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "taxonomy.json").write_text(tax.serialize() + "\n", encoding="utf-8")
    (out / "corpus.jsonl").write_text(save_corpus(corpus), encoding="utf-8")
    (out / "embeddings.txt").write_text(save_embeddings(table), encoding="utf-8")
    print(f"wrote taxonomy.json, corpus.jsonl, embeddings.txt to {out}")
    return 0


def _cmd_inspect(args):
    ckpt = load_checkpoint(_read_bytes(args.model))
    print(f"version: {ckpt.version}")
    print(f"taxonomy_hash: {ckpt.taxonomy_hash}")
    print(f"labels: {len(ckpt.label_order)}")
    print(f"config: {json.dumps(ckpt.config.to_dict(), sort_keys=True)}")
    for name in sorted(ckpt.arrays):
        print(f"array {name} shape={list(ckpt.arrays[name].shape)}")
    return 0


_HANDLERS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "predict": _cmd_predict,
    "gen-synth": _cmd_gen_synth,
    "inspect": _cmd_inspect,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if e.code is not None else 0
    try:
        return _HANDLERS[args.command](args)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    except (TaxonomyError, CorpusError, TaxonomyMismatchError) as e:
        print(f"validation error: {e}", file=sys.stderr)
        return 3
    except (ConfigError, EmbeddingError, CheckpointError, json.JSONDecodeError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return 2
    except AhmcaError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
