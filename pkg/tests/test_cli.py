import json

import pytest

from ahmca.cli import main

SPEC = {
    "level_sizes": [2, 2], "docs_per_leaf": 4, "doc_length": 5,
    "keywords_per_doc": 1, "leaf_vocab_size": 5, "noise_rate": 0.0,
    "seed": 3, "embedding_dim": 4,
}

CONFIG = {
    "k": 4, "g": 16, "d_L": 16, "epochs": 15, "batch_size": 4,
    "learning_rate": 0.01, "seed": 0, "early_stop_patience": 50,
}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """gen-synth then train once; later tests reuse the checkpoint."""
    ws = tmp_path_factory.mktemp("cli")
    spec = ws / "spec.json"
    spec.write_text(json.dumps(SPEC))
    assert main(["gen-synth", "--spec", str(spec), "--out-dir", str(ws / "data")]) == 0

    lines = (ws / "data" / "corpus.jsonl").read_text().strip().splitlines()
    train = [ln for i, ln in enumerate(lines) if i % 4 != 0]
    val = [ln for i, ln in enumerate(lines) if i % 4 == 0]
    (ws / "train.jsonl").write_text("\n".join(train) + "\n")
    (ws / "val.jsonl").write_text("\n".join(val) + "\n")
    (ws / "config.json").write_text(json.dumps(CONFIG))

    rc = main([
        "train",
        "--config", str(ws / "config.json"),
        "--train", str(ws / "train.jsonl"),
        "--val", str(ws / "val.jsonl"),
        "--taxonomy", str(ws / "data" / "taxonomy.json"),
        "--embeddings", str(ws / "data" / "embeddings.txt"),
        "--out", str(ws / "model.bin"),
        "--history", str(ws / "history.csv"),
    ])
    assert rc == 0
    return ws


def test_gen_synth_outputs(workspace):
    for name in ("taxonomy.json", "corpus.jsonl", "embeddings.txt"):
        assert (workspace / "data" / name).exists()
    tax = json.loads((workspace / "data" / "taxonomy.json").read_text())
    assert len(tax["labels"]) == 4


def test_train_outputs(workspace):
    assert (workspace / "model.bin").read_bytes()[:8] == b"AHMCAMDL"
    hist = (workspace / "history.csv").read_text().splitlines()
    assert hist[0] == "epoch,train_loss,val_macro_f1_at_1,val_p_at_1"
    assert len(hist) > 1


def test_eval(workspace, capsys):
    rc = main(["eval", "--model", str(workspace / "model.bin"),
               "--data", str(workspace / "val.jsonl"), "--k", "1,2",
               "--out", str(workspace / "metrics.json")])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    assert set(out["p_at_k"]) == {"1", "2"}
    assert out["macro_f1"] >= 0.9
    assert json.loads((workspace / "metrics.json").read_text()) == out


def test_predict(workspace, capsys):
    q = workspace / "query.jsonl"
    first = json.loads((workspace / "val.jsonl").read_text().splitlines()[0])
    q.write_text(json.dumps({"id": "q1", "title": first["title"],
                             "abstract": first["abstract"]}) + "\n")
    rc = main(["predict", "--model", str(workspace / "model.bin"),
               "--input", str(q), "--top", "2"])
    assert rc == 0
    rec = json.loads(capsys.readouterr().out.strip())
    assert rec["id"] == "q1"
    assert len(rec["top_leaves"]) == 2
    assert len(rec["level_sets"]) == 2


def test_inspect(workspace, capsys):
    rc = main(["inspect", "--model", str(workspace / "model.bin")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "version: 1" in out
    assert "taxonomy_hash:" in out
    assert "array " in out


def test_usage_error_exit_2(capsys):
    assert main(["eval"]) == 2               # missing required flags
    assert main(["no-such-command"]) == 2


def test_missing_file_exit_2(tmp_path, capsys):
    rc = main(["inspect", "--model", str(tmp_path / "nope.bin")])
    assert rc == 2


def test_bad_checkpoint_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"garbage garbage garbage")
    assert main(["inspect", "--model", str(bad)]) == 2


def test_bad_config_exit_2(workspace, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"betta": 0.5}')
    rc = main(["train", "--config", str(cfg),
               "--train", str(workspace / "train.jsonl"),
               "--val", str(workspace / "val.jsonl"),
               "--taxonomy", str(workspace / "data" / "taxonomy.json"),
               "--out", str(tmp_path / "m.bin"),
               "--history", str(tmp_path / "h.csv")])
    assert rc == 2


def test_bad_taxonomy_exit_3(workspace, tmp_path, capsys):
    tax = tmp_path / "tax.json"
    tax.write_text(json.dumps({"labels": [
        {"id": "X", "text": "x", "level": 1, "parent": None},
        {"id": "Y", "text": "y", "level": 2, "parent": "MISSING"},
    ]}))
    rc = main(["train", "--config", str(workspace / "config.json"),
               "--train", str(workspace / "train.jsonl"),
               "--val", str(workspace / "val.jsonl"),
               "--taxonomy", str(tax),
               "--out", str(tmp_path / "m.bin"),
               "--history", str(tmp_path / "h.csv")])
    assert rc == 3


def test_mismatched_data_exit_3(workspace, tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text(json.dumps({"id": "d", "title": "t", "abstract": "a",
                               "keywords": [], "labels": ["NOPE"]}) + "\n")
    rc = main(["eval", "--model", str(workspace / "model.bin"),
               "--data", str(bad)])
    assert rc == 3
