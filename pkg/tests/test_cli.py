"""Command-line behavior: wiring, config resolution, exit codes."""

import json

import pytest

from corpusgen import make_corpus, make_source
from sscrepair import cli, engine
from sscrepair.bugs import load_records
from sscrepair.corpus import load_snippets, save_snippets
from sscrepair.neural import load_checkpoint

TRAIN_FLAGS = [
    "--epochs", "2", "--embed-dim", "8", "--hidden-dim", "16",
    "--module-hidden", "16", "--dropout", "0", "--vocab-size", "128",
    "--learning-rate", "0.5", "--batch-size", "8",
]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    save_snippets(make_corpus(24, seed=40), d / "corpus.jsonl")
    (d / "query.py").write_text(make_source(3, 1), encoding="utf-8")
    return d


@pytest.fixture(scope="module")
def ckpt(workdir):
    path = workdir / "model.ckpt"
    rc = cli.main(["train", "--data", str(workdir / "corpus.jsonl"),
                   "--out", str(path), "--seed", "1", *TRAIN_FLAGS])
    assert rc == 0
    return path


def test_inject_one_record_per_snippet(workdir):
    out = workdir / "bugs.jsonl"
    rc = cli.main(["inject", "--bugs", "1", "--seed", "7",
                   "--in", str(workdir / "corpus.jsonl"), "--out", str(out)])
    assert rc == 0
    records = load_records(out)
    assert len(records) == len(load_snippets(workdir / "corpus.jsonl"))
    assert all(len(r.bugs) == 1 for r in records)


def test_inject_deterministic_per_seed(workdir):
    a, b, c = (workdir / n for n in ("a.jsonl", "b.jsonl", "c.jsonl"))
    base = ["inject", "--bugs", "1", "--in", str(workdir / "corpus.jsonl")]
    assert cli.main([*base, "--seed", "3", "--out", str(a)]) == 0
    assert cli.main([*base, "--seed", "3", "--out", str(b)]) == 0
    assert cli.main([*base, "--seed", "4", "--out", str(c)]) == 0
    assert a.read_text() == b.read_text()
    assert a.read_text() != c.read_text()


def test_eval_matches_engine(workdir, ckpt, capsys):
    bugs = workdir / "bugs.jsonl"
    cli.main(["inject", "--bugs", "1", "--seed", "7",
              "--in", str(workdir / "corpus.jsonl"), "--out", str(bugs)])
    rc = cli.main(["eval", "--model", str(ckpt), "--data", str(bugs),
                   "--mode", "single"])
    assert rc == 0
    got = json.loads(capsys.readouterr().out)
    expect = engine.evaluate(load_checkpoint(ckpt), load_records(bugs),
                             mode="single").to_json()
    assert got == json.loads(json.dumps(expect))


def test_repair_prints_diff(workdir, ckpt, capsys):
    import random
    from sscrepair.bugs import inject_bugs
    from sscrepair.parser import parse
    from sscrepair.unparse import unparse
    buggy = workdir / "buggy.py"
    rec = inject_bugs(parse(make_source(3, 0)), 1, random.Random(2))
    buggy.write_text(unparse(rec.buggy), encoding="utf-8")
    rc = cli.main(["repair", "--model", str(ckpt), "--source", str(buggy)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "p=" in out and "+++" in out and "---" in out


def test_nn_lists_neighbors(workdir, ckpt, capsys):
    rc = cli.main(["nn", "--model", str(ckpt),
                   "--data", str(workdir / "corpus.jsonl"),
                   "--query", str(workdir / "query.py"),
                   "--location", "3", "--k", "2"])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("query:")
    assert len(lines) == 3


def test_split_and_vocab(workdir, capsys):
    rc = cli.main(["split", "--in", str(workdir / "corpus.jsonl"),
                   "--out-prefix", str(workdir / "part"), "--seed", "2"])
    assert rc == 0
    sizes = [len(load_snippets(workdir / f"part.{p}.jsonl"))
             for p in ("train", "val", "test")]
    assert sum(sizes) == 24 and all(s > 0 for s in sizes)
    rc = cli.main(["vocab", "--in", str(workdir / "corpus.jsonl"),
                   "--out", str(workdir / "v.json"), "--size", "50"])
    assert rc == 0
    blob = json.loads((workdir / "v.json").read_text())
    assert len(blob["tokens"]) <= 50


def test_extract_command(tmp_path, capsys):
    repo = tmp_path / "src" / "proj"
    repo.mkdir(parents=True)
    (repo / "m.py").write_text("def f(a, b):\n    return a + b\n",
                               encoding="utf-8")
    out = tmp_path / "out.jsonl"
    rc = cli.main(["extract", "--root", str(tmp_path / "src"),
                   "--out", str(out)])
    assert rc == 0
    assert len(load_snippets(out)) == 1


class TestConfig:
    def test_file_sets_defaults_flags_override(self, workdir):
        cfg = workdir / "run.cfg"
        cfg.write_text("bugs=2\nseed=9\n", encoding="utf-8")
        out = workdir / "cfg.jsonl"
        rc = cli.main(["--config", str(cfg), "inject",
                       "--in", str(workdir / "corpus.jsonl"),
                       "--out", str(out)])
        assert rc == 0
        assert max(len(r.bugs) for r in load_records(out)) == 2
        rc = cli.main(["--config", str(cfg), "inject",
                       "--in", str(workdir / "corpus.jsonl"),
                       "--out", str(out), "--bugs", "0"])
        assert rc == 0
        assert all(len(r.bugs) == 0 for r in load_records(out))

    def test_unknown_key_rejected(self, workdir):
        cfg = workdir / "bad.cfg"
        cfg.write_text("not_a_flag=1\n", encoding="utf-8")
        rc = cli.main(["--config", str(cfg), "inject",
                       "--in", str(workdir / "corpus.jsonl"),
                       "--out", str(workdir / "x.jsonl")])
        assert rc == 2

    def test_malformed_line_rejected(self, workdir):
        cfg = workdir / "broken.cfg"
        cfg.write_text("just some words\n", encoding="utf-8")
        rc = cli.main(["--config", str(cfg), "inject",
                       "--in", str(workdir / "corpus.jsonl"),
                       "--out", str(workdir / "x.jsonl")])
        assert rc == 2


class TestExitCodes:
    def test_unknown_flag_is_usage_error(self, workdir):
        with pytest.raises(SystemExit) as exc:
            cli.main(["inject", "--frobnicate"])
        assert exc.value.code == 2

    def test_missing_input_is_runtime_error(self, workdir, ckpt):
        rc = cli.main(["eval", "--model", str(ckpt),
                       "--data", str(workdir / "absent.jsonl")])
        assert rc == 1

    def test_bad_checkpoint_is_runtime_error(self, workdir):
        junk = workdir / "junk.ckpt"
        junk.write_bytes(b"nope")
        rc = cli.main(["eval", "--model", str(junk),
                       "--data", str(workdir / "corpus.jsonl")])
        assert rc == 1

    def test_unparsable_source_is_runtime_error(self, workdir, ckpt):
        bad = workdir / "bad.py"
        bad.write_text("def f(:\n", encoding="utf-8")
        rc = cli.main(["repair", "--model", str(ckpt), "--source", str(bad)])
        assert rc == 1
