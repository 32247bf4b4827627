"""Command-line entry point wiring the corpus, training, and repair pipeline.

Exit codes: 0 success, 2 usage error, 1 runtime failure. Each command prints
its effective configuration to standard error so runs can be reproduced.
"""

from __future__ import annotations

import argparse
import difflib
import json
import logging
import random
import sys
from pathlib import Path

from . import analysis, bugs, corpus, engine
from .ast_core import FeatureConfig, apply_candidate, describe_payload
from .neural import (CheckpointError, Hyperparams, load_checkpoint,
                     save_checkpoint, train as train_model)
from .neural.train import make_records
from .parser import ParseError, parse
from .unparse import unparse

log = logging.getLogger(__name__)


class UsageError(Exception):
    pass


def _load_config(path: str) -> dict[str, str]:
    """Flat key=value file; blank lines and # comments ignored."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _apply_config(parser: argparse.ArgumentParser, sub: argparse.ArgumentParser,
                  config: dict[str, str]) -> None:
    """File values become defaults, so explicit flags still win."""
    known = {a.dest for a in sub._actions if a.dest != "help"}
    defaults = {}
    for key, raw in config.items():
        dest = key.replace("-", "_")
        if dest not in known:
            raise UsageError(f"unknown config key {key!r}")
        action = next(a for a in sub._actions if a.dest == dest)
        if action.type is not None:
            defaults[dest] = action.type(raw)
        elif isinstance(action.const, bool) or isinstance(action.default, bool):
            defaults[dest] = raw.lower() in ("1", "true", "yes")
        else:
            defaults[dest] = raw
    sub.set_defaults(**defaults)


def _hyperparams(args) -> Hyperparams:
    streams = {s.strip() for s in args.features.split(",") if s.strip()}
    unknown = streams - {"position", "kind", "relation", "value"}
    if unknown:
        raise UsageError(f"unknown feature streams: {sorted(unknown)}")
    features = FeatureConfig(
        position="position" in streams,
        kind="kind" in streams,
        relation="relation" in streams,
        value="value" in streams,
    )
    return Hyperparams(
        embed_dim=args.embed_dim, hidden_dim=args.hidden_dim,
        module_hidden=args.module_hidden, dropout=args.dropout,
        epochs=args.epochs, learning_rate=args.learning_rate,
        clip_norm=args.clip_norm, batch_size=args.batch_size,
        seed=args.seed, vocab_size=args.vocab_size,
        features=features, delta=args.delta,
    )


# ---------------------------------------------------------------------------
# Commands

def cmd_extract(args) -> int:
    snippets = corpus.extract_snippets(args.root, args.min_nodes, args.max_nodes)
    corpus.save_snippets(snippets, args.out)
    print(f"wrote {len(snippets)} snippets to {args.out}", file=sys.stderr)
    return 0


def cmd_split(args) -> int:
    snippets = corpus.load_snippets(args.input)
    ratios = tuple(float(r) for r in args.ratios.split(","))
    if len(ratios) != 3:
        raise UsageError("ratios must be three comma-separated numbers")
    parts = corpus.split_by_repo(snippets, ratios, args.seed)
    if args.dedup:
        for name in ("val", "test"):
            parts[name] = corpus.dedup_overlap(parts["train"], parts[name])
    for name, part in parts.items():
        path = f"{args.out_prefix}.{name}.jsonl"
        corpus.save_snippets(part, path)
        print(f"{name}: {len(part)} snippets -> {path}", file=sys.stderr)
    return 0


def cmd_vocab(args) -> int:
    snippets = corpus.load_snippets(args.input)
    vocab = corpus.build_vocab(snippets, args.size)
    Path(args.out).write_text(json.dumps(vocab.to_json()), encoding="utf-8")
    print(f"vocabulary of {vocab.size} ids -> {args.out}", file=sys.stderr)
    return 0


def cmd_inject(args) -> int:
    snippets = corpus.load_snippets(args.input)
    records = []
    for idx, s in enumerate(snippets):
        rng = random.Random(f"{args.seed}:inject:{idx}")
        records.append(bugs.inject_bugs(s.ast, args.bugs, rng))
    bugs.save_records(records, args.out)
    print(f"wrote {len(records)} bug records to {args.out}", file=sys.stderr)
    return 0


def cmd_train(args) -> int:
    snippets = corpus.load_snippets(args.data)
    hp = _hyperparams(args)
    val_records = None
    if args.val_data:
        val_snippets = corpus.load_snippets(args.val_data)
        val_records = make_records(val_snippets, hp.seed, 0, "single")
    model, epoch_log = train_model(
        snippets, hp, norm_mode=args.norm, regime=args.regime,
        val_records=val_records,
    )
    save_checkpoint(model, args.out)
    for e in epoch_log:
        acc = f" acc={e.val_accuracy:.3f}" if e.val_accuracy is not None else ""
        print(f"epoch {e.epoch}: loss={e.mean_loss:.4f}{acc}", file=sys.stderr)
    print(f"checkpoint -> {args.out}", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    model = load_checkpoint(args.model)
    records = bugs.load_records(args.data)
    report = engine.evaluate(model, records, mode=args.mode)
    json.dump(report.to_json(), sys.stdout, indent=2)
    print()
    if args.table:
        print(report.format_table(), file=sys.stderr)
    return 0


def cmd_repair(args) -> int:
    model = load_checkpoint(args.model)
    source = Path(args.source).read_text(encoding="utf-8")
    ast = parse(source)
    before = unparse(ast).splitlines(keepends=True)
    if args.multi:
        picks = engine.predict_multi(model, ast, delta=args.delta)
    else:
        inst, ci, p = engine.predict_single(model, ast)
        picks = [(inst, ci, p)]
    if not picks:
        print("no repair above threshold; snippet judged clean")
        return 0
    for inst, ci, p in picks:
        repaired = apply_candidate(ast, inst, ci)
        after = unparse(repaired).splitlines(keepends=True)
        cand = inst.candidates[ci]
        node = ast.nodes[inst.location]
        print(f"--- {inst.bug_type} at node {inst.location} "
              f"({describe_payload(cand.payload, node.value)}), p={p:.3f}")
        sys.stdout.writelines(difflib.unified_diff(
            before, after, fromfile=args.source, tofile=f"{args.source}:repaired"))
    return 0


def cmd_classify_pairs(args) -> int:
    records, rejects = corpus.classify_pair_directory(args.dir)
    bugs.save_records(records, args.out)
    for name, reject in rejects:
        print(f"rejected {name}: {reject.reason}", file=sys.stderr)
    print(f"classified {len(records)} pairs, rejected {len(rejects)}",
          file=sys.stderr)
    return 0


def cmd_nn(args) -> int:
    model = load_checkpoint(args.model)
    snippets = corpus.load_snippets(args.data)
    index = analysis.build_index(model, snippets, locations=args.locations)
    source = Path(args.query).read_text(encoding="utf-8")
    ast = parse(source)
    query = analysis.encode_query(model, ast, args.location)
    node = ast.nodes[args.location]
    line = ""
    if node.span is not None:
        lineno = source.count("\n", 0, node.span[0])
        lines = source.splitlines()
        if lineno < len(lines):
            line = lines[lineno].strip()
    print(f"query: node {args.location} ({node.kind}) {line}")
    for entry, sim in analysis.nearest_neighbors(index, query, args.k):
        excerpt = entry.snippet.source.splitlines()[0].strip()
        print(f"  {sim:+.4f}  {entry.snippet.path}:{entry.snippet.index} "
              f"node {entry.location}  {excerpt}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app
    model = load_checkpoint(args.model)
    snippets = corpus.load_snippets(args.data)
    app = create_app(model, snippets, seed=args.seed,
                     sessions_dir=args.sessions_dir,
                     frontend_dir=args.frontend_dir,
                     max_nodes=args.max_nodes)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing

def _build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="sscrepair",
        description="Semantic code repair: corpus building, bug synthesis, "
                    "training, evaluation, and repair.",
    )
    parser.add_argument("--config", help="flat key=value config file")
    subs = parser.add_subparsers(dest="command", required=True)
    registry = {}

    def sub(name, fn, **kw):
        p = subs.add_parser(name, **kw)
        p.add_argument("--seed", type=int, default=0, help="random seed")
        p.set_defaults(fn=fn)
        registry[name] = p
        return p

    p = sub("extract", cmd_extract, help="mine function snippets from a source tree")
    p.add_argument("--root", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-nodes", type=int, default=corpus.MIN_NODES)
    p.add_argument("--max-nodes", type=int, default=corpus.MAX_NODES)

    p = sub("split", cmd_split, help="repo-level train/val/test split")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--ratios", default="0.8,0.1,0.1")
    p.add_argument("--dedup", action="store_true",
                   help="drop held-out snippets sharing >5 lines with training")

    p = sub("vocab", cmd_vocab, help="build a value vocabulary")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=5000)

    p = sub("inject", cmd_inject, help="synthesize bugs into clean snippets")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--bugs", type=int, default=1, choices=range(4))

    p = sub("train", cmd_train, help="train a repair model")
    p.add_argument("--data", required=True)
    p.add_argument("--val-data")
    p.add_argument("--out", required=True)
    p.add_argument("--norm", choices=("local", "global"), default="local")
    p.add_argument("--regime", choices=("single", "multi"), default="single")
    p.add_argument("--embed-dim", type=int, default=128)
    p.add_argument("--hidden-dim", type=int, default=512)
    p.add_argument("--module-hidden", type=int, default=512)
    p.add_argument("--dropout", type=float, default=0.25)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--clip-norm", type=float, default=5.0)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--vocab-size", type=int, default=5000)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--features", default="position,kind,relation,value",
                   help="comma-separated feature streams")

    p = sub("eval", cmd_eval, help="evaluate a checkpoint on a bug dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=("single", "multi"), default="single")
    p.add_argument("--table", action="store_true",
                   help="also print a readable table to stderr")

    p = sub("repair", cmd_repair, help="propose repairs for one source file")
    p.add_argument("--model", required=True)
    p.add_argument("--source", required=True)
    p.add_argument("--multi", action="store_true",
                   help="emit every repair above the threshold")
    p.add_argument("--delta", type=float, default=None)

    p = sub("classify-pairs", cmd_classify_pairs,
            help="label before/after file pairs with bug types")
    p.add_argument("--dir", required=True)
    p.add_argument("--out", required=True)

    p = sub("nn", cmd_nn, help="nearest neighbors in encoder hidden space")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--query", required=True, help="source file for the query")
    p.add_argument("--location", type=int, required=True, help="query node id")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--locations", choices=("instances", "all"), default="instances")

    p = sub("serve", cmd_serve, help="run the evaluation console HTTP API")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--sessions-dir", default="sessions")
    p.add_argument("--frontend-dir", default=None)
    p.add_argument("--max-nodes", type=int, default=150)

    return parser, registry


def _effective_config(args) -> str:
    skip = {"fn", "command", "config"}
    pairs = [f"{k}={v}" for k, v in sorted(vars(args).items()) if k not in skip]
    return " ".join(pairs)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser, registry = _build_parser()
    try:
        pre, _ = parser.parse_known_args(argv)
        if pre.config and pre.command in registry:
            _apply_config(parser, registry[pre.command], _load_config(pre.config))
        args = parser.parse_args(argv)
        print(f"# {args.command} {_effective_config(args)}", file=sys.stderr)
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ParseError, bugs.MissingReverseCandidate, engine.NoCandidates,
            CheckpointError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
