"""Command-line interface: tokenize, build-vocab, extract, train, eval,
bench, subword-cost, complete, serve.

Exit codes: 0 success, 1 usage error, 2 data or model error. All randomness
sits behind --seed (or the seed config key). Settings resolve in order:
built-in defaults, --config file (flat key=value lines), NEXTOK_* environment
variables, explicit command-line flags.

A model directory holds everything inference needs:
    vocab_token.tsv, vocab_subtoken.tsv, vocab_labels.tsv,
    lm.ckpt, rep.ckpt, lm_train.log, rep_train.log
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import bench as bench_mod
from . import corpus as corpus_mod
from . import datagen  # noqa: F401  (re-exported for python -m nextok.datagen)
from . import models as models_mod
from . import service as service_mod
from . import subtokens as subtok_mod
from . import subword_cost as cost_mod
from .checkpoint import CheckpointError
from .engine import CompletionEngine
from .lexer import scan
from .nn import TrainingError

CONFIG_KEYS = {
    "mode": str,
    "window_len": int,
    "embed_dim": int,
    "hidden_dim": int,
    "proj_dim": int,
    "output_vocab_cap": int,
    "batch_size": int,
    "epochs": int,
    "lr": float,
    "seed": int,
    "desk_scale": bool,
    "use_batch_norm": bool,
    "test_fraction": float,
}

DEFAULTS = {
    "mode": "subtoken",
    "desk_scale": True,
    "test_fraction": 0.1,
    "seed": 0,
}


class DataError(Exception):
    """Bad corpus, missing files, or model mismatch (exit code 2)."""


def _parse_value(key: str, raw: str):
    kind = CONFIG_KEYS[key]
    if kind is bool:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    return kind(raw.strip())


def load_settings(config_path: str | None, overrides: dict) -> dict:
    """defaults < config file < NEXTOK_* environment < explicit flags."""
    settings = dict(DEFAULTS)
    if config_path:
        path = Path(config_path)
        if not path.exists():
            raise DataError(f"config file not found: {config_path}")
        for line in path.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in CONFIG_KEYS:
                raise DataError(f"unknown config key: {key}")
            settings[key] = _parse_value(key, value)
    for key in CONFIG_KEYS:
        env = os.environ.get(f"NEXTOK_{key.upper()}")
        if env is not None:
            settings[key] = _parse_value(key, env)
    for key, value in overrides.items():
        if value is not None:
            settings[key] = value
    return settings


def _model_config(settings: dict) -> models_mod.ModelConfig:
    kwargs = {
        k: settings[k]
        for k in (
            "mode", "window_len", "embed_dim", "hidden_dim", "proj_dim",
            "output_vocab_cap", "batch_size", "epochs", "lr", "seed",
            "use_batch_norm",
        )
        if k in settings
    }
    if settings.get("desk_scale", False):
        base = models_mod.ModelConfig.desk(settings.get("mode", "token"))
        for key, value in kwargs.items():
            if key in settings and settings[key] is not None:
                setattr(base, key, value)
        base.desk_scale = True
        return base
    return models_mod.ModelConfig(**kwargs)


def _vocab_paths(model_dir: Path) -> dict[str, Path]:
    return {
        "token": model_dir / "vocab_token.tsv",
        "subtoken": model_dir / "vocab_subtoken.tsv",
        "labels": model_dir / "vocab_labels.tsv",
    }


def _build_vocabs(corpus_dir: str, model_dir: Path, max_size: int) -> dict:
    streams = corpus_mod.scan_directory(corpus_dir)
    if not streams:
        raise DataError(f"no {corpus_mod.SOURCE_SUFFIX} files under {corpus_dir}")
    token_counts, subtoken_counts, label_counts = corpus_mod.count_lexemes(streams)
    vocabs = {
        "token": subtok_mod.build_vocab(token_counts, max_size),
        "subtoken": subtok_mod.build_vocab(subtoken_counts, max_size),
        "labels": subtok_mod.build_vocab(label_counts, max_size),
    }
    model_dir.mkdir(parents=True, exist_ok=True)
    for name, path in _vocab_paths(model_dir).items():
        subtok_mod.save_vocab(vocabs[name], path)
    return vocabs


def _load_vocabs(model_dir: Path, mode: str):
    paths = _vocab_paths(model_dir)
    for name in (mode, "labels"):
        if not paths[name].exists():
            raise DataError(f"missing vocabulary file: {paths[name]} (run build-vocab)")
    return subtok_mod.load_vocab(paths[mode]), subtok_mod.load_vocab(paths["labels"])


def _load_engine(model_dir: str) -> CompletionEngine:
    directory = Path(model_dir)
    lm_path = directory / "lm.ckpt"
    rep_path = directory / "rep.ckpt"
    for path in (lm_path, rep_path):
        if not path.exists():
            raise DataError(f"missing checkpoint: {path}")
    lm = models_mod.load_model(lm_path)
    rep = models_mod.load_model(rep_path)
    in_vocab, out_vocab = _load_vocabs(directory, lm.config.mode)
    return CompletionEngine(lm, rep, in_vocab, out_vocab)


def _extract_for_training(corpus_dir: str, model_dir: Path, settings: dict):
    config = _model_config(settings)
    vocab_paths = _vocab_paths(model_dir)
    if all(p.exists() for p in vocab_paths.values()):
        in_vocab, out_vocab = _load_vocabs(model_dir, config.mode)
    else:
        vocabs = _build_vocabs(corpus_dir, model_dir, config.output_vocab_cap)
        in_vocab, out_vocab = vocabs[config.mode], vocabs["labels"]
    examples, file_count, token_count = corpus_mod.extract_directory(
        corpus_dir, in_vocab, out_vocab, config.window_len, config.mode
    )
    if not examples:
        raise DataError(f"no training examples extracted from {corpus_dir}")
    return config, in_vocab, out_vocab, examples, file_count, token_count


def cmd_tokenize(args, settings) -> int:
    path = Path(args.file)
    if not path.exists():
        raise DataError(f"no such file: {args.file}")
    for tok in scan(path.read_text(encoding="utf-8")):
        print(f"{tok.offset}\t{tok.kind.value}\t{tok.lexeme}")
    return 0


def cmd_build_vocab(args, settings) -> int:
    model_dir = Path(args.model_dir)
    vocabs = _build_vocabs(args.directory, model_dir, args.max_size)
    for name, vocab in vocabs.items():
        print(f"{name}: size={len(vocab)} coverage={vocab.coverage:.4f}")
    return 0


def cmd_extract(args, settings) -> int:
    model_dir = Path(args.model_dir)
    config, _, out_vocab, examples, file_count, token_count = _extract_for_training(
        args.directory, model_dir, settings
    )
    out_path = Path(args.out) if args.out else model_dir / f"examples_{config.mode}.tsv"
    corpus_mod.save_examples(examples, out_path)
    stats = corpus_mod.compute_stats(examples, out_vocab, file_count, token_count)
    for line in stats.as_lines():
        print(line)
    print(f"examples written to {out_path}")
    return 0


def cmd_train_lm(args, settings) -> int:
    model_dir = Path(args.model_dir)
    config, in_vocab, out_vocab, examples, _, _ = _extract_for_training(
        args.directory, model_dir, settings
    )
    train, _ = corpus_mod.split_train_test(examples, settings["test_fraction"], config.seed)
    model = models_mod.train_lm(train, config, len(in_vocab), len(out_vocab))
    models_mod.save_model(model, model_dir / "lm.ckpt", quantize=args.quantize)
    (model_dir / "lm_train.log").write_text(
        "\n".join(model.log_lines()) + "\n", encoding="utf-8"
    )
    for line in model.log_lines():
        print(line)
    return 0


def cmd_train_rep(args, settings) -> int:
    model_dir = Path(args.model_dir)
    config, in_vocab, out_vocab, examples, _, _ = _extract_for_training(
        args.directory, model_dir, settings
    )
    train, _ = corpus_mod.split_train_test(examples, settings["test_fraction"], config.seed)
    model = models_mod.train_repetition(train, config, len(in_vocab), len(out_vocab))
    models_mod.save_model(model, model_dir / "rep.ckpt", quantize=args.quantize)
    (model_dir / "rep_train.log").write_text(
        "\n".join(model.log_lines()) + "\n", encoding="utf-8"
    )
    for line in model.log_lines():
        print(line)
    return 0


def cmd_eval(args, settings) -> int:
    model_dir = Path(args.model_dir)
    lm_path = model_dir / "lm.ckpt"
    if not lm_path.exists():
        raise DataError(f"missing checkpoint: {lm_path}")
    lm = models_mod.load_model(lm_path)
    settings = dict(settings)
    settings["mode"] = lm.config.mode
    settings["window_len"] = lm.config.window_len
    in_vocab, out_vocab = _load_vocabs(model_dir, lm.config.mode)
    examples, _, _ = corpus_mod.extract_directory(
        args.directory, in_vocab, out_vocab, lm.config.window_len, lm.config.mode
    )
    _, test = corpus_mod.split_train_test(examples, settings["test_fraction"], lm.config.seed)
    for k in sorted({1, args.k}):
        acc = bench_mod.topk_accuracy(lm, test, k, out_vocab)
        print(f"top{k}_accuracy: {acc:.4f}")
    rep_path = model_dir / "rep.ckpt"
    if rep_path.exists():
        rep = models_mod.load_model(rep_path)
        pr = bench_mod.precision_recall(rep, test)
        print(f"repetition_precision: {pr.precision:.4f}")
        print(f"repetition_recall: {pr.recall:.4f}")
    return 0


def cmd_bench(args, settings) -> int:
    engine = _load_engine(args.model_dir)
    paths = corpus_mod.corpus_files(args.directory)
    if not paths:
        raise DataError(f"no {corpus_mod.SOURCE_SUFFIX} files under {args.directory}")
    sources = [p.read_text(encoding="utf-8") for p in paths]
    requests = bench_mod.sample_completion_requests(
        sources, count=min(args.n, 2000), seed=settings["seed"], k=args.k
    )
    report = bench_mod.latency_benchmark(
        engine, requests, n=args.n, k=args.k, threshold_ms=args.threshold_ms
    )
    for line in report.as_lines():
        print(line)
    return 0


def cmd_subword_cost(args, settings) -> int:
    scenario = cost_mod.CostScenario(m=args.m, k=args.k, latency_budget_ms=args.budget_ms)
    for line in cost_mod.report_lines(scenario):
        print(line)
    return 0


def cmd_complete(args, settings) -> int:
    path = Path(args.file)
    if not path.exists():
        raise DataError(f"no such file: {args.file}")
    engine = _load_engine(args.model_dir)
    source = path.read_text(encoding="utf-8")
    items, theta = engine.complete_request(source, args.offset, args.k)
    print(f"theta: {theta:.4f}")
    for item in items:
        origins = [
            flag
            for flag, on in (
                ("scope", item.from_scope),
                ("model", item.from_model_vocab),
                ("repetition", item.from_repetition),
            )
            if on
        ]
        print(f"{item.text}\t{item.score:.6f}\t{'+'.join(origins)}")
    return 0


def cmd_serve(args, settings) -> int:
    engine = None
    if args.model_dir:
        try:
            engine = _load_engine(args.model_dir)
        except DataError as exc:
            print(f"warning: {exc}; serving without a model", file=sys.stderr)
    service_mod.serve(args.port, engine)
    return 0


def _add_shared_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    # shared flags are accepted before or after the subcommand; the
    # subparser copies use SUPPRESS so an absent flag cannot clobber a
    # value given at the top level
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", help="flat key=value settings file", default=default)
    parser.add_argument("--seed", type=int, help="seed for all randomness", default=default)
    parser.add_argument(
        "--mode", choices=["token", "subtoken"], help="input encoding", default=default
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nextok", description=__doc__)
    _add_shared_flags(parser, suppress=False)
    subparsers = parser.add_subparsers(dest="command", required=True)

    def sub(name: str, help: str) -> argparse.ArgumentParser:
        p = subparsers.add_parser(name, help=help)
        _add_shared_flags(p, suppress=True)
        return p

    p = sub("tokenize", help="print the token stream of a file")
    p.add_argument("file")
    p.set_defaults(func=cmd_tokenize)

    p = sub("build-vocab", help="build vocabularies from a corpus directory")
    p.add_argument("directory")
    p.add_argument("--max-size", type=int, default=2000)
    p.add_argument("--model-dir", default="model")
    p.set_defaults(func=cmd_build_vocab)

    p = sub("extract", help="extract deduplicated examples")
    p.add_argument("directory")
    p.add_argument("--model-dir", default="model")
    p.add_argument("--out")
    p.set_defaults(func=cmd_extract)

    p = sub("train-lm", help="train the language model")
    p.add_argument("directory")
    p.add_argument("--model-dir", default="model")
    p.add_argument("--quantize", action="store_true")
    p.set_defaults(func=cmd_train_lm)

    p = sub("train-rep", help="train the repetition detector")
    p.add_argument("directory")
    p.add_argument("--model-dir", default="model")
    p.add_argument("--quantize", action="store_true")
    p.set_defaults(func=cmd_train_rep)

    p = sub("eval", help="top-k accuracy and repetition metrics")
    p.add_argument("directory")
    p.add_argument("--model-dir", default="model")
    p.add_argument("--k", type=int, default=5)
    p.set_defaults(func=cmd_eval)

    p = sub("bench", help="serial completion latency benchmark")
    p.add_argument("directory")
    p.add_argument("--model-dir", default="model")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--threshold-ms", type=float, default=100.0)
    p.set_defaults(func=cmd_bench)

    p = sub("subword-cost", help="per-subword decoding cost analysis")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--budget-ms", type=float, default=100.0)
    p.set_defaults(func=cmd_subword_cost)

    p = sub("complete", help="rank completions at a byte offset")
    p.add_argument("file")
    p.add_argument("--offset", type=int, required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--model-dir", default="model")
    p.set_defaults(func=cmd_complete)

    p = sub("serve", help="run the local HTTP completion service")
    p.add_argument("--port", type=int, default=8337)
    p.add_argument("--model-dir")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        settings = load_settings(args.config, {"seed": args.seed, "mode": args.mode})
        return args.func(args, settings)
    except (DataError, CheckpointError, TrainingError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
