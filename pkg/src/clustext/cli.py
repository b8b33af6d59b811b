"""Command-line surface: preprocess, embed, train, sweep, evaluate, selftest.

Configuration lives in a TOML file whose keys mirror the training, augmentation
and preprocessing dataclasses; command-line flags override file values. Exit
codes: 0 success, 1 runtime error (bad files, bad config values), 2 usage
error. Reports are sorted-key UTF-8 JSON; sweep tables are plain CSV.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .corpus import PreprocessRules, dedup, load_agnews, load_jsonl, load_stackoverflow, \
    preprocess_corpus, save_jsonl
from .embed import EmbeddingSet, HashedBowVectorizer, load_embeddings, save_embeddings, \
    token_matrix
from .encoder import encoder_forward, init_encoder_params
from .metrics import evaluate
from .selftest import run_selftest
from .trainer import TrainConfig, sweep, train

_TRAIN_KEYS = {f.name for f in fields(TrainConfig)}
_DATA_KEYS = {"path", "format", "limit", "labels_path"}
_PREP_KEYS = {"lowercase", "strip_punctuation", "relevance_keywords", "min_tokens"}
_AUG_KEYS = {"word_delete_prob", "word_swap_prob", "span_mask_prob"}
_SECTIONS = {"data": _DATA_KEYS, "train": _TRAIN_KEYS, "augment": _AUG_KEYS,
             "preprocess": _PREP_KEYS}


class CliError(Exception):
    pass


def _load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except FileNotFoundError:
        raise CliError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise CliError(f"cannot parse {path}: {exc}")
    for section, table in cfg.items():
        if section not in _SECTIONS:
            raise CliError(f"{path}: unknown config section [{section}]")
        if not isinstance(table, dict):
            raise CliError(f"{path}: [{section}] must be a table")
        unknown = set(table) - _SECTIONS[section]
        if unknown:
            raise CliError(f"{path}: unknown key(s) in [{section}]: {sorted(unknown)}")
    return cfg


def _train_config(cfg: dict, args) -> TrainConfig:
    merged = dict(cfg.get("train", {}))
    merged.update(cfg.get("augment", {}))
    for key in ("epochs", "batch_size", "tau", "lr", "lr_scale", "head", "provider", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    try:
        return TrainConfig.from_dict(merged).validate()
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid config: {exc}")


def _load_corpus(path, fmt: str, limit=None):
    path = Path(path)
    if not path.exists():
        raise CliError(f"input file not found: {path}")
    if fmt == "agnews":
        return load_agnews(path, limit)
    if fmt == "stackoverflow":
        return load_stackoverflow(path, limit)
    if fmt == "jsonl":
        corp = load_jsonl(path)
        if limit is not None:
            corp.documents = corp.documents[:limit]
        return corp
    raise CliError(f"unknown corpus format {fmt!r}")


def _load_data(cfg: dict):
    data_cfg = cfg.get("data", {})
    if "path" not in data_cfg:
        raise CliError("config needs [data] path")
    fmt = data_cfg.get("format", "jsonl")
    path = Path(data_cfg["path"])
    if fmt == "emb1":
        if not path.exists():
            raise CliError(f"input file not found: {path}")
        emb = load_embeddings(path)
        labels = None
        if "labels_path" in data_cfg:
            labels = _read_label_file(data_cfg["labels_path"])
        return emb, labels
    return _load_corpus(path, fmt, data_cfg.get("limit")), None


def _read_label_file(path):
    path = Path(path)
    if not path.exists():
        raise CliError(f"label file not found: {path}")
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(int(line))
            except ValueError:
                raise CliError(f"{path}: non-integer label at line {lineno}: {line!r}")
    if not out:
        raise CliError(f"{path}: no labels")
    return np.asarray(out)


def _write_json(obj: dict, path, echo: bool) -> None:
    text = json.dumps(obj, sort_keys=True, ensure_ascii=False)
    if path:
        Path(path).write_text(text + "\n", encoding="utf-8")
    if echo or not path:
        print(text)


def _cmd_preprocess(args) -> int:
    corp = _load_corpus(args.input, args.format, args.limit)
    rules = PreprocessRules(
        lowercase=not args.no_lowercase,
        strip_punctuation=not args.keep_punctuation,
        relevance_keywords=tuple(k for k in (args.keywords or "").split(",") if k),
        min_tokens=args.min_tokens,
    )
    corp = preprocess_corpus(corp, rules)
    if not args.no_dedup:
        corp = dedup(corp)
    save_jsonl(corp, args.output)
    print(f"wrote {len(corp)} documents to {args.output}")
    return 0


def _cmd_embed(args) -> int:
    corp = _load_corpus(args.input, args.format)
    texts = corp.texts()
    if not texts:
        raise CliError(f"{args.input}: empty corpus")
    if args.provider == "bow":
        data = HashedBowVectorizer(d=args.dim, seed=args.seed).transform(texts)
    else:
        params = init_encoder_params(args.dim, n_heads=2, d_g=args.dim, seed=args.seed)
        data = np.stack([encoder_forward(params, token_matrix(t, args.dim, args.seed))
                         for t in texts])
    ids = np.array([d.id for d in corp.documents], dtype=np.uint64)
    save_embeddings(EmbeddingSet(data=data.astype(np.float32), ids=ids), args.output)
    print(f"wrote {data.shape[0]}x{data.shape[1]} embeddings to {args.output}")
    return 0


def _cmd_train(args) -> int:
    cfg = _load_config(args.config)
    tc = _train_config(cfg, args)
    data, labels = _load_data(cfg)
    result = train(tc, data, labels=labels)
    _write_json(result.to_dict(), args.output, echo=False)
    print(f"acc={result.report.acc:.4f} nmi={result.report.nmi:.4f} "
          f"final_loss={result.trace[-1].total if result.trace else float('nan'):.6f}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    tc = _train_config(cfg, args)
    data, labels = _load_data(cfg)
    try:
        values = [float(v) for v in args.values.split(",") if v]
    except ValueError:
        raise CliError(f"cannot parse sweep values: {args.values!r}")
    heads = [h for h in (args.heads or "").split(",") if h] or None
    table = sweep(tc, args.axis, values, data, labels=labels, heads=heads,
                  jobs=args.jobs, dataset=args.dataset)
    csv_text = table.to_csv()
    if args.output:
        Path(args.output).write_text(csv_text, encoding="utf-8")
    else:
        sys.stdout.write(csv_text)
    for metric in ("nmi", "acc"):
        head, value, score = table.best(metric)
        print(f"best {metric}: {score:.4f} (head={head}, {args.axis}={value})")
    return 0


def _cmd_evaluate(args) -> int:
    pred = _read_label_file(args.pred)
    truth = _read_label_file(args.truth)
    if len(pred) != len(truth):
        raise CliError(f"length mismatch: {len(pred)} predictions vs {len(truth)} truths")
    report = evaluate(pred, truth)
    _write_json(report.to_dict(), args.output, echo=True)
    return 0


def _cmd_selftest(args) -> int:
    failures = run_selftest(seed=args.seed or 0)
    return 0 if failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clustext",
                                     description="contrastive deep embedded text clustering")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="clean and deduplicate a corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--format", default="jsonl", choices=["agnews", "stackoverflow", "jsonl"])
    p.add_argument("--output", required=True)
    p.add_argument("--limit", type=int)
    p.add_argument("--no-lowercase", action="store_true")
    p.add_argument("--keep-punctuation", action="store_true")
    p.add_argument("--keywords", help="comma-separated relevance keywords")
    p.add_argument("--min-tokens", type=int, default=0)
    p.add_argument("--no-dedup", action="store_true")
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("embed", help="write an EMB1 embedding file for a corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--format", default="jsonl", choices=["agnews", "stackoverflow", "jsonl"])
    p.add_argument("--output", required=True)
    p.add_argument("--provider", default="bow", choices=["bow", "encoder"])
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("train", help="run the training loop from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--output", help="RunResult JSON path")
    _add_overrides(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("sweep", help="hyperparameter sweep emitting a CSV table")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", required=True, choices=["lr", "lr_scale", "tau"])
    p.add_argument("--values", required=True, help="comma-separated axis values")
    p.add_argument("--heads", help="comma-separated head names")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--dataset", default="data", help="dataset tag for the CSV")
    p.add_argument("--output", help="CSV path (stdout if omitted)")
    _add_overrides(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--output", help="EvalReport JSON path")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("selftest", help="run the invariant battery")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_selftest)
    return parser


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--lr-scale", dest="lr_scale", type=float)
    p.add_argument("--head")
    p.add_argument("--provider")
    p.add_argument("--seed", type=int)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, RuntimeError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
