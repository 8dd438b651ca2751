"""Command-line surface: prepare -> augment -> train -> eval -> ensemble -> tag.

Every command that writes an output also writes ``<output>.manifest.json``
recording the command, its parameters, and the fully materialized config, so
any artifact can be reproduced from its manifest alone.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from mixtag import __version__
from mixtag.artifacts import ArtifactError, load_model, save_model
from mixtag.augment import (
    augment_dataset,
    build_ngram_model,
    extract_seeds,
    train_char_lm,
)
from mixtag.config import ExperimentConfig, load_config
from mixtag.data import (
    DatasetError,
    EmptyTokenError,
    Token,
    load_instances,
    load_labeled_wordlist,
    load_wordlist,
    normalize_token,
    split_dataset,
    write_labeled_wordlist,
)
from mixtag.ensemble import (
    EnsembleModel,
    evaluate_instance_level,
    evaluate_token_level,
    format_results_tsv,
)
from mixtag.taggers import (
    TrainedTagger,
    train_augmented,
    train_baseline,
    train_conv1d,
    train_siamese_tagger,
)


def _write_manifest(out_path, command: str, params: dict,
                    cfg: ExperimentConfig) -> None:
    manifest = {
        "command": command,
        "params": params,
        "config": asdict(cfg),
        "config_hash": cfg.hash(),
        "package_version": __version__,
        "numpy_version": np.__version__,
    }
    path = Path(str(out_path) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _unique_tokens(tokens, need: int, source: str) -> list[Token]:
    seen: set[str] = set()
    unique = []
    for t in tokens:
        if t.surface not in seen:
            seen.add(t.surface)
            unique.append(t)
    if len(unique) < need:
        raise DatasetError(
            f"{source}: need {need} unique normalized tokens, found {len(unique)}"
        )
    return unique[:need]


def cmd_prepare(args) -> int:
    cfg = load_config(args.config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for label, path in ((0, args.class0), (1, args.class1)):
        tokens = _unique_tokens(load_wordlist(path, label), 6000, path)
        split = split_dataset(tokens, cfg.split_seed + label)
        for i, batch in enumerate(split.train_batches, start=1):
            write_labeled_wordlist(out_dir / f"class{label}_train{i}.tsv", batch)
        write_labeled_wordlist(out_dir / f"class{label}_dev.tsv", split.dev)
        write_labeled_wordlist(out_dir / f"class{label}_test.tsv", split.test)
    _write_manifest(out_dir / "prepare", "prepare",
                    {"class0": str(args.class0), "class1": str(args.class1),
                     "out": str(out_dir)}, cfg)
    print(f"wrote 12 split files to {out_dir}")
    return 0


def cmd_augment(args) -> int:
    cfg = load_config(args.config)
    train_tokens = load_labeled_wordlist(args.train)
    labels = {t.label for t in train_tokens}
    if len(labels) != 1:
        raise DatasetError(f"{args.train}: augmentation input must be one language")
    seeds = np.random.SeedSequence(cfg.generator_seed).generate_state(4)
    ngram = build_ngram_model(train_tokens)
    seed_set = extract_seeds(train_tokens)
    generators = [
        train_char_lm(train_tokens, shift, int(seeds[shift - 1]),
                      cfg.charlm_config())
        for shift in (1, 2, 3)
    ]
    rng = np.random.default_rng(int(seeds[3]))
    records = augment_dataset(train_tokens, seed_set, ngram, generators, rng)
    write_labeled_wordlist(args.out, [r.token for r in records])
    with open(str(args.out) + ".provenance.jsonl", "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps({"token": r.token.surface, "generator": r.source,
                                 "seed": r.seed, "length": r.length}) + "\n")
    _write_manifest(args.out, "augment",
                    {"train": str(args.train), "out": str(args.out)}, cfg)
    print(f"wrote {len(records)} tokens to {args.out}")
    return 0


def _load_split_pair(data_dir: Path, stem: str) -> list[Token]:
    return (load_labeled_wordlist(data_dir / f"class0_{stem}.tsv")
            + load_labeled_wordlist(data_dir / f"class1_{stem}.tsv"))


def _write_history(out, history) -> None:
    with open(str(out) + ".train_log.jsonl", "w", encoding="utf-8") as fh:
        for entry in history:
            fh.write(json.dumps(entry) + "\n")


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    data_dir = Path(args.data)
    dev = _load_split_pair(data_dir, "dev")
    if args.method == "siamese":
        train0 = load_labeled_wordlist(data_dir / f"class0_train{args.batch}.tsv")
        train1 = load_labeled_wordlist(data_dir / f"class1_train{args.batch}.tsv")
        tagger = train_siamese_tagger(train0, train1, dev,
                                      (cfg.train_seed, cfg.support_seed),
                                      cfg.siamese_config())
    elif args.method == "augment":
        if not (args.aug0 and args.aug1):
            raise DatasetError("--method augment needs --aug0 and --aug1 files")
        train = load_labeled_wordlist(args.aug0) + load_labeled_wordlist(args.aug1)
        tagger = train_augmented(train, dev, cfg.train_seed, cfg.baseline_config())
    else:
        train = _load_split_pair(data_dir, f"train{args.batch}")
        if args.method == "baseline":
            tagger = train_baseline(train, dev, cfg.train_seed,
                                    cfg.baseline_config())
        else:
            tagger = train_conv1d(train, dev, cfg.train_seed, cfg.conv_config())
    save_model(args.out, tagger, config_hash=cfg.hash())
    _write_history(args.out, tagger.history)
    _write_manifest(args.out, "train",
                    {"method": args.method, "batch": args.batch,
                     "data": str(args.data), "out": str(args.out),
                     "aug0": args.aug0, "aug1": args.aug1}, cfg)
    print(f"{args.method}: dev accuracy {tagger.dev_accuracy:.4f} "
          f"at theta {tagger.theta:.6f} -> {args.out}")
    return 0


def _named_models(paths) -> dict[str, object]:
    models: dict[str, object] = {}
    for path in paths:
        model = load_model(path)
        name = model.method if isinstance(model, TrainedTagger) else "ensemble"
        suffix = 2
        base = name
        while name in models:
            name = f"{base}{suffix}"
            suffix += 1
        models[name] = model
    return models


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    models = _named_models(args.models)
    taggers = [m for m in models.values() if isinstance(m, TrainedTagger)]
    if len(taggers) >= 2:
        models["ensemble"] = EnsembleModel.from_taggers(taggers)
    if args.level == "token":
        if not args.data:
            raise DatasetError("--level token needs --data")
        test = _load_split_pair(Path(args.data), "test")
        rows = [(name, evaluate_token_level(model, test))
                for name, model in models.items()]
    else:
        if not args.instances:
            raise DatasetError("--level instance needs --instances")
        instances = load_instances(args.instances)
        metrics = evaluate_instance_level(models, instances)
        rows = [(name, metrics[name]) for name in models]
    tsv = format_results_tsv(rows)
    if args.out:
        Path(args.out).write_text(tsv, encoding="utf-8")
        _write_manifest(args.out, "eval",
                        {"level": args.level, "models": list(args.models),
                         "data": args.data, "instances": args.instances,
                         "out": str(args.out)}, cfg)
    else:
        sys.stdout.write(tsv)
    return 0


def cmd_ensemble(args) -> int:
    cfg = load_config(args.config)
    members = []
    for path in args.models:
        model = load_model(path)
        if not isinstance(model, TrainedTagger):
            raise ArtifactError(f"{path}: ensembles must be built from taggers")
        members.append(model)
    accuracies = None
    if args.accuracies:
        accuracies = [float(a) for a in args.accuracies.split(",")]
        if len(accuracies) != len(members):
            raise ValueError("need one accuracy per model")
    ensemble = EnsembleModel.from_taggers(members, accuracies)
    save_model(args.out, ensemble, config_hash=cfg.hash())
    _write_manifest(args.out, "ensemble",
                    {"models": list(args.models),
                     "accuracies": args.accuracies, "out": str(args.out)}, cfg)
    weights = ", ".join(f"{w:.4f}" for w in ensemble.weights)
    print(f"ensemble of {len(members)} models (weights {weights}) -> {args.out}")
    return 0


def cmd_tag(args) -> int:
    model = load_model(args.model)
    lines = [line.rstrip("\n") for line in sys.stdin]
    tokens = []
    keep = []
    for i, line in enumerate(lines):
        raw = line.strip()
        if not raw:
            continue
        try:
            tokens.append(Token(normalize_token(raw), None))
            keep.append(raw)
        except EmptyTokenError:
            print(f"skipping unusable token {raw!r}", file=sys.stderr)
    if tokens:
        preds = model.predict(tokens)
        for raw, pred in zip(keep, preds):
            print(f"{raw}\t{int(pred)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixtag",
        description="Low-resource word-level language tagging for code-mixed text.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="split two wordlists into 4x1000/1000/1000")
    p.add_argument("--class0", required=True, help="wordlist for label 0")
    p.add_argument("--class1", required=True, help="wordlist for label 1")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("augment", help="grow a 1000-token batch to 4000 tokens")
    p.add_argument("--train", required=True, help="labeled wordlist, one language")
    p.add_argument("--out", required=True, help="output labeled wordlist")
    p.add_argument("--config")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train", help="train one tagger on one batch")
    p.add_argument("--method", required=True,
                   choices=("baseline", "conv1d", "augment", "siamese"))
    p.add_argument("--batch", type=int, default=1, help="train batch index 1-4")
    p.add_argument("--data", required=True, help="directory from prepare")
    p.add_argument("--aug0", help="augmented wordlist for class 0")
    p.add_argument("--aug1", help="augmented wordlist for class 1")
    p.add_argument("--out", required=True, help="model artifact path (.npz)")
    p.add_argument("--config")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate models (plus their ensemble)")
    p.add_argument("--level", required=True, choices=("token", "instance"))
    p.add_argument("--models", nargs="+", required=True)
    p.add_argument("--data", help="prepare directory (token level)")
    p.add_argument("--instances", help="instance file (instance level)")
    p.add_argument("--out", help="results TSV path (default stdout)")
    p.add_argument("--config")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ensemble", help="combine tagger artifacts by weighted vote")
    p.add_argument("--models", nargs="+", required=True)
    p.add_argument("--accuracies", help="comma-separated weights source override")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("tag", help="label stdin tokens as token<TAB>label")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_tag)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ArtifactError, DatasetError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
