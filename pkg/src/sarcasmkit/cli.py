"""Command-line entry point.

Subcommands::

    sarcasmkit train    --config exp.cfg [--set loss.kind=fl] [--out DIR]
    sarcasmkit evaluate CKPT [CKPT ...] --test FILE --task A|B|C [--out DIR]
    sarcasmkit predict  CKPT [CKPT ...] --input FILE --task A|B|C --out FILE
    sarcasmkit matrix   --config exp.cfg --out DIR
    sarcasmkit synth    --out DIR

Exit status is 0 when every requested output was written, 2 for usage errors
and missing inputs, 1 for any other failure. Pretrained encoders
(``encoder = hf:<id>``) are cached under ``$SARCASMKIT_CACHE``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .checkpoint import load_checkpoints
from .config import ExperimentConfig, apply_overrides, format_kv, load_experiment, parse_assignments
from .data import TweetRecord, as_pairs, load_dataset
from .errors import EmptyInput, SarcasmKitError, TaskMismatch
from .evaluation import (
    EnsembleBundle,
    MetricReport,
    format_table,
    metrics_binary,
    metrics_multilabel,
    metrics_pairwise,
    pairwise_decide_many,
    write_report,
)
from .hf_encoder import CACHE_ENV
from .synthetic import write_fixtures
from .training import fit

log = logging.getLogger("sarcasmkit")


class UsageError(Exception):
    """Bad arguments or missing inputs (exit status 2)."""


def _write_run_manifest(out: Path, command: str, argv: Sequence[str], extra: Optional[dict] = None) -> None:
    values = {"command": command, "argv": list(argv), "tool_version": __version__}
    values.update(extra or {})
    (out / "run.cfg").write_text(format_kv(values), encoding="utf-8")


def _existing(path: Optional[str], what: str) -> Path:
    if not path:
        raise UsageError(f"no {what} given")
    p = Path(path)
    if not p.exists():
        raise UsageError(f"{what} not found: {p}")
    return p


def _experiment(args) -> ExperimentConfig:
    config_path = _existing(args.config, "config file")
    overrides = parse_assignments(args.set or [])
    exp = load_experiment(config_path, overrides)
    train_over = {}
    if args.task:
        train_over["task"] = args.task
    if args.lang:
        train_over["language"] = args.lang
    if args.seed is not None:
        train_over["seed"] = args.seed
    if train_over:
        exp = dataclasses.replace(exp, train=apply_overrides(exp.train, train_over))
    if args.out:
        exp = dataclasses.replace(exp, out=args.out)
    return exp


def _load_train(exp: ExperimentConfig) -> list[TweetRecord]:
    path = _existing(exp.train_path, "training dataset")
    return load_dataset(path, exp.format, exp.train.task, exp.train.language)


def cmd_train(args, argv: Sequence[str]) -> int:
    exp = _experiment(args)
    records = _load_train(exp)
    checkpoint, history = fit(records, exp.train)
    out = Path(exp.out)
    checkpoint.save(out)
    history.save(out / "history.json")
    last = history.epochs[-1]["val_metrics"]
    report = MetricReport(**{k: v for k, v in last.items() if k in {f.name for f in dataclasses.fields(MetricReport)}})
    val_dir = out / "validation"
    write_report(report, exp.train.task, val_dir, label=exp.train.model_kind)
    _write_run_manifest(out, "train", argv, {f"train.{k}": v for k, v in exp.train.to_flat().items()} | {
        "train_path": exp.train_path,
        "format": exp.format,
        "seed": exp.train.seed,
    })
    print(f"checkpoint written to {out}")
    return 0


def _read_inputs(path: Path, task: str, fmt: Optional[str], lang: str) -> list:
    """Records from CSV/JSONL, or raw lines (tab-separated pairs for task C)."""
    if path.suffix in (".csv", ".jsonl", ".json") or fmt:
        records = load_dataset(path, fmt, task, lang)
        return as_pairs(records) if task == "C" else records
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    if task == "C":
        pairs = []
        for ln in lines:
            left, sep, right = ln.partition("\t")
            if not sep:
                raise UsageError(f"{path}: task C lines need two tab-separated texts")
            pairs.append((left, right))
        return pairs
    return lines


def _bundle(paths: Sequence[str], task: str) -> EnsembleBundle:
    for p in paths:
        _existing(p, "checkpoint")
    return EnsembleBundle(load_checkpoints(paths, task))


def _pair_sides(pairs) -> tuple[list, list]:
    return [p[0] for p in pairs], [p[1] for p in pairs]


def _predict(bundle: EnsembleBundle, items: list, task: str) -> np.ndarray:
    if task == "C":
        left, right = _pair_sides(items)
        return pairwise_decide_many(bundle, left, right)
    return bundle.predict(items)


def _format_predictions(preds: np.ndarray, task: str) -> str:
    if task == "B":
        return "".join(",".join(str(int(v)) for v in row) + "\n" for row in preds)
    return "".join(f"{int(v)}\n" for v in preds)


def cmd_evaluate(args, argv: Sequence[str]) -> int:
    test = _existing(args.test, "test dataset")
    bundle = _bundle(args.checkpoints, args.task)
    items = _read_inputs(test, args.task, args.format, args.lang)
    if not items:
        raise EmptyInput(f"{test} holds no samples")
    preds = _predict(bundle, items, args.task)
    if args.task == "A":
        gold = [r.label for r in items]
        if any(g is None for g in gold):
            raise UsageError(f"{test} lacks gold 'sarcastic' labels")
        report = metrics_binary(preds, gold)
    elif args.task == "B":
        if any(r.categories is None for r in items):
            raise UsageError(f"{test} lacks category labels")
        report = metrics_multilabel(preds, [r.categories for r in items])
    else:
        if any(a.label is None for a, _ in items):
            raise UsageError(f"{test} lacks the 'sarcastic_id' column")
        report = metrics_pairwise(preds, [0 if a.label == 1 else 1 for a, _ in items])
    report.members = len(bundle.members)
    out = Path(args.out or "eval")
    label = "ensemble" if len(bundle.members) > 1 else bundle.members[0].kind
    write_report(report, args.task, out, label)
    (out / "predictions.txt").write_text(_format_predictions(preds, args.task), encoding="utf-8")
    _write_run_manifest(out, "evaluate", argv, {"checkpoints": list(args.checkpoints), "test": str(test), "task": args.task})
    print((out / "report.txt").read_text(encoding="utf-8"), end="")
    return 0


def cmd_predict(args, argv: Sequence[str]) -> int:
    src = _existing(args.input, "input file")
    bundle = _bundle(args.checkpoints, args.task)
    items = _read_inputs(src, args.task, args.format, args.lang)
    if not items:
        raise EmptyInput(f"{src} holds no texts")
    preds = _predict(bundle, items, args.task)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(_format_predictions(preds, args.task), encoding="utf-8")
    # the output is a file, so its run manifest sits next to it
    values = {"command": "predict", "argv": list(argv), "tool_version": __version__, "checkpoints": list(args.checkpoints)}
    out.with_name(out.name + ".run.cfg").write_text(format_kv(values), encoding="utf-8")
    print(f"{len(preds)} predictions written to {out}")
    return 0


MATRIX_LOSSES = {
    "m1": ("bce", "bfl", "wbce"),
    "m2": ("ce", "fl", "wce"),
    "m3": ("ce", "fl", "wce"),
}
LOSS_COLUMNS = ("BCE/CE", "BFL/FL", "W. BCE/CE")


def cmd_matrix(args, argv: Sequence[str]) -> int:
    """Train 3 models x 3 losses x {tweet only, tweet + rephrase} and tabulate
    sarcastic-class F1 (on the test file when given, else on validation)."""
    exp = _experiment(args)
    if exp.train.task != "A":
        raise TaskMismatch("the experiment matrix covers task A")
    records = _load_train(exp)
    test_items = None
    if exp.test_path:
        test_items = load_dataset(_existing(exp.test_path, "test dataset"), exp.format, "A", exp.train.language)
    out = Path(exp.out)
    rows: dict[str, dict[str, float]] = {}
    results = []
    members = []
    for kind, name in (("m1", "Model 1"), ("m2", "Model 2"), ("m3", "Model 3")):
        rows[name] = {}
        for rephrase in (False, True):
            for loss_kind, column in zip(MATRIX_LOSSES[kind], LOSS_COLUMNS):
                cfg = dataclasses.replace(
                    exp.train,
                    model_kind=kind,
                    use_rephrase=rephrase,
                    loss=dataclasses.replace(exp.train.loss, kind=loss_kind),
                )
                tag = f"{kind}-{loss_kind}-{'rephrase' if rephrase else 'tweet'}"
                checkpoint, history = fit(records, cfg)
                checkpoint.save(out / tag)
                history.save(out / tag / "history.json")
                if test_items is not None:
                    score = metrics_binary(checkpoint.predict(test_items), [r.label for r in test_items]).f1_sarcastic
                else:
                    score = history.epochs[-1]["val_metrics"]["f1_sarcastic"]
                setting = "Tweet + rephrase" if rephrase else "Tweet only"
                rows[name][f"{setting}: {column}"] = score
                results.append({"model": kind, "loss": loss_kind, "use_rephrase": rephrase, "f1_sarcastic": score})
                members.append(checkpoint)
                log.info("%s f1_sarcastic %.4f", tag, score)
    columns = [f"{s}: {c}" for s in ("Tweet only", "Tweet + rephrase") for c in LOSS_COLUMNS]
    text = format_table("Task A (F-1 sarcastic)", rows, columns)
    payload = {"results": results}
    if test_items is not None:
        gold = [r.label for r in test_items]
        ens = metrics_binary(EnsembleBundle(members).predict(test_items), gold)
        ens.members = len(members)
        payload["ensemble"] = ens.to_dict()
        text += "\n" + format_table(
            "Ensembling",
            {"hard vote": {"F-1 sarcastic": ens.f1_sarcastic, "F-score": ens.f1, "Precision": ens.precision, "Recall": ens.recall, "Accuracy": ens.accuracy}},
            ["F-1 sarcastic", "F-score", "Precision", "Recall", "Accuracy"],
        )
    (out / "matrix_report.txt").write_text(text, encoding="utf-8")
    (out / "matrix_report.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    _write_run_manifest(out, "matrix", argv, {f"train.{k}": v for k, v in exp.train.to_flat().items()} | {
        "train_path": exp.train_path,
        "test_path": exp.test_path,
        "seed": exp.train.seed,
    })
    print(text, end="")
    return 0


def cmd_synth(args, argv: Sequence[str]) -> int:
    paths = write_fixtures(args.out, args.seed or 0)
    out = Path(args.out)
    _write_run_manifest(out, "synth", argv, {"seed": args.seed or 0})
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sarcasmkit",
        description="Intended-sarcasm detection toolkit",
        epilog=f"Pretrained encoder downloads are cached under ${CACHE_ENV} when it is set.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-epoch progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, task_required=False):
        p.add_argument("--task", choices=("A", "B", "C"), required=task_required)
        p.add_argument("--lang", choices=("ar", "en"))
        p.add_argument("--seed", type=int)
        p.add_argument("--format", choices=("csv", "jsonl"))

    for name in ("train", "matrix"):
        p = sub.add_parser(name, help="train one model" if name == "train" else "run the 3x3x2 experiment matrix")
        p.add_argument("--config", required=True, help="key = value experiment file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")
        p.add_argument("--out", help="output directory")
        common(p)

    p = sub.add_parser("evaluate", help="score checkpoint(s) on a labeled test file")
    p.add_argument("checkpoints", nargs="+")
    p.add_argument("--test", required=True)
    p.add_argument("--out")
    common(p, task_required=True)

    p = sub.add_parser("predict", help="write one prediction per input line")
    p.add_argument("checkpoints", nargs="+")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    common(p, task_required=True)

    p = sub.add_parser("synth", help="write synthetic fixture datasets")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    return parser


COMMANDS = {
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "matrix": cmd_matrix,
    "synth": cmd_synth,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "lang", None) is None and args.command in ("evaluate", "predict"):
        args.lang = "en"
    try:
        return COMMANDS[args.command](args, argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename or exc}", file=sys.stderr)
        return 2
    except (SarcasmKitError, ValueError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
