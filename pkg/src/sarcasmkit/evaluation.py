"""Metrics, hard-vote ensembles and sub-task C pairwise decisions."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Protocol, Sequence

import numpy as np

from .data import CATEGORIES
from .errors import EmptyEnsemble, LengthMismatch, ShapeMismatch, TaskMismatch


class Member(Protocol):
    """Anything that scores texts for sarcasm: a loaded checkpoint, or a stub."""

    def predict_proba(self, items: Sequence) -> np.ndarray: ...

    def predict(self, items: Sequence) -> np.ndarray: ...


@dataclass
class MetricReport:
    accuracy: Optional[float] = None
    precision: Optional[float] = None
    recall: Optional[float] = None
    f1: Optional[float] = None
    f1_sarcastic: Optional[float] = None
    per_category_f1: dict[str, float] = field(default_factory=dict)
    members: int = 1
    n: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def flat(self) -> dict[str, float]:
        out = {k: v for k, v in self.to_dict().items() if k != "per_category_f1" and v is not None}
        out.update({f"f1_{k}": v for k, v in self.per_category_f1.items()})
        return out


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def _f1(tp: int, fp: int, fn: int) -> float:
    p = _ratio(tp, tp + fp)
    r = _ratio(tp, tp + fn)
    return _ratio(2 * p * r, p + r)


def metrics_binary(predictions: Sequence[int], gold: Sequence[int]) -> MetricReport:
    """Accuracy, macro precision/recall/F1 over both classes, and sarcastic-class F1.

    An undefined ratio (0/0) counts as 0.
    """
    pred = np.asarray(predictions).astype(int).reshape(-1)
    true = np.asarray(gold).astype(int).reshape(-1)
    if pred.shape != true.shape:
        raise LengthMismatch(f"{pred.size} predictions vs {true.size} gold labels")
    if pred.size == 0:
        raise LengthMismatch("no predictions to score")
    precisions, recalls, f1s = [], [], []
    for cls in (0, 1):
        tp = int(np.sum((pred == cls) & (true == cls)))
        fp = int(np.sum((pred == cls) & (true != cls)))
        fn = int(np.sum((pred != cls) & (true == cls)))
        precisions.append(_ratio(tp, tp + fp))
        recalls.append(_ratio(tp, tp + fn))
        f1s.append(_f1(tp, fp, fn))
    return MetricReport(
        accuracy=float(np.mean(pred == true)),
        precision=float(np.mean(precisions)),
        recall=float(np.mean(recalls)),
        f1=float(np.mean(f1s)),
        f1_sarcastic=f1s[1],
        n=int(pred.size),
    )


def metrics_multilabel(predictions, gold) -> MetricReport:
    """Positive-class F1 per category and their unweighted mean."""
    pred = np.asarray(predictions).astype(int)
    true = np.asarray(gold).astype(int)
    if pred.ndim != 2 or pred.shape[1] != len(CATEGORIES) or pred.shape != true.shape:
        raise ShapeMismatch(f"expected two [n, 6] arrays, got {pred.shape} and {true.shape}")
    per = {}
    for j, name in enumerate(CATEGORIES):
        tp = int(np.sum((pred[:, j] == 1) & (true[:, j] == 1)))
        fp = int(np.sum((pred[:, j] == 1) & (true[:, j] == 0)))
        fn = int(np.sum((pred[:, j] == 0) & (true[:, j] == 1)))
        per[name] = _f1(tp, fp, fn)
    return MetricReport(f1=float(np.mean(list(per.values()))), per_category_f1=per, n=int(pred.shape[0]))


def hard_vote(
    label_votes: Sequence[Sequence[int]],
    probabilities: Optional[Sequence[Sequence[float]]] = None,
    tie_rule: str = "mean_probability",
) -> np.ndarray:
    """Majority label per sample across members.

    On an exact tie the label is 1 iff the members' mean sarcastic probability
    is at least 0.5 (``probabilities`` is then required).
    """
    if len(label_votes) == 0:
        raise EmptyEnsemble("hard voting needs at least one member")
    if tie_rule != "mean_probability":
        raise ValueError(f"unknown tie rule {tie_rule!r}")
    if len({len(v) for v in label_votes}) != 1:
        raise LengthMismatch("members disagree on the number of samples")
    votes = np.asarray(label_votes, dtype=int)
    ones = votes.sum(axis=0)
    zeros = votes.shape[0] - ones
    out = (ones > zeros).astype(int)
    tied = ones == zeros
    if tied.any():
        if probabilities is None:
            raise ValueError("tied votes need member probabilities")
        probs = np.asarray(probabilities, dtype=float)
        if probs.shape != votes.shape:
            raise LengthMismatch("probabilities must match votes in shape")
        out[tied] = (probs[:, tied].mean(axis=0) >= 0.5).astype(int)
    return out


def multilabel_vote(member_flags: Sequence[np.ndarray]) -> np.ndarray:
    """Per-category majority over members; ties resolve to absent."""
    if len(member_flags) == 0:
        raise EmptyEnsemble("hard voting needs at least one member")
    stack = np.asarray(member_flags, dtype=int)
    return (2 * stack.sum(axis=0) > stack.shape[0]).astype(int)


@dataclass
class EnsembleBundle:
    members: list
    tie_rule: str = "mean_probability"

    def __post_init__(self):
        if not self.members:
            raise EmptyEnsemble("an ensemble needs at least one member")
        tasks = {getattr(m, "task", "A") for m in self.members}
        if len(tasks) > 1:
            raise TaskMismatch(f"ensemble members target different tasks: {sorted(tasks)}")

    @property
    def task(self) -> str:
        return getattr(self.members[0], "task", "A")

    def mean_proba(self, items: Sequence) -> np.ndarray:
        return np.mean([np.asarray(m.predict_proba(items), dtype=float) for m in self.members], axis=0)

    def predict(self, items: Sequence) -> np.ndarray:
        if self.task == "B":
            return multilabel_vote([m.predict(items) for m in self.members])
        votes = [m.predict(items) for m in self.members]
        probs = [m.predict_proba(items) for m in self.members]
        return hard_vote(votes, probs, self.tie_rule)


def pairwise_decide(bundle: EnsembleBundle, text0, text1) -> int:
    """Index (0 or 1) of the text judged sarcastic; ties go to 0."""
    return int(pairwise_decide_many(bundle, [text0], [text1])[0])


def pairwise_decide_many(bundle: EnsembleBundle, texts0: Sequence, texts1: Sequence) -> np.ndarray:
    if len(texts0) != len(texts1):
        raise LengthMismatch("pair sides differ in length")
    if not bundle.members:
        raise EmptyEnsemble("pairwise decisions need at least one member")
    p0 = bundle.mean_proba(list(texts0))
    p1 = bundle.mean_proba(list(texts1))
    return np.where(p0 >= p1, 0, 1)


def metrics_pairwise(decisions: Sequence[int], gold: Sequence[int]) -> MetricReport:
    """Accuracy and macro scores over pair decisions (classes are the two indices)."""
    return metrics_binary(decisions, gold)


def format_table(title: str, rows: dict[str, dict[str, float]], columns: Sequence[str]) -> str:
    """Plain-text table: one row per entry, one column per metric."""
    head_w = max([len(title)] + [len(r) for r in rows])
    widths = [max(len(c), 6) for c in columns]
    lines = [title.ljust(head_w) + " | " + " | ".join(c.rjust(w) for c, w in zip(columns, widths))]
    lines.append("-" * len(lines[0]))
    for name, values in rows.items():
        cells = []
        for c, w in zip(columns, widths):
            v = values.get(c)
            cells.append(("-" if v is None else f"{v:.4f}").rjust(w))
        lines.append(name.ljust(head_w) + " | " + " | ".join(cells))
    return "\n".join(lines) + "\n"


TASK_COLUMNS = {
    "A": ["f1_sarcastic", "f1", "precision", "recall", "accuracy"],
    "B": ["f1"] + [f"f1_{c}" for c in CATEGORIES],
    "C": ["accuracy", "f1"],
}


def write_report(report: MetricReport, task: str, out_dir: str | Path, label: str = "model") -> None:
    """Write ``report.json`` and a table-shaped ``report.txt``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {"task": task, **report.to_dict()}
    (out_dir / "report.json").write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    text = format_table(f"Task {task}", {label: report.flat()}, TASK_COLUMNS[task])
    text += f"members: {report.members}\nsamples: {report.n}\n"
    (out_dir / "report.txt").write_text(text, encoding="utf-8")


def predict_proba(checkpoint: Member, items: Sequence) -> np.ndarray:
    """Sarcastic-class probabilities from a task A member."""
    return np.asarray(checkpoint.predict_proba(items), dtype=float)
