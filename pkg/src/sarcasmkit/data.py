"""Tweet records in the shared-task schema: loading, rephrase augmentation,
stratified splitting and sub-task B filtering.

Canonical storage is JSONL (one record per line with keys ``id, text, label,
categories, rephrase, dialect, language``). A CSV adapter reads the layouts
distributed for the shared task.
"""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Literal, Optional, Sequence

import numpy as np

from .errors import BadLabel, DegenerateSplit, EmptyText, MissingColumn

CATEGORIES = (
    "sarcasm",
    "irony",
    "satire",
    "understatement",
    "overstatement",
    "rhetorical_question",
)

Task = Literal["A", "B", "C"]
Language = Literal["ar", "en"]

JSONL_KEYS = ("id", "text", "label", "categories", "rephrase", "dialect", "language")


@dataclass(frozen=True)
class TweetRecord:
    """One labeled tweet.

    ``categories`` holds six 0/1 flags ordered as :data:`CATEGORIES`. A
    whitespace-only ``rephrase`` is stored as ``None``.
    """

    id: str
    text: str
    label: Optional[int] = None
    categories: Optional[tuple[int, ...]] = None
    rephrase: Optional[str] = None
    dialect: Optional[str] = None
    language: Language = "en"

    def __post_init__(self):
        if not isinstance(self.text, str) or not self.text.strip():
            raise EmptyText(f"record {self.id!r} has an empty text field")
        if self.label is not None and self.label not in (0, 1):
            raise BadLabel(f"record {self.id!r}: label must be 0 or 1, got {self.label!r}")
        if self.language not in ("ar", "en"):
            raise ValueError(f"record {self.id!r}: unknown language {self.language!r}")
        if self.categories is not None:
            cats = tuple(self.categories)
            if len(cats) != len(CATEGORIES) or any(c not in (0, 1) for c in cats):
                raise BadLabel(f"record {self.id!r}: categories must be six 0/1 flags, got {cats!r}")
            object.__setattr__(self, "categories", cats)
        if self.rephrase is not None and not self.rephrase.strip():
            object.__setattr__(self, "rephrase", None)
        if self.label == 0 and self.rephrase is not None:
            raise ValueError(f"record {self.id!r}: non-sarcastic records carry no rephrase")

    def to_json(self) -> dict:
        d = asdict(self)
        if d["categories"] is not None:
            d["categories"] = list(d["categories"])
        return d

    @classmethod
    def from_json(cls, obj: dict, row: int = 0) -> "TweetRecord":
        if "text" not in obj:
            raise MissingColumn(f"line {row + 1}: missing key 'text'")
        return cls(
            id=str(obj["id"]) if obj.get("id") is not None else str(row),
            text=obj["text"],
            label=_parse_label(obj.get("label"), row),
            categories=_parse_categories(obj.get("categories"), row),
            rephrase=obj.get("rephrase"),
            dialect=obj.get("dialect") or None,
            language=obj.get("language") or "en",
        )


@dataclass(frozen=True)
class DatasetSplit:
    train: list[TweetRecord]
    validation: list[TweetRecord]
    seed: int


def _parse_label(value, row: int) -> Optional[int]:
    if value is None or (isinstance(value, str) and not value.strip()):
        return None
    try:
        f = float(value)
    except (TypeError, ValueError):
        raise BadLabel(f"row {row}: label {value!r} is not 0 or 1") from None
    if f not in (0.0, 1.0):
        raise BadLabel(f"row {row}: label {value!r} is not 0 or 1")
    return int(f)


def _parse_categories(value, row: int) -> Optional[tuple[int, ...]]:
    if value is None:
        return None
    flags = tuple(_parse_label(v, row) for v in value)
    if len(flags) != len(CATEGORIES) or any(f is None for f in flags):
        raise BadLabel(f"row {row}: categories must be six 0/1 flags, got {value!r}")
    return flags


def _require(header: Sequence[str], needed: Iterable[str], path: Path) -> None:
    missing = [c for c in needed if c not in header]
    if missing:
        raise MissingColumn(f"{path}: missing column(s) {', '.join(missing)}")


def _read_csv(path: Path, task: Task, language: Language) -> list[TweetRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if task == "A":
            _require(header, ("tweet",), path)
        elif task == "B":
            _require(header, ("tweet",) + CATEGORIES, path)
        else:
            _require(header, ("text_0", "text_1"), path)
        records: list[TweetRecord] = []
        for row, raw in enumerate(reader):
            rid = raw.get("id") or str(row)
            dialect = (raw.get("dialect") or "").strip() or None
            if task == "A":
                label = _parse_label(raw.get("sarcastic"), row)
                records.append(
                    TweetRecord(
                        id=rid,
                        text=raw["tweet"] or "",
                        label=label,
                        rephrase=(raw.get("rephrase") or None) if label != 0 else None,
                        dialect=dialect,
                        language=language,
                    )
                )
            elif task == "B":
                cats = _parse_categories([raw[c] for c in CATEGORIES], row)
                label = _parse_label(raw.get("sarcastic"), row)
                if label is None:
                    label = int(any(cats))
                records.append(
                    TweetRecord(
                        id=rid,
                        text=raw["tweet"] or "",
                        label=label,
                        categories=cats,
                        rephrase=(raw.get("rephrase") or None) if label else None,
                        dialect=dialect,
                        language=language,
                    )
                )
            else:
                gold = _parse_label(raw.get("sarcastic_id"), row)
                for side in (0, 1):
                    records.append(
                        TweetRecord(
                            id=f"{rid}-{side}",
                            text=raw[f"text_{side}"] or "",
                            label=None if gold is None else int(gold == side),
                            dialect=dialect,
                            language=language,
                        )
                    )
    return records


def load_dataset(
    path: str | Path,
    format: Literal["csv", "jsonl"] | None = None,
    task: Task = "A",
    language: Language = "en",
) -> list[TweetRecord]:
    """Read a dataset file into records, preserving row order.

    Args:
        path: CSV or JSONL file.
        format: ``"csv"`` or ``"jsonl"``; inferred from the suffix when omitted.
        task: Sub-task whose CSV layout to expect. Task C rows expand into two
            records with ids ``<row>-0`` and ``<row>-1``; the gold
            ``sarcastic_id`` column, when present, sets their labels.
        language: Language tag for CSV rows (JSONL records carry their own).

    Raises:
        MissingColumn: the header lacks a column the task requires.
        EmptyText: a tweet field is blank.
        BadLabel: a label is not 0 or 1.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    fmt = format or ("jsonl" if path.suffix in (".jsonl", ".json") else "csv")
    if fmt == "csv":
        return _read_csv(path, task, language)
    records = []
    with open(path, encoding="utf-8") as fh:
        for row, line in enumerate(fh):
            if line.strip():
                records.append(TweetRecord.from_json(json.loads(line), row))
    return records


def save_jsonl(records: Iterable[TweetRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), ensure_ascii=False) + "\n")


def as_pairs(records: Sequence[TweetRecord]) -> list[tuple[TweetRecord, TweetRecord]]:
    """Regroup task C records (two per pair, in file order) into pairs."""
    if len(records) % 2:
        raise ValueError("task C records must come in pairs")
    return [(records[i], records[i + 1]) for i in range(0, len(records), 2)]


def augment_with_rephrases(records: Sequence[TweetRecord]) -> list[TweetRecord]:
    """Append each rephrase as an extra non-sarcastic record with id ``<id>-r``."""
    out = list(records)
    for rec in records:
        if rec.rephrase is not None:
            out.append(
                TweetRecord(
                    id=f"{rec.id}-r",
                    text=rec.rephrase,
                    label=0,
                    dialect=rec.dialect,
                    language=rec.language,
                )
            )
    return out


def _stratum(rec: TweetRecord):
    return rec.label


def _allocate(sizes: list[int], ratio: float) -> list[int]:
    """Largest-remainder split of ``round(ratio * total)`` across classes."""
    total = math.floor(ratio * sum(sizes) + 0.5)
    exact = [ratio * n for n in sizes]
    alloc = [math.floor(x) for x in exact]
    order = sorted(range(len(sizes)), key=lambda i: (-(exact[i] - alloc[i]), i))
    for i in order[: total - sum(alloc)]:
        alloc[i] += 1
    return alloc


def stratified_split(records: Sequence[TweetRecord], ratio: float = 0.2, seed: int = 0) -> DatasetSplit:
    """Hold out ``ratio`` of the records for validation, stratified by label.

    The validation size is ``round(ratio * len(records))`` and every class
    contributes within one record of its proportional share. Both sides keep
    the input order.

    Raises:
        DegenerateSplit: a label class has fewer than two records.
    """
    if not 0 < ratio < 1:
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    groups: dict[object, list[int]] = defaultdict(list)
    for i, rec in enumerate(records):
        groups[_stratum(rec)].append(i)
    if not groups:
        raise DegenerateSplit("cannot split an empty dataset")
    keys = sorted(groups, key=lambda k: (k is None, k))
    for key in keys:
        if len(groups[key]) < 2:
            raise DegenerateSplit(f"label {key!r} has {len(groups[key])} record(s); need at least 2")
    rng = np.random.default_rng(seed)
    held: set[int] = set()
    for key, n_val in zip(keys, _allocate([len(groups[k]) for k in keys], ratio)):
        idx = groups[key]
        held.update(idx[j] for j in rng.permutation(len(idx))[:n_val])
    train = [r for i, r in enumerate(records) if i not in held]
    validation = [r for i, r in enumerate(records) if i in held]
    return DatasetSplit(train=train, validation=validation, seed=seed)


def filter_sarcastic(records: Sequence[TweetRecord]) -> list[TweetRecord]:
    """Keep only sarcastic records (label 1, or any category flag when unlabeled)."""
    keep = []
    for rec in records:
        if rec.label == 1 or (rec.label is None and rec.categories and any(rec.categories)):
            keep.append(rec)
    return keep
