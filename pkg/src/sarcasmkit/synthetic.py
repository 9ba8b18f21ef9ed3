"""Synthetic corpora in the shared-task schema, for tests and demos.

Sarcastic tweets carry a marker phrase drawn from a small pool, so the toy
corpora are separable by construction. Every sarcastic tweet gets a plain
rephrase without the marker.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional

import numpy as np

from .data import CATEGORIES, TweetRecord

MARKERS = ("yeah right", "oh great", "just perfect", "love that")
TOPICS = ("monday", "traffic", "rain", "homework", "meetings", "deadlines", "coffee", "wifi", "trains", "exams")
PLAIN = ("is late again", "was fine today", "took an hour", "starts at nine", "is on the table", "needs fixing")
NEUTRAL_OPENERS = ("today the", "apparently the", "so the", "fyi the")
EXTRAS = ("@friend", "https://t.co/abc", "😂", "🙄", "#life", "")
DIALECTS = ("nile", "gulf", "levant", "msa", "magreb")


def _tweet(rng: np.random.Generator, sarcastic: bool) -> tuple[str, Optional[str]]:
    topic = TOPICS[rng.integers(len(TOPICS))]
    plain = PLAIN[rng.integers(len(PLAIN))]
    extra = EXTRAS[rng.integers(len(EXTRAS))]
    if sarcastic:
        marker = MARKERS[rng.integers(len(MARKERS))]
        text = f"{marker} the {topic} {plain} {extra}".strip()
        return text, f"annoyed that the {topic} {plain}"
    opener = NEUTRAL_OPENERS[rng.integers(len(NEUTRAL_OPENERS))]
    return f"{opener} {topic} {plain} {extra}".strip(), None


def toy_corpus(
    n: int = 32,
    positive_fraction: float = 0.5,
    seed: int = 0,
    language: str = "en",
    with_categories: bool = False,
) -> list[TweetRecord]:
    """``n`` separable records; the first ``round(n * positive_fraction)`` ids are sarcastic
    before shuffling."""
    rng = np.random.default_rng(seed)
    n_pos = int(round(n * positive_fraction))
    labels = np.array([1] * n_pos + [0] * (n - n_pos))
    rng.shuffle(labels)
    records = []
    for i, label in enumerate(labels.tolist()):
        text, rephrase = _tweet(rng, bool(label))
        cats = None
        if with_categories:
            cats = tuple(int(x) for x in (rng.random(len(CATEGORIES)) < 0.3)) if label else (0,) * len(CATEGORIES)
            if label and not any(cats):
                cats = (1,) + cats[1:]
        records.append(
            TweetRecord(
                id=str(i),
                text=text,
                label=label,
                categories=cats,
                rephrase=rephrase,
                dialect=DIALECTS[rng.integers(len(DIALECTS))] if language == "ar" else None,
                language=language,
            )
        )
    return records


def toy_pairs(n: int = 200, seed: int = 0) -> list[tuple[str, str, int]]:
    """``(text_0, text_1, sarcastic_id)`` pairs: a marked tweet and its rephrase."""
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(n):
        sarcastic, rephrase = _tweet(rng, True)
        if rng.random() < 0.5:
            pairs.append((sarcastic, rephrase, 0))
        else:
            pairs.append((rephrase, sarcastic, 1))
    return pairs


def write_task_a_csv(records: list[TweetRecord], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        cols = ["tweet", "sarcastic", "rephrase"] + (["dialect"] if any(r.dialect for r in records) else [])
        w = csv.writer(fh)
        w.writerow(cols)
        for r in records:
            row = [r.text, r.label, r.rephrase or ""]
            if "dialect" in cols:
                row.append(r.dialect or "")
            w.writerow(row)


def write_task_b_csv(records: list[TweetRecord], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["tweet", "sarcastic", *CATEGORIES])
        for r in records:
            w.writerow([r.text, r.label, *(r.categories or (0,) * len(CATEGORIES))])


def write_task_c_csv(pairs: list[tuple[str, str, int]], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["text_0", "text_1", "sarcastic_id"])
        w.writerows(pairs)


def write_fixtures(directory: str | Path, seed: int = 0) -> dict[str, Path]:
    """Write train/test files for all three sub-tasks into ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = {
        "train_a_en": d / "train_a_en.csv",
        "test_a_en": d / "test_a_en.csv",
        "train_a_ar": d / "train_a_ar.csv",
        "train_b": d / "train_b.csv",
        "test_b": d / "test_b.csv",
        "test_c": d / "test_c.csv",
    }
    write_task_a_csv(toy_corpus(64, 0.3, seed), paths["train_a_en"])
    write_task_a_csv([_strip_rephrase(r) for r in toy_corpus(40, 0.3, seed + 1)], paths["test_a_en"])
    write_task_a_csv(toy_corpus(64, 0.3, seed + 2, language="ar"), paths["train_a_ar"])
    write_task_b_csv(toy_corpus(48, 0.75, seed + 3, with_categories=True), paths["train_b"])
    write_task_b_csv(toy_corpus(24, 1.0, seed + 4, with_categories=True), paths["test_b"])
    write_task_c_csv(toy_pairs(40, seed + 5), paths["test_c"])
    return paths


def _strip_rephrase(r: TweetRecord) -> TweetRecord:
    return TweetRecord(r.id, r.text, r.label, r.categories, None, r.dialect, r.language)
