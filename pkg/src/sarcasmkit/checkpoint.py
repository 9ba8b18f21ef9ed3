"""Trained-model bundles and their on-disk layout.

A checkpoint directory holds:

``manifest.cfg``
    plain ``key = value`` lines: format/tool version, architecture dims, the
    full training config (loss and preprocessing included) and the seed.
``params.pt``
    the model ``state_dict``.
``vocab.json``
    the reference tokenizer vocabulary.
``split.json``
    ids of the training and validation records.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import torch
from torch import nn

from . import __version__
from .config import TrainConfig, read_kv, train_config_from_flat, write_kv, _parse_value
from .data import TweetRecord
from .encoder import TinyEncoder, Vocabulary
from .errors import EmptyInput, TaskMismatch
from .hf_encoder import PREFIX, PretrainedEncoder
from .models import GanClassifier, SarcasmClassifier
from .preprocess import prepare

FORMAT_VERSION = 1
TextLike = Union[str, TweetRecord]


def build_encoder(config: TrainConfig, vocab: Vocabulary) -> nn.Module:
    """``tiny`` is the reference encoder; ``hf:<id or path>`` loads a pretrained one."""
    if config.encoder == "tiny":
        return TinyEncoder(vocab, dim=config.dim, max_len=config.max_len, dropout=config.dropout)
    if config.encoder.startswith(PREFIX):
        return PretrainedEncoder(config.encoder[len(PREFIX):], config.max_len, config.dropout)
    raise ValueError(f"unknown encoder adapter {config.encoder!r}")


def build_model(config: TrainConfig, vocab: Vocabulary) -> nn.Module:
    encoder = build_encoder(config, vocab)
    if config.model_kind == "m3":
        multilabel = config.task == "B"
        return GanClassifier(encoder, num_real=6 if multilabel else 2, multilabel=multilabel, dropout=config.dropout)
    if config.task != "A":
        raise TaskMismatch(f"{config.model_kind} models only handle task A")
    return SarcasmClassifier(encoder, config.model_kind, config.dropout)


@dataclass
class Checkpoint:
    model: nn.Module
    config: TrainConfig
    vocab: Vocabulary
    split: dict = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return self.config.model_kind

    @property
    def task(self) -> str:
        return self.config.task

    def prepare_texts(self, items: Sequence[TextLike]) -> list[str]:
        cfg = self.config.preprocessing
        out = []
        for item in items:
            if isinstance(item, TweetRecord):
                out.append(prepare(item.text, item.dialect, cfg))
            else:
                out.append(prepare(item, None, cfg))
        return out

    @torch.no_grad()
    def logits(self, items: Sequence[TextLike], batch_size: int = 64) -> torch.Tensor:
        """Real-class logits (the fake logit of Model 3 is dropped)."""
        if not items:
            raise EmptyInput("nothing to predict")
        self.model.eval()
        texts = self.prepare_texts(items)
        chunks = []
        for i in range(0, len(texts), batch_size):
            batch = self.model.encoder.tokenize(texts[i : i + batch_size], pad_to_max=False)
            chunks.append(self.model(batch).logits)
        return torch.cat(chunks)

    def predict_proba(self, items: Sequence[TextLike]) -> np.ndarray:
        """Sarcastic-class probability per text (task A models only).

        m1: sigmoid of the logit; m2: softmax component 1; m3: softmax over the
        real classes only, component 1.
        """
        if self.task != "A":
            raise TaskMismatch("sarcastic probabilities need a task A model")
        return sarcastic_probability(self.logits(items), self.kind).numpy()

    def predict(self, items: Sequence[TextLike]) -> np.ndarray:
        """Task A: 0/1 labels. Task B: ``[n, 6]`` category flags at threshold 0.5."""
        logits = self.logits(items)
        if self.task == "B":
            return (torch.sigmoid(logits) >= 0.5).long().numpy()
        if self.kind == "m1":
            return (torch.sigmoid(logits[:, 0]) >= 0.5).long().numpy()
        return logits.argmax(dim=1).numpy()

    def manifest(self) -> dict:
        values = {
            "format_version": FORMAT_VERSION,
            "tool_version": __version__,
            "vocab_size": len(self.vocab),
        }
        flat = self.config.to_flat()
        flat.pop("preprocess", None)
        values.update({f"config.{k}": v for k, v in flat.items() if not k.startswith("preprocess.")})
        values.update({f"config.preprocess.{k}": v for k, v in self.config.preprocessing.to_dict().items()})
        return values

    def save(self, directory: str | Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        write_kv(self.manifest(), directory / "manifest.cfg")
        torch.save(self.model.state_dict(), directory / "params.pt")
        (directory / "vocab.json").write_text(self.vocab.to_json(), encoding="utf-8")
        (directory / "split.json").write_text(json.dumps(self.split, ensure_ascii=False), encoding="utf-8")
        return directory

    @classmethod
    def load(cls, directory: str | Path) -> "Checkpoint":
        directory = Path(directory)
        raw = {k: _parse_value(v) for k, v in read_kv(directory / "manifest.cfg").items()}
        flat = {k[len("config."):]: v for k, v in raw.items() if k.startswith("config.")}
        flat = {k: v for k, v in flat.items() if k != "preprocess"}
        config = train_config_from_flat(flat)
        vocab = Vocabulary.from_json((directory / "vocab.json").read_text(encoding="utf-8"))
        model = build_model(config, vocab)
        state = torch.load(directory / "params.pt", map_location="cpu", weights_only=True)
        model.load_state_dict(state)
        model.eval()
        split_path = directory / "split.json"
        split = json.loads(split_path.read_text(encoding="utf-8")) if split_path.exists() else {}
        return cls(model=model, config=config, vocab=vocab, split=split)


def sarcastic_probability(logits: torch.Tensor, kind: str) -> torch.Tensor:
    """Probability of the sarcastic class from task A real-class logits."""
    if kind == "m1":
        return torch.sigmoid(logits.reshape(-1))
    return torch.softmax(logits, dim=-1)[:, 1]


def load_checkpoints(paths: Sequence[str | Path], task: Optional[str] = None) -> list[Checkpoint]:
    members = [Checkpoint.load(p) for p in paths]
    if task is not None:
        need = "B" if task == "B" else "A"
        for path, member in zip(paths, members):
            if member.task != need:
                raise TaskMismatch(f"{path} was trained for task {member.task}, not {need}")
    return members
