"""Fitting Models 1-3: Adam with a linearly decaying learning rate, seeded
batch order, validation metrics after every epoch, last-epoch checkpoint."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import torch

from .checkpoint import Checkpoint, build_model
from .config import TrainConfig
from .data import (
    DatasetSplit,
    TweetRecord,
    augment_with_rephrases,
    filter_sarcastic,
    stratified_split,
)
from .encoder import Vocabulary
from .errors import DegenerateSplit, NonFiniteLoss, TaskMismatch
from .evaluation import metrics_binary, metrics_multilabel
from .losses import (
    BatchStats,
    discriminator_loss,
    feature_matching,
    generator_loss,
    multilabel_loss,
    supervised_loss,
)
from .models import GanClassifier, sample_noise
from .preprocess import prepare

log = logging.getLogger(__name__)

BatchHook = Callable[[list[str]], None]


@dataclass
class TrainHistory:
    epochs: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, ensure_ascii=False) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    def column(self, key: str) -> list:
        return [e[key] for e in self.epochs]


def linear_schedule(step: int, total_steps: int, base_lr: float) -> float:
    """Learning rate decaying linearly from ``base_lr`` at step 0 to 0 at ``total_steps``."""
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    if total_steps == 0:
        return base_lr
    return base_lr * (1 - step / total_steps)


def _optimizer(params, lr: float, config: TrainConfig, total_steps: int):
    opt = torch.optim.Adam(params, lr=lr, betas=config.adam_betas, eps=config.adam_eps)
    sched = torch.optim.lr_scheduler.LambdaLR(opt, lambda step: linear_schedule(min(step, total_steps), total_steps, 1.0))
    return opt, sched


def _prepare_split(records: Sequence[TweetRecord], config: TrainConfig) -> tuple[DatasetSplit, list[TweetRecord]]:
    """Split, then augment the training side only."""
    split = stratified_split(records, config.validation_ratio, config.seed)
    train = augment_with_rephrases(split.train) if config.use_rephrase else list(split.train)
    val_ids = {r.id for r in split.validation}
    leaked = [r.id for r in train if r.id in val_ids or r.id.removesuffix("-r") in val_ids]
    if leaked:
        raise AssertionError(f"validation records leaked into training: {leaked[:5]}")
    return split, train


def _check_classes(records: Sequence[TweetRecord]) -> None:
    for label in (0, 1):
        n = sum(r.label == label for r in records)
        if n < 2:
            raise DegenerateSplit(f"label {label} has {n} record(s); need at least 2")


def _texts(records: Sequence[TweetRecord], config: TrainConfig) -> list[str]:
    cfg = config.preprocessing
    return [prepare(r.text, r.dialect, cfg) for r in records]


def _batches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def _finite(value: torch.Tensor, what: str, epoch: int, step: int) -> None:
    if not torch.isfinite(value).all():
        raise NonFiniteLoss(f"{what} became {value.item()} at epoch {epoch}, step {step}")


def _split_ids(split: DatasetSplit, train: Sequence[TweetRecord]) -> dict:
    return {"train": [r.id for r in train], "validation": [r.id for r in split.validation]}


def fit(
    records: Sequence[TweetRecord],
    config: TrainConfig,
    batch_hook: Optional[BatchHook] = None,
) -> tuple[Checkpoint, TrainHistory]:
    """Train Model 1 or Model 2 on task A records.

    Args:
        records: labeled task A records.
        config: hyperparameters; ``model_kind`` must be ``m1`` or ``m2``.
        batch_hook: called with the record ids of every gradient batch.

    Raises:
        DegenerateSplit: a class has fewer than two records.
        NonFiniteLoss: a batch loss is NaN or infinite.
    """
    if config.model_kind == "m3":
        return fit_gan(records, config, batch_hook)
    if config.task != "A":
        raise TaskMismatch(f"{config.model_kind} only handles task A")
    _check_classes(records)
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    split, train = _prepare_split(records, config)
    train_texts, val_texts = _texts(train, config), _texts(split.validation, config)
    vocab = Vocabulary.build(train_texts)
    model = build_model(config, vocab)
    y_train = torch.tensor([r.label for r in train])
    y_val = torch.tensor([r.label for r in split.validation])

    steps_per_epoch = math.ceil(len(train) / config.batch_size)
    opt, sched = _optimizer(model.parameters(), config.learning_rate, config, config.epochs * steps_per_epoch)
    history = TrainHistory()
    step = 0
    for epoch in range(1, config.epochs + 1):
        model.train()
        total, seen = 0.0, 0
        for idx in _batches(len(train), config.batch_size, rng):
            ids = [train[i].id for i in idx]
            if batch_hook:
                batch_hook(ids)
            batch = model.encoder.tokenize([train_texts[i] for i in idx], pad_to_max=False)
            targets = y_train[idx]
            out = model(batch)
            loss = supervised_loss(out.logits, targets, config.loss, BatchStats.from_targets(targets))
            _finite(loss, "training loss", epoch, step)
            opt.zero_grad()
            loss.backward()
            opt.step()
            sched.step()
            step += 1
            total += loss.item() * len(idx)
            seen += len(idx)
        val_loss, report = _validate(model, val_texts, y_val, config)
        history.epochs.append(
            {
                "epoch": epoch,
                "train_loss": total / seen,
                "val_loss": val_loss,
                "val_metrics": report.to_dict(),
                "lr": sched.get_last_lr()[0],
            }
        )
        log.info("epoch %d train_loss %.4f val_loss %.4f val_f1 %.4f", epoch, total / seen, val_loss, report.f1)
    model.eval()
    return Checkpoint(model, config, vocab, _split_ids(split, train)), history


@torch.no_grad()
def _validate(model, texts: list[str], targets: torch.Tensor, config: TrainConfig):
    model.eval()
    losses, preds = [], []
    for start in range(0, len(texts), config.batch_size):
        batch = model.encoder.tokenize(texts[start : start + config.batch_size], pad_to_max=False)
        t = targets[start : start + config.batch_size]
        out = model(batch)
        losses.append(supervised_loss(out.logits, t, config.loss).item() * len(t))
        preds.append(out.predictions)
    return sum(losses) / len(texts), metrics_binary(torch.cat(preds).numpy(), targets.numpy())


def _gan_targets(records: Sequence[TweetRecord], multilabel: bool) -> torch.Tensor:
    if multilabel:
        return torch.tensor([list(r.categories) for r in records], dtype=torch.float32)
    return torch.tensor([r.label for r in records])


def fit_gan(
    records: Sequence[TweetRecord],
    config: TrainConfig,
    batch_hook: Optional[BatchHook] = None,
) -> tuple[Checkpoint, TrainHistory]:
    """Train Model 3 with one discriminator step and one generator step per batch.

    Task B trains on sarcastic records only, with six sigmoid category outputs.
    The discriminator step updates encoder, attention and discriminator; the
    generator step updates only the generator.
    """
    if config.model_kind != "m3":
        raise TaskMismatch("fit_gan trains model_kind m3")
    multilabel = config.task == "B"
    if multilabel:
        records = filter_sarcastic(records)
        if any(r.categories is None for r in records):
            raise TaskMismatch("task B training needs category labels on every record")
    else:
        _check_classes(records)
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    noise_gen = torch.Generator().manual_seed(config.seed)
    split, train = _prepare_split(records, config)
    train_texts, val_texts = _texts(train, config), _texts(split.validation, config)
    vocab = Vocabulary.build(train_texts)
    model: GanClassifier = build_model(config, vocab)
    y_train = _gan_targets(train, multilabel)
    y_val = _gan_targets(split.validation, multilabel)
    k = model.num_real

    steps_per_epoch = math.ceil(len(train) / config.batch_size)
    total_steps = config.epochs * steps_per_epoch
    d_opt, d_sched = _optimizer(model.real_parameters(), config.learning_rate, config, total_steps)
    g_opt, g_sched = _optimizer(model.generator.parameters(), config.g_learning_rate, config, total_steps)
    disc_params = list(model.discriminator.parameters())
    history = TrainHistory()
    step = 0
    for epoch in range(1, config.epochs + 1):
        model.train()
        sums = {"d_loss": 0.0, "g_loss": 0.0, "feature_matching": 0.0}
        seen = 0
        for idx in _batches(len(train), config.batch_size, rng):
            ids = [train[i].id for i in idx]
            if batch_hook:
                batch_hook(ids)
            batch = model.encoder.tokenize([train_texts[i] for i in idx], pad_to_max=False)
            targets = y_train[idx]
            real = model.features(batch)
            noise = sample_noise(len(idx), model.generator.z_dim, generator=noise_gen)
            cats = torch.randint(0, k, (len(idx),), generator=noise_gen)
            fake = model.generator(noise, cats)

            d_loss = discriminator_loss(
                model.discriminator(real), targets, model.discriminator(fake.detach()), config.loss, multilabel
            )
            _finite(d_loss, "discriminator loss", epoch, step)
            d_opt.zero_grad()
            d_loss.backward()
            d_opt.step()

            for p in disc_params:
                p.requires_grad_(False)
            g_loss = generator_loss(model.discriminator(fake), real.detach(), fake, multilabel)
            _finite(g_loss, "generator loss", epoch, step)
            g_opt.zero_grad()
            g_loss.backward()
            g_opt.step()
            for p in disc_params:
                p.requires_grad_(True)
            d_sched.step()
            g_sched.step()
            step += 1

            n = len(idx)
            sums["d_loss"] += d_loss.item() * n
            sums["g_loss"] += g_loss.item() * n
            sums["feature_matching"] += feature_matching(real.detach(), fake.detach()).item() * n
            seen += n
        val_loss, report = _validate_gan(model, val_texts, y_val, config)
        record = {"epoch": epoch, "train_loss": sums["d_loss"] / seen}
        record.update({key: value / seen for key, value in sums.items()})
        record.update({"val_loss": val_loss, "val_metrics": report.to_dict(), "lr": d_sched.get_last_lr()[0]})
        history.epochs.append(record)
        log.info(
            "epoch %d d_loss %.4f g_loss %.4f fm %.4f val_loss %.4f",
            epoch, record["d_loss"], record["g_loss"], record["feature_matching"], val_loss,
        )
    model.eval()
    return Checkpoint(model, config, vocab, _split_ids(split, train)), history


@torch.no_grad()
def _validate_gan(model: GanClassifier, texts: list[str], targets: torch.Tensor, config: TrainConfig):
    model.eval()
    losses, preds = [], []
    for start in range(0, len(texts), config.batch_size):
        batch = model.encoder.tokenize(texts[start : start + config.batch_size], pad_to_max=False)
        t = targets[start : start + config.batch_size]
        out = model(batch)
        if model.multilabel:
            losses.append(multilabel_loss(out.logits, t, config.loss).item() * len(t))
            preds.append((out.probabilities >= 0.5).long())
        else:
            losses.append(supervised_loss(out.logits, t, config.loss.multiclass()).item() * len(t))
            preds.append(out.predictions)
    pred = torch.cat(preds).numpy()
    if model.multilabel:
        report = metrics_multilabel(pred, targets.numpy())
    else:
        report = metrics_binary(pred, targets.numpy())
    return sum(losses) / len(texts), report


@torch.no_grad()
def fake_detection_accuracy(model: GanClassifier, n: int = 512, seed: int = 0) -> float:
    """Share of freshly generated fakes the discriminator labels as fake."""
    model.eval()
    gen = torch.Generator().manual_seed(seed)
    noise = sample_noise(n, model.generator.z_dim, generator=gen)
    cats = torch.randint(0, model.num_real, (n,), generator=gen)
    logits = model.discriminator(model.generator(noise, cats))
    if model.multilabel:
        p_fake = torch.sigmoid(logits[:, -1])
    else:
        p_fake = torch.softmax(logits, dim=-1)[:, -1]
    return float((p_fake > 0.5).float().mean())
