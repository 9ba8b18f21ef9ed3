"""Imbalance-aware training objectives and the GAN losses.

Binary family (one logit): ``bce``, ``wbce``, ``bfl``. Two-class family (two
logits): ``ce``, ``wce``, ``fl``. Every loss is a mean over samples (and over
labels for the multi-label case).

Class weights follow the per-batch rule
``pos_weight = (batch_size - positive_count) / (positive_count + eps)`` and
symmetrically for the negative class, capped at ``weight_cap``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Literal, Optional

import torch
import torch.nn.functional as F
from torch import Tensor

from .errors import ShapeMismatch

LossKind = Literal["bce", "wbce", "bfl", "ce", "wce", "fl"]
BINARY_KINDS = ("bce", "wbce", "bfl")
MULTICLASS_KINDS = ("ce", "wce", "fl")
# Same objective in the other family (one logit vs. two logits).
TWIN = {"bce": "ce", "wbce": "wce", "bfl": "fl", "ce": "bce", "wce": "wbce", "fl": "bfl"}


@dataclass(frozen=True)
class LossConfig:
    kind: LossKind = "bce"
    gamma: float = 2.0
    alpha_neg: float = 0.8
    epsilon: float = 1e-8
    weight_cap: Optional[float] = None  # None: the batch size

    def __post_init__(self):
        if self.kind not in TWIN:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if not 0 <= self.alpha_neg <= 1:
            raise ValueError("alpha_neg must lie in [0, 1]")
        if not (self.gamma >= 0 and self.gamma != float("inf")):
            raise ValueError("gamma must be finite and non-negative")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    @property
    def alpha_pos(self) -> float:
        return 1.0 - self.alpha_neg

    def binary(self) -> "LossConfig":
        """This objective expressed for a single-logit head."""
        kind = self.kind if self.kind in BINARY_KINDS else TWIN[self.kind]
        return LossConfig(kind, self.gamma, self.alpha_neg, self.epsilon, self.weight_cap)

    def multiclass(self) -> "LossConfig":
        kind = self.kind if self.kind in MULTICLASS_KINDS else TWIN[self.kind]
        return LossConfig(kind, self.gamma, self.alpha_neg, self.epsilon, self.weight_cap)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BatchStats:
    batch_size: int
    positive_count: int
    negative_count: int

    @classmethod
    def from_targets(cls, targets: Tensor) -> "BatchStats":
        t = targets.reshape(-1)
        pos = int((t == 1).sum())
        return cls(t.numel(), pos, t.numel() - pos)


def class_weights(stats: BatchStats, epsilon: float = 1e-8, cap: Optional[float] = None) -> tuple[float, float]:
    """Per-batch (pos_weight, neg_weight), each capped at ``cap`` (default: batch size)."""
    if stats.batch_size < 1:
        raise ValueError("batch_size must be at least 1")
    cap = float(stats.batch_size) if cap is None else float(cap)
    pos = (stats.batch_size - stats.positive_count) / (stats.positive_count + epsilon)
    neg = (stats.batch_size - stats.negative_count) / (stats.negative_count + epsilon)
    return min(cap, pos), min(cap, neg)


def _binary_terms(logits: Tensor, targets: Tensor) -> tuple[Tensor, Tensor]:
    """Elementwise (log p_t, target) for one-logit outputs, numerically stable."""
    y = targets.to(logits.dtype)
    # log sigma(l) = -softplus(-l); log(1 - sigma(l)) = -softplus(l)
    log_pt = -(y * F.softplus(-logits) + (1 - y) * F.softplus(logits))
    return log_pt, y


def _flat(logits: Tensor, targets: Tensor) -> tuple[Tensor, Tensor]:
    targets = targets.reshape(-1)
    if logits.numel() != targets.numel():
        raise ShapeMismatch(f"{logits.numel()} logits for {targets.numel()} targets")
    return logits.reshape(-1), targets


def bce(logits: Tensor, targets: Tensor) -> Tensor:
    logits, targets = _flat(logits, targets)
    log_pt, _ = _binary_terms(logits, targets)
    return (-log_pt).mean()


def weighted_bce(
    logits: Tensor,
    targets: Tensor,
    stats: Optional[BatchStats] = None,
    config: LossConfig = LossConfig("wbce"),
    pos_weight: Optional[float] = None,
) -> Tensor:
    """BCE with positive terms scaled by the batch positive-class weight."""
    logits, targets = _flat(logits, targets)
    if pos_weight is None:
        stats = stats or BatchStats.from_targets(targets)
        pos_weight, _ = class_weights(stats, config.epsilon, config.weight_cap)
    log_pt, y = _binary_terms(logits, targets)
    w = 1 + (pos_weight - 1) * y
    return (-w * log_pt).mean()


def binary_focal(logits: Tensor, targets: Tensor, config: LossConfig = LossConfig("bfl")) -> Tensor:
    logits, targets = _flat(logits, targets)
    log_pt, y = _binary_terms(logits, targets)
    alpha = config.alpha_pos * y + config.alpha_neg * (1 - y)
    return (-alpha * (-torch.expm1(log_pt)).pow(config.gamma) * log_pt).mean()


def _class_log_probs(logits: Tensor, targets: Tensor) -> Tensor:
    if logits.dim() != 2 or logits.shape[0] != targets.numel():
        raise ShapeMismatch(f"expected [n, c] logits for {targets.numel()} targets, got {tuple(logits.shape)}")
    return logits.log_softmax(dim=-1).gather(1, targets.reshape(-1, 1).long()).squeeze(1)


def ce(logits: Tensor, targets: Tensor) -> Tensor:
    return (-_class_log_probs(logits, targets)).mean()


def weighted_ce(
    logits: Tensor,
    targets: Tensor,
    stats: Optional[BatchStats] = None,
    config: LossConfig = LossConfig("wce"),
    weights: Optional[tuple[float, float]] = None,
) -> Tensor:
    """CE with each sample scaled by its class weight; ``weights`` is (neg, pos)."""
    log_p = _class_log_probs(logits, targets)
    if weights is None:
        stats = stats or BatchStats.from_targets(targets)
        pos_w, neg_w = class_weights(stats, config.epsilon, config.weight_cap)
        weights = (neg_w, pos_w)
    table = torch.tensor(weights, dtype=logits.dtype, device=logits.device)
    return (-table[targets.reshape(-1).long()] * log_p).mean()


def focal(logits: Tensor, targets: Tensor, config: LossConfig = LossConfig("fl")) -> Tensor:
    log_p = _class_log_probs(logits, targets)
    y = targets.reshape(-1).to(logits.dtype)
    alpha = config.alpha_pos * y + config.alpha_neg * (1 - y)
    return (-alpha * (-torch.expm1(log_p)).pow(config.gamma) * log_p).mean()


def supervised_loss(logits: Tensor, targets: Tensor, config: LossConfig, stats: Optional[BatchStats] = None) -> Tensor:
    """Dispatch on ``config.kind``; the family follows the logit width."""
    if logits.dim() == 2 and logits.shape[-1] == 2:
        cfg = config.multiclass()
        if cfg.kind == "ce":
            return ce(logits, targets)
        if cfg.kind == "wce":
            return weighted_ce(logits, targets, stats, cfg)
        return focal(logits, targets, cfg)
    cfg = config.binary()
    if cfg.kind == "bce":
        return bce(logits, targets)
    if cfg.kind == "wbce":
        return weighted_bce(logits, targets, stats, cfg)
    return binary_focal(logits, targets, cfg)


def multilabel_loss(logits: Tensor, targets: Tensor, config: LossConfig = LossConfig("bce")) -> Tensor:
    """Per-label binary loss averaged over labels and samples.

    Weighted variants compute one positive-class weight per label column.
    """
    if logits.shape != targets.shape or logits.dim() != 2:
        raise ShapeMismatch(f"logits {tuple(logits.shape)} vs targets {tuple(targets.shape)}")
    cfg = config.binary()
    log_pt, y = _binary_terms(logits, targets)
    if cfg.kind == "bce":
        return (-log_pt).mean()
    if cfg.kind == "bfl":
        alpha = cfg.alpha_pos * y + cfg.alpha_neg * (1 - y)
        return (-alpha * (-torch.expm1(log_pt)).pow(cfg.gamma) * log_pt).mean()
    n = targets.shape[0]
    pos_w = [
        class_weights(BatchStats(n, int(c), n - int(c)), cfg.epsilon, cfg.weight_cap)[0]
        for c in (targets == 1).sum(0).tolist()
    ]
    pw = torch.tensor(pos_w, dtype=logits.dtype, device=logits.device)
    w = 1 + (pw - 1) * y
    return (-w * log_pt).mean()


def fake_log_probs(logits: Tensor, multilabel: bool = False) -> tuple[Tensor, Tensor]:
    """(log p_fake, log (1 - p_fake)) per row.

    Softmax discriminators keep the fake logit in the last column; multi-label
    discriminators pass their single fake logit column and use a sigmoid.
    """
    if multilabel:
        f = logits[:, -1]
        return -F.softplus(-f), -F.softplus(f)
    lse_all = logits.logsumexp(dim=-1)
    return logits[:, -1] - lse_all, logits[:, :-1].logsumexp(dim=-1) - lse_all


def discriminator_loss(
    real_logits: Tensor,
    real_targets: Tensor,
    fake_logits: Tensor,
    config: LossConfig = LossConfig("ce"),
    multilabel: bool = False,
) -> Tensor:
    """Supervised loss on real samples plus the real/fake terms.

    For softmax discriminators the supervised part renormalizes the softmax over
    the ``k`` real classes, which equals a softmax over the first ``k`` logits.
    Multi-label discriminators carry six category logits and one fake logit.
    """
    k_logits = real_logits[:, :-1]
    if multilabel:
        sup = multilabel_loss(k_logits, real_targets, config)
    elif k_logits.shape[-1] == 2:
        sup = supervised_loss(k_logits, real_targets, config.multiclass())
    else:
        sup = ce(k_logits, real_targets)
    _, log_real_not_fake = fake_log_probs(real_logits, multilabel)
    log_fake_is_fake, _ = fake_log_probs(fake_logits, multilabel)
    unsup = -log_real_not_fake.mean() - log_fake_is_fake.mean()
    return sup + unsup


def feature_matching(real_features: Tensor, fake_features: Tensor) -> Tensor:
    if real_features.shape[-1] != fake_features.shape[-1]:
        raise ShapeMismatch("real and fake features differ in width")
    return (real_features.mean(0) - fake_features.mean(0)).pow(2).sum()


def generator_loss(
    fake_logits: Tensor,
    real_features: Tensor,
    fake_features: Tensor,
    multilabel: bool = False,
) -> Tensor:
    """Fool term ``-mean log(1 - p_fake)`` plus squared distance of feature means."""
    _, log_not_fake = fake_log_probs(fake_logits, multilabel)
    return -log_not_fake.mean() + feature_matching(real_features, fake_features)
