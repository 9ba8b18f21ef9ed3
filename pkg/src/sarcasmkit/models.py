"""The three classification heads.

* ``m1``: fused features -> hidden layer -> one logit (sigmoid).
* ``m2``: same body with two output units (softmax).
* ``m3``: a conditional generator producing fake fused features and a
  discriminator with ``k`` real classes plus one fake class. For sub-task B
  the discriminator emits six independent category logits and a fake logit.

Fused features are ``[pooled ; attention context]`` of width ``2d``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional

import torch
from torch import Tensor, nn

from .encoder import AttentionPool, TokenBatch, fuse
from .errors import BadCategory, ShapeMismatch

ModelKind = Literal["m1", "m2", "m3"]

Z_DIM = 100
CATEGORY_DIM = 50
DROPOUT = 0.1


@dataclass
class ModelOutput:
    logits: Tensor
    probabilities: Tensor

    @property
    def predictions(self) -> Tensor:
        if self.logits.shape[-1] == 1:
            return (self.probabilities[:, 0] >= 0.5).long()
        return self.probabilities.argmax(dim=-1)


class ClassifierHead(nn.Module):
    def __init__(self, in_dim: int, hidden: int, out_units: int, dropout: float = DROPOUT):
        super().__init__()
        self.in_dim = in_dim
        self.out_units = out_units
        self.hidden = nn.Sequential(nn.Linear(in_dim, hidden), nn.ReLU(), nn.Dropout(dropout))
        self.output = nn.Linear(hidden, out_units)

    def forward(self, fused: Tensor) -> Tensor:
        if fused.shape[-1] != self.in_dim:
            raise ShapeMismatch(f"head expects width {self.in_dim}, got {fused.shape[-1]}")
        return self.output(self.hidden(fused))


def model1_forward(fused: Tensor, head: ClassifierHead) -> ModelOutput:
    if head.out_units != 1:
        raise ShapeMismatch("Model 1 needs a single-unit head")
    logits = head(fused)
    return ModelOutput(logits, torch.sigmoid(logits))


def model2_forward(fused: Tensor, head: ClassifierHead) -> ModelOutput:
    if head.out_units != 2:
        raise ShapeMismatch("Model 2 needs a two-unit head")
    logits = head(fused)
    return ModelOutput(logits, torch.softmax(logits, dim=-1))


def sample_noise(n: int, z_dim: int = Z_DIM, seed: Optional[int] = None, generator: Optional[torch.Generator] = None) -> Tensor:
    """Standard normal noise ``[n, z_dim]``; reproducible from ``seed``."""
    if n < 1:
        raise ValueError("n must be positive")
    if generator is None and seed is not None:
        generator = torch.Generator().manual_seed(seed)
    return torch.randn(n, z_dim, generator=generator)


def _block(in_dim: int, out_dim: int, dropout: float) -> nn.Sequential:
    # affine -> dropout -> relu
    return nn.Sequential(nn.Linear(in_dim, out_dim), nn.Dropout(dropout), nn.ReLU())


class Generator(nn.Module):
    """Maps noise plus a learned category embedding to a fake fused vector."""

    def __init__(
        self,
        out_dim: int,
        num_categories: int,
        z_dim: int = Z_DIM,
        category_dim: int = CATEGORY_DIM,
        hidden: Optional[int] = None,
        dropout: float = DROPOUT,
    ):
        super().__init__()
        hidden = hidden or out_dim
        self.out_dim = out_dim
        self.z_dim = z_dim
        self.num_categories = num_categories
        self.category = nn.Embedding(num_categories, category_dim)
        self.body = nn.Sequential(
            _block(z_dim + category_dim, hidden, dropout),
            _block(hidden, hidden, dropout),
        )
        self.output = nn.Linear(hidden, out_dim)

    def forward(self, noise: Tensor, category: Tensor | int) -> Tensor:
        category = torch.as_tensor(category, dtype=torch.long)
        if category.dim() == 0:
            category = category.expand(noise.shape[0])
        if bool(((category < 0) | (category >= self.num_categories)).any()):
            raise BadCategory(f"category must lie in [0, {self.num_categories})")
        if noise.shape[-1] != self.z_dim:
            raise ShapeMismatch(f"noise width {noise.shape[-1]} != z_dim {self.z_dim}")
        x = torch.cat([noise, self.category(category).to(noise.dtype)], dim=-1)
        return self.output(self.body(x))


def generator_forward(noise: Tensor, category: Tensor | int, gen: Generator) -> Tensor:
    return gen(noise, category)


class Discriminator(nn.Module):
    """Two hidden blocks and ``k + 1`` outputs; the last output is the fake logit."""

    def __init__(self, in_dim: int, num_real: int, hidden: Optional[int] = None, dropout: float = DROPOUT, multilabel: bool = False):
        super().__init__()
        hidden = hidden or in_dim
        self.in_dim = in_dim
        self.num_real = num_real
        self.multilabel = multilabel
        self.body = nn.Sequential(_block(in_dim, hidden, dropout), _block(hidden, hidden, dropout))
        self.output = nn.Linear(hidden, num_real + 1)

    def forward(self, features: Tensor) -> Tensor:
        if features.shape[-1] != self.in_dim:
            raise ShapeMismatch(f"discriminator expects width {self.in_dim}, got {features.shape[-1]}")
        return self.output(self.body(features))


def discriminator_forward(features: Tensor, disc: Discriminator) -> Tensor:
    return disc(features)


def taskB_discriminator_forward(features: Tensor, disc: Discriminator) -> tuple[Tensor, Tensor]:
    """Split the multi-label discriminator output into (category logits, fake logit)."""
    logits = disc(features)
    return logits[:, : disc.num_real], logits[:, disc.num_real :]


class _FusedFeatures(nn.Module):
    encoder: nn.Module
    pool: AttentionPool

    def features(self, batch: TokenBatch) -> Tensor:
        enc = self.encoder(batch)
        context, _ = self.pool(enc.token_states, enc.mask)
        return fuse(enc.pooled, context)


class SarcasmClassifier(_FusedFeatures):
    """Encoder + attention pooling + classifier head (Models 1 and 2)."""

    def __init__(self, encoder: nn.Module, kind: ModelKind = "m1", dropout: float = DROPOUT):
        super().__init__()
        if kind not in ("m1", "m2"):
            raise ValueError(f"SarcasmClassifier handles m1/m2, not {kind!r}")
        self.kind = kind
        self.encoder = encoder
        self.pool = AttentionPool(encoder.dim)
        width = 2 * encoder.dim
        self.head = ClassifierHead(width, width, 1 if kind == "m1" else 2, dropout)

    def forward(self, batch: TokenBatch) -> ModelOutput:
        fused = self.features(batch)
        if self.kind == "m1":
            return model1_forward(fused, self.head)
        return model2_forward(fused, self.head)


class GanClassifier(_FusedFeatures):
    """Model 3: encoder features judged by a k+1 discriminator, plus a generator.

    ``num_real`` is 2 for sub-task A and 6 (multi-label) for sub-task B.
    """

    def __init__(
        self,
        encoder: nn.Module,
        num_real: int = 2,
        multilabel: bool = False,
        z_dim: int = Z_DIM,
        category_dim: int = CATEGORY_DIM,
        dropout: float = DROPOUT,
    ):
        super().__init__()
        self.kind = "m3"
        self.encoder = encoder
        self.pool = AttentionPool(encoder.dim)
        width = 2 * encoder.dim
        self.generator = Generator(width, num_real, z_dim, category_dim, width, dropout)
        self.discriminator = Discriminator(width, num_real, width, dropout, multilabel)
        if self.generator.out_dim != self.discriminator.in_dim:
            raise ShapeMismatch("generator output width must equal discriminator input width")

    @property
    def multilabel(self) -> bool:
        return self.discriminator.multilabel

    @property
    def num_real(self) -> int:
        return self.discriminator.num_real

    def real_parameters(self):
        """Parameters updated by the discriminator step (everything but the generator)."""
        gen = {id(p) for p in self.generator.parameters()}
        return [p for p in self.parameters() if id(p) not in gen]

    def forward(self, batch: TokenBatch) -> ModelOutput:
        logits = self.discriminator(self.features(batch))
        k = self.num_real
        if self.multilabel:
            return ModelOutput(logits[:, :k], torch.sigmoid(logits[:, :k]))
        return ModelOutput(logits[:, :k], torch.softmax(logits[:, :k], dim=-1))
