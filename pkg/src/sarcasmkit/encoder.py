"""Text encoders and the attention-pooling layer.

Any encoder exposes ``tokenize(texts, max_len) -> TokenBatch`` and
``forward(TokenBatch) -> EncodedBatch``. The reference :class:`TinyEncoder` is a
small self-attention stack over a whitespace vocabulary with a character
fallback, so everything runs without downloaded weights.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import torch
from torch import Tensor, nn

from .errors import AllMasked, ShapeMismatch, VocabOverflow

PAD, CLS, SEP, UNK = "[PAD]", "[CLS]", "[SEP]", "[UNK]"
SPECIALS = (PAD, CLS, SEP, UNK)


@dataclass
class TokenBatch:
    ids: Tensor  # [batch, max_len] long
    mask: Tensor  # [batch, max_len], 1 = real token

    def __len__(self) -> int:
        return self.ids.shape[0]


@dataclass
class EncodedBatch:
    pooled: Tensor  # [batch, d], state at the begin token
    token_states: Tensor  # [batch, max_len, d]
    mask: Tensor  # [batch, max_len]


class Vocabulary:
    """Whitespace word vocabulary; unseen words fall back to their characters."""

    def __init__(self, tokens: Sequence[str]):
        self.itos = list(SPECIALS) + [t for t in tokens if t not in SPECIALS]
        self.stoi = {t: i for i, t in enumerate(self.itos)}

    @classmethod
    def build(cls, texts: Iterable[str], min_freq: int = 1) -> "Vocabulary":
        words: Counter[str] = Counter()
        chars: Counter[str] = Counter()
        for text in texts:
            for w in text.split():
                words[w] += 1
                chars.update(w)
        kept = sorted((w for w, c in words.items() if c >= min_freq), key=lambda w: (-words[w], w))
        kept_set = set(kept)
        char_tokens = sorted(c for c in chars if c not in kept_set)
        return cls(kept + char_tokens)

    def __len__(self) -> int:
        return len(self.itos)

    @property
    def pad_id(self) -> int:
        return self.stoi[PAD]

    def word_ids(self, word: str) -> list[int]:
        if word in self.stoi:
            return [self.stoi[word]]
        unk = self.stoi[UNK]
        return [self.stoi.get(ch, unk) for ch in word]

    def encode_text(self, text: str) -> list[int]:
        ids: list[int] = []
        for w in text.split():
            ids.extend(self.word_ids(w))
        return ids

    def to_json(self) -> str:
        return json.dumps(self.itos, ensure_ascii=False)

    @classmethod
    def from_json(cls, s: str) -> "Vocabulary":
        return cls(json.loads(s))


def tokenize(
    texts: Sequence[str], vocab: Vocabulary, max_len: int = 128, pad_to_max: bool = True
) -> TokenBatch:
    """Map texts to ``[CLS] tokens... [SEP]`` rows, truncated and right-padded.

    Rows are padded to ``max_len``, or only to the longest row when
    ``pad_to_max`` is false.
    """
    if not texts:
        raise ValueError("tokenize needs at least one text")
    if max_len < 2:
        raise ValueError("max_len must be at least 2")
    cls_id, sep_id = vocab.stoi[CLS], vocab.stoi[SEP]
    rows = [[cls_id] + vocab.encode_text(t)[: max_len - 2] + [sep_id] for t in texts]
    width = max_len if pad_to_max else max(len(r) for r in rows)
    ids = torch.full((len(rows), width), vocab.pad_id, dtype=torch.long)
    mask = torch.zeros((len(rows), width), dtype=torch.long)
    for i, r in enumerate(rows):
        ids[i, : len(r)] = torch.tensor(r, dtype=torch.long)
        mask[i, : len(r)] = 1
    return TokenBatch(ids=ids, mask=mask)


class TinyEncoder(nn.Module):
    """Two-layer self-attention encoder with learned positions.

    The pooled output is the hidden state at the ``[CLS]`` position.
    """

    name = "tiny"

    def __init__(
        self,
        vocab: Vocabulary,
        dim: int = 32,
        layers: int = 2,
        heads: int = 4,
        max_len: int = 128,
        dropout: float = 0.1,
    ):
        super().__init__()
        self.vocab = vocab
        self.dim = dim
        self.max_len = max_len
        self.embed = nn.Embedding(len(vocab), dim, padding_idx=vocab.pad_id)
        self.position = nn.Embedding(max_len, dim)
        self.norm = nn.LayerNorm(dim)
        layer = nn.TransformerEncoderLayer(
            d_model=dim,
            nhead=heads,
            dim_feedforward=2 * dim,
            dropout=dropout,
            batch_first=True,
        )
        self.layers = nn.TransformerEncoder(layer, num_layers=layers, enable_nested_tensor=False)

    def tokenize(self, texts: Sequence[str], max_len: int | None = None, pad_to_max: bool = True) -> TokenBatch:
        return tokenize(texts, self.vocab, max_len or self.max_len, pad_to_max)

    def forward(self, batch: TokenBatch) -> EncodedBatch:
        ids, mask = batch.ids, batch.mask
        if ids.numel() and (int(ids.max()) >= len(self.vocab) or int(ids.min()) < 0):
            raise VocabOverflow(f"token id outside vocabulary of size {len(self.vocab)}")
        if ids.shape[1] > self.max_len:
            raise ShapeMismatch(f"sequence length {ids.shape[1]} exceeds max_len {self.max_len}")
        pos = torch.arange(ids.shape[1], device=ids.device)
        x = self.norm(self.embed(ids) + self.position(pos)[None])
        h = self.layers(x, src_key_padding_mask=mask == 0)
        return EncodedBatch(pooled=h[:, 0], token_states=h, mask=mask)

    encode = forward


def attention_pool(
    token_states: Tensor, mask: Tensor, W: Tensor, b: Tensor, v: Tensor
) -> tuple[Tensor, Tensor]:
    """Additive attention over unmasked positions.

    ``score_i = v . tanh(W h_i + b)``; weights are the softmax of the scores over
    real tokens (padding gets exactly zero) and the context is the weighted sum
    of token states.

    Returns:
        ``(context [batch, d], weights [batch, len])``.
    """
    if token_states.dim() != 3 or mask.shape != token_states.shape[:2]:
        raise ShapeMismatch(f"token_states {tuple(token_states.shape)} vs mask {tuple(mask.shape)}")
    real = mask.bool()
    if not bool(real.any(dim=1).all()):
        raise AllMasked("every row needs at least one unmasked token")
    scores = torch.tanh(token_states @ W.T + b) @ v
    scores = scores.masked_fill(~real, float("-inf"))
    weights = torch.softmax(scores, dim=1)
    context = torch.einsum("bl,bld->bd", weights, token_states)
    return context, weights


class AttentionPool(nn.Module):
    def __init__(self, dim: int):
        super().__init__()
        self.proj = nn.Linear(dim, dim)
        self.v = nn.Parameter(torch.empty(dim))
        nn.init.normal_(self.v, std=dim**-0.5)

    def forward(self, token_states: Tensor, mask: Tensor) -> tuple[Tensor, Tensor]:
        return attention_pool(token_states, mask, self.proj.weight, self.proj.bias, self.v)


def fuse(pooled: Tensor, context: Tensor) -> Tensor:
    """Concatenate the pooled sentence vector with the attention context."""
    if pooled.shape != context.shape:
        raise ShapeMismatch(f"pooled {tuple(pooled.shape)} vs context {tuple(context.shape)}")
    return torch.cat([pooled, context], dim=-1)
