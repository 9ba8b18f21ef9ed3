"""Optional adapter for pretrained transformer encoders.

Select it with ``encoder = hf:<model id or local path>``. The pretrained
tokenizer replaces the reference vocabulary. Downloads are cached under the
directory named by ``SARCASMKIT_CACHE`` (the library default otherwise).
Requires the ``transformers`` package, imported on first use only.
"""

from __future__ import annotations

import os
from typing import Optional, Sequence

from torch import nn

from .encoder import EncodedBatch, TokenBatch

CACHE_ENV = "SARCASMKIT_CACHE"
PREFIX = "hf:"


def cache_dir() -> Optional[str]:
    return os.environ.get(CACHE_ENV) or None


class PretrainedEncoder(nn.Module):
    """Wraps a pretrained encoder behind the tokenize/encode contract."""

    def __init__(self, name_or_path: str, max_len: int = 128, dropout: Optional[float] = None):
        super().__init__()
        try:
            from transformers import AutoConfig, AutoModel, AutoTokenizer
        except ImportError as exc:  # pragma: no cover - depends on the environment
            raise ImportError("the hf: encoder adapter needs the 'transformers' package") from exc
        kwargs = {"cache_dir": cache_dir()}
        config = AutoConfig.from_pretrained(name_or_path, **kwargs)
        if dropout is not None and hasattr(config, "hidden_dropout_prob"):
            config.hidden_dropout_prob = dropout
        self.name = PREFIX + name_or_path
        self.tokenizer = AutoTokenizer.from_pretrained(name_or_path, **kwargs)
        self.model = AutoModel.from_pretrained(name_or_path, config=config, **kwargs)
        self.dim = int(config.hidden_size)
        self.max_len = max_len

    def tokenize(self, texts: Sequence[str], max_len: int | None = None, pad_to_max: bool = True) -> TokenBatch:
        if not texts:
            raise ValueError("tokenize needs at least one text")
        enc = self.tokenizer(
            list(texts),
            max_length=max_len or self.max_len,
            truncation=True,
            padding="max_length" if pad_to_max else "longest",
            return_tensors="pt",
        )
        return TokenBatch(ids=enc["input_ids"], mask=enc["attention_mask"])

    def forward(self, batch: TokenBatch) -> EncodedBatch:
        h = self.model(input_ids=batch.ids, attention_mask=batch.mask).last_hidden_state
        return EncodedBatch(pooled=h[:, 0], token_states=h, mask=batch.mask)

    encode = forward
