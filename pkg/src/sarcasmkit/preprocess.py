"""Tweet normalization and dialect injection.

Mentions and URLs become the encoder's special tokens, emojis are spaced out,
and Arabic inputs can be prefixed with their dialect name as
``[SEP] <dialect> [SEP] <text> [SEP]``.
"""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass, field
from typing import Optional

import emoji

URL_RE = re.compile(r"https?://\S+|(?<![\w.])t\.co/\S+", re.IGNORECASE)
MENTION_RE = re.compile(r"(?<![\w@])@\w+")
SPACE_RE = re.compile(r"\s+")

# Full Arabic names for the dialect codes used in the Arabic shared-task data.
ARABIC_DIALECTS = {
    "msa": "العربية الفصحى",
    "nile": "اللهجة المصرية",
    "egypt": "اللهجة المصرية",
    "gulf": "اللهجة الخليجية",
    "levant": "اللهجة الشامية",
    "magreb": "اللهجة المغاربية",
    "maghreb": "اللهجة المغاربية",
}


@dataclass(frozen=True)
class PreprocessConfig:
    mention_token: str = "@user"
    url_token: str = "http"
    dialect_map: dict[str, str] = field(default_factory=dict)
    separator_token: str = "[SEP]"
    inject_dialect: bool = False

    def __post_init__(self):
        if not self.mention_token or not self.url_token:
            raise ValueError("mention_token and url_token must be non-empty")
        if any(not isinstance(v, str) or not v for v in self.dialect_map.values()):
            raise ValueError("dialect_map values must be non-empty strings")

    @classmethod
    def english(cls) -> "PreprocessConfig":
        """Tokens of the Twitter-adapted multilingual encoder."""
        return cls(mention_token="@user", url_token="http")

    @classmethod
    def arabic(cls) -> "PreprocessConfig":
        """Tokens of the Arabic tweet encoder, with dialect injection on."""
        return cls(
            mention_token="user",
            url_token="url",
            dialect_map=dict(ARABIC_DIALECTS),
            inject_dialect=True,
        )

    @classmethod
    def for_language(cls, language: str) -> "PreprocessConfig":
        return cls.arabic() if language == "ar" else cls.english()

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PreprocessConfig":
        return cls(**d)


def _space_emojis(text: str) -> str:
    found = emoji.emoji_list(text)
    if not found:
        return text
    parts = []
    pos = 0
    for hit in found:
        parts.append(text[pos : hit["match_start"]])
        parts.append(f" {hit['emoji']} ")
        pos = hit["match_end"]
    parts.append(text[pos:])
    return "".join(parts)


def normalize(text: str, config: PreprocessConfig) -> str:
    """Space out emojis, substitute URLs and mentions, collapse whitespace."""
    text = _space_emojis(text)
    text = URL_RE.sub(lambda _: f" {config.url_token} ", text)
    text = MENTION_RE.sub(lambda _: config.mention_token, text)
    return SPACE_RE.sub(" ", text).strip()


def inject_dialect(text: str, dialect: Optional[str], config: PreprocessConfig) -> str:
    if not dialect:
        return text
    name = config.dialect_map.get(dialect, dialect)
    sep = config.separator_token
    return f"{sep} {name} {sep} {text} {sep}"


def prepare(text: str, dialect: Optional[str], config: PreprocessConfig) -> str:
    """Full preprocessing applied before tokenization."""
    out = normalize(text, config)
    if config.inject_dialect:
        out = inject_dialect(out, dialect, config)
    return out
