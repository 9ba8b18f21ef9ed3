import emoji
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sarcasmkit.preprocess import PreprocessConfig, inject_dialect, normalize, prepare

EN = PreprocessConfig.english()
AR = PreprocessConfig.arabic()
EGYPT = PreprocessConfig(mention_token="user", url_token="url", dialect_map={"egypt": "مصر"}, inject_dialect=True)
BARE = PreprocessConfig(mention_token="user", url_token="url", inject_dialect=True)
CUSTOM_SEP = PreprocessConfig(mention_token="user", url_token="url", dialect_map=AR.dialect_map, separator_token="</s>", inject_dialect=True)

# (config, text, dialect, expected output of prepare)
GOLDEN = [
    (EN, "@john lol 😂😂 https://t.co/x", None, "@user lol 😂 😂 http"),
    (EN, "no entities here", None, "no entities here"),
    (AR, "@a @b", None, "user user"),
    (EN, "check http://example.com/page?x=1 now", None, "check http now"),
    (EN, "see t.co/abc123", None, "see http"),
    (EN, "hi @Bob_99, nice", None, "hi @user, nice"),
    (EN, "email me a@b.com", None, "email me a@b.com"),
    (EN, "wow😂", None, "wow 😂"),
    (EN, "👍🏽great", None, "👍🏽 great"),
    (EN, "  lots   of    space  ", None, "lots of space"),
    (EN, "🙄🙄🙄", None, "🙄 🙄 🙄"),
    (EN, "#hashtag stays", None, "#hashtag stays"),
    (EN, "RT @someone: https://t.co/x😂", None, "RT @user: http 😂"),
    (EN, "HTTPS://T.CO/ABC", None, "http"),
    (EN, "@a hi", "nile", "@user hi"),
    (EGYPT, "ok", "egypt", "[SEP] مصر [SEP] ok [SEP]"),
    (AR, "@x شكرا https://t.co/y", "gulf", "[SEP] اللهجة الخليجية [SEP] user شكرا url [SEP]"),
    (AR, "ok", None, "ok"),
    (BARE, "ok", "zzz", "[SEP] zzz [SEP] ok [SEP]"),
    (CUSTOM_SEP, "نص😂", "msa", "</s> العربية الفصحى </s> نص 😂 </s>"),
]


@pytest.mark.parametrize("config,text,dialect,expected", GOLDEN)
def test_golden(config, text, dialect, expected):
    assert prepare(text, dialect, config) == expected


def test_golden_count():
    assert len(GOLDEN) == 20


def test_empty_input():
    assert normalize("", EN) == ""


def test_inject_without_dialect_is_identity():
    assert inject_dialect("ok", None, EGYPT) == "ok"


def test_config_rejects_empty_tokens():
    with pytest.raises(ValueError):
        PreprocessConfig(mention_token="")
    with pytest.raises(ValueError):
        PreprocessConfig(dialect_map={"x": ""})


def test_config_dict_roundtrip():
    assert PreprocessConfig.from_dict(AR.to_dict()) == AR


pieces = st.sampled_from(
    ["hello", "مرحبا", "@bob", "@a_1", "https://t.co/zz", "http://x.org/a?b=1", "t.co/q", "😂", "👍🏽", "❤️", "🇺🇸", "#tag", " ", "  ", "\n", "a@b.com", "x😂y"]
)
tweets = st.lists(pieces, max_size=12).map("".join)


@settings(max_examples=200, deadline=None)
@given(tweets, st.sampled_from([EN, AR]))
def test_normalize_idempotent(text, config):
    once = normalize(text, config)
    assert normalize(once, config) == once


@settings(max_examples=200, deadline=None)
@given(tweets, st.sampled_from([EN, AR]))
def test_no_raw_url_scheme_survives(text, config):
    out = normalize(text, config)
    assert "http://" not in out and "https://" not in out


@settings(max_examples=200, deadline=None)
@given(tweets)
def test_emoji_count_preserved(text):
    assert emoji.emoji_count(normalize(text, EN)) == emoji.emoji_count(text)


@settings(max_examples=100, deadline=None)
@given(st.text(min_size=1, max_size=10).filter(lambda s: "[SEP]" not in s), st.sampled_from([None, "nile", "gulf", "unknown"]))
def test_separator_count(text, dialect):
    out = inject_dialect(text, dialect, AR)
    assert out.count("[SEP]") == (3 if dialect else 0)
