import pytest
from hypothesis import given
from hypothesis import strategies as st

from proactive_switch.tokenizer import (
    SPECIAL_TOKENS,
    Tokenizer,
    normalize_text,
    split_text,
)


def make_tokenizer(words=("hi", "there", "london", "kings", "cross")):
    return Tokenizer(list(SPECIAL_TOKENS) + sorted(words))


def test_specials_stay_atomic():
    assert split_text("[USER] hi there") == ["[USER]", "hi", "there"]
    assert split_text("a[SEP]b") == ["a", "[SEP]", "b"]


def test_empty_text():
    assert split_text("") == []
    tok = make_tokenizer()
    assert tok.encode("") == []


def test_lowercasing_and_punct():
    assert split_text("Hello, World!") == ["hello", ",", "world", "!"]


def test_encode_decode_round_trip():
    tok = make_tokenizer()
    ids = tok.encode("London Kings Cross")
    assert len(ids) == 3
    assert tok.decode(ids) == "london kings cross"


def test_oov_maps_to_unk():
    tok = make_tokenizer()
    ids = tok.encode("hi zebra")
    assert ids[1] == tok.unk_id
    assert tok.decode(ids) == "hi [UNK]"


def test_vocab_requires_specials_first():
    with pytest.raises(ValueError):
        Tokenizer(["hi", "there"])
    with pytest.raises(ValueError):
        Tokenizer(list(SPECIAL_TOKENS) + ["a", "a"])


def test_build_is_deterministic():
    texts = ["b a", "c a"]
    t1 = Tokenizer.build(texts)
    t2 = Tokenizer.build(reversed(texts))
    assert t1.vocab == t2.vocab
    assert t1.vocab[: len(SPECIAL_TOKENS)] == list(SPECIAL_TOKENS)


def test_save_load_round_trip(tmp_path):
    tok = make_tokenizer()
    path = tmp_path / "vocab.txt"
    tok.save(path)
    loaded = Tokenizer.load(path)
    assert loaded.vocab == tok.vocab
    assert loaded.sha256() == tok.sha256()


@given(st.text(alphabet=st.characters(codec="ascii"), max_size=60))
def test_split_is_total_and_normalization_idempotent(text):
    tokens = split_text(text)
    assert all(tokens)
    assert normalize_text(normalize_text(text)) == normalize_text(text)


@given(st.lists(st.sampled_from(["hi", "there", "london", "kings", "cross", "[USER]", "[END]"]), max_size=10))
def test_encode_decode_identity_on_in_vocab(tokens):
    tok = make_tokenizer()
    text = " ".join(tokens)
    assert tok.decode(tok.encode(text)) == normalize_text(text)
