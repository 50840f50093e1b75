import json
import re

import pytest
from hypothesis import given, strategies as st

from patclass.corpus import (
    RawPatent,
    filter_patent,
    make_document,
    preprocess,
    read_corpus,
    stopwords,
)
from patclass.errors import CorpusError


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec if isinstance(rec, str) else json.dumps(rec))
            fh.write("\n")


FULL = {
    "id": "EP1A1",
    "lang": "en",
    "title": "T",
    "abstract": "A",
    "description": "D",
}


def raw(**overrides):
    data = dict(FULL, **overrides)
    data["language"] = data.pop("lang")
    return RawPatent(**data)


class TestReadCorpus:
    def test_reads_valid_lines_in_order(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [dict(FULL, id=f"EP{i}") for i in range(3)])
        records = list(read_corpus(str(path)))
        assert [r.id for r in records] == ["EP0", "EP1", "EP2"]

    def test_skips_malformed_line(self, tmp_path, caplog):
        path = tmp_path / "c.jsonl"
        write_jsonl(
            path,
            [FULL, "{not json", dict(FULL, id="EP2"), dict(FULL, id="EP3")],
        )
        with caplog.at_level("WARNING"):
            records = list(read_corpus(str(path)))
        assert len(records) == 3
        assert any("malformed" in message for message in caplog.messages)
        assert any(":2:" in message for message in caplog.messages)

    def test_empty_file_is_an_error(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("")
        with pytest.raises(CorpusError, match="no valid records"):
            list(read_corpus(str(path)))

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(CorpusError):
            list(read_corpus(str(tmp_path / "missing.jsonl")))

    def test_record_without_id_is_malformed(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [{"lang": "en"}, FULL])
        assert len(list(read_corpus(str(path)))) == 1

    def test_missing_fields_default_empty(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [{"id": "EP9"}])
        (record,) = read_corpus(str(path))
        assert record == RawPatent(id="EP9")


class TestFilter:
    def test_complete_english_passes(self):
        assert filter_patent(raw())

    def test_non_english_dropped(self):
        assert not filter_patent(raw(lang="de"))

    def test_empty_description_dropped(self):
        assert not filter_patent(raw(description=""))

    def test_whitespace_only_field_dropped(self):
        assert not filter_patent(raw(abstract="   "))


class TestPreprocess:
    def test_hyphen_joins_word_halves(self):
        assert preprocess("Self-healing polymers for recycling") == [
            "selfhealing",
            "polymers",
            "recycling",
        ]

    def test_empty_text(self):
        assert preprocess("") == []

    def test_punctuation_and_stopwords(self):
        assert preprocess("The Plastic, the Waste.") == ["plastic", "waste"]

    def test_apostrophe_joins(self):
        assert preprocess("polymer's structure") == ["polymers", "structure"]

    def test_numbers_kept(self):
        assert preprocess("heated to 250 degrees") == ["heated", "250", "degrees"]

    def test_unicode_punctuation_split(self):
        assert preprocess("alpha·beta") == ["alpha", "beta"]

    @given(text=st.text(max_size=200))
    def test_token_charset_and_stopword_free(self, text):
        tokens = preprocess(text)
        for tok in tokens:
            assert re.fullmatch(r"[a-z0-9]+", tok)
            assert tok not in stopwords()

    @given(text=st.text(max_size=200))
    def test_idempotent_on_own_output(self, text):
        tokens = preprocess(text)
        assert preprocess(" ".join(tokens)) == tokens


def test_make_document_splits_fields():
    doc = make_document(
        RawPatent(
            id="EP1",
            language="en",
            title="Green plastics",
            abstract="A recycling method.",
            description="The plastic waste is sorted.",
        )
    )
    assert doc.title_tokens == ("green", "plastics")
    assert doc.abstract_tokens == ("recycling", "method")
    assert doc.description_tokens == ("plastic", "waste", "sorted")
    assert doc.tokens_for(("title", "abstract")) == [
        "green",
        "plastics",
        "recycling",
        "method",
    ]
