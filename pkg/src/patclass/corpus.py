"""Raw patent reading, filtering, and text preprocessing.

The corpus format is JSON Lines with one record per line:
{"id": str, "lang": str, "title": str, "abstract": str, "description": str}.
Preprocessing lowercases, deletes hyphens and apostrophes in place (so
"self-healing" becomes "selfhealing"), replaces all other punctuation with
spaces, tokenizes on whitespace, and drops bundled English stopwords.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterator

from patclass.errors import CorpusError

log = logging.getLogger(__name__)

SCANNABLE_FIELDS = ("title", "abstract", "description")

# Characters deleted in place so that the two halves of a word join.
_JOIN_CHARS = "-'’‐‑‒–—"
_JOIN_TABLE = str.maketrans("", "", _JOIN_CHARS)
_NON_TOKEN_RE = re.compile(r"[^a-z0-9]+")


@dataclass(frozen=True)
class RawPatent:
    id: str
    language: str = ""
    title: str = ""
    abstract: str = ""
    description: str = ""


@dataclass(frozen=True)
class Document:
    """A preprocessed patent: token sequences per field."""

    id: str
    title_tokens: tuple[str, ...]
    abstract_tokens: tuple[str, ...]
    description_tokens: tuple[str, ...]

    def tokens_for(self, fields: tuple[str, ...]) -> list[str]:
        out: list[str] = []
        for name in fields:
            out.extend(getattr(self, f"{name}_tokens"))
        return out


@lru_cache(maxsize=1)
def stopwords() -> frozenset[str]:
    text = resources.files("patclass.data").joinpath("stopwords.txt").read_text("utf-8")
    words = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.append(line)
    return frozenset(words)


def preprocess(text: str) -> list[str]:
    """Text to lowercase stopword-free tokens over [a-z0-9]."""
    cleaned = _NON_TOKEN_RE.sub(" ", text.lower().translate(_JOIN_TABLE))
    drop = stopwords()
    return [tok for tok in cleaned.split() if tok not in drop]


def make_document(patent: RawPatent) -> Document:
    return Document(
        id=patent.id,
        title_tokens=tuple(preprocess(patent.title)),
        abstract_tokens=tuple(preprocess(patent.abstract)),
        description_tokens=tuple(preprocess(patent.description)),
    )


def filter_patent(patent: RawPatent) -> bool:
    """Keep only English records with title, abstract, and description."""
    if patent.language != "en":
        return False
    return all(
        getattr(patent, field).strip() for field in SCANNABLE_FIELDS
    )


def _parse_record(data: object, lineno: int) -> RawPatent:
    if not isinstance(data, dict):
        raise ValueError("record is not a JSON object")
    raw_id = data.get("id")
    if not isinstance(raw_id, str) or not raw_id:
        raise ValueError("missing or empty 'id'")
    fields = {}
    for key, attr in (("lang", "language"), ("title", "title"),
                      ("abstract", "abstract"), ("description", "description")):
        value = data.get(key, "")
        if value is None:
            value = ""
        if not isinstance(value, str):
            raise ValueError(f"field {key!r} is not a string")
        fields[attr] = value
    return RawPatent(id=raw_id, **fields)


def read_corpus(path: str) -> Iterator[RawPatent]:
    """Stream records from a JSON Lines corpus file.

    Malformed lines are logged with their line number and skipped. Raises
    CorpusError for an unreadable file or one with zero valid records.
    """
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read corpus {path}: {exc}") from exc
    yielded = 0
    skipped = 0
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = _parse_record(json.loads(line), lineno)
            except (json.JSONDecodeError, ValueError) as exc:
                skipped += 1
                log.warning("%s:%d: skipping malformed record: %s", path, lineno, exc)
                continue
            yielded += 1
            yield record
    if skipped:
        log.info("%s: skipped %d malformed record(s)", path, skipped)
    if yielded == 0:
        raise CorpusError(f"no valid records in {path}")
