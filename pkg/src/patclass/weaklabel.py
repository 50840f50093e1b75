"""Weak labeling and dataset construction.

Each class of the taxonomy carries a keyword query. A document is
directly assigned every class whose query matches at least k times in
the scanned fields (description by default); ancestors are then added by
propagation. Positives (any bit set) are all kept, negatives are sampled
at `negative_ratio` per positive with a deterministic seeded draw, and
the pool is shuffled and split into train/val/test CSV files. Labels are
computed from the description; the model input is title + abstract.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from patclass import query as qmod
from patclass.corpus import (
    SCANNABLE_FIELDS,
    Document,
    RawPatent,
    filter_patent,
    make_document,
)
from patclass.errors import ConfigError, DatasetError, TaxonomyError
from patclass.taxonomy import Taxonomy, propagate

SPLIT_NAMES = ("train", "validation", "test")
SPLIT_FILES = {"train": "train.csv", "validation": "val.csv", "test": "test.csv"}
TEXT_COLUMN = "TITLE_ABSTR"


@dataclass
class LabelingConfig:
    """Knobs of the labeling and sampling stage."""

    k: int = 1
    k_overrides: dict[str, int] = field(default_factory=dict)
    fields_to_scan: tuple[str, ...] = ("description",)
    negative_ratio: float = 2.0
    split_fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0
    boost_query: str | None = "plastic+"
    boost_fraction: float = 0.25

    def __post_init__(self):
        self.fields_to_scan = tuple(self.fields_to_scan)
        self.split_fractions = tuple(self.split_fractions)
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        for code, k in self.k_overrides.items():
            if k < 1:
                raise ConfigError(f"k override for {code} must be >= 1, got {k}")
        if self.negative_ratio <= 0:
            raise ConfigError("negative_ratio must be positive")
        bad = set(self.fields_to_scan) - set(SCANNABLE_FIELDS)
        if bad or not self.fields_to_scan:
            raise ConfigError(
                f"fields_to_scan must be a non-empty subset of {SCANNABLE_FIELDS}"
            )
        if len(self.split_fractions) != 3 or any(f <= 0 for f in self.split_fractions):
            raise ConfigError("split_fractions must be three positive numbers")
        if abs(sum(self.split_fractions) - 1.0) > 1e-9:
            raise ConfigError("split_fractions must sum to 1")
        if not 0.0 <= self.boost_fraction <= 1.0:
            raise ConfigError("boost_fraction must be in [0, 1]")


@dataclass(frozen=True)
class LabeledExample:
    id: str
    text_tokens: tuple[str, ...]
    bits: np.ndarray

    def __eq__(self, other):
        return (
            isinstance(other, LabeledExample)
            and self.id == other.id
            and self.text_tokens == other.text_tokens
            and np.array_equal(self.bits, other.bits)
        )


@dataclass
class DatasetSplit:
    train: list[LabeledExample]
    validation: list[LabeledExample]
    test: list[LabeledExample]

    def __getitem__(self, name: str) -> list[LabeledExample]:
        if name not in SPLIT_NAMES:
            raise KeyError(name)
        return getattr(self, name)


class Labeler:
    """Parses all class queries once; labeling itself is pure."""

    def __init__(self, taxonomy: Taxonomy, cfg: LabelingConfig):
        self.taxonomy = taxonomy
        self.cfg = cfg
        self._asts: list[tuple[str, qmod.QueryAst, int]] = []
        for node in taxonomy.nodes:
            if node.query is None:
                raise TaxonomyError(f"class {node.code!r} has no keyword query")
            ast = qmod.parse_query(node.query)
            self._asts.append((node.code, ast, cfg.k_overrides.get(node.code, cfg.k)))
        self._boost_ast = (
            qmod.parse_query(cfg.boost_query) if cfg.boost_query else None
        )

    def scan_tokens(self, doc: Document) -> list[str]:
        return doc.tokens_for(self.cfg.fields_to_scan)

    def direct_classes(self, doc: Document) -> set[str]:
        tokens = self.scan_tokens(doc)
        return {
            code
            for code, ast, k in self._asts
            if qmod.count_at_least(ast, tokens, k)
        }

    def label_document(self, doc: Document) -> np.ndarray:
        return propagate(self.taxonomy, self.direct_classes(doc))

    def is_boost_match(self, doc: Document) -> bool:
        if self._boost_ast is None:
            return False
        return qmod.count_at_least(self._boost_ast, self.scan_tokens(doc), 1)


def label_document(taxonomy: Taxonomy, cfg: LabelingConfig, doc: Document) -> np.ndarray:
    """Convenience wrapper; build a Labeler directly for corpus scans."""
    return Labeler(taxonomy, cfg).label_document(doc)


@dataclass
class LabelingReport:
    """Per-class positive/negative counts per split, plus run bookkeeping."""

    codes: tuple[str, ...]
    positives_per_split: dict[str, list[int]]
    sizes_per_split: dict[str, int]
    n_read: int = 0
    n_filtered_out: int = 0
    n_empty_text: int = 0
    n_positive: int = 0
    n_negative_available: int = 0
    n_negative_sampled: int = 0
    n_boost_sampled: int = 0

    def format_text(self) -> str:
        header = f"{'Class':<12}"
        for name in SPLIT_NAMES:
            header += f" {name + ' +':>12} {name + ' -':>12}"
        lines = [header, "-" * len(header)]
        for i, code in enumerate(self.codes):
            row = f"{code:<12}"
            for name in SPLIT_NAMES:
                pos = self.positives_per_split[name][i]
                neg = self.sizes_per_split[name] - pos
                row += f" {pos:>12d} {neg:>12d}"
            lines.append(row)
        total = f"{'Total':<12}"
        for name in SPLIT_NAMES:
            total += f" {self.sizes_per_split[name]:>25d}"
        lines.append("-" * len(header))
        lines.append(total)
        if self.n_read:
            lines.append("")
            lines.append(
                f"read={self.n_read} filtered_out={self.n_filtered_out} "
                f"empty_text={self.n_empty_text} positives={self.n_positive} "
                f"negatives_available={self.n_negative_available} "
                f"negatives_sampled={self.n_negative_sampled} "
                f"boost_negatives={self.n_boost_sampled}"
            )
        return "\n".join(lines)

    def to_json(self) -> str:
        data = {
            "codes": list(self.codes),
            "positives_per_split": self.positives_per_split,
            "sizes_per_split": self.sizes_per_split,
            "n_read": self.n_read,
            "n_filtered_out": self.n_filtered_out,
            "n_empty_text": self.n_empty_text,
            "n_positive": self.n_positive,
            "n_negative_available": self.n_negative_available,
            "n_negative_sampled": self.n_negative_sampled,
            "n_boost_sampled": self.n_boost_sampled,
        }
        return json.dumps(data, indent=2, sort_keys=True)


def _split_sizes(n: int, fractions: tuple[float, float, float]) -> tuple[int, int, int]:
    n_train = int(n * fractions[0])
    n_val = int(n * fractions[1])
    n_test = n - n_train - n_val
    return n_train, n_val, n_test


def build_dataset(
    taxonomy: Taxonomy,
    cfg: LabelingConfig,
    patents: Iterable[RawPatent],
) -> tuple[DatasetSplit, LabelingReport]:
    """Label a corpus stream and assemble deterministic splits.

    Every positive is kept. floor(negative_ratio * positives) negatives
    are drawn uniformly via seeded random priorities, with boost-query
    matches (conventional-plastics mentions by default) preferentially
    retained at `boost_fraction` of the negative budget.
    """
    labeler = Labeler(taxonomy, cfg)
    rng = np.random.default_rng(cfg.seed)
    positives: list[LabeledExample] = []
    negatives: list[tuple[float, bool, LabeledExample]] = []
    n_read = n_filtered = n_empty = 0
    for patent in patents:
        n_read += 1
        if not filter_patent(patent):
            n_filtered += 1
            continue
        doc = make_document(patent)
        text_tokens = doc.title_tokens + doc.abstract_tokens
        if not text_tokens:
            n_empty += 1
            continue
        bits = labeler.label_document(doc)
        example = LabeledExample(patent.id, text_tokens, bits)
        if bits.any():
            positives.append(example)
        else:
            negatives.append((rng.random(), labeler.is_boost_match(doc), example))

    if not positives:
        raise DatasetError(
            "no positive examples found; check the corpus and class queries"
        )

    n_neg_target = min(
        int(math.floor(cfg.negative_ratio * len(positives))), len(negatives)
    )
    boost_pool = sorted((p, e.id, e) for p, b, e in negatives if b)
    other_pool = sorted((p, e.id, e) for p, b, e in negatives if not b)
    n_boost = min(int(math.floor(cfg.boost_fraction * n_neg_target)), len(boost_pool))
    n_other = min(n_neg_target - n_boost, len(other_pool))
    n_boost = min(n_neg_target - n_other, len(boost_pool))  # backfill shortfall
    sampled = [e for _, _, e in boost_pool[:n_boost]]
    sampled += [e for _, _, e in other_pool[:n_other]]

    pool = positives + sampled
    order = rng.permutation(len(pool))
    pool = [pool[i] for i in order]

    n_train, n_val, n_test = _split_sizes(len(pool), cfg.split_fractions)
    if min(n_train, n_val, n_test) == 0:
        raise DatasetError(
            f"split fractions {cfg.split_fractions} are infeasible for "
            f"{len(pool)} examples"
        )
    split = DatasetSplit(
        train=pool[:n_train],
        validation=pool[n_train:n_train + n_val],
        test=pool[n_train + n_val:],
    )
    report = LabelingReport(
        codes=taxonomy.codes,
        positives_per_split={
            name: [int(sum(ex.bits[i] for ex in split[name])) for i in range(len(taxonomy))]
            for name in SPLIT_NAMES
        },
        sizes_per_split={name: len(split[name]) for name in SPLIT_NAMES},
        n_read=n_read,
        n_filtered_out=n_filtered,
        n_empty_text=n_empty,
        n_positive=len(positives),
        n_negative_available=len(negatives),
        n_negative_sampled=len(sampled),
        n_boost_sampled=n_boost,
    )
    return split, report


def expected_header(taxonomy: Taxonomy) -> list[str]:
    return ["ID", TEXT_COLUMN, *taxonomy.codes]


def write_dataset(split: DatasetSplit, directory: str, taxonomy: Taxonomy) -> None:
    """Write train.csv / val.csv / test.csv in the documented schema."""
    os.makedirs(directory, exist_ok=True)
    header = expected_header(taxonomy)
    for name in SPLIT_NAMES:
        path = os.path.join(directory, SPLIT_FILES[name])
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for ex in split[name]:
                writer.writerow(
                    [ex.id, " ".join(ex.text_tokens), *(int(b) for b in ex.bits)]
                )


def read_dataset(directory: str, taxonomy: Taxonomy) -> DatasetSplit:
    """Read splits back; validates header order and binary targets."""
    header = expected_header(taxonomy)
    splits: dict[str, list[LabeledExample]] = {}
    for name in SPLIT_NAMES:
        path = os.path.join(directory, SPLIT_FILES[name])
        try:
            fh = open(path, encoding="utf-8", newline="")
        except OSError as exc:
            raise DatasetError(f"cannot read split file {path}: {exc}") from exc
        with fh:
            reader = csv.reader(fh)
            got = next(reader, None)
            if got != header:
                culprit = _first_header_mismatch(header, got)
                raise DatasetError(
                    f"{path}: unexpected header column {culprit!r} "
                    f"(expected order {header})"
                )
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(header):
                    raise DatasetError(f"{path}:{lineno}: wrong column count")
                bits = []
                for code, cell in zip(taxonomy.codes, row[2:]):
                    if cell not in ("0", "1"):
                        raise DatasetError(
                            f"{path}:{lineno}: non-binary target cell {cell!r} "
                            f"for class {code}"
                        )
                    bits.append(int(cell))
                rows.append(
                    LabeledExample(
                        row[0], tuple(row[1].split()), np.array(bits, dtype=np.int8)
                    )
                )
            splits[name] = rows
    ids = [ex.id for name in SPLIT_NAMES for ex in splits[name]]
    if len(ids) != len(set(ids)):
        raise DatasetError(f"{directory}: duplicate ids across splits")
    return DatasetSplit(splits["train"], splits["validation"], splits["test"])


def _first_header_mismatch(expected: list[str], got: list[str] | None) -> str:
    if got is None:
        return "<missing header>"
    for want, have in zip(expected, got):
        if want != have:
            return have
    return got[len(expected)] if len(got) > len(expected) else "<missing column>"
