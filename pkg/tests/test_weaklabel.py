import json

import numpy as np
import pytest

from patclass.config import sample_corpus_path
from patclass.corpus import RawPatent, make_document, read_corpus
from patclass.errors import ConfigError, DatasetError, TaxonomyError
from patclass.taxonomy import load_taxonomy
from patclass.weaklabel import (
    DatasetSplit,
    LabeledExample,
    Labeler,
    LabelingConfig,
    SPLIT_NAMES,
    build_dataset,
    label_document,
    read_dataset,
    write_dataset,
)


def doc_with_description(tokens, doc_id="EP1"):
    return make_document(
        RawPatent(
            id=doc_id,
            language="en",
            title="t",
            abstract="a",
            description=" ".join(tokens),
        )
    )


class TestLabelingConfig:
    def test_defaults_valid(self):
        LabelingConfig()

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"k": 0},
            {"negative_ratio": 0.0},
            {"split_fractions": (0.5, 0.5, 0.0)},
            {"split_fractions": (0.5, 0.4, 0.2)},
            {"fields_to_scan": ("claims",)},
            {"fields_to_scan": ()},
            {"boost_fraction": 1.5},
            {"k_overrides": {"Y02G": 0}},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ConfigError):
            LabelingConfig(**kwargs)


class TestLabelDocument:
    def test_recycling_description(self, taxonomy):
        doc = doc_with_description(["recycling", "plastic", "waste"])
        bits = label_document(taxonomy, LabelingConfig(), doc)
        assert bits.tolist() == [1, 1, 1, 0, 0, 0, 0, 0, 0]

    def test_empty_description(self, taxonomy):
        doc = doc_with_description([])
        assert label_document(taxonomy, LabelingConfig(), doc).sum() == 0

    def test_bioplastic(self, taxonomy):
        doc = doc_with_description(["bioplastic"])
        bits = label_document(taxonomy, LabelingConfig(), doc)
        assert bits.tolist() == [1, 0, 0, 0, 0, 0, 1, 1, 0]

    def test_scan_fields_configurable(self, taxonomy):
        doc = make_document(
            RawPatent(
                id="EP1",
                language="en",
                title="bioplastic packaging",
                abstract="a",
                description="nothing relevant here",
            )
        )
        default = label_document(taxonomy, LabelingConfig(), doc)
        assert default.sum() == 0
        with_title = label_document(
            taxonomy, LabelingConfig(fields_to_scan=("title", "description")), doc
        )
        assert with_title.tolist() == [1, 0, 0, 0, 0, 0, 1, 1, 0]

    def test_k_threshold(self, taxonomy):
        doc = doc_with_description(["bioplastic", "filler", "bioplastic"])
        k2 = LabelingConfig(k=2)
        assert label_document(taxonomy, k2, doc).tolist() == [1, 0, 0, 0, 0, 0, 1, 1, 0]
        k3 = LabelingConfig(k=3)
        assert label_document(taxonomy, k3, doc).sum() == 0

    def test_per_class_k_override(self, taxonomy):
        doc = doc_with_description(["bioplastic"])
        cfg = LabelingConfig(k_overrides={"Y02G20/10": 2})
        assert label_document(taxonomy, cfg, doc).sum() == 0

    def test_query_errors_surface_at_load(self):
        t = load_taxonomy("classes:\n  - code: A\n    query: '(('\n")
        with pytest.raises(Exception) as excinfo:
            Labeler(t, LabelingConfig())
        assert "unbalanced" in str(excinfo.value) or "position" in str(excinfo.value)

    def test_missing_query_rejected(self):
        t = load_taxonomy("classes:\n  - code: A\n")
        with pytest.raises(TaxonomyError, match="no keyword query"):
            Labeler(t, LabelingConfig())


def synthetic_corpus(n_total=100, n_positive=20):
    """n_positive bioplastic docs, the rest unrelated; all complete."""
    records = []
    for i in range(n_total):
        if i < n_positive:
            description = "the bioplastic film is molded from starch"
        elif i % 3 == 0:
            description = "a plastic housing protects the sensor"
        else:
            description = "a semiconductor device with a raised gate"
        records.append(
            RawPatent(
                id=f"EP{i:04d}",
                language="en",
                title=f"title {i}",
                abstract=f"abstract {i}",
                description=description,
            )
        )
    return records


class TestBuildDataset:
    def test_sizes_and_ratio(self, taxonomy):
        cfg = LabelingConfig(seed=3)
        split, report = build_dataset(taxonomy, cfg, synthetic_corpus())
        assert report.n_positive == 20
        assert report.n_negative_sampled == 40
        sizes = [len(split.train), len(split.validation), len(split.test)]
        assert sizes == [48, 6, 6]
        ids = [ex.id for name in SPLIT_NAMES for ex in split[name]]
        assert len(set(ids)) == 60

    def test_zero_positives_aborts(self, taxonomy):
        corpus = [
            RawPatent(
                id=f"EP{i}", language="en", title="t", abstract="a",
                description="a semiconductor device",
            )
            for i in range(10)
        ]
        with pytest.raises(DatasetError, match="no positive"):
            build_dataset(taxonomy, LabelingConfig(), corpus)

    def test_infeasible_fractions_abort(self, taxonomy):
        with pytest.raises(DatasetError, match="infeasible"):
            build_dataset(taxonomy, LabelingConfig(), synthetic_corpus(6, 2))

    def test_all_positives_kept(self, taxonomy):
        split, _ = build_dataset(taxonomy, LabelingConfig(seed=1), synthetic_corpus())
        positive_ids = {
            ex.id for name in SPLIT_NAMES for ex in split[name] if ex.bits.any()
        }
        assert positive_ids == {f"EP{i:04d}" for i in range(20)}

    def test_seed_changes_only_negative_selection(self, taxonomy):
        by_id = {}
        for seed in (1, 2):
            split, _ = build_dataset(
                taxonomy, LabelingConfig(seed=seed), synthetic_corpus()
            )
            for name in SPLIT_NAMES:
                for ex in split[name]:
                    by_id.setdefault(ex.id, []).append(ex.bits)
        for bits_list in by_id.values():
            for bits in bits_list[1:]:
                assert np.array_equal(bits, bits_list[0])

    def test_boost_prefers_plastic_negatives(self, taxonomy):
        cfg = LabelingConfig(seed=5, boost_fraction=0.5)
        _, report = build_dataset(taxonomy, cfg, synthetic_corpus())
        assert report.n_boost_sampled == 20  # half of the 40 negatives

    def test_counts_monotone_up_the_tree(self, taxonomy):
        _, report = build_dataset(
            taxonomy, LabelingConfig(seed=7), read_corpus(sample_corpus_path())
        )
        for name in SPLIT_NAMES:
            counts = report.positives_per_split[name]
            for i, node in enumerate(taxonomy.nodes):
                if node.parent is not None:
                    assert counts[i] <= counts[taxonomy.index(node.parent)]

    def test_deterministic_given_seed(self, taxonomy):
        runs = []
        for _ in range(2):
            split, _ = build_dataset(
                taxonomy, LabelingConfig(seed=9), read_corpus(sample_corpus_path())
            )
            runs.append(split)
        for name in SPLIT_NAMES:
            assert runs[0][name] == runs[1][name]

    def test_every_emitted_label_hierarchically_consistent(self, taxonomy):
        from patclass.taxonomy import is_consistent

        split, _ = build_dataset(
            taxonomy, LabelingConfig(seed=7), read_corpus(sample_corpus_path())
        )
        for name in SPLIT_NAMES:
            for ex in split[name]:
                assert is_consistent(taxonomy, ex.bits)
                assert len(ex.text_tokens) > 0


class TestCsvRoundTrip:
    def make_split(self, taxonomy):
        split, _ = build_dataset(
            taxonomy, LabelingConfig(seed=3), synthetic_corpus()
        )
        return split

    def test_round_trip_identity(self, taxonomy, tmp_path):
        split = self.make_split(taxonomy)
        write_dataset(split, str(tmp_path), taxonomy)
        back = read_dataset(str(tmp_path), taxonomy)
        for name in SPLIT_NAMES:
            assert back[name] == split[name]

    def test_write_is_byte_deterministic(self, taxonomy, tmp_path):
        split = self.make_split(taxonomy)
        for sub in ("a", "b"):
            write_dataset(split, str(tmp_path / sub), taxonomy)
        for fname in ("train.csv", "val.csv", "test.csv"):
            assert (tmp_path / "a" / fname).read_bytes() == (
                tmp_path / "b" / fname
            ).read_bytes()

    def test_non_binary_target_rejected(self, taxonomy, tmp_path):
        split = self.make_split(taxonomy)
        write_dataset(split, str(tmp_path), taxonomy)
        path = tmp_path / "val.csv"
        lines = path.read_text().splitlines()
        lines[1] = lines[1][:-1] + "2"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DatasetError, match="non-binary"):
            read_dataset(str(tmp_path), taxonomy)

    def test_permuted_header_rejected(self, taxonomy, tmp_path):
        split = self.make_split(taxonomy)
        write_dataset(split, str(tmp_path), taxonomy)
        path = tmp_path / "train.csv"
        lines = path.read_text().splitlines()
        header = lines[0].split(",")
        header[2], header[3] = header[3], header[2]
        lines[0] = ",".join(header)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DatasetError) as excinfo:
            read_dataset(str(tmp_path), taxonomy)
        assert header[2] in str(excinfo.value)

    def test_missing_file_rejected(self, taxonomy, tmp_path):
        with pytest.raises(DatasetError):
            read_dataset(str(tmp_path), taxonomy)

    def test_duplicate_ids_across_splits_rejected(self, taxonomy, tmp_path):
        example = LabeledExample("EP1", ("a",), np.zeros(9, dtype=np.int8))
        split = DatasetSplit([example], [example], [example])
        write_dataset(split, str(tmp_path), taxonomy)
        with pytest.raises(DatasetError, match="duplicate"):
            read_dataset(str(tmp_path), taxonomy)


def test_report_text_mirrors_split_counts(taxonomy):
    split, report = build_dataset(
        taxonomy, LabelingConfig(seed=3), synthetic_corpus()
    )
    text = report.format_text()
    assert "Y02G20/10" in text
    # every positive bioplastic doc carries Y02G, Y02G20/00 and Y02G20/10
    total_root = sum(report.positives_per_split[n][0] for n in SPLIT_NAMES)
    assert total_root == 20
    json.loads(report.to_json())
