import dataclasses
import json

import numpy as np
import pytest

from conftest import make_separable_docs, toy_model_config
from patclass.errors import CheckpointError, ConfigError, DatasetError, NumericError
from patclass.nn.checkpoint import load_checkpoint, save_checkpoint
from patclass.nn.encoder import PrecomputedFeatures, build_vocab
from patclass.nn.loss import LossConfig
from patclass.nn.model import Model
from patclass.nn.train import (
    TrainConfig,
    dataset_loss_and_error,
    predict,
    predict_proba,
    train_model,
    write_epoch_log,
)


def toy_train_config(**overrides):
    base = dict(
        learning_rate=5e-3,
        batch_size=16,
        dropout=0.0,
        max_epochs=40,
        patience=40,
        seed=5,
    )
    base.update(overrides)
    return TrainConfig(**base)


def fresh_model(chain_taxonomy, data, kind="flat", seed=5):
    vocab = build_vocab(data["train_xs"], 100)
    return Model.build(toy_model_config(kind), chain_taxonomy, vocab, seed=seed)


class TestTrainingLoop:
    def test_learns_separable_task(self, trained_toy, separable_data):
        _, err = dataset_loss_and_error(
            trained_toy.model,
            separable_data["val_xs"],
            separable_data["val_labels"],
            LossConfig.uniform(2, gamma=2.0),
        )
        assert 1.0 - err >= 0.95
        assert trained_toy.stopped_epoch <= 50

    def test_loss_monotone_early(self, trained_toy):
        losses = [row.train_loss for row in trained_toy.log[:10]]
        assert len(losses) == 10
        assert all(b < a for a, b in zip(losses, losses[1:]))

    def test_same_seed_identical_logs(self, chain_taxonomy, separable_data):
        logs = []
        for _ in range(2):
            model = fresh_model(chain_taxonomy, separable_data)
            result = train_model(
                model,
                separable_data["train_xs"],
                separable_data["train_labels"],
                separable_data["val_xs"],
                separable_data["val_labels"],
                toy_train_config(max_epochs=4, dropout=0.3),
                LossConfig.uniform(2),
            )
            logs.append(result.log)
        assert logs[0] == logs[1]

    def test_patience_zero_stops_one_epoch_past_best(self, chain_taxonomy, separable_data):
        # A huge learning rate makes validation loss bounce quickly.
        model = fresh_model(chain_taxonomy, separable_data)
        result = train_model(
            model,
            separable_data["train_xs"],
            separable_data["train_labels"],
            separable_data["val_xs"],
            separable_data["val_labels"],
            toy_train_config(learning_rate=0.5, max_epochs=30, patience=0),
            LossConfig.uniform(2),
        )
        assert result.stopped_epoch < 30
        assert result.stopped_epoch == result.best_epoch + 1

    def test_best_checkpoint_restored(self, chain_taxonomy, separable_data):
        model = fresh_model(chain_taxonomy, separable_data)
        result = train_model(
            model,
            separable_data["train_xs"],
            separable_data["train_labels"],
            separable_data["val_xs"],
            separable_data["val_labels"],
            toy_train_config(learning_rate=0.5, max_epochs=10, patience=2),
            LossConfig.uniform(2),
        )
        best_val = result.log[result.best_epoch - 1].val_loss
        loss, _ = dataset_loss_and_error(
            result.model,
            separable_data["val_xs"],
            separable_data["val_labels"],
            LossConfig.uniform(2),
        )
        assert np.isclose(loss, best_val, rtol=1e-10)

    def test_empty_split_rejected(self, chain_taxonomy, separable_data):
        model = fresh_model(chain_taxonomy, separable_data)
        with pytest.raises(ConfigError):
            train_model(
                model,
                separable_data["train_xs"],
                separable_data["train_labels"],
                [],
                np.zeros((0, 2), dtype=np.int8),
                toy_train_config(),
                LossConfig.uniform(2),
            )

    def test_divergence_aborts(self, chain_taxonomy, separable_data, monkeypatch):
        model = fresh_model(chain_taxonomy, separable_data)
        import patclass.nn.train as train_mod

        def poisoned(*args, **kwargs):
            return float("nan"), 1.0

        monkeypatch.setattr(train_mod, "dataset_loss_and_error", poisoned)
        with pytest.raises(NumericError, match="diverged"):
            train_mod.train_model(
                model,
                separable_data["train_xs"],
                separable_data["train_labels"],
                separable_data["val_xs"],
                separable_data["val_labels"],
                toy_train_config(max_epochs=2),
                LossConfig.uniform(2),
            )

    def test_dropout_config_validated(self):
        with pytest.raises(ConfigError):
            TrainConfig(dropout=1.0)
        with pytest.raises(ConfigError):
            TrainConfig(batch_size=0)


class TestPredict:
    def test_assignment_at_threshold(self, trained_toy):
        y, assigned = predict(trained_toy.model, ["rootsig", "childsig", "filler"])
        assert assigned == [
            code for i, code in enumerate(trained_toy.model.codes) if y[i] >= 0.5
        ]
        assert "A" in assigned

    def test_threshold_above_one_assigns_nothing(self, trained_toy):
        _, assigned = predict(trained_toy.model, ["rootsig"], threshold=1.01)
        assert assigned == []

    def test_raw_probabilities_always_returned(self, trained_toy):
        y, _ = predict(trained_toy.model, ["filler"], threshold=0.99)
        assert y.shape == (2,)
        assert np.all((y > 0) & (y < 1))


class TestEpochLog:
    def test_csv_schema(self, trained_toy, tmp_path):
        path = tmp_path / "log.csv"
        write_epoch_log(trained_toy.log, str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == "epoch,train_loss,val_loss,train_err,val_err"
        assert len(lines) == len(trained_toy.log) + 1


class TestCheckpoint:
    def test_round_trip_preserves_predictions(self, trained_toy, tmp_path):
        path = str(tmp_path / "model.npz")
        save_checkpoint(trained_toy.model, path)
        loaded = load_checkpoint(path)
        doc = ["rootsig", "childsig"]
        y1 = predict_proba(trained_toy.model, [doc])
        y2 = predict_proba(loaded, [doc])
        assert np.array_equal(y1, y2)
        assert loaded.codes == trained_toy.model.codes
        assert loaded.vocab == trained_toy.model.vocab

    def test_write_is_byte_deterministic(self, trained_toy, tmp_path):
        p1, p2 = str(tmp_path / "a.npz"), str(tmp_path / "b.npz")
        save_checkpoint(trained_toy.model, p1)
        save_checkpoint(trained_toy.model, p2)
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_rejects_non_checkpoint(self, tmp_path):
        path = tmp_path / "junk.npz"
        np.savez(str(path), a=np.zeros(3))
        with pytest.raises(CheckpointError, match="metadata"):
            load_checkpoint(str(path))

    def test_rejects_wrong_shapes(self, trained_toy, tmp_path):
        path = str(tmp_path / "model.npz")
        save_checkpoint(trained_toy.model, path)
        archive = dict(np.load(path, allow_pickle=False))
        archive["fc1.W"] = archive["fc1.W"][:, :-1]
        np.savez(path, **archive)
        with pytest.raises(CheckpointError, match="shape"):
            load_checkpoint(str(path))

    def test_rejects_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(str(tmp_path / "none.npz"))


def write_embeddings(path, vectors):
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id, vec in vectors:
            fh.write(json.dumps({"id": doc_id, "embedding": list(vec)}) + "\n")


class TestPrecomputedFeatures:
    def test_load_and_lookup(self, tmp_path):
        path = tmp_path / "e.jsonl"
        write_embeddings(path, [("a", [1.0, 2.0]), ("b", [3.0, 4.0])])
        provider = PrecomputedFeatures.load(str(path))
        assert provider.dim == 2
        assert np.array_equal(provider.get("b"), np.array([3.0, 4.0]))
        assert provider.matrix(["a", "b"]).shape == (2, 2)

    def test_dimension_mismatch_rejected(self, tmp_path):
        path = tmp_path / "e.jsonl"
        write_embeddings(path, [("a", [1.0, 2.0]), ("b", [3.0])])
        with pytest.raises(DatasetError, match="dimension mismatch"):
            PrecomputedFeatures.load(str(path))

    def test_duplicate_id_named(self, tmp_path):
        path = tmp_path / "e.jsonl"
        write_embeddings(path, [("dup", [1.0]), ("dup", [2.0])])
        with pytest.raises(DatasetError, match="dup"):
            PrecomputedFeatures.load(str(path))

    def test_missing_id_named(self, tmp_path):
        path = tmp_path / "e.jsonl"
        write_embeddings(path, [("a", [1.0])])
        provider = PrecomputedFeatures.load(str(path))
        with pytest.raises(DatasetError, match="ghost"):
            provider.get("ghost")

    def test_trains_classifier_on_features(self, chain_taxonomy):
        """The provider slots in wherever the encoder output would go."""
        rng = np.random.default_rng(4)
        docs, labels = make_separable_docs(rng, 90)
        d = 8
        signal = rng.normal(size=(2, d))
        feats = np.stack(
            [
                labels[i, 0] * signal[0] + labels[i, 1] * signal[1]
                + 0.05 * rng.normal(size=d)
                for i in range(len(docs))
            ]
        )
        model = Model.build(
            dataclasses.replace(toy_model_config(), feature_dim=d),
            chain_taxonomy,
            None,
            seed=2,
        )
        result = train_model(
            model,
            feats[:70],
            labels[:70],
            feats[70:],
            labels[70:],
            toy_train_config(max_epochs=30),
            LossConfig.uniform(2),
        )
        _, err = dataset_loss_and_error(
            result.model, feats[70:], labels[70:], LossConfig.uniform(2)
        )
        assert 1.0 - err >= 0.9
