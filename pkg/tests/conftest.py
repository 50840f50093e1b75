import numpy as np
import pytest

from patclass.nn.encoder import build_vocab
from patclass.nn.loss import LossConfig
from patclass.nn.model import Model, ModelConfig
from patclass.nn.train import TrainConfig, train_model
from patclass.taxonomy import default_taxonomy, load_taxonomy

CHAIN_TAXONOMY_YAML = """
classes:
  - code: A
    query: rootsig+
  - code: A/B
    parent: A
    query: childsig+
"""


@pytest.fixture(scope="session")
def taxonomy():
    return default_taxonomy()


@pytest.fixture(scope="session")
def chain_taxonomy():
    return load_taxonomy(CHAIN_TAXONOMY_YAML)


def make_separable_docs(rng, n):
    """Cleanly separable docs for the 2-class chain: the presence of
    'rootsig'/'childsig' tokens decides the label exactly."""
    neutral = ["filler", "words", "about", "devices", "method", "system"]
    docs, labels = [], []
    for i in range(n):
        kind = i % 3
        body = [rng.choice(neutral) for _ in range(rng.integers(2, 6))]
        if kind == 0:
            label = (0, 0)
        elif kind == 1:
            body.insert(int(rng.integers(0, len(body))), "rootsig")
            label = (1, 0)
        else:
            body.insert(int(rng.integers(0, len(body))), "rootsig")
            body.insert(int(rng.integers(0, len(body))), "childsig")
            label = (1, 1)
        docs.append(body)
        labels.append(label)
    return docs, np.array(labels, dtype=np.int8)


@pytest.fixture(scope="session")
def separable_data():
    rng = np.random.default_rng(11)
    train_xs, train_labels = make_separable_docs(rng, 240)
    val_xs, val_labels = make_separable_docs(rng, 60)
    return {
        "train_xs": train_xs,
        "train_labels": train_labels,
        "val_xs": val_xs,
        "val_labels": val_labels,
    }


def toy_model_config(kind="flat", dtype="float32"):
    return ModelConfig(
        kind=kind,
        embed_dim=16,
        feature_dim=16,
        hidden_dim=16,
        head_dim=4,
        vocab_size=100,
        max_len=32,
        dtype=dtype,
    )


@pytest.fixture(scope="session")
def trained_toy(separable_data, chain_taxonomy):
    """A flat model trained on the separable fixture.

    The schedule stops well short of saturation so the sigmoid stays in
    its smooth region; the attribution completeness checks depend on
    that as much as the accuracy checks do.
    """
    vocab = build_vocab(separable_data["train_xs"], 100)
    model = Model.build(toy_model_config(), chain_taxonomy, vocab, seed=5)
    result = train_model(
        model,
        separable_data["train_xs"],
        separable_data["train_labels"],
        separable_data["val_xs"],
        separable_data["val_labels"],
        TrainConfig(learning_rate=1e-3, batch_size=16, dropout=0.0,
                    max_epochs=25, patience=25, seed=5),
        LossConfig.uniform(2, gamma=2.0),
    )
    return result
