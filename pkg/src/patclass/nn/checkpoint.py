"""Self-describing checkpoint files.

A checkpoint is an .npz archive holding every parameter array plus a
"__meta__" entry: UTF-8 JSON with the format version, architecture
config, class-code order, and the vocabulary (token list in embedding
row order). Files written with the same inputs are byte-identical.
"""

from __future__ import annotations

import json

import numpy as np

from patclass.errors import CheckpointError
from patclass.nn.encoder import N_RESERVED_ROWS
from patclass.nn.model import Model, ModelConfig

FORMAT_VERSION = 1
_META_KEY = "__meta__"


def save_checkpoint(model: Model, path: str) -> None:
    meta = {
        "format_version": FORMAT_VERSION,
        "config": {
            "kind": model.cfg.kind,
            "embed_dim": model.cfg.embed_dim,
            "feature_dim": model.cfg.feature_dim,
            "hidden_dim": model.cfg.hidden_dim,
            "head_dim": model.cfg.head_dim,
            "vocab_size": model.cfg.vocab_size,
            "max_len": model.cfg.max_len,
            "hier_wiring": model.cfg.hier_wiring,
            "dtype": model.cfg.dtype,
        },
        "codes": list(model.codes),
        "parent_index": list(model.parent_index),
        "vocab_tokens": _vocab_tokens(model.vocab),
    }
    blob = np.frombuffer(
        json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8
    )
    np.savez(path, **{_META_KEY: blob}, **model.params)


def _vocab_tokens(vocab: dict[str, int] | None) -> list[str] | None:
    if vocab is None:
        return None
    tokens = [""] * len(vocab)
    for tok, row in vocab.items():
        tokens[row - N_RESERVED_ROWS] = tok
    return tokens


def load_checkpoint(path: str) -> Model:
    try:
        archive = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    with archive:
        if _META_KEY not in archive:
            raise CheckpointError(f"{path} is not a checkpoint (no metadata)")
        try:
            meta = json.loads(bytes(archive[_META_KEY]).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"{path}: corrupt metadata: {exc}") from exc
        version = meta.get("format_version")
        if version != FORMAT_VERSION:
            raise CheckpointError(
                f"{path}: unsupported checkpoint format version {version!r}"
            )
        cfg = ModelConfig(**meta["config"])
        codes = tuple(meta["codes"])
        parent_index = tuple(
            None if p is None else int(p) for p in meta["parent_index"]
        )
        tokens = meta["vocab_tokens"]
        vocab = (
            None
            if tokens is None
            else {tok: i + N_RESERVED_ROWS for i, tok in enumerate(tokens)}
        )
        params = {k: archive[k] for k in archive.files if k != _META_KEY}
    model = Model(cfg, codes, parent_index, params, vocab)
    _validate(model, path)
    return model


def _validate(model: Model, path: str) -> None:
    cfg = model.cfg
    expect: dict[str, tuple[int, ...]] = {}
    if model.vocab is not None:
        expect["emb"] = (len(model.vocab) + N_RESERVED_ROWS, cfg.embed_dim)
        expect["proj.W"] = (cfg.feature_dim, cfg.embed_dim)
        expect["proj.b"] = (cfg.feature_dim,)
    if cfg.kind == "flat":
        expect["fc1.W"] = (cfg.hidden_dim, cfg.feature_dim)
        expect["fc1.b"] = (cfg.hidden_dim,)
        expect["fc2.W"] = (len(model.codes), cfg.hidden_dim)
        expect["fc2.b"] = (len(model.codes),)
    else:
        for i in range(len(model.codes)):
            expect[f"head{i}.W"] = (cfg.head_dim, cfg.feature_dim)
            expect[f"head{i}.b"] = (cfg.head_dim,)
            expect[f"out{i}.W"] = (1, cfg.head_dim)
            expect[f"out{i}.b"] = (1,)
    for key, shape in expect.items():
        if key not in model.params:
            raise CheckpointError(f"{path}: missing parameter {key!r}")
        if model.params[key].shape != shape:
            raise CheckpointError(
                f"{path}: parameter {key!r} has shape "
                f"{model.params[key].shape}, expected {shape}"
            )
    extra = set(model.params) - set(expect)
    if extra:
        raise CheckpointError(f"{path}: unexpected parameters {sorted(extra)}")
