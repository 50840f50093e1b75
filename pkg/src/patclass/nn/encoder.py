"""Token vocabulary and the precomputed-feature provider.

The trainable encoder itself (embedding table + linear projection with
mean pooling) lives inside the model; this module owns vocabulary
construction and the loader for externally computed feature vectors.
"""

from __future__ import annotations

import json
from collections import Counter
from typing import Iterable, Sequence

import numpy as np

from patclass.errors import DatasetError

PAD_ROW = 0
OOV_ROW = 1
N_RESERVED_ROWS = 2


def build_vocab(token_lists: Iterable[Sequence[str]], max_size: int) -> dict[str, int]:
    """Most frequent tokens of the training split, mapped to embedding rows.

    Rows 0 and 1 are reserved for padding and out-of-vocabulary tokens.
    Frequency ties break alphabetically so the mapping is deterministic.
    """
    counts: Counter[str] = Counter()
    for tokens in token_lists:
        counts.update(tokens)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:max_size]
    return {tok: i + N_RESERVED_ROWS for i, (tok, _) in enumerate(ranked)}


def lookup_ids(vocab: dict[str, int], tokens: Sequence[str], max_len: int) -> list[int]:
    return [vocab.get(tok, OOV_ROW) for tok in tokens[:max_len]]


class PrecomputedFeatures:
    """Feature vectors computed offline, keyed by document id.

    Stands in for the trainable encoder when training a classifier on
    externally produced embeddings. Attribution is not available for
    models built on this provider.
    """

    def __init__(self, vectors: dict[str, np.ndarray], dim: int):
        self.vectors = vectors
        self.dim = dim

    @classmethod
    def load(cls, path: str) -> "PrecomputedFeatures":
        """Read a JSONL file of {"id": str, "embedding": [float, ...]}."""
        vectors: dict[str, np.ndarray] = {}
        dim: int | None = None
        try:
            fh = open(path, encoding="utf-8")
        except OSError as exc:
            raise DatasetError(f"cannot read embeddings {path}: {exc}") from exc
        with fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    doc_id = record["id"]
                    vec = np.asarray(record["embedding"], dtype=np.float64)
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise DatasetError(f"{path}:{lineno}: bad embedding record: {exc}")
                if vec.ndim != 1:
                    raise DatasetError(f"{path}:{lineno}: embedding is not a vector")
                if doc_id in vectors:
                    raise DatasetError(f"{path}:{lineno}: duplicate id {doc_id!r}")
                if dim is None:
                    dim = int(vec.shape[0])
                elif vec.shape[0] != dim:
                    raise DatasetError(
                        f"{path}:{lineno}: dimension mismatch for id {doc_id!r} "
                        f"({vec.shape[0]} != {dim})"
                    )
                vectors[doc_id] = vec
        if dim is None:
            raise DatasetError(f"no embeddings in {path}")
        return cls(vectors, dim)

    def get(self, doc_id: str) -> np.ndarray:
        try:
            return self.vectors[doc_id]
        except KeyError:
            raise DatasetError(f"no embedding for id {doc_id!r}") from None

    def matrix(self, doc_ids: Sequence[str]) -> np.ndarray:
        return np.stack([self.get(d) for d in doc_ids])
