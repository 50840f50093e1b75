"""Classifier architectures over a pooled text feature vector.

Two head layouts share a trainable encoder (embedding mean-pool plus a
linear projection to the feature vector h):

* "flat": one hidden dense layer with ReLU, then a dense layer with a
  sigmoid per class.
* "hier": one dense head with ReLU per class producing a local state
  u_c; states are combined along the tree by element-wise addition
  (z_c = u_c + z_parent with the default "cumulative" wiring, or
  z_c = u_c + u_parent with "parent_only"), and a per-class scalar
  output layer with a sigmoid reads z_c.

Forward and backward passes are written out explicitly; parameters and
gradients live in flat name->array dicts so the optimizer and the
finite-difference checks can treat them uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from patclass.errors import ConfigError
from patclass.nn.encoder import PAD_ROW, N_RESERVED_ROWS, lookup_ids
from patclass.nn.ops import dense_backward, dense_forward, glorot_uniform, relu, relu_grad, sigmoid
from patclass.taxonomy import Taxonomy

KINDS = ("flat", "hier")
WIRINGS = ("cumulative", "parent_only")


@dataclass
class ModelConfig:
    kind: str = "flat"
    embed_dim: int = 128
    feature_dim: int = 256
    hidden_dim: int = 256
    head_dim: int = 64
    vocab_size: int = 30000
    max_len: int = 256
    hier_wiring: str = "cumulative"
    dtype: str = "float32"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"model kind must be one of {KINDS}, got {self.kind!r}")
        if self.hier_wiring not in WIRINGS:
            raise ConfigError(
                f"hier_wiring must be one of {WIRINGS}, got {self.hier_wiring!r}"
            )
        for name in ("embed_dim", "feature_dim", "hidden_dim", "head_dim",
                     "vocab_size", "max_len"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.dtype not in ("float32", "float64"):
            raise ConfigError("dtype must be float32 or float64")


class Model:
    """Parameters plus explicit forward/backward passes."""

    def __init__(
        self,
        cfg: ModelConfig,
        codes: tuple[str, ...],
        parent_index: tuple[int | None, ...],
        params: dict[str, np.ndarray],
        vocab: dict[str, int] | None,
    ):
        self.cfg = cfg
        self.codes = codes
        self.parent_index = parent_index
        self.params = params
        self.vocab = vocab
        self.children_index: list[list[int]] = [[] for _ in codes]
        for i, p in enumerate(parent_index):
            if p is not None:
                self.children_index[p].append(i)

    # --- construction ----------------------------------------------------

    @classmethod
    def build(
        cls,
        cfg: ModelConfig,
        taxonomy: Taxonomy,
        vocab: dict[str, int] | None,
        seed: int,
    ) -> "Model":
        rng = np.random.default_rng(seed)
        dtype = np.dtype(cfg.dtype)
        codes = taxonomy.codes
        parent_index = tuple(
            None if n.parent is None else taxonomy.index(n.parent)
            for n in taxonomy.nodes
        )
        params: dict[str, np.ndarray] = {}
        if vocab is not None:
            rows = len(vocab) + N_RESERVED_ROWS
            emb = glorot_uniform(rng, rows, cfg.embed_dim, dtype)
            emb[PAD_ROW] = 0.0
            params["emb"] = emb
            params["proj.W"] = glorot_uniform(rng, cfg.feature_dim, cfg.embed_dim, dtype)
            params["proj.b"] = np.zeros(cfg.feature_dim, dtype=dtype)
        C = len(codes)
        d = cfg.feature_dim
        if cfg.kind == "flat":
            params["fc1.W"] = glorot_uniform(rng, cfg.hidden_dim, d, dtype)
            params["fc1.b"] = np.zeros(cfg.hidden_dim, dtype=dtype)
            params["fc2.W"] = glorot_uniform(rng, C, cfg.hidden_dim, dtype)
            params["fc2.b"] = np.zeros(C, dtype=dtype)
        else:
            for i in range(C):
                params[f"head{i}.W"] = glorot_uniform(rng, cfg.head_dim, d, dtype)
                params[f"head{i}.b"] = np.zeros(cfg.head_dim, dtype=dtype)
                params[f"out{i}.W"] = glorot_uniform(rng, 1, cfg.head_dim, dtype)
                params[f"out{i}.b"] = np.zeros(1, dtype=dtype)
        return cls(cfg, codes, parent_index, params, vocab)

    @property
    def n_classes(self) -> int:
        return len(self.codes)

    @property
    def has_encoder(self) -> bool:
        return self.vocab is not None

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(self.cfg.dtype)

    def copy_params(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}

    def set_params(self, params: dict[str, np.ndarray]) -> None:
        self.params = {k: v.copy() for k, v in params.items()}

    # --- encoder ----------------------------------------------------------

    def embed_tokens(self, tokens: Sequence[str]) -> np.ndarray:
        """Embedding rows for a token sequence (truncated to max_len)."""
        if not self.has_encoder:
            raise ConfigError("model has no trainable encoder")
        ids = lookup_ids(self.vocab, tokens, self.cfg.max_len)
        return self.params["emb"][ids] if ids else np.zeros(
            (0, self.cfg.embed_dim), dtype=self.dtype
        )

    def _mean_pool(self, token_lists: Sequence[Sequence[str]]):
        E = self.params["emb"]
        M = np.zeros((len(token_lists), self.cfg.embed_dim), dtype=self.dtype)
        ids_list = []
        for b, tokens in enumerate(token_lists):
            ids = lookup_ids(self.vocab, tokens, self.cfg.max_len)
            ids_list.append(ids)
            if ids:
                M[b] = E[ids].mean(axis=0)
        return M, ids_list

    # --- forward ----------------------------------------------------------

    def forward(
        self,
        xs: Sequence[Sequence[str]] | np.ndarray,
        dropout: float = 0.0,
        rng: np.random.Generator | None = None,
    ):
        """Probabilities for a batch.

        `xs` is a list of token sequences when the model owns an encoder,
        or a (B, feature_dim) array of precomputed features otherwise.
        Inverted dropout on h is applied only when `dropout` > 0 and an
        rng is supplied (training mode). Returns (y, cache).
        """
        cache: dict = {}
        if self.has_encoder and not isinstance(xs, np.ndarray):
            M, ids_list = self._mean_pool(xs)
            h = dense_forward(self.params["proj.W"], self.params["proj.b"], M)
            cache["M"] = M
            cache["ids_list"] = ids_list
        else:
            h = np.asarray(xs, dtype=self.dtype)
            if h.ndim != 2 or h.shape[1] != self.cfg.feature_dim:
                raise ConfigError(
                    f"feature batch must be (B, {self.cfg.feature_dim}), "
                    f"got {h.shape}"
                )
        if dropout > 0.0 and rng is not None:
            mask = (rng.random(h.shape) >= dropout).astype(self.dtype) / (1.0 - dropout)
            h = h * mask
            cache["drop_mask"] = mask
        cache["h"] = h
        if self.cfg.kind == "flat":
            y = self._flat_forward(h, cache)
        else:
            y = self._hier_forward(h, cache)
        cache["y"] = y
        return y, cache

    def _flat_forward(self, h, cache):
        pre1 = dense_forward(self.params["fc1.W"], self.params["fc1.b"], h)
        a1 = relu(pre1)
        logits = dense_forward(self.params["fc2.W"], self.params["fc2.b"], a1)
        cache.update(pre1=pre1, a1=a1, logits=logits)
        return sigmoid(logits)

    def _hier_forward(self, h, cache):
        B = h.shape[0]
        C = self.n_classes
        pres, us, zs = [], [], []
        # h's dtype wins so the float64 attribution path stays float64
        logits = np.zeros((B, C), dtype=h.dtype)
        for i in range(C):  # codes are stored parents-first
            pre = dense_forward(self.params[f"head{i}.W"], self.params[f"head{i}.b"], h)
            u = relu(pre)
            p = self.parent_index[i]
            if p is None:
                z = u
            elif self.cfg.hier_wiring == "cumulative":
                z = u + zs[p]
            else:
                z = u + us[p]
            pres.append(pre)
            us.append(u)
            zs.append(z)
            logits[:, i] = dense_forward(
                self.params[f"out{i}.W"], self.params[f"out{i}.b"], z
            )[:, 0]
        cache.update(pres=pres, us=us, zs=zs, logits=logits)
        return sigmoid(logits)

    # --- backward ---------------------------------------------------------

    def backward(self, cache: dict, dLdy: np.ndarray) -> dict[str, np.ndarray]:
        """Gradients w.r.t. every parameter given dL/dy. Returns a dict
        with exactly the keys of `params`."""
        y = cache["y"]
        dlogits = dLdy * y * (1.0 - y)
        grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        if self.cfg.kind == "flat":
            dh = self._flat_backward(cache, dlogits, grads)
        else:
            dh = self._hier_backward(cache, dlogits, grads)
        if "drop_mask" in cache:
            dh = dh * cache["drop_mask"]
        if "M" in cache:
            dM, grads["proj.W"], grads["proj.b"] = dense_backward(
                self.params["proj.W"], cache["M"], dh
            )
            demb = grads["emb"]
            for b, ids in enumerate(cache["ids_list"]):
                if ids:
                    np.add.at(demb, ids, dM[b] / len(ids))
            demb[PAD_ROW] = 0.0  # padding row stays frozen
        return grads

    def _flat_backward(self, cache, dlogits, grads):
        da1, grads["fc2.W"], grads["fc2.b"] = dense_backward(
            self.params["fc2.W"], cache["a1"], dlogits
        )
        dpre1 = da1 * relu_grad(cache["pre1"])
        dh, grads["fc1.W"], grads["fc1.b"] = dense_backward(
            self.params["fc1.W"], cache["h"], dpre1
        )
        return dh

    def _hier_backward(self, cache, dlogits, grads):
        C = self.n_classes
        h = cache["h"]
        dh = np.zeros_like(h)
        # dz from each class's own output layer first.
        dz_own = []
        for i in range(C):
            dlog_i = dlogits[:, i:i + 1]
            dz_i, grads[f"out{i}.W"], grads[f"out{i}.b"] = dense_backward(
                self.params[f"out{i}.W"], cache["zs"][i], dlog_i
            )
            dz_own.append(dz_i)
        if self.cfg.hier_wiring == "cumulative":
            # z_c = u_c + z_parent: children push their dz up the chain.
            dz_total = [d.copy() for d in dz_own]
            for i in reversed(range(C)):
                p = self.parent_index[i]
                if p is not None:
                    dz_total[p] += dz_total[i]
            du = dz_total
        else:
            # z_c = u_c + u_parent: children contribute to the parent's u.
            du = [d.copy() for d in dz_own]
            for i in reversed(range(C)):
                p = self.parent_index[i]
                if p is not None:
                    du[p] += dz_own[i]
        for i in range(C):
            dpre = du[i] * relu_grad(cache["pres"][i])
            dh_i, grads[f"head{i}.W"], grads[f"head{i}.b"] = dense_backward(
                self.params[f"head{i}.W"], h, dpre
            )
            dh += dh_i
        return dh

    # --- attribution support ----------------------------------------------

    def output_and_input_grad(
        self,
        emb_rows: np.ndarray,
        class_index: int,
        use_logits: bool = False,
    ) -> tuple[float, np.ndarray]:
        """Target output for one document given explicit embedding rows,
        and its gradient w.r.t. those rows.

        Used by integrated gradients; the mean pool is differentiated
        directly so the gradient lands on the (N, embed_dim) input.
        """
        if not self.has_encoder:
            raise ConfigError("input gradients need the trainable encoder")
        n = emb_rows.shape[0]
        M = emb_rows.mean(axis=0, keepdims=True) if n else np.zeros(
            (1, self.cfg.embed_dim), dtype=emb_rows.dtype
        )
        cache: dict = {}
        h = dense_forward(self.params["proj.W"], self.params["proj.b"], M)
        cache["h"] = h
        if self.cfg.kind == "flat":
            y = self._flat_forward(h, cache)
        else:
            y = self._hier_forward(h, cache)
        cache["y"] = y
        value = cache["logits"][0, class_index] if use_logits else y[0, class_index]
        seed = np.zeros_like(y)
        seed[0, class_index] = 1.0
        if use_logits:
            dlogits = seed
        else:
            dlogits = seed * y * (1.0 - y)
        grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        if self.cfg.kind == "flat":
            dh = self._flat_backward(cache, dlogits, grads)
        else:
            dh = self._hier_backward(cache, dlogits, grads)
        dM = dh @ self.params["proj.W"]
        if n == 0:
            return float(value), np.zeros_like(emb_rows)
        dX = np.repeat(dM / n, n, axis=0)
        return float(value), dX
