"""Hierarchical classification scheme and label vectors.

A taxonomy is a forest of class codes loaded from a YAML config. The
declaration order of the config defines the position of every class in
label vectors, so datasets built from the same config are bit-exact
reproducible. Parents must be declared before their children.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable

import numpy as np
import yaml

from patclass.errors import TaxonomyError

DEFAULT_SCHEME = "green_plastics.yaml"


@dataclass(frozen=True)
class ClassNode:
    """One class of the scheme. Root nodes have no parent and level 1."""

    code: str
    definition: str = ""
    parent: str | None = None
    query: str | None = None
    level: int = 1


class Taxonomy:
    """Immutable class tree with a fixed label-vector ordering."""

    def __init__(self, nodes: Iterable[ClassNode]):
        nodes = list(nodes)
        if not nodes:
            raise TaxonomyError("taxonomy has no classes")
        index: dict[str, int] = {}
        resolved: list[ClassNode] = []
        for node in nodes:
            if node.code in index:
                raise TaxonomyError(f"duplicate class code {node.code!r}")
            if node.parent is not None:
                if node.parent not in index:
                    raise TaxonomyError(
                        f"class {node.code!r} references parent {node.parent!r} "
                        "which is not declared before it"
                    )
                level = resolved[index[node.parent]].level + 1
            else:
                level = 1
            index[node.code] = len(resolved)
            resolved.append(
                ClassNode(node.code, node.definition, node.parent, node.query, level)
            )
        self._nodes = tuple(resolved)
        self._index = index
        self.codes = tuple(n.code for n in resolved)
        self._ancestors: dict[str, tuple[str, ...]] = {}
        for node in resolved:
            chain = []
            cur = node.parent
            while cur is not None:
                chain.append(cur)
                cur = resolved[index[cur]].parent
            self._ancestors[node.code] = tuple(chain)

    def __len__(self) -> int:
        return len(self._nodes)

    def __iter__(self):
        return iter(self._nodes)

    def __contains__(self, code: str) -> bool:
        return code in self._index

    @property
    def nodes(self) -> tuple[ClassNode, ...]:
        return self._nodes

    def index(self, code: str) -> int:
        try:
            return self._index[code]
        except KeyError:
            raise TaxonomyError(f"unknown class code {code!r}") from None

    def node(self, code: str) -> ClassNode:
        return self._nodes[self.index(code)]

    def level(self, code: str) -> int:
        return self.node(code).level

    def parent(self, code: str) -> str | None:
        return self.node(code).parent

    def ancestors(self, code: str) -> list[str]:
        """Strict ancestors of `code`, nearest first. Roots give []."""
        self.index(code)
        return list(self._ancestors[code])

    def max_level(self) -> int:
        return max(n.level for n in self._nodes)

    def classes_at_or_above(self, level: int) -> tuple[str, ...]:
        """Codes with level <= `level`, in label-vector order."""
        return tuple(n.code for n in self._nodes if n.level <= level)


def propagate(taxonomy: Taxonomy, direct: Iterable[str]) -> np.ndarray:
    """Ancestor closure of a set of directly assigned classes.

    Returns the 0/1 label vector with a bit set for every code in
    `direct` and for all of its ancestors. Idempotent.
    """
    bits = np.zeros(len(taxonomy), dtype=np.int8)
    for code in direct:
        bits[taxonomy.index(code)] = 1
        for anc in taxonomy.ancestors(code):
            bits[taxonomy.index(anc)] = 1
    return bits


def classes_of(taxonomy: Taxonomy, bits: np.ndarray) -> list[str]:
    """Codes whose bit is set, in label-vector order."""
    return [taxonomy.codes[i] for i in range(len(taxonomy)) if bits[i]]


def is_consistent(taxonomy: Taxonomy, bits: np.ndarray) -> bool:
    """True iff every set bit's parent bit is also set."""
    for i, node in enumerate(taxonomy.nodes):
        if bits[i] and node.parent is not None:
            if not bits[taxonomy.index(node.parent)]:
                return False
    return True


def load_taxonomy(text: str) -> Taxonomy:
    """Parse a taxonomy config from YAML text.

    Schema: a mapping with optional `version` (must be 1) and `classes`,
    a list of {code, definition?, parent?, query?} entries.
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise TaxonomyError(f"invalid taxonomy config: {exc}") from exc
    if not isinstance(data, dict) or "classes" not in data:
        raise TaxonomyError("taxonomy config must be a mapping with a 'classes' list")
    version = data.get("version", 1)
    if version != 1:
        raise TaxonomyError(f"unsupported taxonomy config version {version!r}")
    entries = data["classes"]
    if not isinstance(entries, list) or not entries:
        raise TaxonomyError("taxonomy config declares no classes")
    nodes = []
    for pos, entry in enumerate(entries):
        if not isinstance(entry, dict) or "code" not in entry:
            raise TaxonomyError(f"class entry #{pos + 1} is missing a 'code'")
        unknown = set(entry) - {"code", "definition", "parent", "query"}
        if unknown:
            raise TaxonomyError(
                f"class entry {entry['code']!r} has unknown keys {sorted(unknown)}"
            )
        nodes.append(
            ClassNode(
                code=str(entry["code"]),
                definition=str(entry.get("definition", "")),
                parent=None if entry.get("parent") is None else str(entry["parent"]),
                query=None if entry.get("query") is None else str(entry["query"]),
            )
        )
    return Taxonomy(nodes)


def load_taxonomy_file(path: str) -> Taxonomy:
    try:
        with open(path, encoding="utf-8") as fh:
            return load_taxonomy(fh.read())
    except OSError as exc:
        raise TaxonomyError(f"cannot read taxonomy file {path}: {exc}") from exc


@lru_cache(maxsize=1)
def default_taxonomy() -> Taxonomy:
    """The bundled green-plastics scheme (9 classes, 4 levels)."""
    text = resources.files("patclass.data").joinpath(DEFAULT_SCHEME).read_text("utf-8")
    return load_taxonomy(text)
