"""Hierarchical precision/recall/F1, AUPRC, accuracy, and PR sweeps.

For each instance, the predicted and true class sets are extended with
all their ancestors before scoring, so partially correct predictions
along the right branch still earn credit:

    micro hP = sum_i |Y_i & L_i| / sum_i |Y_i|
    micro hR = sum_i |Y_i & L_i| / sum_i |L_i|
    hF1      = 2 * hP * hR / (hP + hR)

Macro scores compute the per-class micro scores (single-class scopes)
and average them unweighted. Zero denominators contribute 0. A scope
restricts which classes count as predictions/truths, but ancestors
added by the extension are counted even when they fall outside it.

Scopes: the whole hierarchy, a cumulative level (all classes at depth
<= L), or a single class.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from patclass.taxonomy import Taxonomy


@dataclass(frozen=True)
class EvalScope:
    name: str
    classes: tuple[str, ...]


def whole_scope(taxonomy: Taxonomy) -> EvalScope:
    return EvalScope("whole", taxonomy.codes)


def level_scope(taxonomy: Taxonomy, level: int) -> EvalScope:
    """Cumulative scope: every class with depth <= `level`."""
    return EvalScope(f"level-{level}", taxonomy.classes_at_or_above(level))


def class_scope(code: str) -> EvalScope:
    return EvalScope(code, (code,))


def instance_sets(
    taxonomy: Taxonomy,
    scope: EvalScope,
    pred_bits: np.ndarray,
    true_bits: np.ndarray,
) -> tuple[frozenset[str], frozenset[str]]:
    """Ancestor-extended predicted and true label sets for one instance."""
    return (
        _extended(taxonomy, scope, pred_bits),
        _extended(taxonomy, scope, true_bits),
    )


def _extended(taxonomy: Taxonomy, scope: EvalScope, bits: np.ndarray) -> frozenset[str]:
    out: set[str] = set()
    for code in scope.classes:
        if bits[taxonomy.index(code)]:
            out.add(code)
            out.update(taxonomy.ancestors(code))
    return frozenset(out)


def _micro_sums(taxonomy, scope, preds, truths) -> tuple[int, int, int]:
    inter = pred_total = true_total = 0
    for pred_bits, true_bits in zip(preds, truths):
        y_set, l_set = instance_sets(taxonomy, scope, pred_bits, true_bits)
        inter += len(y_set & l_set)
        pred_total += len(y_set)
        true_total += len(l_set)
    return inter, pred_total, true_total


def _prf(inter: float, pred_total: float, true_total: float) -> tuple[float, float, float]:
    p = inter / pred_total if pred_total > 0 else 0.0
    r = inter / true_total if true_total > 0 else 0.0
    f1 = 2.0 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


def hierarchical_scores(
    taxonomy: Taxonomy,
    scope: EvalScope,
    preds: np.ndarray,
    truths: np.ndarray,
    averaging: str = "micro",
) -> tuple[float, float, float]:
    """(hP, hR, hF1) over equal-length lists of 0/1 label vectors."""
    preds = np.atleast_2d(np.asarray(preds))
    truths = np.atleast_2d(np.asarray(truths))
    if preds.shape != truths.shape:
        raise ValueError("predictions and truths must have the same shape")
    if preds.shape[0] == 0:
        raise ValueError("cannot score an empty instance list")
    if averaging == "micro":
        return _prf(*_micro_sums(taxonomy, scope, preds, truths))
    if averaging == "macro":
        per_class = [
            _prf(*_micro_sums(taxonomy, class_scope(code), preds, truths))
            for code in scope.classes
        ]
        n = len(per_class)
        return (
            sum(p for p, _, _ in per_class) / n,
            sum(r for _, r, _ in per_class) / n,
            sum(f for _, _, f in per_class) / n,
        )
    raise ValueError(f"unknown averaging {averaging!r}")


def subset_accuracy(
    taxonomy: Taxonomy,
    scope: EvalScope,
    preds: np.ndarray,
    truths: np.ndarray,
) -> float:
    """Fraction of instances predicted exactly right on every scope class."""
    preds = np.atleast_2d(np.asarray(preds))
    truths = np.atleast_2d(np.asarray(truths))
    cols = [taxonomy.index(code) for code in scope.classes]
    match = (preds[:, cols] == truths[:, cols]).all(axis=1)
    return float(match.mean())


def auprc(
    taxonomy: Taxonomy,
    scope: EvalScope,
    probs: np.ndarray,
    truths: np.ndarray,
) -> float | None:
    """Average precision over flattened (instance, scope class) pairs.

    Processed in descending score order; tied scores enter as one group
    using the precision at the end of the group. Returns None when the
    scope contains no positive truth (the metric is undefined there).
    """
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    truths = np.atleast_2d(np.asarray(truths))
    cols = [taxonomy.index(code) for code in scope.classes]
    scores = probs[:, cols].ravel()
    ys = truths[:, cols].ravel().astype(np.int64)
    total_pos = int(ys.sum())
    if total_pos == 0:
        return None
    order = np.argsort(-scores, kind="stable")
    scores = scores[order]
    ys = ys[order]
    ap = 0.0
    tp = 0
    seen = 0
    recall_prev = 0.0
    i = 0
    n = len(scores)
    while i < n:
        j = i
        while j < n and scores[j] == scores[i]:
            j += 1
        tp += int(ys[i:j].sum())
        seen += j - i
        recall = tp / total_pos
        precision = tp / seen
        ap += (recall - recall_prev) * precision
        recall_prev = recall
        i = j
    return ap


def pr_sweep(
    taxonomy: Taxonomy,
    scope: EvalScope,
    probs: np.ndarray,
    truths: np.ndarray,
    thresholds: list[float] | None = None,
) -> list[tuple[float, float, float]]:
    """(threshold, micro hP, micro hR) rows, default grid 0.00..1.00."""
    if thresholds is None:
        thresholds = [round(i / 100.0, 2) for i in range(101)]
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    truths = np.atleast_2d(np.asarray(truths))
    rows = []
    for thr in thresholds:
        preds = (probs >= thr).astype(np.int8)
        p, r, _ = hierarchical_scores(taxonomy, scope, preds, truths, "micro")
        rows.append((thr, p, r))
    return rows


@dataclass
class ScopeMetrics:
    scope: str
    macro_p: float
    macro_r: float
    macro_f1: float
    micro_p: float
    micro_r: float
    micro_f1: float
    auprc: float | None
    accuracy: float


@dataclass
class EvalReport:
    rows: list[ScopeMetrics]

    def format_text(self) -> str:
        header = (
            f"{'Scope':<12} {'m-hP':>8} {'m-hR':>8} {'m-hF1':>8} "
            f"{'u-hP':>8} {'u-hR':>8} {'u-hF1':>8} {'AUPRC':>8} {'Acc':>8}"
        )
        lines = [
            "macro-avg (m-) / micro-avg (u-) hierarchical scores",
            header,
            "-" * len(header),
        ]
        for row in self.rows:
            auprc_text = "n/a" if row.auprc is None else f"{row.auprc:.4f}"
            lines.append(
                f"{row.scope:<12} {row.macro_p:>8.4f} {row.macro_r:>8.4f} "
                f"{row.macro_f1:>8.4f} {row.micro_p:>8.4f} {row.micro_r:>8.4f} "
                f"{row.micro_f1:>8.4f} {auprc_text:>8} {row.accuracy:>8.4f}"
            )
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps(
            [row.__dict__ for row in self.rows], indent=2, sort_keys=True
        )

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        return cls([ScopeMetrics(**row) for row in json.loads(text)])


def default_scopes(taxonomy: Taxonomy) -> list[EvalScope]:
    """Whole hierarchy, every cumulative level, then every class."""
    scopes = [whole_scope(taxonomy)]
    scopes.extend(
        level_scope(taxonomy, lvl) for lvl in range(1, taxonomy.max_level() + 1)
    )
    scopes.extend(class_scope(code) for code in taxonomy.codes)
    return scopes


def evaluate_report(
    taxonomy: Taxonomy,
    probs: np.ndarray,
    truths: np.ndarray,
    threshold: float = 0.5,
    scopes: list[EvalScope] | None = None,
) -> EvalReport:
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    truths = np.atleast_2d(np.asarray(truths))
    preds = (probs >= threshold).astype(np.int8)
    rows = []
    for scope in scopes if scopes is not None else default_scopes(taxonomy):
        map_, mar, maf = hierarchical_scores(taxonomy, scope, preds, truths, "macro")
        mip, mir, mif = hierarchical_scores(taxonomy, scope, preds, truths, "micro")
        rows.append(
            ScopeMetrics(
                scope=scope.name,
                macro_p=map_,
                macro_r=mar,
                macro_f1=maf,
                micro_p=mip,
                micro_r=mir,
                micro_f1=mif,
                auprc=auprc(taxonomy, scope, probs, truths),
                accuracy=subset_accuracy(taxonomy, scope, preds, truths),
            )
        )
    return EvalReport(rows)
