"""Independent oracles and generators shared by the test modules.

Everything here deliberately reimplements behavior from first
principles (recursive wildcard matching, exhaustive span enumeration,
fixpoint closure, explicit set-based metric sums, finite differences)
so the tests never share a code path with what they check.
"""

import random

import numpy as np

from patclass.nn.train import batch_loss_and_grads
from patclass.query import Or, Prox, Term

# --- wildcard oracle ---------------------------------------------------------


def wildcard_match_oracle(pattern, token):
    """Recursive '+'-as-any-run matcher, anchored at both ends."""
    if not pattern:
        return not token
    if pattern[0] == "+":
        return any(
            wildcard_match_oracle(pattern[1:], token[i:])
            for i in range(len(token) + 1)
        )
    return bool(token) and pattern[0] == token[0] and wildcard_match_oracle(
        pattern[1:], token[1:]
    )


# --- query span oracle ------------------------------------------------------


def span_gap(a, b):
    return max(0, max(a[0], b[0]) - min(a[1], b[1]) - 1)


def oracle_candidates(ast, tokens):
    """Every witness combination's span, enumerated exhaustively."""
    if isinstance(ast, Term):
        return {
            (i, i)
            for i, tok in enumerate(tokens)
            if wildcard_match_oracle(ast.pattern, tok)
        }
    if isinstance(ast, Or):
        out = set()
        for alt in ast.alternatives:
            out |= oracle_candidates(alt, tokens)
        return out
    left = oracle_candidates(ast.left, tokens)
    right = oracle_candidates(ast.right, tokens)
    return {
        (min(a[0], b[0]), max(a[1], b[1]))
        for a in left
        for b in right
        if span_gap(a, b) <= ast.n
    }


def oracle_max_nonoverlapping(spans):
    """Maximum-cardinality non-overlapping subset (end-sorted greedy,
    which is optimal for interval scheduling)."""
    count = 0
    last_end = -1
    for start, end in sorted(spans, key=lambda s: (s[1], s[0])):
        if start > last_end:
            count += 1
            last_end = end
    return count


def oracle_presence(ast, tokens):
    return bool(oracle_candidates(ast, tokens))


# --- random query/document generators ----------------------------------------

_TERM_ALPHABET = "abc+"
_DOC_VOCAB = ["a", "b", "c", "ab", "ba", "abc", "ca", "cb", "aa", "bb", "cc", "bca"]


def random_term(rng: random.Random) -> Term:
    while True:
        length = rng.randint(1, 4)
        pattern = "".join(rng.choice(_TERM_ALPHABET) for _ in range(length))
        if pattern.replace("+", ""):
            return Term(pattern)


def random_ast(rng: random.Random, depth: int):
    if depth <= 0 or rng.random() < 0.35:
        return random_term(rng)
    if rng.random() < 0.5:
        return Prox(rng.randint(0, 5), random_ast(rng, depth - 1), random_ast(rng, depth - 1))
    n_alts = rng.randint(2, 3)
    return Or(tuple(random_ast(rng, depth - 1) for _ in range(n_alts)))


def random_document(rng: random.Random, max_tokens: int = 40):
    return [rng.choice(_DOC_VOCAB) for _ in range(rng.randint(0, max_tokens))]


# --- taxonomy closure oracle --------------------------------------------------

# Parent edges of the bundled scheme, written out by hand so the oracle
# does not depend on the config loader.
DEFAULT_PARENTS = {
    "Y02G": None,
    "Y02G10/00": "Y02G",
    "Y02G10/10": "Y02G10/00",
    "Y02G10/20": "Y02G10/00",
    "Y02G10/22": "Y02G10/20",
    "Y02G10/24": "Y02G10/20",
    "Y02G20/00": "Y02G",
    "Y02G20/10": "Y02G20/00",
    "Y02G20/20": "Y02G20/00",
}
DEFAULT_ORDER = [
    "Y02G",
    "Y02G10/00",
    "Y02G10/10",
    "Y02G10/20",
    "Y02G10/22",
    "Y02G10/24",
    "Y02G20/00",
    "Y02G20/10",
    "Y02G20/20",
]


def closure_oracle(direct, parents=DEFAULT_PARENTS):
    """Fixpoint transitive closure over the parent relation."""
    closed = set(direct)
    changed = True
    while changed:
        changed = False
        for code in list(closed):
            parent = parents[code]
            if parent is not None and parent not in closed:
                closed.add(parent)
                changed = True
    return closed


# --- metrics oracle ------------------------------------------------------------


def ancestors_oracle(code, parents=DEFAULT_PARENTS):
    out = []
    cur = parents[code]
    while cur is not None:
        out.append(cur)
        cur = parents[cur]
    return out


def micro_scores_oracle(scope_codes, preds, truths, order=DEFAULT_ORDER):
    """Micro hP/hR/hF1 from explicitly materialized extended sets."""
    inter = total_pred = total_true = 0
    for pred_bits, true_bits in zip(preds, truths):
        y_set, l_set = set(), set()
        for code in scope_codes:
            i = order.index(code)
            if pred_bits[i]:
                y_set |= {code, *ancestors_oracle(code)}
            if true_bits[i]:
                l_set |= {code, *ancestors_oracle(code)}
        inter += len(y_set & l_set)
        total_pred += len(y_set)
        total_true += len(l_set)
    p = inter / total_pred if total_pred else 0.0
    r = inter / total_true if total_true else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


# --- finite differences ---------------------------------------------------------


def fd_gradients(model, xs, labels, loss_cfg, step=1e-5, keys=None):
    """Central finite differences of the batch loss for every parameter."""
    grads = {}
    for key in keys if keys is not None else model.params:
        arr = model.params[key]
        grad = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            ix = it.multi_index
            orig = arr[ix]
            arr[ix] = orig + step
            lp, _ = batch_loss_and_grads(model, xs, labels, loss_cfg)
            arr[ix] = orig - step
            lm, _ = batch_loss_and_grads(model, xs, labels, loss_cfg)
            arr[ix] = orig
            grad[ix] = (lp - lm) / (2.0 * step)
        grads[key] = grad
    return grads


def max_rel_error(analytic, numeric, floor=1e-8):
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))
