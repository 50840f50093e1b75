"""Proximity keyword query language: lexer, parser, evaluator.

Grammar (tokens separated by whitespace or parentheses):

    orExpr   := proxExpr ("or" proxExpr)*
    proxExpr := atom (DIST atom)*
    atom     := TERM | "(" orExpr ")"
    DIST     := <non-negative int> immediately followed by "d", e.g. "4d"

Proximity chains are left-associative and bind tighter than "or".
A '+' inside a term matches any run of characters, possibly empty;
term matching is anchored at both ends of the token. "w1 Nd w2" matches
when at most N tokens lie strictly between an occurrence of w1 and one
of w2, in either order. Distances are measured on the preprocessed,
stopword-filtered token stream.

Match counting uses leftmost-greedy selection of non-overlapping spans,
so the count is deterministic; with the default presence threshold
(k = 1) only existence matters and it agrees with exhaustive witness
enumeration.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

from patclass.errors import QueryParseError


@dataclass(frozen=True)
class Term:
    pattern: str


@dataclass(frozen=True)
class Prox:
    n: int
    left: "QueryAst"
    right: "QueryAst"


@dataclass(frozen=True)
class Or:
    alternatives: tuple["QueryAst", ...]


QueryAst = Union[Term, Prox, Or]


@dataclass(frozen=True)
class MatchSpan:
    start: int
    end: int  # inclusive
    witnesses: frozenset[int]


@dataclass(frozen=True)
class MatchResult:
    count: int
    spans: tuple[MatchSpan, ...]


# --- lexer ----------------------------------------------------------------

_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")
_DIST_RE = re.compile(r"\d+d")
_NEG_DIST_RE = re.compile(r"-\d+d")


def _lex(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    for m in _TOKEN_RE.finditer(text):
        tok, pos = m.group(), m.start()
        if tok == "(":
            tokens.append(("LPAREN", tok, pos))
        elif tok == ")":
            tokens.append(("RPAREN", tok, pos))
        elif tok == "or":
            tokens.append(("OR", tok, pos))
        elif _DIST_RE.fullmatch(tok):
            tokens.append(("DIST", tok, pos))
        elif _NEG_DIST_RE.fullmatch(tok):
            raise QueryParseError(f"negative distance {tok!r} at position {pos}")
        else:
            tokens.append(("TERM", tok, pos))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _lex(text)
        self.pos = 0

    def peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> tuple[str, str, int]:
        tok = self.peek()
        if tok is None:
            raise QueryParseError(
                f"unexpected end of query at position {len(self.text)}"
            )
        self.pos += 1
        return tok

    def fail(self, expected: str) -> None:
        tok = self.peek()
        if tok is None:
            raise QueryParseError(
                f"expected {expected} but query ended at position {len(self.text)}"
            )
        raise QueryParseError(
            f"expected {expected} but found {tok[1]!r} at position {tok[2]}"
        )

    def or_expr(self) -> QueryAst:
        alts = [self.prox_expr()]
        while True:
            tok = self.peek()
            if tok is not None and tok[0] == "OR":
                self.next()
                alts.append(self.prox_expr())
            else:
                break
        return alts[0] if len(alts) == 1 else Or(tuple(alts))

    def prox_expr(self) -> QueryAst:
        node = self.atom()
        while True:
            tok = self.peek()
            if tok is not None and tok[0] == "DIST":
                self.next()
                n = int(tok[1][:-1])
                node = Prox(n, node, self.atom())
            elif tok is not None and tok[0] == "TERM":
                raise QueryParseError(
                    f"missing distance before {tok[1]!r} at position {tok[2]}"
                )
            else:
                break
        return node

    def atom(self) -> QueryAst:
        tok = self.peek()
        if tok is None:
            self.fail("a term or '('")
        kind, text, pos = tok
        if kind == "TERM":
            self.next()
            if not text.replace("+", ""):
                raise QueryParseError(
                    f"term {text!r} at position {pos} needs at least one "
                    "literal character"
                )
            return Term(text)
        if kind == "LPAREN":
            self.next()
            inner = self.or_expr()
            closing = self.peek()
            if closing is None or closing[0] != "RPAREN":
                raise QueryParseError(f"unbalanced '(' opened at position {pos}")
            self.next()
            return inner
        self.fail("a term or '('")


def parse_query(text: str) -> QueryAst:
    """Parse query text into an AST; raises QueryParseError with position."""
    parser = _Parser(text)
    if parser.peek() is None:
        raise QueryParseError("empty query")
    ast = parser.or_expr()
    trailing = parser.peek()
    if trailing is not None:
        raise QueryParseError(
            f"unexpected {trailing[1]!r} at position {trailing[2]}"
        )
    return ast


def format_query(ast: QueryAst) -> str:
    """Canonical text form; parse(format_query(a)) == a."""
    if isinstance(ast, Term):
        return ast.pattern
    if isinstance(ast, Prox):
        # A left Prox re-associates identically without parentheses.
        left = format_query(ast.left)
        if isinstance(ast.left, Or):
            left = f"({left})"
        right = format_query(ast.right)
        if not isinstance(ast.right, Term):
            right = f"({right})"
        return f"{left} {ast.n}d {right}"
    parts = []
    for alt in ast.alternatives:
        text = format_query(alt)
        parts.append(f"({text})" if isinstance(alt, Or) else text)
    return " or ".join(parts)


# --- evaluation -----------------------------------------------------------


@lru_cache(maxsize=8192)
def _compiled(pattern: str) -> re.Pattern:
    return re.compile(".*".join(re.escape(p) for p in pattern.split("+")))


def term_matches(pattern: str, token: str) -> bool:
    """Whole-token wildcard match; '+' matches any (possibly empty) run."""
    return _compiled(pattern).fullmatch(token) is not None


def _gap(a: tuple[int, int], b: tuple[int, int]) -> int:
    """Tokens strictly between two spans; 0 when adjacent or overlapping."""
    return max(0, max(a[0], b[0]) - min(a[1], b[1]) - 1)


def _candidates(ast: QueryAst, tokens: Sequence[str]) -> dict[tuple[int, int], frozenset[int]]:
    """All candidate spans keyed by (start, end), without overlap pruning.

    Pruning happens only at the top level; composing from the full
    candidate sets keeps presence semantics exact for nested queries.
    """
    if isinstance(ast, Term):
        return {
            (i, i): frozenset((i,))
            for i, tok in enumerate(tokens)
            if term_matches(ast.pattern, tok)
        }
    if isinstance(ast, Or):
        merged: dict[tuple[int, int], frozenset[int]] = {}
        for alt in ast.alternatives:
            for span, wit in _candidates(alt, tokens).items():
                merged.setdefault(span, wit)
        return merged
    left = _candidates(ast.left, tokens)
    right = _candidates(ast.right, tokens)
    out: dict[tuple[int, int], frozenset[int]] = {}
    for a, wa in left.items():
        for b, wb in right.items():
            if _gap(a, b) <= ast.n:
                hull = (min(a[0], b[0]), max(a[1], b[1]))
                out.setdefault(hull, wa | wb)
    return out


def _greedy(cands: dict[tuple[int, int], frozenset[int]], limit: int | None = None):
    last_end = -1
    for (start, end) in sorted(cands):
        if start > last_end:
            yield MatchSpan(start, end, cands[(start, end)])
            last_end = end
            if limit is not None and limit <= 1:
                return
            if limit is not None:
                limit -= 1


def evaluate(ast: QueryAst, tokens: Sequence[str]) -> MatchResult:
    """Match a query against a token sequence.

    Returns the leftmost-greedy non-overlapping selection of candidate
    spans (sorted by start, then end) and its cardinality as the count.
    """
    spans = tuple(_greedy(_candidates(ast, tokens)))
    return MatchResult(len(spans), spans)


def count_at_least(ast: QueryAst, tokens: Sequence[str], k: int) -> bool:
    """True iff the query matches at least k times; short-circuits at k."""
    if k < 1:
        raise ValueError(f"threshold k must be >= 1, got {k}")
    found = 0
    for _ in _greedy(_candidates(ast, tokens), limit=k):
        found += 1
        if found >= k:
            return True
    return False
