"""Finite sequential procedures: AST, text grammar, printer and generators.

Grammar (whitespace-insensitive)::

    file   := header ';' proc
    header := 'n=' NUM [',k=' NUM]
    proc   := 'bot' | NUM | 'case' 'x' NUM '(' proc ')' '{' [branch (',' branch)*] '}'
    branch := NUM '=>' proc

Absent branch labels mean the bottom continuation.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional

from .flatdomain import NatBot, show


class Proc:
    """Base class; see :class:`Const` and :class:`Case`."""

    # _el, _wt and _lb cache eval_length, weight and left_bound per node
    __slots__ = ("_hash", "_el", "_wt", "_lb")

    def variables(self) -> set:
        raise NotImplementedError


class Const(Proc):
    __slots__ = ("value",)

    def __init__(self, value: NatBot):
        if value is not None and (not isinstance(value, int) or value < 0):
            raise ValueError(f"bad constant {value!r}")
        self.value = value
        self._hash = hash(("const", value))
        self._el = self._wt = self._lb = None

    def __eq__(self, other):
        return isinstance(other, Const) and other.value == self.value

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Const({self.value!r})"

    def __str__(self):
        return pretty(self)

    def variables(self) -> set:
        return set()


class Case(Proc):
    """``case x_var(query) of {a => branch_a}``; ``branches`` is a tuple of
    ``(label, Proc)`` pairs sorted by label."""

    __slots__ = ("var", "query", "branches", "_size")

    def __init__(self, var: int, query: Proc, branches=()):
        if not isinstance(branches, (tuple, list)) and isinstance(branches, Mapping):
            branches = branches.items()
        branches = tuple(sorted(branches, key=_label))
        size = 1 + _size(query)
        prev = -1
        for a, p in branches:
            if not isinstance(a, int) or a < 0:
                raise ValueError(f"branch labels must be naturals, got {[b for b, _ in branches]}")
            if a == prev:
                raise ValueError(f"duplicate branch label in {[b for b, _ in branches]}")
            prev = a
            size += _size(p)
        if not isinstance(var, int) or var < 1:
            raise ValueError(f"variable index must be >= 1, got {var!r}")
        self.var = var
        self.query = query
        self.branches = branches
        self._hash = hash(("case", var, query, branches))
        self._size = size
        self._el = self._wt = self._lb = None

    def __eq__(self, other):
        if self is other:
            return True
        return (
            isinstance(other, Case)
            and self._hash == other._hash
            and self.var == other.var
            and self.query == other.query
            and self.branches == other.branches
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Case({self.var}, {self.query!r}, {dict(self.branches)!r})"

    def __str__(self):
        return pretty(self)

    def branch(self, a: int) -> Optional[Proc]:
        for label, p in self.branches:
            if label == a:
                return p
        return None

    @property
    def branch_map(self) -> dict:
        return dict(self.branches)

    def variables(self) -> set:
        out = {self.var} | self.query.variables()
        for _, p in self.branches:
            out |= p.variables()
        return out


def _size(p: Proc) -> int:
    return p._size if isinstance(p, Case) else 0


def _label(kv) -> int:
    return kv[0]


def case_count(p: Proc) -> int:
    """Number of case nodes in ``p``."""
    return _size(p)


BOTTOM = Const(None)


def numerals(p: Proc) -> set:
    """All constants and branch labels occurring in ``p`` (excluding bot)."""
    if isinstance(p, Const):
        return set() if p.value is None else {p.value}
    out = numerals(p.query) | {a for a, _ in p.branches}
    for _, q in p.branches:
        out |= numerals(q)
    return out


def max_var(p: Proc) -> int:
    return max(p.variables(), default=0)


def canonical(p: Proc) -> Proc:
    """Drop explicit bottom branches everywhere (semantically neutral)."""
    if isinstance(p, Const):
        return p
    branches = []
    for a, q in p.branches:
        q = canonical(q)
        if q != BOTTOM:
            branches.append((a, q))
    return Case(p.var, canonical(p.query), branches)


@dataclass(frozen=True)
class ProcHeader:
    arity: int
    cap: Optional[int] = None

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError("arity must be >= 1")

    def __str__(self):
        return f"n={self.arity}" + ("" if self.cap is None else f",k={self.cap}")


# -- printing ----------------------------------------------------------------


def pretty(p: Proc, canonical_form: bool = False) -> str:
    """Render ``p`` in the concrete grammar, branches ascending.

    With ``canonical_form`` explicit bottom branches are dropped."""
    if canonical_form:
        p = canonical(p)
    out = []
    _emit(p, out)
    return "".join(out)


def _emit(p: Proc, out: list) -> None:
    if isinstance(p, Const):
        out.append(show(p.value))
        return
    out.append(f"case x{p.var}(")
    _emit(p.query, out)
    out.append("){")
    for j, (a, q) in enumerate(p.branches):
        if j:
            out.append(", ")
        out.append(f"{a} => ")
        _emit(q, out)
    out.append("}")


def pretty_file(header: ProcHeader, p: Proc) -> str:
    return f"{header}; {pretty(p)}"


# -- parsing -----------------------------------------------------------------


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.message = message


_TOKEN_RE = re.compile(r"\s*(?:(\d+)|(=>)|([A-Za-z_]\w*)|([=;,(){}]))")


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.toks = []
        pos = 0
        while True:
            m = _TOKEN_RE.match(text, pos)
            if not m:
                rest = text[pos:]
                if rest.strip():
                    off = pos + len(rest) - len(rest.lstrip())
                    raise ParseError(f"unexpected character {text[off]!r}", *self.where(off))
                break
            start = m.start(m.lastindex)
            self.toks.append((m.group(m.lastindex), start, m.lastindex))
            pos = m.end()
        self.i = 0

    def where(self, offset: int) -> tuple:
        line = self.text.count("\n", 0, offset) + 1
        col = offset - (self.text.rfind("\n", 0, offset) + 1) + 1
        return line, col

    def peek(self) -> Optional[str]:
        return self.toks[self.i][0] if self.i < len(self.toks) else None

    def here(self) -> tuple:
        if self.i < len(self.toks):
            return self.where(self.toks[self.i][1])
        return self.where(len(self.text))

    def fail(self, msg: str):
        raise ParseError(msg, *self.here())

    def next(self) -> str:
        if self.i >= len(self.toks):
            self.fail("unexpected end of input")
        tok = self.toks[self.i][0]
        self.i += 1
        return tok

    def expect(self, tok: str) -> None:
        got = self.peek()
        if got != tok:
            self.fail(f"expected {tok!r}, got {got!r}" if got else f"expected {tok!r} at end of input")
        self.i += 1

    def number(self) -> int:
        tok = self.peek()
        if tok is None or not tok.isdigit():
            self.fail(f"expected a number, got {tok!r}")
        self.i += 1
        return int(tok)


def _parse_proc(ts: _Tokens, arity: int) -> Proc:
    tok = ts.peek()
    if tok == "bot":
        ts.next()
        return BOTTOM
    if tok is not None and tok.isdigit():
        return Const(ts.number())
    if tok != "case":
        ts.fail(f"expected a procedure, got {tok!r}")
    ts.next()
    var_pos = ts.here()
    name = ts.next()
    m = re.fullmatch(r"x(\d+)", name)
    if not m:
        raise ParseError(f"expected a variable x<i>, got {name!r}", *var_pos)
    var = int(m.group(1))
    if not 1 <= var <= arity:
        raise ParseError(f"variable x{var} outside 1..{arity}", *var_pos)
    ts.expect("(")
    query = _parse_proc(ts, arity)
    ts.expect(")")
    ts.expect("{")
    branches = {}
    if ts.peek() != "}":
        while True:
            label_pos = ts.here()
            label = ts.number()
            if label in branches:
                raise ParseError(f"duplicate branch label {label}", *label_pos)
            ts.expect("=>")
            branches[label] = _parse_proc(ts, arity)
            if ts.peek() != ",":
                break
            ts.next()
    ts.expect("}")
    return Case(var, query, branches)


def parse(text: str) -> tuple:
    """Parse a procedure file; returns ``(ProcHeader, Proc)``."""
    ts = _Tokens(text)
    if ts.peek() != "n":
        ts.fail("expected header 'n=<arity>'")
    ts.next()
    ts.expect("=")
    arity = ts.number()
    if arity < 1:
        ts.i -= 1
        ts.fail("arity must be >= 1")
    cap = None
    if ts.peek() == ",":
        ts.next()
        if ts.peek() != "k":
            ts.fail("expected 'k=<cap>'")
        ts.next()
        ts.expect("=")
        cap = ts.number()
    ts.expect(";")
    p = _parse_proc(ts, arity)
    if ts.peek() is not None:
        ts.fail(f"trailing input {ts.peek()!r}")
    return ProcHeader(arity, cap), p


def parse_proc(text: str, arity: int) -> Proc:
    """Parse a bare procedure (no header)."""
    ts = _Tokens(text)
    p = _parse_proc(ts, arity)
    if ts.peek() is not None:
        ts.fail(f"trailing input {ts.peek()!r}")
    return p


# -- generators --------------------------------------------------------------


class BudgetExceeded(RuntimeError):
    pass


def count_procs(n: int, k: int, size_bound: int) -> int:
    """Number of procedures :func:`iter_procs` yields, by the generating
    recurrence (no enumeration)."""
    exact = [k + 2]
    for s in range(1, size_bound + 1):
        # branch maps of total size t over k+1 labels, each absent or a proc
        per_label = [1 + exact[0]] + exact[1:]
        maps = [1]
        for _ in range(k + 1):
            maps = [sum(maps[i] * per_label[t - i] for i in range(min(t, len(maps) - 1) + 1))
                    for t in range(s)]
        exact.append(n * sum(exact[q] * maps[s - 1 - q] for q in range(s)))
    return sum(exact)


def iter_procs(n: int, k: int, size_bound: int) -> Iterator[Proc]:
    """All procedures with at most ``size_bound`` case nodes, numerals <= k,
    variables <= n; ordered by size, then deterministically.  Explicit bottom
    branches are included (they are syntactically distinct)."""
    exact: list = [[BOTTOM] + [Const(c) for c in range(k + 1)]]
    yield from exact[0]
    labels = tuple(range(k + 1))

    def options(t):
        # alternatives of size t for one branch slot; None = absent
        return [None, *exact[0]] if t == 0 else exact[t]

    def branch_maps(total, slots):
        if not slots:
            if total == 0:
                yield ()
            return
        for t in range(total + 1):
            for p in options(t):
                for rest in branch_maps(total - t, slots[1:]):
                    yield rest if p is None else ((slots[0], p),) + rest

    for s in range(1, size_bound + 1):
        keep = s < size_bound
        current = []
        for var in range(1, n + 1):
            for sq in range(s):
                for q in exact[sq]:
                    for bm in branch_maps(s - 1 - sq, labels):
                        p = Case(var, q, bm)
                        if keep:
                            current.append(p)
                        yield p
        exact.append(current)


def gen_procs(n: int, k: int, size_bound: int, budget: int = 2_000_000) -> list:
    total = count_procs(n, k, size_bound)
    if total > budget:
        raise BudgetExceeded(f"{total} procedures exceed budget {budget}")
    return list(iter_procs(n, k, size_bound))


def random_proc(n: int, k: int, depth_budget: int, seed=0, rng: Optional[random.Random] = None,
                leaf_prob: float = 0.3, branch_prob: float = 0.6) -> Proc:
    """Pseudo-random procedure; at most ``depth_budget`` nested case levels.

    Reproducible from ``seed`` (or drawn from ``rng`` when given)."""
    rng = rng or random.Random(seed)

    def go(d: int) -> Proc:
        if d <= 0 or rng.random() < leaf_prob:
            c = rng.randint(-1, k)
            return Const(None if c < 0 else c)
        var = rng.randint(1, n)
        query = go(d - 1)
        branches = {a: go(d - 1) for a in range(k + 1) if rng.random() < branch_prob}
        return Case(var, query, branches)

    return go(depth_budget)


def size_ok(p: Proc, n: int, k: int) -> bool:
    """Proc invariants plus the generator bounds (variables <= n, numerals <= k)."""
    return max_var(p) <= n and all(a <= k for a in numerals(p))
