"""Functionals over the finite input space I^n_k as explicit graphs.

A :class:`FunGraph` stores one value per argument tuple, in the canonical
enumeration order of :class:`Space`.  Internally values are ``int8`` codes
with ``-1`` for bottom.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional

import numpy as np

from .flatdomain import (
    ArgTuple,
    DomainError,
    InconsistentError,
    NatBot,
    check_strict_set,
    enumerate_monofns,
    monofn_index,
    project_monofn,
    embed_monofn,
    show,
)
from .syntax import BOTTOM, Case, Const, Proc, parse_proc, pretty

BOT_CODE = -1


def _code(a: NatBot) -> int:
    return BOT_CODE if a is None else a


def _value(c) -> NatBot:
    c = int(c)
    return None if c < 0 else c


class Space:
    """The argument tuples I^n_k with lookup tables used by vectorised code.

    ``app[i][v, c + 1]`` is the code of ``f_{i+1}(c)`` for tuple index ``v``,
    with ``c = -1`` standing for bottom.
    """

    def __init__(self, n: int, k: int):
        if n < 1:
            raise DomainError("arity must be >= 1")
        self.n = n
        self.k = k
        self.fns = enumerate_monofns(k)
        self.m = len(self.fns)
        self.size = self.m ** n
        self.codes = np.array(list(itertools.product(range(self.m), repeat=n)), dtype=np.int32)
        self.codes = self.codes.reshape(self.size, n)
        fapp = np.array(
            [[_code(f(None if c < 0 else c)) for c in range(-1, k + 1)] for f in self.fns],
            dtype=np.int8,
        )
        self.fapp = fapp
        self.app = [fapp[self.codes[:, i]] for i in range(n)]
        self.rows = np.arange(self.size)
        self._index = monofn_index(k)
        self._weights = np.array([self.m ** (n - 1 - j) for j in range(n)], dtype=np.int64)

    def __repr__(self):
        return f"Space(n={self.n}, k={self.k})"

    def __len__(self):
        return self.size

    def tuple_at(self, idx: int) -> ArgTuple:
        return ArgTuple(tuple(self.fns[c] for c in self.codes[idx]))

    def index(self, v: ArgTuple) -> int:
        if v.arity != self.n or v.cap != self.k:
            raise DomainError(f"tuple of arity {v.arity}, cap {v.cap} not in {self}")
        out = 0
        for f in v.entries:
            out = out * self.m + self._index[f]
        return out

    def __iter__(self):
        return (self.tuple_at(i) for i in range(self.size))

    def _from_codes(self, codes: np.ndarray) -> np.ndarray:
        return codes.astype(np.int64) @ self._weights

    @lru_cache(maxsize=None)
    def strict_index(self, S: frozenset) -> np.ndarray:
        """``strict_index(S)[v]`` is the index of ``strictify_args(v, S)``."""
        partner = np.array(
            [self._index[type(f)(f.cap, None, f.table)] for f in self.fns], dtype=np.int32
        )
        codes = self.codes.copy()
        for i in S:
            codes[:, i - 1] = partner[codes[:, i - 1]]
        return self._from_codes(codes)

    @lru_cache(maxsize=None)
    def project_index(self, k: int) -> np.ndarray:
        """Index in ``space(n, k)`` of the projection of each tuple here."""
        small = space(self.n, k)
        per_fn = np.array([small._index[project_monofn(f, k)] for f in self.fns], dtype=np.int32)
        return small._from_codes(per_fn[self.codes])

    @lru_cache(maxsize=None)
    def embed_index(self, K: int) -> np.ndarray:
        """Index in ``space(n, K)`` of the embedding of each tuple here."""
        big = space(self.n, K)
        per_fn = np.array([big._index[embed_monofn(f, K)] for f in self.fns], dtype=np.int32)
        return big._from_codes(per_fn[self.codes])

    @lru_cache(maxsize=None)
    def covers(self) -> tuple:
        """Covering pairs ``(lo, hi)`` of the pointwise order on tuples."""
        fn_pairs = _fn_covers(self.k)
        lo, hi = [], []
        for j in range(self.n):
            for a, b in fn_pairs:
                sel = np.nonzero(self.codes[:, j] == a)[0]
                codes = self.codes[sel].copy()
                codes[:, j] = b
                lo.append(sel)
                hi.append(self._from_codes(codes))
        if not lo:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        return np.concatenate(lo), np.concatenate(hi)


@lru_cache(maxsize=None)
def _fn_covers(k: int) -> list:
    """Covers among monotone functions at cap ``k``: a strict function gains
    one defined point, or a strict function constant on {0..k} becomes
    the corresponding non-strict constant."""
    fns = enumerate_monofns(k)
    index = monofn_index(k)
    pairs = []
    for a, f in enumerate(fns):
        if not f.is_strict:
            continue
        for x, y in enumerate(f.table):
            if y is None:
                for c in range(k + 1):
                    t = f.table[:x] + (c,) + f.table[x + 1:]
                    pairs.append((a, index[type(f)(k, None, t)]))
        if f.table[0] is not None and len(set(f.table)) == 1:
            pairs.append((a, index[type(f)(k, f.table[0], f.table)]))
    return pairs


@lru_cache(maxsize=None)
def space(n: int, k: int) -> Space:
    return Space(n, k)


class FunGraph:
    """Total graph of a monotone functional on I^n_k."""

    __slots__ = ("n", "k", "table", "_key")

    def __init__(self, n: int, k: int, table):
        table = np.asarray(table, dtype=np.int8)
        if table.shape != (space(n, k).size,):
            raise DomainError(f"table of shape {table.shape} does not fit I^{n}_{k}")
        if table.size and (table.max() > k or table.min() < BOT_CODE):
            raise DomainError(f"graph values outside cap {k}")
        table.setflags(write=False)
        self.n = n
        self.k = k
        self.table = table
        self._key = (n, k, table.tobytes())

    @classmethod
    def from_values(cls, n: int, k: int, values: Iterable[NatBot]) -> "FunGraph":
        return cls(n, k, [_code(a) for a in values])

    @classmethod
    def constant(cls, n: int, k: int, c: NatBot) -> "FunGraph":
        if c is not None and c > k:
            c = None
        return cls(n, k, np.full(space(n, k).size, _code(c), dtype=np.int8))

    @classmethod
    def from_function(cls, n: int, k: int, fn) -> "FunGraph":
        return cls.from_values(n, k, (fn(v) for v in space(n, k)))

    @property
    def space(self) -> Space:
        return space(self.n, self.k)

    def __getitem__(self, idx: int) -> NatBot:
        return _value(self.table[idx])

    def __call__(self, v: ArgTuple) -> NatBot:
        return self[self.space.index(v)]

    def __eq__(self, other):
        return isinstance(other, FunGraph) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"FunGraph(n={self.n}, k={self.k}, defined={int((self.table >= 0).sum())}/{self.table.size})"

    def values(self) -> list:
        return [_value(c) for c in self.table]

    def is_bottom(self) -> bool:
        return bool((self.table < 0).all())

    def constant_value(self) -> NatBot:
        if not self.is_constant():
            raise ValueError("graph is not constant")
        return _value(self.table[0])

    def is_constant(self) -> bool:
        return bool((self.table == self.table[0]).all())

    def sort_key(self) -> bytes:
        # bottom sorts first: shift codes to be non-negative
        return (self.table.astype(np.int16) + 1).astype(np.uint8).tobytes()


def _check_shape(F: FunGraph, G: FunGraph) -> None:
    if (F.n, F.k) != (G.n, G.k):
        raise DomainError(f"shape mismatch: (n={F.n}, k={F.k}) vs (n={G.n}, k={G.k})")


def is_monotone(F: FunGraph) -> bool:
    lo, hi = F.space.covers()
    a, b = F.table[lo], F.table[hi]
    return bool(((a < 0) | (a == b)).all())


def graph_leq(F: FunGraph, G: FunGraph) -> bool:
    _check_shape(F, G)
    a, b = F.table, G.table
    return bool(((a < 0) | (a == b)).all())


def graph_lub(F: FunGraph, G: FunGraph) -> FunGraph:
    _check_shape(F, G)
    a, b = F.table, G.table
    clash = (a >= 0) & (b >= 0) & (a != b)
    if clash.any():
        idx = int(np.argmax(clash))
        raise InconsistentError(f"values {a[idx]} and {b[idx]} at input {idx}")
    return FunGraph(F.n, F.k, np.where(a >= 0, a, b))


# -- denotation ----------------------------------------------------------------


def _combine(sp: Space, var: int, query: np.ndarray, branches) -> np.ndarray:
    """Vectorised case node. ``branches`` yields ``(label, thunk)`` pairs
    where the thunk produces the branch table on demand."""
    answers = sp.app[var - 1][sp.rows, query.astype(np.int64) + 1]
    out = np.full(sp.size, BOT_CODE, dtype=np.int8)
    for a, thunk in branches:
        if a > sp.k:
            continue
        mask = answers == a
        if mask.any():
            out = np.where(mask, thunk(), out)
    return out


def _denote_table(p: Proc, sp: Space, memo: dict) -> np.ndarray:
    hit = memo.get(p)
    if hit is not None:
        return hit
    if isinstance(p, Const):
        c = p.value
        out = np.full(sp.size, BOT_CODE if c is None or c > sp.k else c, dtype=np.int8)
    else:
        if p.var > sp.n:
            raise DomainError(f"x{p.var} used at arity {sp.n}")
        q = _denote_table(p.query, sp, memo)
        out = _combine(
            sp, p.var, q, ((a, lambda b=b: _denote_table(b, sp, memo)) for a, b in p.branches)
        )
    memo[p] = out
    return out


def denote(p: Proc, n: int, k: int, memo: Optional[dict] = None) -> FunGraph:
    """Graph of ``p`` over I^n_k, values above ``k`` projected to bottom.

    ``memo`` may be shared between calls at the same ``(n, k)`` to reuse
    subtree tables."""
    sp = space(n, k)
    return FunGraph(n, k, _denote_table(p, sp, {} if memo is None else memo))


def case_combine(i: int, G: FunGraph, branches: dict) -> FunGraph:
    """Semantic case node: ``v -> branches[v_i(G(v))](v)``."""
    sp = G.space
    if not 1 <= i <= G.n:
        raise DomainError(f"variable index {i} outside 1..{G.n}")
    for H in branches.values():
        _check_shape(G, H)
    return FunGraph(G.n, G.k, _combine(sp, i, G.table, ((a, lambda H=H: H.table) for a, H in sorted(branches.items()))))


# -- strictification and projections -------------------------------------------


def strictify(F: FunGraph, S: Iterable[int]) -> FunGraph:
    """``F_S(v) = F(largest strict minorant of v at positions in S)``."""
    S = check_strict_set(S, F.n)
    if not S:
        return F
    return FunGraph(F.n, F.k, F.table[F.space.strict_index(S)])


def project_fun(F: FunGraph, k: int) -> FunGraph:
    if k > F.k:
        raise DomainError(f"cannot project cap {F.k} graph to cap {k}")
    if k == F.k:
        return F
    vals = F.table[space(F.n, k).embed_index(F.k)]
    return FunGraph(F.n, k, np.where(vals > k, BOT_CODE, vals))


def embed_fun(F: FunGraph, K: int) -> FunGraph:
    if K < F.k:
        raise DomainError(f"cannot embed cap {F.k} graph into cap {K}")
    if K == F.k:
        return F
    return FunGraph(F.n, K, F.table[space(F.n, K).project_index(F.k)])


# -- text format ------------------------------------------------------------------


def format_graph(F: FunGraph) -> str:
    lines = [f"graph n={F.n} k={F.k}"]
    lines += [f"{i} -> {show(_value(c))}" for i, c in enumerate(F.table)]
    return "\n".join(lines) + "\n"


_GRAPH_HEADER = re.compile(r"^graph\s+n=(\d+)\s+k=(\d+)\s*$")
_GRAPH_LINE = re.compile(r"^(\d+)\s*->\s*(bot|\d+)\s*$")


def parse_graphs(text: str) -> list:
    """Parse one or more concatenated graph blocks."""
    graphs = []
    cur = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _GRAPH_HEADER.match(line)
        if m:
            if cur is not None:
                graphs.append(_finish_graph(*cur))
            cur = (int(m.group(1)), int(m.group(2)), {}, lineno)
            continue
        m = _GRAPH_LINE.match(line)
        if not m or cur is None:
            raise ValueError(f"line {lineno}: unexpected {line!r}")
        idx = int(m.group(1))
        if idx in cur[2]:
            raise ValueError(f"line {lineno}: duplicate entry {idx}")
        cur[2][idx] = None if m.group(2) == "bot" else int(m.group(2))
    if cur is not None:
        graphs.append(_finish_graph(*cur))
    return graphs


def _finish_graph(n, k, entries, lineno) -> FunGraph:
    size = space(n, k).size
    if sorted(entries) != list(range(size)):
        raise ValueError(f"graph at line {lineno}: expected entries 0..{size - 1}")
    F = FunGraph.from_values(n, k, (entries[i] for i in range(size)))
    if not is_monotone(F):
        raise ValueError(f"graph at line {lineno} is not monotone")
    return F


# -- the catalog of finite sequential functionals --------------------------------


@dataclass
class SeqCatalog:
    n: int
    k: int
    members: list = field(default_factory=list)
    witnesses: list = field(default_factory=list)
    complete: bool = False
    _index: dict = field(default_factory=dict, repr=False)
    _matrix: Optional[np.ndarray] = field(default=None, repr=False)

    def __len__(self):
        return len(self.members)

    def add(self, F: FunGraph, witness: Proc) -> bool:
        key = F.table.tobytes()
        if key in self._index:
            return False
        self._index[key] = len(self.members)
        self.members.append(F)
        self.witnesses.append(witness)
        self._matrix = None
        return True

    def find(self, F: FunGraph) -> Optional[int]:
        if (F.n, F.k) != (self.n, self.k):
            raise DomainError("catalog shape mismatch")
        return self._index.get(F.table.tobytes())

    def __contains__(self, F: FunGraph) -> bool:
        return self.find(F) is not None

    def witness(self, F: FunGraph) -> Proc:
        j = self.find(F)
        if j is None:
            raise KeyError("graph not in catalog")
        return self.witnesses[j]

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = np.stack([F.table for F in self.members]) if self.members else (
                np.zeros((0, space(self.n, self.k).size), dtype=np.int8))
        return self._matrix


def enumerate_sequentials(n: int, k: int, budget: int = 50_000_000) -> SeqCatalog:
    """Closure of the constant graphs under :func:`case_combine`.

    A case node's result depends only on the answer map ``v -> v_i(G(v))``
    and, per label ``b``, on the branch graph restricted to the inputs
    answering ``b``.  Both are deduplicated, and each round only combines
    choices involving something first seen in the previous round.
    ``budget`` bounds the number of combinations examined; on exhaustion the
    partial catalog is returned with ``complete=False``.
    """
    sp = space(n, k)
    cat = SeqCatalog(n, k)
    cat.add(FunGraph.constant(n, k, None), BOTTOM)
    for c in range(k + 1):
        cat.add(FunGraph.constant(n, k, c), Const(c))

    labels = range(k + 1)
    alphas: dict = {}      # answer-map bytes -> record
    work = 0
    delta = list(range(len(cat)))
    rnd = 0
    while delta:
        rnd += 1
        # register answer maps produced by the new members
        for j in delta:
            G = cat.members[j].table
            for i in range(1, n + 1):
                ans = sp.app[i - 1][sp.rows, G.astype(np.int64) + 1]
                key = ans.tobytes()
                if key not in alphas:
                    regions = [np.nonzero(ans == b)[0] for b in labels]
                    alphas[key] = _Alpha(i, j, regions, rnd)
        # extend per-label restriction sets with the new members
        for rec in alphas.values():
            members = range(len(cat)) if rec.born == rnd else delta
            for b, region in enumerate(rec.regions):
                seen = rec.seen[b]
                for j in members:
                    rkey = cat.members[j].table[region].tobytes()
                    if rkey not in seen:
                        seen[rkey] = j
                        rec.choices[b].append((j, rnd))
        start = len(cat)
        for rec in alphas.values():
            for combo in rec.new_combos(rnd):
                work += 1
                if work > budget:
                    cat.complete = False
                    return cat
                table = np.full(sp.size, BOT_CODE, dtype=np.int8)
                branches = {}
                for b, j in enumerate(combo):
                    if j != 0:
                        region = rec.regions[b]
                        table[region] = cat.members[j].table[region]
                        branches[b] = cat.witnesses[j]
                F = FunGraph(n, k, table)
                if F.table.tobytes() in cat._index:
                    continue
                w = Case(rec.var, cat.witnesses[rec.query], branches)
                cat.add(F, w)
        delta = list(range(start, len(cat)))
    cat.complete = True
    return cat


class _Alpha:
    __slots__ = ("var", "query", "regions", "born", "seen", "choices")

    def __init__(self, var, query, regions, born):
        self.var = var
        self.query = query
        self.regions = regions
        self.born = born
        self.seen = [dict() for _ in regions]
        self.choices = [[] for _ in regions]

    def new_combos(self, rnd):
        """Combinations (one member per label) that involve at least one
        choice first seen in round ``rnd``; each produced once."""
        allc = [[j for j, _ in ch] for ch in self.choices]
        if self.born == rnd:
            yield from itertools.product(*allc)
            return
        old = [[j for j, r in ch if r < rnd] for ch in self.choices]
        new = [[j for j, r in ch if r == rnd] for ch in self.choices]
        for p in range(len(allc)):
            if not new[p]:
                continue
            yield from itertools.product(*old[:p], new[p], *allc[p + 1:])


@dataclass
class Decision:
    verdict: str            # "yes" | "no" | "unknown"
    witness: Optional[Proc] = None

    def __str__(self):
        return self.verdict if self.witness is None else f"{self.verdict} ({pretty(self.witness)})"


def is_sequential(F: FunGraph, cat: SeqCatalog) -> Decision:
    j = cat.find(F)
    if j is not None:
        return Decision("yes", cat.witnesses[j])
    return Decision("no" if cat.complete else "unknown")


@dataclass
class LubOutcome:
    status: str             # "least" | "none" | "no-least"
    graph: Optional[FunGraph] = None
    witness: Optional[Proc] = None
    minimal: list = field(default_factory=list)


def _upper_bounds(M: np.ndarray, F: FunGraph) -> np.ndarray:
    a = F.table[None, :]
    return ((a < 0) | (M == a)).all(axis=1)


def seq_lub(F: FunGraph, G: FunGraph, cat: SeqCatalog) -> LubOutcome:
    return seq_lub_many([F, G], cat)


def seq_lub_many(graphs: list, cat: SeqCatalog) -> LubOutcome:
    """Least catalog member above every graph in ``graphs``.

    Experimental beyond two arguments: no totality claim is made, and a
    non-unique set of minimal bounds is reported as ``no-least``.
    """
    for F in graphs:
        if (F.n, F.k) != (cat.n, cat.k):
            raise DomainError("shape mismatch with catalog")
    M = cat.matrix
    ok = np.ones(len(cat), dtype=bool)
    for F in graphs:
        ok &= _upper_bounds(M, F)
    idx = np.nonzero(ok)[0]
    if idx.size == 0:
        return LubOutcome("none")
    U = M[idx]
    minimal = []
    for a, row in zip(idx, U):
        # row is minimal if no other bound lies strictly below it
        below = ((U < 0) | (U == row[None, :])).all(axis=1)
        below[np.nonzero(idx == a)[0]] = False
        if not below.any():
            minimal.append(int(a))
    if len(minimal) == 1:
        j = minimal[0]
        row = M[j]
        if (((row[None, :] < 0) | (row[None, :] == U)).all(axis=1)).all():
            return LubOutcome("least", cat.members[j], cat.witnesses[j], minimal)
    return LubOutcome("no-least", minimal=[cat.members[j] for j in minimal])


def format_catalog(cat: SeqCatalog) -> str:
    out = [f"catalog n={cat.n} k={cat.k} members={len(cat)} complete={'true' if cat.complete else 'false'}"]
    for F, w in zip(cat.members, cat.witnesses):
        out.append(f"witness {pretty(w)}")
        out.append(format_graph(F).rstrip("\n"))
    return "\n".join(out) + "\n"


def parse_catalog(text: str) -> SeqCatalog:
    lines = text.splitlines()
    m = re.match(r"^catalog\s+n=(\d+)\s+k=(\d+)\s+members=(\d+)\s+complete=(true|false)\s*$", lines[0])
    if not m:
        raise ValueError("bad catalog header")
    n, k, count = int(m.group(1)), int(m.group(2)), int(m.group(3))
    cat = SeqCatalog(n, k)
    witnesses = []
    blocks = []
    for line in lines[1:]:
        if line.startswith("witness "):
            witnesses.append(parse_proc(line[len("witness "):], n))
            blocks.append([])
        else:
            blocks[-1].append(line)
    for w, block in zip(witnesses, blocks):
        (F,) = parse_graphs("\n".join(block))
        cat.add(F, w)
    if len(cat) != count:
        raise ValueError(f"catalog declares {count} members, found {len(cat)}")
    cat.complete = m.group(4) == "true"
    return cat
