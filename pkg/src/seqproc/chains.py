"""Chains of procedures and sequential evaluation / synthesis of their lub.

The evaluator follows a path-building strategy: it keeps a path matching
the input, outputs a value as soon as one level's S-normal procedure
terminates on the projected path, and otherwise asks a critical query
chosen canonically from the path alone.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Optional, Union

from .evaluator import project_proc
from .extensional import (
    FunGraph,
    denote,
    embed_fun,
    graph_leq,
    graph_lub,
    is_monotone,
    project_fun,
)
from .flatdomain import ArgTuple, DomainError, InconsistentError, NatBot, check_strict_set, show
from .normalform import snormalize
from .paths import (
    Path,
    PathItem,
    SQuery,
    is_critical,
    match_mask,
    run_on_path,
    side_condition,
)
from .syntax import BOTTOM, Case, Const, Proc, parse_proc, pretty


class _FuelExhausted:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "FUEL_EXHAUSTED"

    def __str__(self):
        return "fuel-exhausted"


FUEL_EXHAUSTED = _FuelExhausted()


class ChainViolation(DomainError):
    """The chain broke a contract the strategy relies on."""


class EmptyChoiceError(ChainViolation):
    """No canonical critical-query branch exists at some level."""


class _OutOfFuel(Exception):
    pass


class Fuel:
    def __init__(self, amount: Optional[int]):
        self.left = amount
        self.spent = 0

    def spend(self, units: int = 1) -> None:
        self.spent += units
        if self.left is not None:
            self.left -= units
            if self.left < 0:
                raise _OutOfFuel


# -- chains ------------------------------------------------------------------------


@dataclass
class Chain:
    """Procedures ``P_0, P_1, ...``; level ``l`` is read at cap ``l``.

    Truncated chains hold an explicit list; lazy chains a pure generator
    and a ceiling beyond which no level is inspected.
    """

    n: int
    procs: Optional[tuple] = None
    generator: Optional[Callable[[int], Proc]] = None
    ceiling: int = 0
    name: str = ""
    flags: dict = field(default_factory=dict)
    _graphs: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def truncated(cls, n: int, procs: Iterable[Proc], name: str = "") -> "Chain":
        procs = tuple(procs)
        if not procs:
            raise DomainError("a chain needs at least one level")
        return cls(n, procs=procs, ceiling=len(procs) - 1, name=name)

    @classmethod
    def lazy(cls, n: int, generator: Callable[[int], Proc], ceiling: int, name: str = "") -> "Chain":
        return cls(n, generator=generator, ceiling=ceiling, name=name)

    @property
    def is_lazy(self) -> bool:
        return self.procs is None

    @property
    def mode(self) -> str:
        return "lazy" if self.is_lazy else "truncated"

    def proc(self, l: int) -> Proc:
        if not 0 <= l <= self.ceiling:
            raise DomainError(f"level {l} beyond the chain's reach {self.ceiling}")
        return self.generator(l) if self.is_lazy else self.procs[l]

    def graph(self, l: int) -> FunGraph:
        G = self._graphs.get(l)
        if G is None:
            G = self._graphs[l] = denote(self.proc(l), self.n, l)
        return G

    def levels(self) -> range:
        return range(self.ceiling + 1)


def projection_chain(p: Proc, n: int, K: int, name: str = "") -> Chain:
    """The chain ``pi_0(p), ..., pi_K(p)``."""
    return Chain.truncated(n, [project_proc(p, l) for l in range(K + 1)], name)


@dataclass
class ChainReport:
    violations: list = field(default_factory=list)   # (kind, k, l)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(f"violation {kind} at ({k},{l})" for kind, k, l in self.violations)


def chain_check(c: Chain, up_to_level: Optional[int] = None) -> ChainReport:
    top = c.ceiling if up_to_level is None else min(up_to_level, c.ceiling)
    rep = ChainReport()
    for l in range(top + 1):
        if not is_monotone(c.graph(l)):
            rep.violations.append(("monotone", l, l))
    for l in range(1, top + 1):
        for k in range(l):
            Fk, Fl = c.graph(k), c.graph(l)
            if not graph_leq(embed_fun(Fk, l), Fl):
                rep.violations.append(("increase", k, l))
            elif project_fun(Fl, k) != Fk:
                rep.violations.append(("coherence", k, l))
    return rep


def normalize_chain(c: Chain, up_to_level: Optional[int] = None) -> Chain:
    """Replace level ``k`` by the lub of the projections of all inspected
    higher levels; the result is a truncated, coherent chain.

    ``flags["stable"]`` records whether every level's lub was reached
    strictly before the ceiling (always true for truncated input).
    """
    top = c.ceiling if up_to_level is None else min(up_to_level, c.ceiling)
    procs = []
    stable = True
    for k in range(top + 1):
        G = c.graph(k)
        src = k
        for l in range(k + 1, c.ceiling + 1):
            if not graph_leq(embed_fun(c.graph(k), l), c.graph(l)):
                raise ChainViolation(f"chain is not increasing between levels {k} and {l}")
            P = project_fun(c.graph(l), k)
            try:
                lub = graph_lub(G, P)
            except InconsistentError as exc:
                raise ChainViolation(f"levels {k} and {l} are inconsistent: {exc}") from None
            if lub != G:
                if lub != P:
                    raise ChainViolation(f"chain is not increasing at level {l} (cap {k})")
                G, src = lub, l
        if c.is_lazy and src == c.ceiling and c.ceiling > k:
            stable = False
        procs.append(c.proc(k) if src == k else project_proc(c.proc(src), k))
    out = Chain.truncated(c.n, procs, c.name)
    out.flags = {"stable": stable, "normalized": True}
    return out


# -- the strategy --------------------------------------------------------------------


@dataclass(frozen=True)
class HChain:
    """A coherent payload chain given by one procedure; level ``l`` is
    ``denote(pi_l(query), n, l)``."""

    query: Proc

    def proc(self, l: int) -> Proc:
        return project_proc(self.query, l)


@lru_cache(maxsize=1 << 16)
def _hgraph(q: Proc, n: int, l: int) -> FunGraph:
    return denote(project_proc(q, l), n, l)


Payload = Union[int, HChain]


@dataclass(frozen=True)
class Step:
    kind: str                 # "output" | "bottom" | "undecided" | "query"
    value: NatBot = None
    level: int = 0
    index: int = 0
    payload: Optional[Payload] = None
    cost: int = 0


class LubEvaluator:
    """The path-building strategy for ``strictify(lub(chain), S)``.

    Step decisions are cached per path, so one instance can evaluate many
    inputs; fuel is charged for cached decisions as well, which keeps
    results independent of evaluation order.

    ``strategy="projected"`` runs every level on the path projected to that
    level and demands that a new query differ from the path at the chosen
    minimal level.  ``"lifted"`` (the default) runs every level on the
    unprojected path and demands the difference at the ceiling; only this
    variant is sound on inputs above the level that answers.
    """

    def __init__(self, chain: Chain, S: Iterable[int] = (), strategy: str = "lifted"):
        if strategy not in ("lifted", "projected"):
            raise ValueError(f"unknown strategy {strategy!r}")
        self.strategy = strategy
        self.chain = chain
        self.n = chain.n
        self.S = check_strict_set(S, chain.n)
        self.top = chain.ceiling
        self._levels: dict = {}
        self._paths: dict = {}
        self._steps: dict = {}
        self._subs: dict = {}
        self._top_memo: dict = {}
        self.violations: list = []

    # levels and projected paths

    def level(self, l: int) -> tuple:
        hit = self._levels.get(l)
        if hit is None:
            P = snormalize(project_proc(self.chain.proc(l), l), self.S)
            memo: dict = {}
            hit = self._levels[l] = (P, denote(P, self.n, l, memo), memo)
        return hit

    def _query_at(self, i: int, payload: Payload, l: int) -> SQuery:
        if isinstance(payload, HChain):
            return SQuery(i, _hgraph(payload.query, self.n, l))
        return SQuery(i, payload)

    def path_at(self, theta: tuple, l: int) -> Path:
        key = (theta, l)
        hit = self._paths.get(key)
        if hit is None:
            items = tuple(PathItem(self._query_at(i, G, l), b) for i, G, b in theta)
            hit = self._paths[key] = Path(self.S, items, self.n, l)
        return hit

    def sub(self, i: int, h: HChain) -> "LubEvaluator":
        key = (i, h)
        ev = self._subs.get(key)
        if ev is None:
            c = Chain.truncated(self.n, [h.proc(l) for l in range(self.top + 1)])
            if self.chain.is_lazy:
                # step 2 stays undecidable below a lazy chain
                c = Chain.lazy(self.n, h.proc, self.top)
            ev = self._subs[key] = LubEvaluator(c, self.S | {i}, self.strategy)
        return ev

    # one step

    def step(self, theta: tuple) -> Step:
        hit = self._steps.get(theta)
        if hit is None:
            hit = self._steps[theta] = self._decide(theta)
        return hit

    def run_level(self, theta: tuple, l: int, lifted: bool):
        """Path evaluation of level ``l``'s procedure, either on the path
        projected to cap ``l`` or on the path itself (payloads at the top
        cap)."""
        P, _, memo = self.level(l)
        if lifted:
            memo = self._top_memo.setdefault(l, {})
            return run_on_path(P, self.path_at(theta, self.top), check=False, memo=memo)
        return run_on_path(P, self.path_at(theta, l), check=False, memo=memo)

    def _decide(self, theta: tuple) -> Step:
        cost = 0
        lifted = self.strategy == "lifted"
        for l in range(self.top + 1):
            cost += 1
            run = self.run_level(theta, l, lifted)
            if run.value is not None:
                return Step("output", run.value, l, cost=cost)
        for l in range(self.top + 1):
            cost += 1
            _, D, _ = self.level(l)
            if (match_mask(self.path_at(theta, l)) & (D.table >= 0)).any():
                i, payload, spent = self.choose(theta, l)
                return Step("query", None, l, i, payload, cost + spent)
        if self.chain.is_lazy:
            return Step("undecided", cost=cost)
        return Step("bottom", cost=cost)

    def candidates(self, theta: tuple, k: int) -> list:
        """Constant queries for indices in S and, per level ``l >= k``, the
        query at which the level's procedure halts on the projected path."""
        out: list = [(i, a) for i in sorted(self.S) for a in range(self.top + 1)]
        seen = set()
        runs = [self.run_level(theta, l, False) for l in range(k, self.top + 1)]
        if self.strategy == "lifted":
            runs += [self.run_level(theta, l, True) for l in range(k, self.top + 1)]
        for run in runs:
            node = run.halt
            if node is None or node.var in self.S:
                continue
            h = HChain(node.query)
            key = (node.var, _hgraph(h.query, self.n, self.top).table.tobytes())
            if key not in seen:
                seen.add(key)
                out.append((node.var, h))
        return out

    def side_level(self, k: int) -> int:
        """Level at which a new query must differ from the path's items."""
        return self.top if self.strategy == "lifted" else k

    def in_x(self, theta: tuple, i: int, payload: Payload, k: int, l: int) -> bool:
        _, D, _ = self.level(l)
        if not is_critical(self._query_at(i, payload, l), D, self.path_at(theta, l)):
            return False
        m = self.side_level(k)
        return side_condition(self._query_at(i, payload, m), self.path_at(theta, m))

    def choose(self, theta: tuple, k: int) -> tuple:
        """Canonical branch: smallest index, then least payload encoding
        level by level; returns ``(i, payload, cost)``."""
        cands = self.candidates(theta, k)
        cost = 0
        alive = []
        empty_levels = []
        nonempty = {l: False for l in range(k, self.top + 1)}
        for i, payload in cands:
            ok = True
            for l in range(k, self.top + 1):
                cost += 1
                if self.in_x(theta, i, payload, k, l):
                    nonempty[l] = True
                else:
                    ok = False
            if ok:
                alive.append((i, payload))
        empty_levels = [l for l, seen in nonempty.items() if not seen]
        if empty_levels or not alive:
            msg = f"no critical-query branch at path {self._show(theta)} (empty levels {empty_levels})"
            self.violations.append(msg)
            raise EmptyChoiceError(msg)
        i, payload = min(alive, key=lambda c: self._order(c, k))
        return i, payload, cost

    def _order(self, cand: tuple, k: int) -> tuple:
        i, payload = cand
        if isinstance(payload, HChain):
            enc = tuple(_hgraph(payload.query, self.n, l).sort_key() for l in range(k, self.top + 1))
            return (i, 1, enc)
        return (i, 0, payload)

    def _show(self, theta: tuple) -> str:
        parts = []
        for i, G, b in theta:
            parts.append(f"(x{i},{G if isinstance(G, int) else pretty(G.query)})->{b}")
        return "[" + ", ".join(parts) + "]"

    # evaluation

    def evaluate(self, v: ArgTuple, fuel: Optional[int] = None):
        """``strictify(lub, S)(v)``, or FUEL_EXHAUSTED."""
        return self.evaluate_counted(v, fuel)[0]

    def evaluate_counted(self, v: ArgTuple, fuel: Optional[int] = None) -> tuple:
        """Like :meth:`evaluate`, also returning the fuel spent."""
        if v.arity != self.n:
            raise DomainError(f"input of arity {v.arity} for a chain of arity {self.n}")
        if v.cap > self.top:
            raise DomainError(f"input cap {v.cap} beyond the chain's reach {self.top}")
        tank = Fuel(fuel)
        try:
            return self._run(v, tank), tank.spent
        except _OutOfFuel:
            return FUEL_EXHAUSTED, tank.spent

    def _run(self, v: ArgTuple, fuel: Fuel):
        theta: tuple = ()
        while True:
            s = self.step(theta)
            fuel.spend(s.cost)
            if s.kind == "output":
                return s.value
            if s.kind == "bottom":
                return None
            if s.kind == "undecided":
                raise _OutOfFuel
            if isinstance(s.payload, HChain):
                x = self.sub(s.index, s.payload)._run(v, fuel)
            else:
                x = s.payload
            b = v.fn(s.index)(x)
            if b is None:
                if self.chain.is_lazy:
                    raise _OutOfFuel
                return None
            new = theta + ((s.index, s.payload, b),)
            # the new item must be a proper extension at the step's level
            m = self.side_level(s.level)
            if not side_condition(self._query_at(s.index, s.payload, m), self.path_at(theta, m)):
                raise ChainViolation(f"path {self._show(new)} does not grow at level {m}")
            theta = new

    # synthesis

    def tree(self, K: Optional[int] = None) -> "PathTree":
        K = self.top if K is None else K
        return self._tree((), K)

    def _tree(self, theta: tuple, K: int) -> "PathTree":
        s = self.step(theta)
        if s.kind == "output":
            return PathTree(theta, output=s.value)
        if s.kind in ("bottom", "undecided"):
            return PathTree(theta, output=None)
        node = PathTree(theta, query=(s.index, s.payload))
        for b in range(K + 1):
            ext = theta + ((s.index, s.payload, b),)
            if not match_mask(self.path_at(ext, K)).any():
                continue
            node.children[b] = self._tree(ext, K)
        return node

    def synthesize(self, K: Optional[int] = None) -> Proc:
        K = self.top if K is None else K
        return self._emit(self.tree(K), K)

    def _emit(self, t: "PathTree", K: int) -> Proc:
        if t.query is None:
            return Const(t.output)
        i, payload = t.query
        W = self.sub(i, payload).synthesize(K) if isinstance(payload, HChain) else Const(payload)
        branches = []
        for b, child in sorted(t.children.items()):
            p = self._emit(child, K)
            if p != BOTTOM:
                branches.append((b, p))
        return Case(i, W, branches)


@dataclass
class PathTree:
    path: tuple
    output: NatBot = None
    query: Optional[tuple] = None
    children: dict = field(default_factory=dict)

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children.values())

    def render(self, indent: int = 0) -> str:
        pad = "  " * indent
        if self.query is None:
            return f"{pad}output {show(self.output)}\n"
        i, payload = self.query
        what = payload if isinstance(payload, int) else pretty(payload.query)
        out = f"{pad}query x{i}({what})\n"
        for b, c in sorted(self.children.items()):
            out += f"{pad}  {b} =>\n" + c.render(indent + 2)
        return out


def eval_lub(c: Chain, S: Iterable[int], v: ArgTuple, fuel: Optional[int] = 10_000):
    return LubEvaluator(c, S).evaluate(v, fuel)


def synth_proc(c: Chain, S: Iterable[int], K: Optional[int] = None) -> Proc:
    if c.is_lazy:
        raise DomainError("synthesis needs a truncated chain")
    K = c.ceiling if K is None else K
    if K > c.ceiling:
        raise DomainError(f"level {K} beyond the chain's reach {c.ceiling}")
    if K < c.ceiling:
        c = Chain.truncated(c.n, c.procs[: K + 1], c.name)
    return LubEvaluator(c, S).synthesize(K)


def choose_query(theta: tuple, c: Chain, S: Iterable[int], k: int, ceiling: Optional[int] = None) -> tuple:
    """Canonical critical query at ``theta`` (a tuple of ``(i, payload, b)``)
    with per-level payloads for levels ``k..ceiling``."""
    if ceiling is not None and ceiling != c.ceiling:
        c = Chain.truncated(c.n, [c.proc(l) for l in range(ceiling + 1)], c.name)
    ev = LubEvaluator(c, S)
    i, payload, _ = ev.choose(tuple(theta), k)
    levels = [ev._query_at(i, payload, l).payload for l in range(k, ev.top + 1)]
    return i, levels


# -- built-in lazy chains --------------------------------------------------------------


def jump_demo_proc(k: int) -> Proc:
    """Level ``k`` of the jump-demo chain: 0 when ``f(0)`` is even, or
    when ``f(0)`` and ``f(1)`` are both defined (within cap ``k``)."""
    inner = Case(1, Const(1), [(b, Const(0)) for b in range(k + 1)])
    return Case(1, Const(0), [(a, Const(0) if a % 2 == 0 else inner) for a in range(k + 1)])


def jump_demo_chain(ceiling: int = 4) -> Chain:
    return Chain.lazy(1, jump_demo_proc, ceiling, name="jump-demo")


def const_chain(p: Proc, n: int, ceiling: int = 4) -> Chain:
    return Chain.lazy(n, lambda l: p, ceiling, name="const")


# -- chain file ------------------------------------------------------------------------

_CHAIN_HEADER = re.compile(r"^chain\s+n=(\d+)\s+mode=truncated\s+K=(\d+)\s*$")


def format_chain(c: Chain) -> str:
    if c.is_lazy:
        raise DomainError("only truncated chains have a file form")
    lines = [f"chain n={c.n} mode=truncated K={c.ceiling}"]
    lines += [pretty(p) for p in c.procs]
    return "\n".join(lines) + "\n"


def parse_chain(text: str) -> Chain:
    """Header plus one procedure per level; a procedure may span lines
    as long as each level starts on a fresh line with balanced braces."""
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("#")]
    if not lines:
        raise ValueError("empty chain file")
    m = _CHAIN_HEADER.match(lines[0].strip())
    if not m:
        raise ValueError(f"line 1: bad chain header {lines[0]!r}")
    n, K = int(m.group(1)), int(m.group(2))
    chunks, cur, depth = [], [], 0
    for ln in lines[1:]:
        cur.append(ln)
        depth += ln.count("{") - ln.count("}")
        if depth == 0:
            chunks.append(" ".join(cur))
            cur = []
    if cur:
        raise ValueError("unbalanced braces in chain file")
    if len(chunks) != K + 1:
        raise ValueError(f"chain declares K={K} but has {len(chunks)} levels")
    return Chain.truncated(n, [parse_proc(t, n) for t in chunks])
