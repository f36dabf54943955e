"""S-queries, paths, path evaluation and critical queries."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np

from .extensional import BOT_CODE, FunGraph, denote, graph_leq, project_fun, space, strictify
from .flatdomain import ArgTuple, DomainError, NatBot, check_strict_set, show, show_set
from .normalform import is_snormal
from .syntax import Case, Const, Proc

Payload = Union[int, FunGraph]


class PreconditionError(DomainError):
    """An operation was called outside its stated precondition."""


@dataclass(frozen=True)
class SQuery:
    """Interrogate argument ``index`` at ``payload``: a constant when the
    index is in the strict set, a graph otherwise."""

    index: int
    payload: Payload

    @property
    def is_constant(self) -> bool:
        return not isinstance(self.payload, FunGraph)

    def __str__(self):
        p = self.payload
        return f"(x{self.index}, {p if self.is_constant else _graph_label(p)})"


def _graph_label(G: FunGraph) -> str:
    if G.is_constant():
        return f"const-{show(G.constant_value())}"
    return f"graph[{G.k}]"


@dataclass(frozen=True)
class PathItem:
    query: SQuery
    answer: int

    def __post_init__(self):
        if self.answer < 0:
            raise DomainError("answers are natural numbers")


@dataclass(frozen=True)
class Path:
    """A pre-path; :func:`is_path` tells whether some tuple matches it."""

    S: frozenset
    items: tuple
    n: int
    k: int

    def __post_init__(self):
        object.__setattr__(self, "S", check_strict_set(self.S, self.n))
        object.__setattr__(self, "items", tuple(self.items))
        for it in self.items:
            q = it.query
            if not 1 <= q.index <= self.n:
                raise DomainError(f"query index {q.index} outside 1..{self.n}")
            if q.is_constant != (q.index in self.S):
                raise DomainError(f"x{q.index}: constant payloads exactly for indices in S")
            if not q.is_constant and (q.payload.n, q.payload.k) != (self.n, self.k):
                raise DomainError("graph payload shape differs from the path")

    def __len__(self):
        return len(self.items)

    def extend(self, query: SQuery, answer: int) -> "Path":
        return Path(self.S, self.items + (PathItem(query, answer),), self.n, self.k)

    def __str__(self):
        body = ", ".join(f"{it.query}->{it.answer}" for it in self.items)
        return f"path S={show_set(self.S)} [{body}]"


def empty_path(n: int, k: int, S: Iterable[int] = ()) -> Path:
    return Path(frozenset(S), (), n, k)


def make_path(n: int, k: int, S: Iterable[int], items: Iterable[tuple]) -> Path:
    """Build a path from ``(i, payload, b)`` triples."""
    return Path(frozenset(S), tuple(PathItem(SQuery(i, G), b) for i, G, b in items), n, k)


def check_payloads(theta: Path) -> bool:
    """Graph payloads are S+{i}-functionals (fixed by strictification)."""
    return all(
        it.query.is_constant or strictify(it.query.payload, theta.S | {it.query.index}) == it.query.payload
        for it in theta.items
    )


# -- matching ------------------------------------------------------------------


def _payload_codes(q: SQuery, n: int, k: int) -> np.ndarray:
    sp = space(n, k)
    if q.is_constant:
        a = q.payload
        # arguments above the cap behave like bottom
        return np.full(sp.size, BOT_CODE if a > k else a, dtype=np.int64)
    return q.payload.table.astype(np.int64)


def answer_codes(q: SQuery, n: int, k: int) -> np.ndarray:
    """Code of ``v_i(payload(v))`` for every tuple ``v`` at cap ``k``."""
    sp = space(n, k)
    return sp.app[q.index - 1][sp.rows, _payload_codes(q, n, k) + 1]


def match_mask(theta: Path) -> np.ndarray:
    sp = space(theta.n, theta.k)
    mask = np.ones(sp.size, dtype=bool)
    for it in theta.items:
        mask &= answer_codes(it.query, theta.n, theta.k) == it.answer
    return mask


def _payload_at(q: SQuery, v: ArgTuple) -> NatBot:
    return q.payload if q.is_constant else q.payload(v)


def matches(v: ArgTuple, theta: Path) -> bool:
    if v.arity != theta.n or v.cap != theta.k:
        raise DomainError(f"tuple (n={v.arity}, k={v.cap}) vs path (n={theta.n}, k={theta.k})")
    return all(v.fn(it.query.index)(_payload_at(it.query, v)) == it.answer for it in theta.items)


def is_path(theta: Path) -> bool:
    return bool(match_mask(theta).any())


def _payload_leq(a: Payload, b: Payload) -> bool:
    if isinstance(a, FunGraph) or isinstance(b, FunGraph):
        if not (isinstance(a, FunGraph) and isinstance(b, FunGraph)):
            return False
        return graph_leq(a, b)
    return a == b


def is_consistent(theta: Path) -> bool:
    """Items with equal index and consistent payloads carry equal answers."""
    items = theta.items
    for x in range(len(items)):
        for y in range(x + 1, len(items)):
            p, q = items[x], items[y]
            if p.query.index != q.query.index or p.answer == q.answer:
                continue
            a, b = p.query.payload, q.query.payload
            if isinstance(a, FunGraph):
                both = (a.table >= 0) & (b.table >= 0)
                if not (a.table[both] == b.table[both]).all():
                    continue
            elif a != b:
                continue
            return False
    return True


# -- evaluation on a path --------------------------------------------------------


@dataclass
class PathRun:
    """Outcome of :func:`run_on_path`: ``halt`` is the case node where no
    item answered the query (None when evaluation terminated)."""

    value: NatBot
    halt: Optional[Case] = None
    steps: int = 0


def _answering_item(theta: Path, node: Case, memo: dict) -> Optional[PathItem]:
    q = node.query
    D = None
    for it in theta.items:
        if it.query.index != node.var:
            continue
        a = it.query.payload
        if it.query.is_constant:
            if isinstance(q, Const) and q.value == a:
                return it
            continue
        if D is None:
            D = denote(q, theta.n, theta.k, memo)
        if graph_leq(a, D):
            return it
    return None


def run_on_path(p: Proc, theta: Path, check: bool = True, memo: Optional[dict] = None) -> PathRun:
    if check and not is_snormal(p, theta.S):
        raise PreconditionError("procedure is not S-normal for the path's strict set")
    memo = {} if memo is None else memo
    steps = 0
    while isinstance(p, Case):
        it = _answering_item(theta, p, memo)
        if it is None:
            return PathRun(None, p, steps)
        steps += 1
        nxt = p.branch(it.answer)
        if nxt is None:
            return PathRun(None, None, steps)
        p = nxt
    return PathRun(p.value, None, steps)


def eval_on_path(p: Proc, theta: Path, check: bool = True, memo: Optional[dict] = None) -> NatBot:
    return run_on_path(p, theta, check, memo).value


# -- criticality -------------------------------------------------------------------


def is_critical(q: SQuery, F: FunGraph, theta: Path) -> bool:
    if (F.n, F.k) != (theta.n, theta.k):
        raise DomainError("functional and path differ in shape")
    live = match_mask(theta) & (F.table >= 0)
    return bool((answer_codes(q, theta.n, theta.k)[live] >= 0).all())


def find_critical(p: Proc, theta: Path, check: bool = True, memo: Optional[dict] = None) -> SQuery:
    """Critical query at the node where path evaluation of ``p`` halts."""
    memo = {} if memo is None else memo
    F = denote(p, theta.n, theta.k, memo)
    if not (match_mask(theta) & (F.table >= 0)).any():
        raise PreconditionError("no matching input on which the procedure is defined")
    run = run_on_path(p, theta, check, memo)
    if run.halt is None:
        raise PreconditionError("path evaluation terminated")
    node = run.halt
    if node.var in theta.S:
        # S-normal: the query is a numeric constant
        return SQuery(node.var, node.query.value)
    return SQuery(node.var, denote(node.query, theta.n, theta.k, memo))


def side_condition(q: SQuery, theta: Path) -> bool:
    """No item with the same index has a payload below ``q``'s."""
    return not any(
        it.query.index == q.index and _payload_leq(it.query.payload, q.payload) for it in theta.items
    )


# -- projection ----------------------------------------------------------------------


def project_query(q: SQuery, k: int) -> SQuery:
    # constants are left alone; a constant above k is then just never answered
    return q if q.is_constant else SQuery(q.index, project_fun(q.payload, k))


def project_path(theta: Path, k: int) -> Path:
    if k > theta.k:
        raise DomainError(f"cannot project a cap {theta.k} path to cap {k}")
    if k == theta.k:
        return theta
    items = tuple(PathItem(project_query(it.query, k), it.answer) for it in theta.items)
    return Path(theta.S, items, theta.n, k)


def check_criticality_projection(q: SQuery, F: FunGraph, theta: Path, k: int) -> bool:
    return is_critical(project_query(q, k), project_fun(F, k), project_path(theta, k))


# -- file format ------------------------------------------------------------------------

_PATH_HEADER = re.compile(r"^path\s+S=\{([\d,\s]*)\}\s+n=(\d+)\s+k=(\d+)\s*$")
_PATH_ITEM = re.compile(r"^i=(\d+)\s+G=(@\d+|\d+)\s+b=(\d+)\s*$")


def format_path(theta: Path) -> tuple:
    """Return ``(path_text, graph_text)``; ``G=@j`` names the j-th graph block."""
    from .extensional import format_graph

    lines = [f"path S={show_set(theta.S)} n={theta.n} k={theta.k}"]
    graphs = []
    for it in theta.items:
        q = it.query
        if q.is_constant:
            ref = str(q.payload)
        else:
            ref = f"@{len(graphs)}"
            graphs.append(format_graph(q.payload))
        lines.append(f"i={q.index} G={ref} b={it.answer}")
    return "\n".join(lines) + "\n", "".join(graphs)


def parse_path(text: str, graph_text: str = "") -> Path:
    from .extensional import parse_graphs

    graphs = parse_graphs(graph_text) if graph_text.strip() else []
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("#")]
    if not lines:
        raise ValueError("empty path file")
    m = _PATH_HEADER.match(lines[0])
    if not m:
        raise ValueError(f"line 1: bad path header {lines[0]!r}")
    S = frozenset(int(x) for x in m.group(1).replace(" ", "").split(",") if x)
    n, k = int(m.group(2)), int(m.group(3))
    items = []
    for lineno, line in enumerate(lines[1:], start=2):
        m = _PATH_ITEM.match(line)
        if not m:
            raise ValueError(f"line {lineno}: bad path item {line!r}")
        ref = m.group(2)
        if ref.startswith("@"):
            j = int(ref[1:])
            if j >= len(graphs):
                raise ValueError(f"line {lineno}: no graph block {j}")
            payload: Payload = graphs[j]
        else:
            payload = int(ref)
        items.append((int(m.group(1)), payload, int(m.group(3))))
    return make_path(n, k, S, items)


# -- termination of equivalent procedures on one path ---------------------------------


@dataclass
class Disagreement:
    S: frozenset
    first: Proc
    second: Proc
    path: Path
    values: tuple


@dataclass
class ExperimentReport:
    trials: int = 0
    groups: int = 0
    comparisons: int = 0
    findings: list = None

    def __post_init__(self):
        if self.findings is None:
            self.findings = []


def random_path(n: int, k: int, S: Iterable[int], length: int, rng, depth: int = 2) -> Path:
    """A path matched by a random tuple at cap ``k``; graph payloads are
    strictified denotations of random procedures."""
    from .syntax import random_proc

    S = frozenset(S)
    sp = space(n, k)
    v = sp.tuple_at(rng.randrange(sp.size))
    theta = empty_path(n, k, S)
    for _ in range(length):
        i = rng.randint(1, n)
        if i in S:
            q = SQuery(i, rng.randint(0, k))
        else:
            G = strictify(denote(random_proc(n, k, depth, rng=rng), n, k), S | {i})
            q = SQuery(i, G)
        b = v.fn(i)(_payload_at(q, v))
        if b is not None:
            theta = theta.extend(q, b)
    return theta


def termination_experiment(n: int, k: int, trials: int, seed: int = 0, depth: int = 3,
                           paths_per_group: int = 20) -> ExperimentReport:
    """Look for two S-normal procedures with the same denotation on which
    path evaluation over one shared path terminates for one and not the
    other.  Only reports what it finds."""
    import itertools
    import random

    from .normalform import snormalize
    from .syntax import random_proc

    rng = random.Random(seed)
    rep = ExperimentReport(trials=trials)
    subsets = [frozenset(c) for r in range(n + 1) for c in itertools.combinations(range(1, n + 1), r)]
    buckets: dict = {}
    for _ in range(trials):
        S = rng.choice(subsets)
        p = snormalize(random_proc(n, k, depth, rng=rng), S)
        key = (S, denote(p, n, k).table.tobytes())
        procs = buckets.setdefault(key, [])
        if p not in procs:
            procs.append(p)
    for (S, _), procs in sorted(buckets.items(), key=lambda kv: (sorted(kv[0][0]), kv[0][1])):
        if len(procs) < 2:
            continue
        rep.groups += 1
        for _ in range(paths_per_group):
            theta = random_path(n, k, S, rng.randint(1, 3), rng)
            a, b = rng.sample(procs, 2)
            va, vb = eval_on_path(a, theta, check=False), eval_on_path(b, theta, check=False)
            rep.comparisons += 1
            if (va is None) != (vb is None):
                rep.findings.append(Disagreement(S, a, b, theta, (va, vb)))
    return rep
