"""The P[S] rewriting towards S-normal form."""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable, NamedTuple, Optional

from .evaluator import eval_length
from .syntax import BOTTOM, Case, Const, Proc


class Rewrite(NamedTuple):
    rule: str           # "1", "2.1", "2.2", "2.2-bot", "2.3"
    path: tuple         # edges from the root: "q" (query) or a branch label
    before: tuple       # (eval_length, weight) of the rewritten node
    after: tuple


def weight(p: Proc) -> int:
    """Polynomial interpretation that strictly decreases under rule 2.3 and
    on every recursive call of :func:`snormalize`."""
    if p._wt is None:
        if isinstance(p, Const):
            p._wt = 1
        else:
            tail = max((weight(q) for _, q in p.branches), default=0)
            p._wt = 2 * weight(p.query) + tail + 1
    return p._wt


def measure(p: Proc) -> tuple:
    return eval_length(p), weight(p)


def snormalize(p: Proc, S: Iterable[int], trace: Optional[list] = None) -> Proc:
    """Rewrite ``p`` to its S-normal form.

    Rule 2.2 is applied for numeric query constants; ``case x_i(bot)`` with
    ``i`` in ``S`` can only meet a strict ``f_i`` and is rewritten to bot.
    """
    q, steps = _norm(p, frozenset(S))
    if trace is not None:
        _flatten(steps, (), trace)
    return q


def _flatten(steps: tuple, path: tuple, out: list) -> None:
    for s in steps:
        if isinstance(s, Rewrite):
            out.append(Rewrite(s.rule, path, s.before, s.after) if path else s)
        else:
            _flatten(s[1], path + (s[0],), out)


def _rebuild(p: Case, query: Proc, S: frozenset, steps: list) -> Proc:
    branches = []
    same = query is p.query
    for a, b in p.branches:
        nb, sub = _norm(b, S)
        if sub:
            steps.append((a, sub))
        same = same and nb is b
        branches.append((a, nb))
    return p if same else Case(p.var, query, branches)


# Subterms recur heavily in enumerated corpora.  Steps are stored as a tree:
# a Rewrite applies at the memoised node, an (edge, steps) pair below it.
@lru_cache(maxsize=1 << 20)
def _norm(p: Proc, S: frozenset) -> tuple:
    if isinstance(p, Const):
        return p, ()
    i, q = p.var, p.query
    m = measure(p)
    if i not in S:
        steps = [Rewrite("2.1", (), m, m)]
        nq, sub = _norm(q, S | {i})
        if sub:
            steps.append(("q", sub))
        return _rebuild(p, nq, S, steps), tuple(steps)
    if isinstance(q, Const):
        if q.value is None:
            return BOTTOM, (Rewrite("2.2-bot", (), m, measure(BOTTOM)),)
        steps = [Rewrite("2.2", (), m, m)]
        return _rebuild(p, q, S, steps), tuple(steps)
    # 2.3: float the inner case outwards, then normalise the rebuilt node
    hat = Case(q.var, q.query, [(b, Case(i, qb, p.branches)) for b, qb in q.branches])
    r, sub = _norm(hat, S)
    return r, (Rewrite("2.3", (), m, measure(hat)),) + sub


def is_snormal(p: Proc, S: Iterable[int]) -> bool:
    return snormalize(p, S) == p
