"""Inductive evaluation of finite procedures, left-bound, and syntactic projection."""

from __future__ import annotations

from .flatdomain import ArgTuple, DomainError, NatBot
from .syntax import BOTTOM, Case, Const, Proc


def eval_proc(p: Proc, v: ArgTuple) -> NatBot:
    """Evaluate ``p`` on ``v``.

    The query is always evaluated to a value of N_bot, also when the
    interrogated function turns out to be non-strict.
    """
    if isinstance(p, Const):
        return p.value
    if p.var > v.arity:
        raise DomainError(f"x{p.var} used with only {v.arity} arguments")
    c = eval_proc(p.query, v)
    b = v.fn(p.var)(c)
    if b is None:
        return None
    branch = p.branch(b)
    return None if branch is None else eval_proc(branch, v)


def trace_eval(p: Proc, v: ArgTuple) -> tuple:
    """Like :func:`eval_proc` but also reports why evaluation stopped:
    ``"constant"``, ``"missing-branch"`` or ``"undefined-argument"``."""
    if isinstance(p, Const):
        return p.value, "constant"
    c, _ = trace_eval(p.query, v)
    b = v.fn(p.var)(c)
    if b is None:
        return None, "undefined-argument"
    branch = p.branch(b)
    if branch is None:
        return None, "missing-branch"
    return trace_eval(branch, v)


def eval_length(p: Proc) -> int:
    """Upper bound on the number of query evaluations performed by
    :func:`eval_proc` on any input."""
    if p._el is None:
        if isinstance(p, Const):
            p._el = 0
        else:
            tail = max((eval_length(q) for _, q in p.branches), default=0)
            p._el = 1 + eval_length(p.query) + tail
    return p._el


def left_bound(p: Proc) -> int:
    if p._lb is None:
        if isinstance(p, Const):
            p._lb = 0
        else:
            q = p.query
            left = (1 if isinstance(q, Case) else 0) + left_bound(q)
            p._lb = max([left, *(left_bound(b) for _, b in p.branches)])
    return p._lb


def project_proc(p: Proc, k: int) -> Proc:
    """Top-down projection: constants above ``k`` become bot, branches with
    labels above ``k`` are removed."""
    if isinstance(p, Const):
        return p if p.value is None or p.value <= k else BOTTOM
    branches = [(a, project_proc(q, k)) for a, q in p.branches if a <= k]
    return Case(p.var, project_proc(p.query, k), branches)
