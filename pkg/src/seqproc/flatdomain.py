"""Truncated flat domain {bot, 0, ..., k} and monotone unary functions on it.

Bottom is represented by ``None``; defined values are plain ``int``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Sequence

NatBot = Optional[int]
BOT: NatBot = None


class DomainError(ValueError):
    """Raised on cap mismatches and other shape errors."""


class InconsistentError(DomainError):
    """Raised when a least upper bound does not exist."""


def show(a: NatBot) -> str:
    return "bot" if a is None else str(a)


def flat_leq(a: NatBot, b: NatBot) -> bool:
    return a is None or a == b


def flat_lub(a: NatBot, b: NatBot) -> NatBot:
    if a is None:
        return b
    if b is None or a == b:
        return a
    raise InconsistentError(f"{a} and {b} have no upper bound")


def restrict(a: NatBot, k: int) -> NatBot:
    """Base-type projection: values above ``k`` collapse to bottom."""
    return a if a is not None and a <= k else None


def sort_key(a: NatBot) -> int:
    return -1 if a is None else a


@dataclass(frozen=True)
class MonoFn:
    """A monotone function on {bot, 0, ..., cap}.

    ``table[x]`` is the value at ``x``; ``at_bot`` the value at bottom.
    Monotonicity in the flat order means a defined ``at_bot`` forces a
    constant function.
    """

    cap: int
    at_bot: NatBot
    table: tuple

    def __post_init__(self):
        if len(self.table) != self.cap + 1:
            raise DomainError(f"table has {len(self.table)} entries, expected {self.cap + 1}")
        for v in (self.at_bot, *self.table):
            if v is not None and not 0 <= v <= self.cap:
                raise DomainError(f"value {v} outside cap {self.cap}")
        if self.at_bot is not None and any(v != self.at_bot for v in self.table):
            raise DomainError("non-strict function must be constant")

    def __call__(self, x: NatBot) -> NatBot:
        # Arguments above the cap behave like bottom (the embedding into N_bot).
        if x is None or x > self.cap:
            return self.at_bot
        return self.table[x]

    @property
    def is_strict(self) -> bool:
        return self.at_bot is None

    def __str__(self) -> str:
        body = ",".join(f"{x}={show(v)}" for x, v in enumerate(self.table))
        return f"fn(bot={show(self.at_bot)}; {body})"


def constant_fn(c: NatBot, cap: int) -> MonoFn:
    return MonoFn(cap, c, (c,) * (cap + 1))


def strict_fn(table: Sequence[NatBot]) -> MonoFn:
    return MonoFn(len(table) - 1, None, tuple(table))


def bottom_fn(cap: int) -> MonoFn:
    return constant_fn(None, cap)


def mono_leq(f: MonoFn, g: MonoFn) -> bool:
    if f.cap != g.cap:
        raise DomainError(f"cap mismatch: {f.cap} vs {g.cap}")
    return flat_leq(f.at_bot, g.at_bot) and all(map(flat_leq, f.table, g.table))


def mono_lub(f: MonoFn, g: MonoFn) -> MonoFn:
    if f.cap != g.cap:
        raise DomainError(f"cap mismatch: {f.cap} vs {g.cap}")
    at_bot = flat_lub(f.at_bot, g.at_bot)
    table = tuple(flat_lub(a, b) for a, b in zip(f.table, g.table))
    try:
        return MonoFn(f.cap, at_bot, table)
    except DomainError as exc:
        raise InconsistentError(f"pointwise lub is not monotone: {exc}") from None


@lru_cache(maxsize=None)
def enumerate_monofns(k: int) -> tuple:
    """All monotone functions at cap ``k``: constants ascending, then strict
    functions in lexicographic table order (bot < 0 < 1 < ...)."""
    values = [None, *range(k + 1)]
    consts = [constant_fn(c, k) for c in range(k + 1)]
    stricts = [strict_fn(t) for t in itertools.product(values, repeat=k + 1)]
    return tuple(consts + stricts)


@lru_cache(maxsize=None)
def monofn_index(k: int) -> dict:
    return {f: i for i, f in enumerate(enumerate_monofns(k))}


def project_monofn(f: MonoFn, k: int) -> MonoFn:
    if k > f.cap:
        raise DomainError(f"cannot project cap {f.cap} function to larger cap {k}")
    at_bot = restrict(f.at_bot, k)
    if f.at_bot is not None and at_bot is None:
        # constant above the cap: the only monotone repair is bottom
        return bottom_fn(k)
    return MonoFn(k, at_bot, tuple(restrict(v, k) for v in f.table[: k + 1]))


def embed_monofn(f: MonoFn, k: int) -> MonoFn:
    if k < f.cap:
        raise DomainError(f"cannot embed cap {f.cap} function into smaller cap {k}")
    return MonoFn(k, f.at_bot, tuple(f(x) for x in range(k + 1)))


@dataclass(frozen=True)
class ArgTuple:
    """An n-tuple of monotone functions sharing one cap.  Indexed 1..n via
    :meth:`fn`, 0-based via ``entries``."""

    entries: tuple

    def __post_init__(self):
        if not self.entries:
            raise DomainError("argument tuple must be non-empty")
        if len({f.cap for f in self.entries}) != 1:
            raise DomainError("all entries of an argument tuple must share one cap")

    @property
    def arity(self) -> int:
        return len(self.entries)

    @property
    def cap(self) -> int:
        return self.entries[0].cap

    def fn(self, i: int) -> MonoFn:
        return self.entries[i - 1]

    def __iter__(self):
        return iter(self.entries)

    def __str__(self) -> str:
        return "(" + ", ".join(map(str, self.entries)) + ")"


def args(*fns: MonoFn) -> ArgTuple:
    return ArgTuple(tuple(fns))


def args_leq(v: ArgTuple, w: ArgTuple) -> bool:
    return v.arity == w.arity and all(map(mono_leq, v.entries, w.entries))


def strictify_args(v: ArgTuple, S: Iterable[int]) -> ArgTuple:
    """Largest tuple below ``v`` whose entries at positions in ``S`` are strict."""
    S = frozenset(S)
    return ArgTuple(tuple(
        MonoFn(f.cap, None, f.table) if i in S else f
        for i, f in enumerate(v.entries, start=1)
    ))


def project_args(v: ArgTuple, k: int) -> ArgTuple:
    return ArgTuple(tuple(project_monofn(f, k) for f in v.entries))


def embed_args(v: ArgTuple, k: int) -> ArgTuple:
    return ArgTuple(tuple(embed_monofn(f, k) for f in v.entries))


def check_strict_set(S: Iterable[int], n: int) -> frozenset:
    S = frozenset(S)
    bad = [i for i in S if not 1 <= i <= n]
    if bad:
        raise DomainError(f"strict set members {sorted(bad)} outside 1..{n}")
    return S


def show_set(S: Iterable[int]) -> str:
    return "{" + ",".join(map(str, sorted(S))) + "}"


# -- textual form ------------------------------------------------------------

_FN_RE = re.compile(r"^\s*(?:fn)?\s*\(\s*bot\s*=\s*(\w+)\s*;(.*)\)\s*$")


def _parse_value(tok: str) -> NatBot:
    tok = tok.strip()
    if tok == "bot":
        return None
    if not tok.isdigit():
        raise ValueError(f"bad value {tok!r}")
    return int(tok)


def parse_monofn(text: str, cap: Optional[int] = None) -> MonoFn:
    """Parse ``fn(bot=V; 0=V,1=V,...)``.  Positions may appear in any order;
    missing positions of a strict function default to bot.  ``cap`` defaults
    to the largest position or value mentioned."""
    m = _FN_RE.match(text)
    if not m:
        raise ValueError(f"malformed function literal {text!r}")
    at_bot = _parse_value(m.group(1))
    points = {}
    body = m.group(2).strip()
    if body:
        for item in body.split(","):
            key, _, val = item.partition("=")
            if not key.strip().isdigit():
                raise ValueError(f"bad argument position {key!r}")
            x = int(key)
            if x in points:
                raise ValueError(f"duplicate argument position {x}")
            points[x] = _parse_value(val)
    if cap is None:
        mentioned = [*points, *(v for v in (at_bot, *points.values()) if v is not None)]
        cap = max(mentioned, default=0)
    if any(x > cap for x in points):
        raise ValueError(f"argument position above cap {cap}")
    if at_bot is not None:
        table = [points.get(x, at_bot) for x in range(cap + 1)]
    else:
        table = [points.get(x) for x in range(cap + 1)]
    return MonoFn(cap, at_bot, tuple(table))
