"""Command-line frontend: ``seqproc <verb> ...``."""

from __future__ import annotations

import argparse
import re
import sys
from typing import Optional

from . import chains as ch
from .evaluator import eval_proc, left_bound, project_proc, trace_eval
from .extensional import (
    denote,
    enumerate_sequentials,
    format_catalog,
    format_graph,
    graph_lub,
    is_sequential,
    parse_graphs,
    seq_lub,
)
from .flatdomain import ArgTuple, DomainError, check_strict_set, constant_fn, parse_monofn, show, show_set, strict_fn
from .normalform import snormalize
from .paths import termination_experiment
from .syntax import ParseError, ProcHeader, parse, parse_proc, pretty, pretty_file

USAGE_EXIT = 2
DOMAIN_EXIT = 1


class UsageError(Exception):
    pass


# -- input helpers -------------------------------------------------------------------


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None


def _load_proc(path: str):
    text = _read(path)
    try:
        return parse(text)
    except ParseError as exc:
        raise UsageError(f"{path}:{exc.line}:{exc.column}: {exc.message}") from None


def _strict_set(text: Optional[str], n: int) -> frozenset:
    if not text:
        return frozenset()
    body = text.strip().strip("{}")
    try:
        S = frozenset(int(x) for x in re.split(r"[,\s]+", body) if x)
    except ValueError:
        raise UsageError(f"bad strict set {text!r}") from None
    return check_strict_set(S, n)


_ARG_RE = re.compile(r"(?:\w+\s*:)?\s*(\(\s*bot\s*=[^)]*\))")


def parse_args_text(texts: list, cap: Optional[int] = None) -> ArgTuple:
    """Inline tuple syntax: one or more ``name:(bot=V;0=V,...)`` items.

    Without ``cap`` all functions are read at the largest cap any of them
    mentions."""
    literals = []
    for t in texts:
        found = _ARG_RE.findall(t)
        if not found:
            raise UsageError(f"bad argument literal {t!r}")
        literals += found
    try:
        if cap is None:
            cap = max(parse_monofn(lit).cap for lit in literals)
        return ArgTuple(tuple(parse_monofn(lit, cap) for lit in literals))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load_chain(args) -> ch.Chain:
    if args.gen:
        if args.gen == "jump-demo":
            return ch.jump_demo_chain(args.level if args.level is not None else 4)
        if args.gen.startswith("const:"):
            header, p = _load_proc(args.gen[len("const:"):])
            return ch.const_chain(p, header.arity, args.level if args.level is not None else 4)
        raise UsageError(f"unknown generator {args.gen!r}")
    if not args.file:
        raise UsageError("a chain file or --gen is required")
    try:
        return ch.parse_chain(_read(args.file))
    except ParseError as exc:
        raise UsageError(f"{args.file}:{exc.line}:{exc.column}: {exc.message}") from None
    except ValueError as exc:
        raise UsageError(f"{args.file}: {exc}") from None


def _load_graphs(paths: list) -> list:
    graphs = []
    for path in paths:
        try:
            graphs += parse_graphs(_read(path))
        except ValueError as exc:
            raise UsageError(f"{path}: {exc}") from None
    return graphs


# -- verbs ---------------------------------------------------------------------------


def cmd_parse(args, out):
    header, p = _load_proc(args.file)
    out.write((pretty_file(header, p) if not args.canonical else f"{header}; {pretty(p, canonical_form=True)}") + "\n")


def cmd_eval(args, out):
    header, p = _load_proc(args.file)
    v = parse_args_text(args.args, args.cap)
    if v.arity != header.arity:
        raise DomainError(f"procedure has arity {header.arity}, got {v.arity} arguments")
    if args.trace:
        value, why = trace_eval(p, v)
        out.write(f"{show(value)} ({why})\n")
    else:
        out.write(f"{show(eval_proc(p, v))}\n")


def _cap(args, header: ProcHeader) -> int:
    if args.cap is not None:
        return args.cap
    if header.cap is None:
        raise UsageError("no cap in the header; pass --cap")
    return header.cap


def cmd_denote(args, out):
    header, p = _load_proc(args.file)
    out.write(format_graph(denote(p, header.arity, _cap(args, header))))


def cmd_snf(args, out):
    header, p = _load_proc(args.file)
    S = _strict_set(args.strict, header.arity)
    trace: list = []
    q = snormalize(p, S, trace)
    out.write(pretty(q) + "\n")
    if args.trace:
        for r in trace:
            where = "/".join(map(str, r.path)) or "root"
            out.write(f"rule {r.rule} at {where}: measure {r.before} -> {r.after}\n")


def cmd_project(args, out):
    header, p = _load_proc(args.file)
    if args.level is None:
        raise UsageError("project needs --level")
    out.write(pretty(project_proc(p, args.level), canonical_form=args.canonical) + "\n")


def cmd_leftbound(args, out):
    _, p = _load_proc(args.file)
    out.write(f"{left_bound(p)}\n")


def _catalog(n: int, k: int, budget: int):
    return enumerate_sequentials(n, k, budget=budget)


def cmd_enumerate(args, out):
    if args.arity is None or args.cap is None:
        raise UsageError("enumerate needs --arity and --cap")
    cat = _catalog(args.arity, args.cap, args.budget)
    if args.full:
        out.write(format_catalog(cat))
    else:
        out.write(f"catalog n={cat.n} k={cat.k} members={len(cat)} complete={'true' if cat.complete else 'false'}\n")


def cmd_check_seq(args, out):
    for F in _load_graphs(args.files):
        cat = _catalog(F.n, F.k, args.budget)
        d = is_sequential(F, cat)
        out.write(f"{d.verdict}" + (f" {pretty(d.witness)}" if d.witness is not None else "") + "\n")


def cmd_seq_lub(args, out):
    graphs = _load_graphs(args.files)
    if len(graphs) != 2:
        raise UsageError(f"seq-lub needs exactly two graphs, got {len(graphs)}")
    F, G = graphs
    cat = _catalog(F.n, F.k, args.budget)
    if not cat.complete:
        out.write("unknown (catalog incomplete)\n")
        return
    res = seq_lub(F, G, cat)
    if res.status == "least":
        out.write(f"least {pretty(res.witness)}\n")
        out.write(format_graph(res.graph))
    else:
        out.write(f"{res.status}\n")


def cmd_chain_check(args, out):
    c = _load_chain(args)
    out.write(str(ch.chain_check(c, args.level)) + "\n")


def cmd_eval_lub(args, out):
    c = _load_chain(args)
    S = _strict_set(args.strict, c.n)
    v = parse_args_text(args.args, args.cap)
    res, spent = ch.LubEvaluator(c, S).evaluate_counted(v, args.fuel)
    out.write(f"{res if res is ch.FUEL_EXHAUSTED else show(res)}\n")
    if args.verbose:
        out.write(f"fuel spent {spent}\n")


def cmd_synth(args, out):
    c = _load_chain(args)
    if c.is_lazy:
        raise UsageError("synth needs a truncated chain file")
    S = _strict_set(args.strict, c.n)
    p = ch.synth_proc(c, S, args.level)
    out.write(pretty(p) + "\n")


def cmd_paths_experiment(args, out):
    n = args.arity or 1
    k = args.cap if args.cap is not None else 1
    rep = termination_experiment(n, k, args.trials, seed=args.seed)
    out.write(f"trials {rep.trials} groups {rep.groups} comparisons {rep.comparisons} "
              f"disagreements {len(rep.findings)}\n")
    for f in rep.findings[: args.show]:
        out.write(f"S={show_set(f.S)} {f.path}\n  {pretty(f.first)} -> {show(f.values[0])}\n"
                  f"  {pretty(f.second)} -> {show(f.values[1])}\n")


# -- demos -----------------------------------------------------------------------------


F_AT0 = "case x1(0){0 => 0}"
G_AT1 = "case x1(1){0 => 0}"


def demo_two_point(out):
    F, G = denote(parse_proc(F_AT0, 1), 1, 1), denote(parse_proc(G_AT1, 1), 1, 1)
    H = graph_lub(F, G)
    cat = enumerate_sequentials(1, 1)
    d = is_sequential(H, cat)
    res = seq_lub(F, G, cat)
    out.write(f"F = {F_AT0}\nG = {G_AT1}\n")
    out.write(f"pointwise lub H: {int((H.table >= 0).sum())} of {H.table.size} inputs defined\n")
    out.write(f"catalog n=1 k=1: {len(cat)} members, complete={cat.complete}\n")
    out.write(f"H sequential: {'YES' if d.verdict == 'yes' else 'NO'}\n")
    if res.status == "least" and res.graph.is_constant():
        out.write(f"F⊔G = const {show(res.graph.constant_value())}\n")
    elif res.status == "least":
        out.write(f"F⊔G = {pretty(res.witness)}\n")
    else:
        out.write(f"F⊔G: {res.status}\n")


def jump_panel() -> list:
    """Named inputs for the jump demo, at caps 1 to 3."""
    return [
        ("constant 2", ArgTuple((constant_fn(2, 2),))),
        ("constant 1", ArgTuple((constant_fn(1, 1),))),
        ("f(0)=0", ArgTuple((strict_fn([0, None]),))),
        ("f(0)=1 f(1)=0", ArgTuple((strict_fn([1, 0]),))),
        ("f(0)=1 f(1)=bot", ArgTuple((strict_fn([1, None]),))),
        ("f(0)=3 f(1)=2", ArgTuple((strict_fn([3, 2, None, None]),))),
        ("f(0)=3 f(1)=bot", ArgTuple((strict_fn([3, None, 1, 0]),))),
        ("f(0)=2 f(1)=bot", ArgTuple((strict_fn([2, None, None]),))),
        ("f(0)=bot strict", ArgTuple((strict_fn([None, 1, 2]),))),
        ("bottom", ArgTuple((strict_fn([None, None]),))),
    ]


def jump_inspect(c: ch.Chain, v: ArgTuple):
    """The chain's lub at ``v``, read off the first level at or above the
    input's cap where it is defined (None if no inspected level is)."""
    from .extensional import space as _space
    from .flatdomain import embed_args

    for l in range(v.cap, c.ceiling + 1):
        w = embed_args(v, l)
        val = c.graph(l)[_space(c.n, l).index(w)]
        if val is not None:
            return val
    return None


def demo_jump(out, fuel: int, ceiling: int = 4):
    c = ch.jump_demo_chain(ceiling)
    out.write(f"jump-demo chain, ceiling {ceiling}: {ch.chain_check(c)}\n")
    ev = ch.LubEvaluator(c, ())
    for name, v in jump_panel():
        res, spent = ev.evaluate_counted(v, fuel)
        direct = jump_inspect(c, v)
        shown = str(res) if res is ch.FUEL_EXHAUSTED else show(res)
        out.write(f"{name:18s} -> {shown:14s} fuel {spent:5d}  direct {show(direct)}\n")


def cmd_demo(args, out):
    if args.name == "ex31":
        demo_two_point(out)
    elif args.name == "jump-demo":
        demo_jump(out, args.fuel, args.level if args.level is not None else 4)
    else:
        raise UsageError(f"unknown demo {args.name!r}")


# -- dispatch ----------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--cap", type=int)
    common.add_argument("--arity", type=int)
    common.add_argument("--strict", help="strict set, e.g. 1,2")
    common.add_argument("--fuel", type=int, default=10_000)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--level", type=int)

    p = _Parser(prog="seqproc", description="Finite sequential procedures and their lubs.")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def verb(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
        return sp

    sp = verb("parse", cmd_parse, "parse and pretty-print a procedure file")
    sp.add_argument("file")
    sp.add_argument("--canonical", action="store_true")
    sp = verb("eval", cmd_eval, "evaluate a procedure on inline arguments")
    sp.add_argument("file")
    sp.add_argument("--args", action="append", required=True)
    sp.add_argument("--trace", action="store_true")
    sp = verb("denote", cmd_denote, "print the graph at a cap")
    sp.add_argument("file")
    sp = verb("snf", cmd_snf, "S-normal form")
    sp.add_argument("file")
    sp.add_argument("--trace", action="store_true")
    sp = verb("project", cmd_project, "syntactic projection to a level")
    sp.add_argument("file")
    sp.add_argument("--canonical", action="store_true")
    sp = verb("leftbound", cmd_leftbound, "left bound of a procedure")
    sp.add_argument("file")
    sp = verb("enumerate", cmd_enumerate, "build the catalog of sequential functionals")
    sp.add_argument("--budget", type=int, default=50_000_000)
    sp.add_argument("--full", action="store_true")
    sp = verb("check-seq", cmd_check_seq, "decide sequentiality of graphs")
    sp.add_argument("files", nargs="+")
    sp.add_argument("--budget", type=int, default=50_000_000)
    sp = verb("seq-lub", cmd_seq_lub, "least sequential upper bound of two graphs")
    sp.add_argument("files", nargs="+")
    sp.add_argument("--budget", type=int, default=50_000_000)
    for name, fn, help_ in (("chain-check", cmd_chain_check, "check a chain"),
                            ("eval-lub", cmd_eval_lub, "evaluate the lub of a chain"),
                            ("synth", cmd_synth, "synthesise a procedure for a chain's lub")):
        sp = verb(name, fn, help_)
        sp.add_argument("file", nargs="?")
        sp.add_argument("--gen")
        if name == "eval-lub":
            sp.add_argument("--args", action="append", required=True)
            sp.add_argument("--verbose", action="store_true")
    sp = verb("paths-experiment", cmd_paths_experiment, "search for termination disagreements")
    sp.add_argument("--trials", type=int, default=2000)
    sp.add_argument("--show", type=int, default=3)
    sp = verb("demo", cmd_demo, "built-in demonstrations")
    sp.add_argument("name")
    return p


def run(argv: Optional[list] = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        args = build_parser().parse_args(argv)
        args.func(args, out)
    except UsageError as exc:
        err.write(f"error: {exc}\n")
        return USAGE_EXIT
    except DomainError as exc:
        err.write(f"domain error: {exc}\n")
        return DOMAIN_EXIT
    except SystemExit as exc:      # --help
        return int(exc.code or 0)
    return 0


def main() -> None:
    sys.exit(run())
