import random

import pytest

import oracles
from seqproc.evaluator import eval_proc
from seqproc.extensional import (
    FunGraph,
    case_combine,
    denote,
    embed_fun,
    enumerate_sequentials,
    format_catalog,
    format_graph,
    graph_leq,
    graph_lub,
    is_monotone,
    is_sequential,
    parse_catalog,
    parse_graphs,
    project_fun,
    seq_lub,
    seq_lub_many,
    space,
    strictify,
)
from seqproc.flatdomain import InconsistentError, args_leq
from seqproc.syntax import Const, iter_procs, parse_proc, random_proc

F_AT0 = parse_proc("case x1(0){0 => 0}", 1)
G_AT1 = parse_proc("case x1(1){0 => 0}", 1)
NB = parse_proc("case x1(bot){3 => 9}", 1)


@pytest.fixture(scope="module")
def cat11():
    return enumerate_sequentials(1, 1)


def test_space_sizes_and_index():
    assert space(1, 1).size == 11
    assert space(2, 1).size == 121
    sp = space(2, 0)
    for j, v in enumerate(sp):
        assert sp.index(v) == j and sp.tuple_at(j) == v


def test_covers_generate_the_order():
    # the transitive closure of the cover pairs is the pointwise order
    sp = space(2, 1)
    lo, hi = sp.covers()
    up = {j: {j} for j in range(sp.size)}
    for a, b in zip(lo, hi):
        up[int(a)].add(int(b))
    changed = True
    while changed:
        changed = False
        for j in up:
            new = set().union(*(up[x] for x in up[j]))
            if new != up[j]:
                up[j], changed = new, True
    for a, v in enumerate(sp):
        assert up[a] == {b for b, w in enumerate(sp) if args_leq(v, w)}


def test_denote_examples():
    assert denote(Const(0), 1, 1).values() == [0] * 11
    F = denote(F_AT0, 1, 1)
    want = [0 if v.fn(1)(0) == 0 else None for v in space(1, 1)]
    assert F.values() == want
    # the constant 0 and the three strict maps with f(0)=0
    assert sum(x == 0 for x in want) == 4
    assert denote(NB, 1, 1).is_bottom()
    # at cap 3 the branch is reachable but 9 lies above the cap
    assert denote(NB, 1, 3).is_bottom()
    assert not denote(parse_proc("case x1(bot){3 => 2}", 1), 1, 3).is_bottom()


def test_denote_agrees_with_eval():
    r = random.Random(2)
    for _ in range(100):
        n, k = r.randint(1, 2), r.randint(0, 2)
        p = random_proc(n, k, 4, rng=r)
        G = denote(p, n, k)
        assert G.values() == [eval_proc(p, v) for v in space(n, k)]
        assert is_monotone(G)


def test_leq_and_lub():
    F, G = denote(F_AT0, 1, 1), denote(G_AT1, 1, 1)
    H = graph_lub(F, G)
    bot = FunGraph.constant(1, 1, None)
    assert graph_leq(bot, G) and graph_leq(F, F) and graph_leq(F, H) and graph_leq(G, H)
    assert H.values() == [0 if 0 in (v.fn(1)(0), v.fn(1)(1)) else None for v in space(1, 1)]
    assert graph_lub(F, bot) == F
    with pytest.raises(InconsistentError):
        graph_lub(F, FunGraph.constant(1, 1, 1))


def test_non_monotone_table_detected():
    vals = [None] * 11
    vals[2] = 0  # defined on the bottom argument only
    F = FunGraph.from_values(1, 1, vals)
    assert not is_monotone(F)


def test_strictify_examples():
    F = denote(F_AT0, 1, 1)
    assert strictify(F, {1}) == F == oracles.strictify_by_search(F, {1})
    N = denote(NB, 1, 3)
    assert strictify(N, {1}).is_bottom()
    assert oracles.strictify_by_search(N, {1}).is_bottom()
    assert strictify(F, ()) == F


def test_strictify_against_search():
    r = random.Random(8)
    for _ in range(60):
        n, k = r.randint(1, 2), r.randint(0, 1)
        F = denote(random_proc(n, k, 4, rng=r), n, k)
        for S in oracles.subsets(n):
            assert strictify(F, S) == oracles.strictify_by_search(F, S)


def test_embed_and_project_examples():
    F = denote(F_AT0, 1, 1)
    assert embed_fun(F, 1) == F and project_fun(F, 1) == F
    assert embed_fun(FunGraph.constant(1, 0, 0), 1) == FunGraph.constant(1, 1, 0)
    assert project_fun(FunGraph.constant(1, 2, 2), 1).is_bottom()
    assert project_fun(denote(F_AT0, 1, 2), 1) == F


def test_case_combine():
    c0 = FunGraph.constant(1, 1, 0)
    assert case_combine(1, c0, {0: c0}) == denote(F_AT0, 1, 1)
    assert case_combine(1, c0, {}).is_bottom()


def test_catalog_n1_k0():
    cat = enumerate_sequentials(1, 0)
    assert cat.complete and len(cat) == 4
    for F, w in zip(cat.members, cat.witnesses):
        assert denote(w, 1, 0) == F


def test_catalog_contains_every_small_denotation(cat11):
    assert cat11.complete
    for p in iter_procs(1, 1, 3):
        assert denote(p, 1, 1) in cat11
    cat20 = enumerate_sequentials(2, 0)
    r = random.Random(4)
    for _ in range(1000):
        assert denote(random_proc(2, 0, 5, rng=r), 2, 0) in cat20


def test_catalog_budget_marks_incomplete():
    cat = enumerate_sequentials(1, 1, budget=10)
    assert not cat.complete
    assert is_sequential(FunGraph.from_values(1, 1, [None] * 10 + [0]), cat).verdict == "unknown"


def test_sequentiality_decisions(cat11):
    F, G = denote(F_AT0, 1, 1), denote(G_AT1, 1, 1)
    assert is_sequential(graph_lub(F, G), cat11).verdict == "no"
    assert is_sequential(FunGraph.constant(1, 1, 0), cat11).verdict == "yes"
    d = is_sequential(F, cat11)
    assert d.verdict == "yes" and denote(d.witness, 1, 1) == F


def test_seq_lub(cat11):
    F, G = denote(F_AT0, 1, 1), denote(G_AT1, 1, 1)
    res = seq_lub(F, G, cat11)
    assert res.status == "least" and res.graph == FunGraph.constant(1, 1, 0)
    assert seq_lub(F, F, cat11).graph == F
    # consistent but answering different values on disjoint inputs
    G1 = denote(parse_proc("case x1(0){1 => 1}", 1), 1, 1)
    res = seq_lub(F, G1, cat11)
    assert res.status == "least"
    assert res.graph == denote(parse_proc("case x1(0){0 => 0, 1 => 1}", 1), 1, 1)
    assert seq_lub(F, FunGraph.constant(1, 1, 1), cat11).status == "none"


def test_seq_lub_is_least_by_filter(cat11):
    r = random.Random(9)
    for _ in range(40):
        F = r.choice(cat11.members)
        G = r.choice(cat11.members)
        res = seq_lub(F, G, cat11)
        bounds = [H for H in cat11.members if graph_leq(F, H) and graph_leq(G, H)]
        if not bounds:
            assert res.status == "none"
        elif res.status == "least":
            assert all(graph_leq(res.graph, H) for H in bounds)
        else:
            assert res.status == "no-least"
            assert not any(all(graph_leq(B, H) for H in bounds) for B in bounds)


def test_seq_lub_many_single(cat11):
    F = denote(F_AT0, 1, 1)
    assert seq_lub_many([F], cat11).graph == F


def test_graph_format_round_trip():
    r = random.Random(5)
    gs = [denote(random_proc(2, 1, 3, rng=r), 2, 1) for _ in range(3)]
    text = "".join(format_graph(G) for G in gs)
    assert text.startswith("graph n=2 k=1\n0 -> ")
    assert parse_graphs(text) == gs


def test_graph_parse_errors():
    with pytest.raises(ValueError):
        parse_graphs("graph n=1 k=0\n0 -> 0\n")
    with pytest.raises(ValueError):
        parse_graphs("graph n=1 k=0\n0 -> 0\n1 -> 0\n2 -> 5\n")


def test_catalog_format_round_trip():
    cat = enumerate_sequentials(1, 0)
    back = parse_catalog(format_catalog(cat))
    assert back.complete and back.members == cat.members
    assert [denote(w, 1, 0) for w in back.witnesses] == cat.members
