import pytest

import oracles
from seqproc.flatdomain import (
    DomainError,
    InconsistentError,
    MonoFn,
    args,
    bottom_fn,
    constant_fn,
    embed_monofn,
    enumerate_monofns,
    flat_leq,
    flat_lub,
    mono_leq,
    mono_lub,
    parse_monofn,
    project_monofn,
    restrict,
    strict_fn,
    strictify_args,
)


def test_flat_order():
    assert flat_leq(None, 3)
    assert flat_leq(2, 2)
    assert not flat_leq(2, 3)
    assert not flat_leq(2, None)


def test_flat_lub():
    assert flat_lub(None, 4) == 4
    assert flat_lub(4, 4) == 4
    with pytest.raises(InconsistentError):
        flat_lub(1, 2)


def test_non_strict_must_be_constant():
    with pytest.raises(DomainError):
        MonoFn(1, 0, (0, 1))
    assert MonoFn(1, 0, (0, 0)) == constant_fn(0, 1)


def test_values_bounded_by_cap():
    with pytest.raises(DomainError):
        strict_fn([2, None])


def test_mono_leq_examples():
    f = strict_fn([0, None])
    g = strict_fn([0, 1])
    assert mono_leq(f, g)
    assert not mono_leq(g, f)
    assert mono_leq(bottom_fn(1), constant_fn(1, 1))
    assert mono_leq(strict_fn([1, 1]), constant_fn(1, 1))
    with pytest.raises(DomainError):
        mono_leq(bottom_fn(0), bottom_fn(1))


def test_mono_lub():
    assert mono_lub(strict_fn([0, None]), strict_fn([None, 1])) == strict_fn([0, 1])
    with pytest.raises(InconsistentError):
        mono_lub(strict_fn([0, None]), strict_fn([1, None]))
    # strict {0->0,1->0} and the constant 0 agree
    assert mono_lub(strict_fn([0, 0]), constant_fn(0, 1)) == constant_fn(0, 1)


@pytest.mark.parametrize("k,count", [(0, 3), (1, 11), (2, 67)])
def test_counts_match_brute_force(k, count):
    fns = enumerate_monofns(k)
    assert len(fns) == count == (k + 2) ** (k + 1) + (k + 1)
    assert {(f.at_bot, f.table) for f in fns} == oracles.all_monotone_maps(k)


def test_enumeration_order():
    fns = enumerate_monofns(1)
    assert fns[:2] == (constant_fn(0, 1), constant_fn(1, 1))
    assert fns[2] == bottom_fn(1)
    assert fns[-1] == strict_fn([1, 1])


def test_embedding_treats_large_arguments_as_bottom():
    f = constant_fn(1, 1)
    assert f(5) == 1
    assert strict_fn([0, 1])(5) is None
    e = embed_monofn(strict_fn([0, 1]), 3)
    assert e.table == (0, 1, None, None)


def test_projection_of_functions():
    assert project_monofn(constant_fn(2, 2), 1) == bottom_fn(1)
    assert project_monofn(strict_fn([2, 0, 1]), 1) == strict_fn([None, 0])
    for k in range(2):
        for f in enumerate_monofns(k):
            assert project_monofn(embed_monofn(f, k + 1), k) == f
        for f in enumerate_monofns(k + 1):
            assert mono_leq(embed_monofn(project_monofn(f, k), k + 1), f)


def test_restrict():
    assert restrict(3, 2) is None
    assert restrict(2, 2) == 2
    assert restrict(None, 0) is None


def test_strictify_args():
    v = args(constant_fn(1, 1), constant_fn(0, 1))
    w = strictify_args(v, {1})
    assert w.fn(1) == strict_fn([1, 1])
    assert w.fn(2) == constant_fn(0, 1)


def test_parse_monofn():
    assert parse_monofn("fn(bot=3;0=3,1=3)") == constant_fn(3, 3)
    assert parse_monofn("(bot=bot;0=1)", cap=1) == strict_fn([1, None])
    assert parse_monofn("(bot=bot; 1=0, 0=2)") == strict_fn([2, 0, None])
    f = strict_fn([0, None, 2])
    assert parse_monofn(str(f)) == f
    with pytest.raises(ValueError):
        parse_monofn("(bot=1;0=0)")
    with pytest.raises(ValueError):
        parse_monofn("(bot=bot;0=1,0=1)")
