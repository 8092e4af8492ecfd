import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from syllog.core import And, Eq, Forall, In, Not, Or, Var, disj
from syllog.corpus import random_4lqsr
from syllog.normalize import (
    FRESH_PREFIX,
    DnfStats,
    FragmentViolation,
    FreshSupply,
    eliminate_negative_quantifiers,
    is_renamed_apart,
    literal_kind,
    normalize,
    rename_apart,
    to_dnf,
)
from syllog.solver import SAT, oracle_sat
from syllog.syntax import tokenize

from strategies import X1, X2, Y1, Z1, x, y, z

A, B, C = In(x, X1), In(y, X1), Eq(x, y)


def test_dnf_atom():
    assert list(to_dnf(A)) == [[A]]


def test_dnf_distributes():
    assert list(to_dnf(And(Or(A, B), C))) == [[A, C], [B, C]]


def test_dnf_pushes_negation():
    assert list(to_dnf(Not(And(A, B)))) == [[Not(A)], [Not(B)]]


def test_dnf_keeps_universals_opaque():
    q = Forall((z,), Or(In(z, X1), In(z, Y1)))
    assert list(to_dnf(Not(q))) == [[Not(q)]]


def test_dnf_is_lazy():
    # 20 disjuncts; the first one must not force the others
    f = disj(*(In(Var(f"x{i}", 0), X1) for i in range(20)))
    stats = DnfStats()
    first = next(to_dnf(f, stats))
    assert first == [In(Var("x0", 0), X1)]
    full = DnfStats()
    assert len(list(to_dnf(f, full))) == 20
    # left-nested disjunction: the path to the first leaf has 19 Or nodes
    assert stats.expansions == 20
    assert full.expansions == 39


def test_rename_repeated_binder():
    f = And(Forall((z,), In(z, X1)), Forall((z,), In(z, Y1)))
    g = rename_apart(f)
    first, second = g.left, g.right
    assert first.bound == (z,)
    assert second.bound != (z,)
    assert is_renamed_apart(g)


def test_rename_away_from_free():
    f = And(In(z, X1), Forall((z,), In(z, Y1)))
    g = rename_apart(f)
    assert g.left == In(z, X1)
    assert g.right.bound[0] != z
    assert is_renamed_apart(g)


def test_rename_leaves_apart_formula_alone():
    f = And(Forall((z,), In(z, X1)), In(x, Y1))
    assert rename_apart(f) == f


def test_fresh_names_are_not_parseable():
    supply = FreshSupply(A)
    v = supply.fresh(0)
    assert v.name.startswith(FRESH_PREFIX)
    with pytest.raises(Exception):
        tokenize(v.name)


def test_eliminate_level1():
    (nc,) = eliminate_negative_quantifiers([Not(Forall((z,), In(z, X1)))], FreshSupply(A))
    (lit,) = nc.literals
    (fresh,) = nc.fresh_vars
    assert fresh.sort == 0 and fresh.name.startswith(FRESH_PREFIX)
    assert lit == Not(In(fresh, X1))


def test_eliminate_level2():
    (nc,) = eliminate_negative_quantifiers([Not(Forall((Z1,), In(Z1, X2)))], FreshSupply(A))
    (fresh,) = nc.fresh_vars
    assert fresh.sort == 1
    assert nc.literals == (Not(In(fresh, X2)),)


def test_positive_universal_kept():
    q = Forall((z,), In(z, X1))
    (nc,) = eliminate_negative_quantifiers([q], FreshSupply(q))
    assert nc.literals == (q,) and nc.fresh_vars == ()


def test_normalize_single_literal():
    assert [nc.literals for nc in normalize(A)] == [(A,)]


def test_normalize_two_disjuncts_equisatisfiable():
    f = Or(Not(Forall((z,), In(z, X1))), Eq(x, y))
    out = list(normalize(f))
    assert len(out) == 2
    assert out[1].literals == (Eq(x, y),)
    (lit,) = out[0].literals
    assert isinstance(lit, Not) and isinstance(lit.body, In) and lit.body.container == X1
    for n in (1, 2):
        original = oracle_sat(f, n).status == SAT
        parts = any(oracle_sat(nc.formula(), n).status == SAT for nc in out)
        assert original == parts


def test_normalize_contradiction():
    (nc,) = normalize(And(A, Not(A)))
    assert oracle_sat(nc.formula(), 3).status != SAT


def test_normalize_rejects_fragment_violation():
    bad = Forall((Z1,), Not(Forall((z,), In(z, Y1))))
    with pytest.raises(FragmentViolation):
        list(normalize(bad))


def test_literal_kind_rejects_compound():
    with pytest.raises(ValueError):
        literal_kind(And(A, B))


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 100_000))
def test_output_literals_are_classified(seed):
    f = random_4lqsr(random.Random(seed))
    for nc in normalize(f):
        assert set(nc.kinds()) <= {1, 2, 3}
        g = nc.formula()
        assert is_renamed_apart(g)
        for lit in nc.literals:
            assert not (isinstance(lit, Not) and isinstance(lit.body, Forall))
        assert nc.check()


def test_equisatisfiable_on_random_corpus():
    rng = random.Random(11)
    outcomes = set()
    for _ in range(300):
        f = random_4lqsr(rng, max_items=2)
        original = oracle_sat(f, 3, budget=None).status == SAT
        disjuncts = any(oracle_sat(nc.formula(), 3, budget=None).status == SAT for nc in normalize(f))
        assert original == disjuncts, f
        outcomes.add(original)
    assert outcomes == {True, False}
