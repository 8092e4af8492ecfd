import itertools
from pathlib import Path

import pytest

from syllog.builders import (
    SCHEMA_NAMES,
    BoolOpKind,
    BuilderError,
    RelationProperty,
    boolean_op,
    inverse_relation,
    pow_lt_h,
    pow_star,
    relation_property,
    schema,
    set_former,
    unordered_product,
)
from syllog.core import (
    Eq,
    Forall,
    HSet,
    In,
    Interpretation,
    Not,
    Pair,
    Var,
    alpha_equal,
    conj,
    decode_pair,
    evaluate,
    pair_value,
    powerset,
)
from syllog.fragment import is_4lqsr
from syllog.solver import SAT, UNSAT, oracle_sat
from syllog.syntax import parse

from oracles import subsets
from strategies import X1, X2, Y1, Z1, x, z

GOLDEN = Path(__file__).parent / "golden"
R, R1, R2 = Var("R", 3), Var("R1", 3), Var("R2", 3)
W = Var("W", 2)


def test_reflexive_row():
    assert alpha_equal(relation_property(RelationProperty.Reflexive, R), parse("forall z1 . <z1,z1> in R^3"))


def test_transitive_row():
    expected = parse("forall z1, z2, z3 . (<z1,z2> in R^3 & <z2,z3> in R^3) -> <z1,z3> in R^3")
    assert alpha_equal(relation_property("transitive", R), expected)


def test_irreflexive_row():
    assert alpha_equal(relation_property("irreflexive", R), parse("forall z1 . ~(<z1,z1> in R^3)"))


def test_intersection_row():
    expected = parse("forall Z^2 . Z^2 in R^3 <-> (Z^2 in R1^3 & Z^2 in R2^3)")
    assert alpha_equal(boolean_op(BoolOpKind.Intersection, R, R1, R2), expected)


def test_inclusion_row():
    expected = parse("forall Z^2 . Z^2 in R1^3 -> Z^2 in R2^3")
    assert alpha_equal(boolean_op("inclusion", None, R1, R2), expected)


def test_union_with_itself():
    f = boolean_op("union", R1, R, R)
    assert oracle_sat(conj(f, In(W, R1)), 1).status == SAT
    assert oracle_sat(conj(f, In(W, R1), Not(In(W, R))), 1).status == UNSAT


def test_inverse_display():
    expected = parse("forall z1, z2 . <z1,z2> in R1^3 <-> <z2,z1> in R2^3")
    assert alpha_equal(inverse_relation(R1, R2), expected)


def test_inverse_of_symmetric_relation():
    a, b = Var("a", 0), Var("b", 0)
    f = conj(inverse_relation(R1, R2), relation_property("symmetric", R1), In(Pair(a, b), R1))
    v = oracle_sat(f, 2)
    assert v.status == SAT
    m = v.model
    for p, q in itertools.product(m.domain, repeat=2):
        assert (pair_value(p, q) in m.assign[R1]) == (pair_value(q, p) in m.assign[R2])


def test_self_inverse_asymmetric_has_no_pairs():
    f = conj(inverse_relation(R1, R1), relation_property("asymmetric", R1))
    v = oracle_sat(f, 2)
    assert v.status == SAT
    assert not any(decode_pair(s) for s in v.model.assign[R1])
    a, b = Var("a", 0), Var("b", 0)
    assert oracle_sat(conj(f, In(Pair(a, b), R1)), 2, budget=None).status == UNSAT


def test_builder_sort_checks():
    with pytest.raises(BuilderError):
        relation_property("reflexive", X2)
    with pytest.raises(BuilderError):
        boolean_op("union", R, R1, X2)


# powerset below h


def test_pow_lt_h_rejects_small_h():
    with pytest.raises(BuilderError):
        pow_lt_h(X2, X1, 1)


def test_pow_lt_h_one_element():
    f = conj(pow_lt_h(X2, X1, 2), Forall((z,), In(z, X1)))
    v = oracle_sat(f, 1)
    assert v.status == SAT
    a = v.model.domain[0]
    assert v.model.assign[X2] == HSet(2, [HSet(1), HSet(1, [a])])


def test_pow_lt_h_excludes_two_elements():
    y = Var("y", 0)
    f = conj(pow_lt_h(X2, X1, 2), In(Y1, X2), In(x, Y1), In(y, Y1), Not(Eq(x, y)))
    assert oracle_sat(f, 3, budget=None).status == UNSAT


@pytest.mark.parametrize("h", [2, 3])
def test_pow_lt_h_is_exactly_the_small_subsets(h):
    f = pow_lt_h(X2, X1, h)
    for n in (1, 2):
        dom = tuple(range(n))
        level1 = powerset(dom, 1)
        for base in level1:
            want = HSet(2, [s for s in level1 if set(s) <= set(base) and len(s) < h])
            for fam in subsets(level1):
                m = Interpretation(dom, {X1: base, X2: HSet(2, fam)})
                assert evaluate(m, f) == (m.assign[X2] == want)


# set formation


def test_singleton_former():
    f = set_former(X1, z, Eq(z, x))
    assert alpha_equal(f, parse("forall z . z in X^1 <-> z = x"))


def test_copy_former():
    Y2 = Var("Y", 2)
    f = conj(set_former(X2, Z1, In(Z1, Y2)), In(Y1, Y2))
    v = oracle_sat(f, 2)
    assert v.status == SAT and v.model.assign[X2] == v.model.assign[Y2]


def test_former_rejects_unlinked_negative_universal():
    Y2 = Var("Y", 2)
    with pytest.raises(BuilderError):
        set_former(Y2, Z1, Not(Forall((z,), In(z, X1))))


def test_product_of_one_factor_is_singletons():
    f = unordered_product(X2, [X1])
    for n in (1, 2):
        dom = tuple(range(n))
        for base in powerset(dom, 1):
            want = HSet(2, [HSet(1, [d]) for d in base])
            m = Interpretation(dom, {X1: base, X2: want})
            assert evaluate(m, f)


def test_product_of_two_singletons():
    f = unordered_product(X2, [X1, Y1])
    m = Interpretation((0, 1), {X1: HSet(1, [0]), Y1: HSet(1, [1]), X2: HSet(2, [HSet(1, [0, 1])])})
    assert evaluate(m, f)
    v = oracle_sat(conj(f, In(Var("a", 0), X1), In(Var("b", 0), Y1), Not(Eq(Var("a", 0), Var("b", 0)))), 2)
    assert v.status == SAT
    assert v.model.assign[X2] == HSet(2, [HSet(1, v.model.domain)])


def test_product_matches_definition():
    # exhaustive: the formula pins X^2 to the collections {x1,...,xn}
    factors = [X1, Y1, Var("W", 1)]
    for k in (1, 2, 3):
        f = unordered_product(X2, factors[:k])
        dom = (0, 1)
        level1 = powerset(dom, 1)
        for values in itertools.product(level1, repeat=k):
            want = HSet(2, {HSet(1, pick) for pick in itertools.product(*values)})
            assign = dict(zip(factors, values))
            for fam in subsets(level1):
                m = Interpretation(dom, {**assign, X2: HSet(2, fam)})
                assert evaluate(m, f) == (m.assign[X2] == want)


def test_pow_star_one_argument_is_nonempty_subsets():
    A = Var("A", 2)
    f = pow_star(A, [X1])
    dom = (0, 1)
    for base in powerset(dom, 1):
        want = HSet(2, [s for s in powerset(dom, 1) if set(s) <= set(base) and s])
        v = oracle_sat(conj(f, *(In(Var(f"e{d}", 0), X1) for d in base)), 2)
        for fam in subsets(powerset(dom, 1)):
            m = Interpretation(dom, {X1: base, A: HSet(2, fam)})
            assert evaluate(m, f) == (m.assign[A] == want)
        assert v.status == SAT


def test_empty_argument_lists_rejected():
    with pytest.raises(BuilderError):
        unordered_product(X2, [])
    with pytest.raises(BuilderError):
        pow_star(Var("A", 2), [])


# relation-level fidelity


def _relation_holds(kind: str, rel: set, dom) -> bool:
    pairs = rel
    if kind == "binary-relation":
        # the row is a biconditional, so it pins R to every pair
        return pairs == set(itertools.product(dom, repeat=2))
    if kind == "reflexive":
        return all((a, a) in pairs for a in dom)
    if kind == "symmetric":
        return all((b, a) in pairs for a, b in pairs)
    if kind == "transitive":
        return all((a, d) in pairs for a, b in pairs for c, d in pairs if b == c)
    if kind == "euclidean":
        return all((b, d) in pairs for a, b in pairs for c, d in pairs if a == c)
    if kind == "weakly-connected":
        return all((b, d) in pairs or b == d or (d, b) in pairs for a, b in pairs for c, d in pairs if a == c)
    if kind == "irreflexive":
        return all(a != b for a, b in pairs)
    if kind == "intransitive":
        return all((a, d) not in pairs for a, b in pairs for c, d in pairs if b == c)
    if kind == "antisymmetric":
        return all(a == b for a, b in pairs if (b, a) in pairs)
    if kind == "asymmetric":
        return all((b, a) not in pairs for a, b in pairs)
    raise AssertionError(kind)


@pytest.mark.parametrize("kind", [k.value for k in RelationProperty])
def test_relation_rows_match_relational_predicate(kind):
    f = relation_property(kind, R)
    for n in (1, 2):
        dom = tuple(range(n))
        all_pairs = list(itertools.product(dom, repeat=2))
        for rel in subsets(all_pairs):
            m = Interpretation(dom, {R: HSet(3, [pair_value(a, b) for a, b in rel])})
            assert evaluate(m, f) == _relation_holds(kind, set(rel), dom), (kind, rel)


def test_binary_relation_is_exactly_all_pairs():
    f = relation_property("binary-relation", R)
    dom = (0, 1)
    stray = HSet(2, [HSet(1, [0]), HSet(1, [1])])
    full = [pair_value(a, b) for a in dom for b in dom]
    assert evaluate(Interpretation(dom, {R: HSet(3, full)}), f)
    assert not evaluate(Interpretation(dom, {R: HSet(3, full + [stray])}), f)
    assert not evaluate(Interpretation(dom, {R: HSet(3, [pair_value(0, 1)])}), f)


# fragment membership and golden files


def test_every_builder_output_in_fragment():
    outputs = [schema(name) for name in SCHEMA_NAMES]
    outputs += [pow_lt_h(X2, X1, 3), unordered_product(X2, [X1, Y1]), pow_star(Var("A", 2), [X1, Y1])]
    for f in outputs:
        assert is_4lqsr(f), f


def test_sixteen_schemas():
    assert len(SCHEMA_NAMES) == 16


@pytest.mark.parametrize("name", SCHEMA_NAMES)
def test_golden_schema(name):
    expected = parse((GOLDEN / f"{name}.4lqs").read_text())
    assert alpha_equal(schema(name), expected)
