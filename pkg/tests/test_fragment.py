import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from syllog.builders import relation_property
from syllog.core import And, Eq, Forall, In, Not, Or, Pair, Var, conj, implies
from syllog.corpus import random_h_formula
from syllog.fragment import (
    NotInHFragment,
    UnsupportedFragmentError,
    check_restriction_1,
    check_restriction_2,
    countermodel_2ls,
    decompose_h,
    in_h_fragment,
    is_4lqsr,
    shell,
    validity_2ls,
)
from syllog.modal import parse_modal, relation_axioms, translate_k45

from oracles import valid_by_search
from strategies import X1, X2, Y1, Z1, Z2, x, y

z1 = Var("z1", 0)
z2 = Var("z2", 0)
z = Var("z", 0)
BOTTOM = Not(Eq(z1, z1))


# condition-(1) validity


def test_negated_implication_yields_antecedent():
    f = implies(Not(implies(In(z1, Z1), BOTTOM)), In(z1, Z1))
    assert validity_2ls(f)


def test_unsatisfiable_antecedent_is_valid():
    assert validity_2ls(implies(BOTTOM, In(z1, Z1)))


def test_unrelated_sets_are_invalid():
    f = implies(Not(In(z1, Z1)), In(z1, Y1))
    assert not validity_2ls(f)
    blocks, bits = countermodel_2ls(f)
    assert blocks == {z1: 0}
    assert not bits[(0, Z1)] and not bits[(0, Y1)]


def test_set_equality_unsupported():
    with pytest.raises(UnsupportedFragmentError):
        validity_2ls(Eq(X1, Y1))


atoms_2ls = st.one_of(
    st.tuples(st.sampled_from([x, y, z1]), st.sampled_from([x, y, z1])).map(lambda p: Eq(*p)),
    st.tuples(st.sampled_from([x, y, z1]), st.sampled_from([X1, Y1])).map(lambda p: In(*p)),
)
qf_2ls = st.recursive(
    atoms_2ls,
    lambda s: st.one_of(s.map(Not), st.tuples(s, s).map(lambda p: And(*p)), st.tuples(s, s).map(lambda p: Or(*p))),
    max_leaves=6,
)


@settings(max_examples=200, deadline=None)
@given(qf_2ls)
def test_validity_matches_search(f):
    assert validity_2ls(f) == valid_by_search(f)


# Restriction I


def _level2(body):
    return Forall((Z1,), body)


def test_linked_condition_holds():
    f = _level2(Not(Forall((z,), implies(In(z, Z1), Eq(z, z)))))
    reports = check_restriction_1(f)
    assert len(reports) == 1 and reports[0].valid
    assert is_4lqsr(f)


def test_vacuous_condition_holds():
    f = _level2(Not(Forall((z,), Eq(z, z))))
    assert all(r.valid for r in check_restriction_1(f))


def test_unlinked_condition_fails():
    f = _level2(Not(Forall((z,), In(z, Y1))))
    reports = check_restriction_1(f)
    assert reports and not reports[0].valid
    verdict = is_4lqsr(f)
    assert not verdict
    assert verdict.diagnostics[0].to_json()["rule"] == "RestrI"


# Restriction II


def test_relation_axioms_pass():
    for ax in relation_axioms(Var("R", 3), Var("B", 3)):
        assert check_restriction_2(ax), ax
    for ax in relation_axioms(Var("R", 3), Var("B", 3), full_relation=True):
        assert check_restriction_2(ax), ax


def test_negative_level2_inside_level3_fails():
    f = Forall((Z2,), Not(Forall((Z1,), In(Z1, Z2))))
    assert not check_restriction_2(f)


def test_wrong_negative_level1_shape_fails():
    f = Forall((Z2,), Not(Forall((z1,), In(z1, X1))))
    result = check_restriction_2(f)
    assert not result
    assert all("path" in d.to_json() for d in result.diagnostics)


def test_pair_block_shape_passes():
    f = Forall((Z2,), Or(Not(In(Z2, Var("R", 3))), Not(Forall((z1, z2), Not(Eq(Pair(z1, z2), Z2))))))
    assert check_restriction_2(f)


# Definition-2 decomposition


def test_translation_accepted():
    tr = translate_k45(parse_modal("[]p1 & <>~p2"))
    d = decompose_h(tr.formula, 3)
    assert d.h == 3


def test_missing_universe_conjunct_rejected():
    parts = shell(2)[1:] + [In(x, X1)]
    with pytest.raises(NotInHFragment):
        decompose_h(conj(*parts), 2)


def test_long_prefix_rejected():
    zs = tuple(Var(f"u{i}", 0) for i in range(3))
    long = Forall(zs, Or(Not(In(zs[0], X1)), Eq(zs[1], zs[2])))
    assert in_h_fragment(conj(*shell(3), long), 3)
    assert not in_h_fragment(conj(*shell(2), long), 2)


def test_h_below_two_rejected():
    with pytest.raises(ValueError):
        decompose_h(conj(*shell(2)), 1)


def test_reassembly_reproduces_conjuncts():
    f = random_h_formula(random.Random(1), 3)
    d = decompose_h(f, 3)
    assert sorted(map(repr, d.parts())) == sorted(map(repr, _conjuncts(f)))


def _conjuncts(f):
    from syllog.core import flatten_and

    return flatten_and(f)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 3]), st.randoms(use_true_random=False))
def test_acceptance_ignores_conjunct_order(seed, h, shuffler):
    f = random_h_formula(random.Random(seed), h)
    parts = _conjuncts(f)
    shuffler.shuffle(parts)
    assert bool(in_h_fragment(conj(*parts), h))
    assert is_4lqsr(f)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.randoms(use_true_random=False))
def test_order_insensitive_on_rejections(seed, shuffler):
    # drop one shell conjunct sometimes, so rejected inputs are exercised too
    f = random_h_formula(random.Random(seed), 2)
    parts = _conjuncts(f)
    if shuffler.random() < 0.5:
        parts.pop(shuffler.randrange(3))
    before = bool(in_h_fragment(conj(*parts), 2))
    shuffler.shuffle(parts)
    assert bool(in_h_fragment(conj(*parts), 2)) == before


def test_builder_property_in_fragment():
    assert is_4lqsr(relation_property("transitive", Var("R", 3)))
