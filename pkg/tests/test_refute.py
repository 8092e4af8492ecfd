import random

from syllog.core import And, Eq, Forall, In, Not, Or, Pair, Var, flatten_and, implies
from syllog.corpus import random_4lqsr
from syllog.normalize import FreshSupply, rename_apart
from syllog.refute import refute_by_instantiation
from syllog.solver import SAT, oracle_sat

from strategies import X1, X2, Y1, Z1, x, y, z

C3, B3 = Var("C", 3), Var("B", 3)
Z2 = Var("Z", 2)


def test_propositional_contradiction():
    assert refute_by_instantiation([In(x, X1), Not(In(x, X1))])


def test_universal_against_ground_fact():
    assert refute_by_instantiation([Forall((z,), In(z, X1)), Not(In(x, X1))])


def test_negated_universal_needs_a_witness():
    # nothing is in X, yet X has a member
    assert refute_by_instantiation([Forall((z,), Not(In(z, X1))), Not(Forall((z,), Not(In(z, X1))))])


def test_equality_is_congruent():
    assert refute_by_instantiation([Eq(x, y), In(x, X1), Not(In(y, X1))])


def test_distinct_sets_are_separated():
    # X and Y differ but agree on every element
    f = Forall((z,), And(implies(In(z, X1), In(z, Y1)), implies(In(z, Y1), In(z, X1))))
    assert refute_by_instantiation([f, Not(Eq(X1, Y1))])


def test_set_quantifier_reaches_pair_terms():
    # the pair is in C, everything in C is in B, and nothing in B is that pair
    through = Forall((Z2,), implies(In(Z2, C3), In(Z2, B3)))
    excluded = Forall((Z2,), implies(In(Z2, B3), Not(Eq(Pair(y, y), Z2))))
    assert refute_by_instantiation([through, excluded, In(Pair(y, y), C3)])


def test_satisfiable_input_not_refuted():
    assert not refute_by_instantiation([In(x, X1), Not(In(y, X1)), Forall((Z1,), Or(Not(In(Z1, X2)), In(x, Z1)))])


def test_never_refutes_satisfiable_corpus_formulae():
    rng = random.Random(17)
    checked = 0
    while checked < 60:
        f = random_4lqsr(rng)
        if oracle_sat(f, 2, budget=None).status != SAT:
            continue
        checked += 1
        g = rename_apart(f, FreshSupply(f))
        assert not refute_by_instantiation(flatten_and(g)), f
