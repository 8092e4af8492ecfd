"""Formula constructors for set-theoretic operators and relation properties.

Binary relations are sort-3 variables whose members are Kuratowski pairs.
Bound variables get fixed names (``z1``, ``z2``, ``z3``, ``Z^2`` ...), so the
output is reproducible and can be compared against stored text.
"""

from __future__ import annotations

from enum import Enum
from itertools import combinations
from typing import Sequence

from .core import (
    And,
    Eq,
    Forall,
    Formula,
    In,
    Not,
    Or,
    Pair,
    Var,
    conj,
    disj,
    iff,
    implies,
)
from .fragment import is_4lqsr


class BuilderError(ValueError):
    pass


class RelationProperty(Enum):
    BinaryRelation = "binary-relation"
    Reflexive = "reflexive"
    Symmetric = "symmetric"
    Transitive = "transitive"
    Euclidean = "euclidean"
    WeaklyConnected = "weakly-connected"
    Irreflexive = "irreflexive"
    Intransitive = "intransitive"
    Antisymmetric = "antisymmetric"
    Asymmetric = "asymmetric"


class BoolOpKind(Enum):
    Intersection = "intersection"
    Union = "union"
    Complement = "complement"
    Difference = "difference"
    Inclusion = "inclusion"


z1, z2, z3 = Var("z1", 0), Var("z2", 0), Var("z3", 0)
Z2 = Var("Z", 2)


def _check_sort(v: Var, sort: int, role: str) -> None:
    if not isinstance(v, Var) or v.sort != sort:
        raise BuilderError(f"{role} must be a sort-{sort} variable, got {v}")


def _pin(a: Var, b: Var, R: Var) -> Formula:
    return In(Pair(a, b), R)


def relation_property(kind: RelationProperty | str, R: Var) -> Formula:
    kind = RelationProperty(kind)
    _check_sort(R, 3, "the relation")
    if kind is RelationProperty.BinaryRelation:
        some_pair = Not(Forall((z1, z2), Not(Eq(Pair(z1, z2), Z2))))
        return Forall((Z2,), iff(In(Z2, R), some_pair))
    if kind is RelationProperty.Reflexive:
        return Forall((z1,), _pin(z1, z1, R))
    if kind is RelationProperty.Symmetric:
        return Forall((z1, z2), implies(_pin(z1, z2, R), _pin(z2, z1, R)))
    if kind is RelationProperty.Transitive:
        return Forall((z1, z2, z3), implies(And(_pin(z1, z2, R), _pin(z2, z3, R)), _pin(z1, z3, R)))
    if kind is RelationProperty.Euclidean:
        return Forall((z1, z2, z3), implies(And(_pin(z1, z2, R), _pin(z1, z3, R)), _pin(z2, z3, R)))
    if kind is RelationProperty.WeaklyConnected:
        return Forall(
            (z1, z2, z3),
            implies(
                And(_pin(z1, z2, R), _pin(z1, z3, R)),
                Or(Or(_pin(z2, z3, R), Eq(z2, z3)), _pin(z3, z2, R)),
            ),
        )
    if kind is RelationProperty.Irreflexive:
        return Forall((z1,), Not(_pin(z1, z1, R)))
    if kind is RelationProperty.Intransitive:
        return Forall((z1, z2, z3), implies(And(_pin(z1, z2, R), _pin(z2, z3, R)), Not(_pin(z1, z3, R))))
    if kind is RelationProperty.Antisymmetric:
        return Forall((z1, z2), implies(And(_pin(z1, z2, R), _pin(z2, z1, R)), Eq(z1, z2)))
    if kind is RelationProperty.Asymmetric:
        return Forall((z1, z2), implies(_pin(z1, z2, R), Not(_pin(z2, z1, R))))
    raise AssertionError(kind)


def boolean_op(kind: BoolOpKind | str, out: Var | None, lhs: Var, rhs: Var | None = None) -> Formula:
    """``out = lhs op rhs``; the complement reads ``out = ~lhs`` and the
    inclusion ``lhs <= rhs`` (``out`` unused)."""
    kind = BoolOpKind(kind)
    _check_sort(lhs, 3, "the left operand")
    if kind is not BoolOpKind.Complement:
        _check_sort(rhs, 3, "the right operand")
    if kind is not BoolOpKind.Inclusion:
        _check_sort(out, 3, "the result")
    a = In(Z2, lhs)
    if kind is BoolOpKind.Inclusion:
        return Forall((Z2,), implies(a, In(Z2, rhs)))
    if kind is BoolOpKind.Complement:
        return Forall((Z2,), iff(In(Z2, out), Not(a)))
    b = In(Z2, rhs)
    body = {
        BoolOpKind.Intersection: And(a, b),
        BoolOpKind.Union: Or(a, b),
        BoolOpKind.Difference: And(a, Not(b)),
    }[kind]
    return Forall((Z2,), iff(In(Z2, out), body))


def inverse_relation(R1: Var, R2: Var) -> Formula:
    _check_sort(R1, 3, "the relation")
    _check_sort(R2, 3, "the inverse")
    return Forall((z1, z2), iff(_pin(z1, z2, R1), _pin(z2, z1, R2)))


def at_most(members: Sequence[Var], container: Var) -> Formula:
    """Any ``len(members)`` members of ``container`` contain a repetition."""
    return implies(
        conj(*(In(z, container) for z in members)),
        disj(*(Eq(a, b) for a, b in combinations(members, 2))),
    )


def pow_lt_h(X2: Var, X1: Var, h: int) -> Formula:
    """``X2`` is the family of subsets of ``X1`` with fewer than ``h`` elements."""
    if h < 2:
        raise BuilderError("h must be at least 2")
    _check_sort(X2, 2, "the family")
    _check_sort(X1, 1, "the base set")
    Y = Var("Y", 1)
    z = Var("z", 0)
    zs = tuple(Var(f"z{i}", 0) for i in range(1, h + 1))
    subset = Forall((z,), implies(In(z, Y), In(z, X1)))
    small = Forall(zs, at_most(zs, Y))
    return Forall((Y,), iff(In(Y, X2), And(subset, small)))


def set_former(target: Var, member: Var, body: Formula) -> Formula:
    """``target = {member : body}``."""
    if target.sort not in (1, 2, 3):
        raise BuilderError("set formation needs a target of sort 1, 2 or 3")
    _check_sort(member, target.sort - 1, "the member variable")
    f = Forall((member,), iff(In(member, target), body))
    verdict = is_4lqsr(f)
    if not verdict:
        raise BuilderError("; ".join(d.message for d in verdict.diagnostics))
    return f


def _meets(Z: Var, X: Var, z: Var) -> Formula:
    """``Z`` and ``X`` share an element."""
    return Not(Forall((z,), implies(In(z, Z), Not(In(z, X)))))


def unordered_product(X2: Var, factors: Sequence[Var]) -> Formula:
    """``X2 = {{x1,...,xn} : x1 in X1, ..., xn in Xn}``.

    A set ``Z`` is such a collection exactly when it has at most ``n``
    elements, meets every factor, and every ``k`` distinct members of it
    meet at least ``k`` of the factors (so the members can be matched with
    distinct factors and the remaining factors pick any member).
    """
    if not factors:
        raise BuilderError("the product needs at least one factor")
    _check_sort(X2, 2, "the product")
    for X in factors:
        _check_sort(X, 1, "a factor")
    n = len(factors)
    Z = Var("Z", 1)
    z = Var("z", 0)
    parts: list[Formula] = [_meets(Z, X, z) for X in factors]
    ws = tuple(Var(f"z{i}", 0) for i in range(1, n + 2))
    parts.append(Forall(ws, at_most(ws, Z)))
    for k in range(1, n + 1):
        picked = ws[:k]
        hyp = [In(w, Z) for w in picked] + [Not(Eq(a, b)) for a, b in combinations(picked, 2)]
        hits = [disj(*(In(w, X) for w in picked)) for X in factors]
        enough = disj(*(conj(*c) for c in combinations(hits, k)))
        parts.append(Forall(picked, implies(conj(*hyp), enough)))
    return set_former(X2, Z, conj(*parts))


def pow_star(A: Var, factors: Sequence[Var]) -> Formula:
    """``A = {Z : Z <= X1 u ... u Xn and Z meets every Xi}``."""
    if not factors:
        raise BuilderError("pow* needs at least one argument")
    _check_sort(A, 2, "the family")
    for X in factors:
        _check_sort(X, 1, "an argument")
    Z = Var("Z", 1)
    z = Var("z", 0)
    inside = Forall((z,), implies(In(z, Z), disj(*(In(z, X) for X in factors))))
    return set_former(A, Z, conj(inside, *(_meets(Z, X, z) for X in factors)))


def schema(name: str) -> Formula:
    """Builder output for a named schema, with the default variable names."""
    R, R1, R2 = Var("R", 3), Var("R1", 3), Var("R2", 3)
    name = name.lower()
    if name == "inverse":
        return inverse_relation(R1, R2)
    for kind in RelationProperty:
        if kind.value == name:
            return relation_property(kind, R)
    for op in BoolOpKind:
        if op.value == name:
            if op is BoolOpKind.Complement:
                return boolean_op(op, R1, R2)
            if op is BoolOpKind.Inclusion:
                return boolean_op(op, None, R1, R2)
            return boolean_op(op, R, R1, R2)
    raise KeyError(f"unknown schema {name!r}")


SCHEMA_NAMES = (
    [k.value for k in RelationProperty] + [k.value for k in BoolOpKind] + ["inverse"]
)
