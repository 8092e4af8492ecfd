"""Reduction of restricted formulae to disjunctions of normalized conjunctions.

A normalized conjunction is a list of literals of three kinds: quantifier
free literals, level-1 purely universal formulae, and level-2/3 purely
universal formulae.  Negated quantifier blocks never survive: each one is
replaced by its negated matrix instantiated with fresh free variables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .core import (
    And,
    Eq,
    Forall,
    Formula,
    In,
    Not,
    Or,
    Var,
    all_vars,
    conj,
    free_vars,
    quantifiers,
    substitute,
    _sub_term,
)
from .fragment import CheckResult, is_4lqsr

FRESH_PREFIX = "$k_"


class FreshSupply:
    """Issues variable names that cannot clash with parsed identifiers."""

    def __init__(self, avoid: Formula | None = None) -> None:
        self.counter = {0: 0, 1: 0, 2: 0, 3: 0}
        self.taken: set[Var] = set(all_vars(avoid)) if avoid is not None else set()

    def reserve(self, f: Formula) -> None:
        self.taken |= all_vars(f)

    def fresh(self, sort: int) -> Var:
        while True:
            self.counter[sort] += 1
            v = Var(f"{FRESH_PREFIX}{self.counter[sort]}", sort)
            if v not in self.taken:
                self.taken.add(v)
                return v


# --------------------------------------------------------------------------
# Disjunctive normal form


@dataclass
class DnfStats:
    expansions: int = 0


def to_dnf(f: Formula, stats: DnfStats | None = None) -> Iterator[list[Formula]]:
    """Lazily enumerate the disjuncts of a DNF of ``f`` as literal lists.

    Quantifier blocks are opaque atoms.  Duplicate literals inside one
    disjunct are dropped.
    """
    stats = stats if stats is not None else DnfStats()
    for lits in _dnf(f, True, stats):
        seen: dict[Formula, None] = {}
        for lit in lits:
            seen.setdefault(lit, None)
        yield list(seen)


def _dnf(f: Formula, positive: bool, stats: DnfStats) -> Iterator[list[Formula]]:
    stats.expansions += 1
    if isinstance(f, Not):
        yield from _dnf(f.body, not positive, stats)
        return
    if isinstance(f, (And, Or)):
        conjunctive = isinstance(f, And) == positive
        if conjunctive:
            for left in _dnf(f.left, positive, stats):
                for right in _dnf(f.right, positive, stats):
                    yield left + right
        else:
            yield from _dnf(f.left, positive, stats)
            yield from _dnf(f.right, positive, stats)
        return
    yield [f if positive else Not(f)]


# --------------------------------------------------------------------------
# Renaming bound variables apart


def rename_apart(f: Formula, supply: FreshSupply | None = None) -> Formula:
    """Alpha-rename so that each quantifier binds its own variables, none of
    which also occurs free.  Variables are renamed only on a clash."""
    supply = supply if supply is not None else FreshSupply(f)
    supply.reserve(f)
    used: set[Var] = set(free_vars(f))

    def walk(g: Formula, env: dict[Var, Var]) -> Formula:
        if isinstance(g, Eq):
            return Eq(_sub_term(g.left, env), _sub_term(g.right, env))
        if isinstance(g, In):
            return In(_sub_term(g.element, env), _sub_term(g.container, env))
        if isinstance(g, Not):
            return Not(walk(g.body, env))
        if isinstance(g, And):
            return And(walk(g.left, env), walk(g.right, env))
        if isinstance(g, Or):
            return Or(walk(g.left, env), walk(g.right, env))
        if isinstance(g, Forall):
            inner = dict(env)
            bound = []
            for v in g.bound:
                if v in used:
                    w = supply.fresh(v.sort)
                else:
                    w = v
                used.add(w)
                inner[v] = w
                bound.append(w)
            return Forall(tuple(bound), walk(g.body, inner))
        raise TypeError(f"not a formula: {g!r}")

    return walk(f, {})


def is_renamed_apart(f: Formula) -> bool:
    seen: set[Var] = set()
    free = free_vars(f)
    for q in quantifiers(f):
        for v in q.bound:
            if v in seen or v in free:
                return False
            seen.add(v)
    return True


# --------------------------------------------------------------------------
# Normalized conjunctions


def literal_kind(lit: Formula) -> int:
    """1 for quantifier-free literals, 2 for level-1 universals, 3 for level-2/3
    universals.  Anything else raises ``ValueError``."""
    if isinstance(lit, (Eq, In)):
        return 1
    if isinstance(lit, Not) and isinstance(lit.body, (Eq, In)):
        return 1
    if isinstance(lit, Forall):
        return 2 if lit.level == 1 else 3
    raise ValueError(f"not a normalized literal: {lit!r}")


@dataclass(frozen=True)
class NormalizedConjunction:
    literals: tuple[Formula, ...]
    fresh_vars: tuple[Var, ...] = field(default=())

    def formula(self) -> Formula:
        return conj(*self.literals)

    def kinds(self) -> list[int]:
        return [literal_kind(lit) for lit in self.literals]

    def check(self) -> CheckResult:
        return is_4lqsr(self.formula())


def eliminate_negative_quantifiers(
    literals: list[Formula], supply: FreshSupply, fresh_vars: tuple[Var, ...] = ()
) -> Iterator[NormalizedConjunction]:
    """Replace each ``~forall v1..vk . body`` by ``~body`` on fresh variables.

    A negated matrix need not be a literal, so the result is put back into
    DNF and the step repeats on every disjunct; conjunctions that need no
    further work come out as a single :class:`NormalizedConjunction`.
    """
    pending = [(list(literals), tuple(fresh_vars))]
    while pending:
        lits, fresh = pending.pop()
        out: list[Formula] = []
        rest: list[Formula] = []
        introduced: list[Var] = list(fresh)
        for lit in lits:
            if isinstance(lit, Not) and isinstance(lit.body, Forall):
                q = lit.body
                mapping = {v: supply.fresh(v.sort) for v in q.bound}
                introduced.extend(mapping.values())
                rest.append(Not(substitute(q.body, mapping)))
            else:
                out.append(lit)
        if not rest:
            yield NormalizedConjunction(tuple(out), tuple(introduced))
            continue
        branches = list(to_dnf(conj(*rest)))
        for extra in reversed(branches):
            merged = list(dict.fromkeys(out + extra))
            pending.append((merged, tuple(introduced)))


class FragmentViolation(ValueError):
    def __init__(self, result: CheckResult):
        self.result = result
        super().__init__("; ".join(f"{d.rule}: {d.message}" for d in result.diagnostics))


def normalize(f: Formula, stats: DnfStats | None = None, check: bool = True) -> Iterator[NormalizedConjunction]:
    """Lazily yield normalized conjunctions whose disjunction is
    equisatisfiable with ``f``."""
    if check:
        verdict = is_4lqsr(f)
        if not verdict:
            raise FragmentViolation(verdict)
    supply = FreshSupply(f)
    g = rename_apart(f, supply)
    for lits in to_dnf(g, stats):
        for nc in eliminate_negative_quantifiers(lits, supply):
            if check:
                verdict = nc.check()
                if not verdict:
                    raise FragmentViolation(verdict)
            yield nc


__all__ = [
    "FRESH_PREFIX",
    "FreshSupply",
    "DnfStats",
    "to_dnf",
    "rename_apart",
    "is_renamed_apart",
    "literal_kind",
    "NormalizedConjunction",
    "eliminate_negative_quantifiers",
    "FragmentViolation",
    "normalize",
]
