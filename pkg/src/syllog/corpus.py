"""Random formulae for cross-validation runs.

Everything is driven by a ``random.Random`` so a seed reproduces a corpus.
"""

from __future__ import annotations

import random

from .core import And, Eq, Forall, Formula, In, Not, Or, Pair, Var, conj, implies
from .fragment import (
    DEFAULT_BOUNDED2,
    DEFAULT_BOUNDED3,
    DEFAULT_UNIVERSE,
    in_h_fragment,
    is_4lqsr,
    psi_member,
    psi_sort3,
    psi_subset,
    shell,
)

SORT0 = (Var("x", 0), Var("y", 0), Var("w", 0))
SORT1 = (Var("X", 1), Var("Y", 1))
SORT2 = (Var("A", 2),)
SORT3 = (Var("C", 3),)


def _combine(rng: random.Random, parts: list[Formula]) -> Formula:
    """A random negation/conjunction/disjunction tree over ``parts``."""
    items = [Not(p) if rng.random() < 0.35 else p for p in parts]
    while len(items) > 1:
        i = rng.randrange(len(items) - 1)
        op = And if rng.random() < 0.5 else Or
        items[i : i + 2] = [op(items[i], items[i + 1])]
    out = items[0]
    return Not(out) if rng.random() < 0.15 else out


class _Pool:
    def __init__(self, rng: random.Random, h: int) -> None:
        self.rng = rng
        self.h = h
        self.s0 = list(SORT0[: rng.randint(1, 3)])
        self.s1 = list(SORT1[: rng.randint(0, 2)])
        self.s2 = list(SORT2[: rng.randint(0, 1)])
        self.s3 = list(SORT3[: rng.randint(0, 1)])

    def pick(self, xs):
        return self.rng.choice(xs)

    def ground_atom(self) -> Formula:
        rng = self.rng
        options = ["eq0"]
        if self.s1:
            options += ["in01", "in01", "in1b"]
        if self.s2:
            options += ["in12", "in2c"]
        if self.s3:
            options += ["pair3"]
        kind = rng.choice(options)
        if kind == "eq0":
            return Eq(self.pick(self.s0), self.pick(self.s0))
        if kind == "in01":
            return In(self.pick(self.s0), self.pick(self.s1))
        if kind == "in1b":
            return In(self.pick(self.s1), DEFAULT_BOUNDED2)
        if kind == "in12":
            return In(self.pick(self.s1), self.pick(self.s2)) if self.s1 else In(self.pick(self.s2), DEFAULT_BOUNDED3)
        if kind == "in2c":
            return In(self.pick(self.s2), self.pick(self.s3)) if self.s3 else In(self.pick(self.s2), DEFAULT_BOUNDED3)
        return In(Pair(self.pick(self.s0), self.pick(self.s0)), self.pick(self.s3))

    def level1(self, container: Var | None = None) -> Formula:
        """``(forall z)(...)`` over atoms mentioning ``z``."""
        rng = self.rng
        z = Var("z", 0)
        sets = list(self.s1) + ([container] if container is not None else [])
        atoms = []
        for _ in range(rng.randint(1, 3)):
            if sets and rng.random() < 0.7:
                atoms.append(In(z, rng.choice(sets)))
            else:
                atoms.append(Eq(z, self.pick(self.s0)))
        return Forall((z,), _combine(rng, atoms))

    def level2(self) -> Formula:
        rng = self.rng
        Z = Var("Z", 1)
        atoms: list[Formula] = []
        for _ in range(rng.randint(1, 3)):
            r = rng.random()
            if r < 0.3:
                atoms.append(In(self.pick(self.s0), Z))
            elif r < 0.5 and self.s1:
                atoms.append(Eq(Z, self.pick(self.s1)))
            elif r < 0.7 and self.s2:
                atoms.append(In(Z, self.pick(self.s2)))
            elif r < 0.85:
                atoms.append(self.level1(Z))
            else:
                atoms.append(self.ground_atom())
        return Forall((Z,), implies(In(Z, DEFAULT_BOUNDED2), _combine(rng, atoms)))

    def level3(self) -> Formula:
        rng = self.rng
        Z = Var("Z", 2)
        atoms: list[Formula] = []
        for _ in range(rng.randint(1, 3)):
            r = rng.random()
            if r < 0.3:
                a, b = self.pick(self.s0), self.pick(self.s0)
                atoms.append(Eq(Pair(a, b), Z))
            elif r < 0.5 and self.s1:
                atoms.append(In(self.pick(self.s1), Z))
            elif r < 0.65 and self.s2:
                atoms.append(Eq(Z, self.pick(self.s2)))
            elif r < 0.8 and self.s3:
                atoms.append(In(Z, self.pick(self.s3)))
            else:
                atoms.append(self.ground_atom())
        return Forall((Z,), implies(In(Z, DEFAULT_BOUNDED3), _combine(rng, atoms)))

    def chi_item(self) -> Formula:
        rng = self.rng
        parts = []
        for _ in range(rng.randint(1, 2)):
            r = rng.random()
            if r < 0.35:
                parts.append(self.ground_atom())
            elif r < 0.6:
                parts.append(self.level1())
            elif r < 0.85:
                parts.append(self.level2())
            else:
                parts.append(self.level3())
        return _combine(rng, parts)


def random_h_formula(rng: random.Random, h: int, max_items: int = 3, attempts: int = 200) -> Formula:
    """A random member of the bounded fragment for ``h``.

    Free variables: at most three of sort 0, two of sort 1 and one each of
    sorts 2 and 3 besides the designated ones.
    """
    for _ in range(attempts):
        pool = _Pool(rng, h)
        parts = list(shell(h))
        for A in pool.s2:
            parts.append(psi_member(A) if rng.random() < 0.5 else psi_subset(A))
        for C in pool.s3:
            parts.append(psi_sort3(C))
        parts += [pool.chi_item() for _ in range(rng.randint(1, max_items))]
        f = conj(*parts)
        if in_h_fragment(f, h):
            return f
    raise RuntimeError("no formula of the bounded fragment generated; raise attempts")


def random_4lqsr(rng: random.Random, max_items: int = 3, attempts: int = 200) -> Formula:
    """A random formula passing the fragment check, without the shell."""
    for _ in range(attempts):
        pool = _Pool(rng, 3)
        f = conj(*(pool.chi_item() for _ in range(rng.randint(1, max_items))))
        if is_4lqsr(f):
            return f
    raise RuntimeError("no fragment formula generated; raise attempts")


__all__ = ["random_h_formula", "random_4lqsr", "DEFAULT_UNIVERSE"]
