"""Propositional grounding of formulae over a fixed finite domain.

Free variables stay symbolic and become propositional variables:

* a sort-0 variable gets one indicator per domain element (exactly one true),
* a sort-1 variable gets one membership bit per element,
* sort-2 and sort-3 variables get one membership bit per *candidate* member.

Bound variables are instantiated with concrete values, so every quantifier
block unfolds into a finite conjunction.  A bound variable guarded by a
membership test only visits the members (or candidates) of its guard.  The
resulting circuit is turned into CNF with one auxiliary variable per gate
and handed to ``pycosat``.

With the full powersets as candidate sets, a satisfying assignment exists
exactly when the formula has a model over the given domain.  Smaller
candidate sets search only models whose higher-sort values draw on them.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Mapping

import pycosat

from .core import (
    And,
    Eq,
    Forall,
    Formula,
    HSet,
    In,
    Interpretation,
    Not,
    Or,
    Pair,
    Var,
    free_vars,
    guards,
    pair_value,
    powerset,
)

TRUE = True
FALSE = False


class GroundingBudgetExceeded(RuntimeError):
    """The circuit for a formula grew past the configured size."""


class Circuit:
    """Hash-consed AND/OR/IFF gates with constant folding and Tseitin CNF."""

    def __init__(self, budget: int | None = None) -> None:
        self.nvars = 0
        self.clauses: list[list[int]] = []
        self._cache: dict[tuple, int] = {}
        self.budget = budget
        self.unsat = False
        self.work = 0

    def tick(self, amount: int = 1) -> None:
        self.work += amount
        if self.budget is not None and self.work > self.budget:
            raise GroundingBudgetExceeded(f"grounding exceeded {self.budget} steps")

    def new_var(self) -> int:
        self.nvars += 1
        return self.nvars

    def neg(self, a):
        if a is True:
            return False
        if a is False:
            return True
        return -a

    def and_(self, items: Iterable) -> int | bool:
        lits: set[int] = set()
        for a in items:
            if a is False:
                return False
            if a is True:
                continue
            if -a in lits:
                return False
            lits.add(a)
        if not lits:
            return True
        if len(lits) == 1:
            return next(iter(lits))
        key = ("and",) + tuple(sorted(lits))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        self.tick(len(lits))
        g = self.new_var()
        for a in lits:
            self.clauses.append([-g, a])
        self.clauses.append([g] + [-a for a in lits])
        self._cache[key] = g
        return g

    def or_(self, items: Iterable) -> int | bool:
        return self.neg(self.and_(self.neg(a) for a in items))

    def iff(self, a, b) -> int | bool:
        if isinstance(a, bool):
            return b if a else self.neg(b)
        if isinstance(b, bool):
            return a if b else -a
        if a == b:
            return True
        if a == -b:
            return False
        if abs(a) > abs(b):
            a, b = b, a
        key = ("iff", a, b)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        self.tick(4)
        g = self.new_var()
        self.clauses += [[-g, -a, b], [-g, a, -b], [g, a, b], [g, -a, -b]]
        self._cache[key] = g
        return g

    def require(self, a) -> None:
        if a is False:
            self.unsat = True
        elif a is not True:
            self.clauses.append([a])

    def exactly_one(self, lits: list[int]) -> None:
        self.clauses.append(list(lits))
        for i in range(len(lits)):
            for j in range(i + 1, len(lits)):
                self.clauses.append([-lits[i], -lits[j]])

    def solve(self) -> list[int] | None:
        if self.unsat:
            return None
        if not self.clauses:
            return []
        out = pycosat.solve(self.clauses, vars=self.nvars)
        if out == "UNSAT":
            return None
        if out == "UNKNOWN":
            raise GroundingBudgetExceeded("SAT backend gave up")
        return out


# --------------------------------------------------------------------------
# Symbolic values of free variables


@dataclass
class SymElement:
    var: Var
    bits: dict[int, int]


@dataclass
class SymSet:
    """A set of sort >= 1 whose membership is decided per candidate."""

    var: Var
    level: int
    bits: dict  # candidate member -> literal


@dataclass(frozen=True)
class Candidates:
    """Candidate members for the symbolic sort-2 and sort-3 variables.

    ``None`` means the full powerset over the current domain.
    """

    level2: tuple[HSet, ...] | None = None
    level3: tuple[HSet, ...] | None = None
    per_var: Mapping[Var, tuple] | None = None


class Grounder:
    def __init__(
        self,
        domain: tuple[int, ...],
        free: Iterable[Var],
        candidates: Candidates = Candidates(),
        budget: int | None = None,
        fixed: Mapping[Var, object] | None = None,
    ) -> None:
        self.domain = tuple(domain)
        self.circuit = Circuit(budget)
        self.env: dict[Var, object] = dict(fixed or {})
        self.symbolic: dict[Var, SymElement | SymSet] = {}
        self.level1_sets = powerset(self.domain, 1)
        self._level2_sets: tuple[HSet, ...] | None = None
        self._pairs: dict[tuple[int, int], HSet] = {}
        self._guards: dict[int, dict[Var, Var]] = {}
        c = self.circuit
        for v in sorted(free):
            if v in self.env:
                continue
            if v.sort == 0:
                bits = {e: c.new_var() for e in self.domain}
                c.exactly_one(list(bits.values()))
                self.symbolic[v] = SymElement(v, bits)
            elif v.sort == 1:
                self.symbolic[v] = SymSet(v, 1, {e: c.new_var() for e in self.domain})
            else:
                cands = None
                if candidates.per_var is not None:
                    cands = candidates.per_var.get(v)
                if cands is None:
                    cands = candidates.level2 if v.sort == 2 else candidates.level3
                if cands is None:
                    cands = self.level1_sets if v.sort == 2 else self.level2_sets()
                self.symbolic[v] = SymSet(v, v.sort, {m: c.new_var() for m in cands})

    def level2_sets(self) -> tuple[HSet, ...]:
        if self._level2_sets is None:
            self._level2_sets = powerset(self.level1_sets, 2)
        return self._level2_sets

    def pair(self, a: int, b: int) -> HSet:
        key = (a, b)
        p = self._pairs.get(key)
        if p is None:
            p = self._pairs[key] = pair_value(a, b)
        return p

    # ---------------------------------------------------------------- terms

    def lookup(self, v: Var):
        if v in self.env:
            return self.env[v]
        return self.symbolic[v]

    def term(self, t):
        if isinstance(t, Pair):
            return self.pair(self.lookup(t.left), self.lookup(t.right))
        return self.lookup(t)

    # ---------------------------------------------------------------- atoms

    def atom(self, f) -> int | bool:
        self.circuit.tick()
        split = [
            v
            for v in dict.fromkeys(_sort0_vars(f))
            if v not in self.env and isinstance(self.symbolic.get(v), SymElement)
        ]
        if split:
            c = self.circuit
            options = []
            for values in product(self.domain, repeat=len(split)):
                for v, e in zip(split, values):
                    self.env[v] = e
                try:
                    body = self.atom(f)
                finally:
                    for v in split:
                        del self.env[v]
                if body is False:
                    continue
                options.append(c.and_([self.symbolic[v].bits[e] for v, e in zip(split, values)] + [body]))
            return c.or_(options)
        if isinstance(f, Eq):
            return self.equal(self.term(f.left), self.term(f.right))
        return self.member(self.term(f.element), self.term(f.container))

    def member(self, x, s) -> int | bool:
        c = self.circuit
        if isinstance(s, HSet):
            if isinstance(x, SymSet):
                return c.or_(self.equal(x, m) for m in s)
            return x in s
        # symbolic container
        if isinstance(x, SymSet):
            return c.or_(c.and_([lit, self.equal(x, m)]) for m, lit in s.bits.items())
        lit = s.bits.get(x)
        return False if lit is None else lit

    def equal(self, a, b) -> int | bool:
        c = self.circuit
        a_sym = isinstance(a, SymSet)
        b_sym = isinstance(b, SymSet)
        if not a_sym and not b_sym:
            return a == b
        if not a_sym:
            a, b = b, a
            a_sym, b_sym = b_sym, a_sym
        if not b_sym:
            if any(m not in a.bits for m in b):
                return False
            return c.and_(lit if m in b else -lit for m, lit in a.bits.items())
        keys = set(a.bits) | set(b.bits)
        parts = []
        for m in keys:
            la = a.bits.get(m, False)
            lb = b.bits.get(m, False)
            parts.append(c.iff(la, lb))
        return c.and_(parts)

    # ------------------------------------------------------------- formulae

    def formula(self, f: Formula) -> int | bool:
        c = self.circuit
        if isinstance(f, (Eq, In)):
            return self.atom(f)
        if isinstance(f, Not):
            return c.neg(self.formula(f.body))
        if isinstance(f, And):
            left = self.formula(f.left)
            if left is False:
                return False
            return c.and_([left, self.formula(f.right)])
        if isinstance(f, Or):
            left = self.formula(f.left)
            if left is True:
                return True
            return c.or_([left, self.formula(f.right)])
        if isinstance(f, Forall):
            return self.forall(f)
        raise TypeError(f"not a formula: {f!r}")

    def range_for(self, v: Var, guard: Var | None):
        if guard is not None:
            g = self.lookup(guard)
            if isinstance(g, HSet):
                return g.members
            return tuple(g.bits)
        if v.sort == 0:
            return self.domain
        if v.sort == 1:
            return self.level1_sets
        return self.level2_sets()

    def forall(self, f: Forall) -> int | bool:
        c = self.circuit
        guarded = self._guards.get(id(f))
        if guarded is None:
            guarded = self._guards[id(f)] = guards(f)
        ranges = [self.range_for(v, guarded.get(v)) for v in f.bound]
        saved = {v: self.env[v] for v in f.bound if v in self.env}
        parts = []
        try:
            for values in product(*ranges):
                c.tick()
                for v, x in zip(f.bound, values):
                    self.env[v] = x
                g = self.formula(f.body)
                if g is False:
                    return False
                if g is not True:
                    parts.append(g)
        finally:
            for v in f.bound:
                self.env.pop(v, None)
            self.env.update(saved)
        return c.and_(parts)

    # --------------------------------------------------------------- models

    def decode(self, model: list[int]) -> dict[Var, object]:
        true = {lit for lit in model if lit > 0}
        out: dict[Var, object] = {}
        for v, sym in self.symbolic.items():
            if isinstance(sym, SymElement):
                hits = [e for e, lit in sym.bits.items() if lit in true]
                out[v] = hits[0]
            else:
                out[v] = HSet(sym.level, (m for m, lit in sym.bits.items() if lit in true))
        return out


def _sort0_vars(atom) -> list[Var]:
    terms = (atom.left, atom.right) if isinstance(atom, Eq) else (atom.element, atom.container)
    out = []
    for t in terms:
        if isinstance(t, Pair):
            out += [t.left, t.right]
        elif t.sort == 0:
            out.append(t)
    return out


def find_model(
    formulas: list[Formula],
    size: int,
    candidates: Candidates = Candidates(),
    budget: int | None = None,
    extra_free: Iterable[Var] = (),
    fixed: Mapping[Var, object] | None = None,
) -> tuple[Interpretation | None, dict]:
    """Search a model of the conjunction of ``formulas`` over ``{0..size-1}``.

    Returns the model (or ``None``) and grounding statistics.
    """
    domain = tuple(range(size))
    free: set[Var] = set(extra_free)
    for f in formulas:
        free |= free_vars(f)
    g = Grounder(domain, free, candidates, budget, fixed)
    for f in formulas:
        g.circuit.require(g.formula(f))
        if g.circuit.unsat:
            break
    stats = {"vars": g.circuit.nvars, "clauses": len(g.circuit.clauses), "work": g.circuit.work}
    model = g.circuit.solve()
    if model is None:
        return None, stats
    assign = g.decode(model)
    assign.update({v: x for v, x in (fixed or {}).items()})
    return Interpretation(domain, assign), stats
