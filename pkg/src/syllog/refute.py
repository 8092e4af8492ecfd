"""Sound unsatisfiability proofs by instantiation.

Every atom over named terms becomes a propositional variable.  A universal
block becomes a variable ``q`` with ``q -> instance`` for every tuple of
named terms and ``~q -> ~instance`` for one tuple of fresh witness terms.
Equality is constrained to be an equivalence respected by membership, and
two distinct sets get a witness element telling them apart.  All of this
holds in every model once the witness terms are interpreted suitably, so a
propositional contradiction means the input has no model of any size.  A
satisfiable abstraction proves nothing.
"""

from __future__ import annotations

from itertools import combinations, product

from .core import And, Eq, Forall, Formula, In, Not, Or, Pair, Var, free_vars, quantifiers, substitute
from .grounding import Circuit, GroundingBudgetExceeded

WITNESS_PREFIX = "$w_"


class _Abstraction:
    def __init__(self, budget: int) -> None:
        self.c = Circuit(budget)
        self.terms: dict[int, list[Var]] = {0: [], 1: [], 2: [], 3: []}
        self.atoms: dict[tuple, int] = {}
        self.quantifiers: dict[Forall, int] = {}
        self.order: list[Forall] = []
        self.done: dict[Forall, set] = {}
        self.round = 0
        self.max_rounds = 2
        self.counter = 0
        self.pair_sets: dict[tuple[Var, Var], tuple[Var, Var]] = {}

    # -------------------------------------------------------------- terms

    def add_term(self, v: Var) -> None:
        if v not in self.terms[v.sort]:
            self.terms[v.sort].append(v)

    def witness(self, sort: int) -> Var:
        self.counter += 1
        v = Var(f"{WITNESS_PREFIX}{self.counter}", sort)
        self.add_term(v)
        return v

    # -------------------------------------------------------------- atoms

    def atom(self, key: tuple) -> int:
        lit = self.atoms.get(key)
        if lit is None:
            lit = self.atoms[key] = self.c.new_var()
        return lit

    def eq(self, a: Var, b: Var):
        if a == b:
            return True
        if b < a:
            a, b = b, a
        return self.atom(("eq", a, b))

    def mem(self, a: Var, b: Var) -> int:
        return self.atom(("mem", a, b))

    def pair_eq(self, x: Var, y: Var, s: Var) -> int:
        self.components(x, y)
        return self.atom(("eqp", x, y, s))

    def pair_mem(self, x: Var, y: Var, s: Var) -> int:
        self.components(x, y)
        return self.atom(("memp", x, y, s))

    def components(self, x: Var, y: Var) -> tuple[Var, Var]:
        """Named terms for ``{x}`` and ``{x, y}``, the members of the pair."""
        hit = self.pair_sets.get((x, y))
        if hit is None:
            single = Var(f"{WITNESS_PREFIX}{{{x.name}}}", 1)
            double = Var(f"{WITNESS_PREFIX}{{{x.name},{y.name}}}", 1)
            self.add_term(single)
            self.add_term(double)
            hit = self.pair_sets[(x, y)] = (single, double)
            # a named sort-2 term for the pair itself, so set quantifiers reach it
            whole = Var(f"{WITNESS_PREFIX}<{x.name},{y.name}>", 2)
            self.add_term(whole)
            self.c.clauses.append([self.atom(("eqp", x, y, whole))])
        return hit

    # ----------------------------------------------------------- formulae

    def encode(self, f: Formula):
        c = self.c
        c.tick()
        if isinstance(f, Eq):
            left, right = f.left, f.right
            if isinstance(left, Pair) and isinstance(right, Pair):
                return c.and_([self.eq(left.left, right.left), self.eq(left.right, right.right)])
            if isinstance(right, Pair):
                left, right = right, left
            if isinstance(left, Pair):
                return self.pair_eq(left.left, left.right, right)
            return self.eq(left, right)
        if isinstance(f, In):
            if isinstance(f.element, Pair):
                return self.pair_mem(f.element.left, f.element.right, f.container)
            return self.mem(f.element, f.container)
        if isinstance(f, Not):
            return c.neg(self.encode(f.body))
        if isinstance(f, And):
            return c.and_([self.encode(f.left), self.encode(f.right)])
        if isinstance(f, Or):
            return c.or_([self.encode(f.left), self.encode(f.right)])
        if isinstance(f, Forall):
            return self.quantifier(f)
        raise TypeError(f"not a formula: {f!r}")

    def quantifier(self, q: Forall) -> int:
        lit = self.quantifiers.get(q)
        if lit is not None:
            return lit
        lit = self.quantifiers[q] = self.c.new_var()
        self.order.append(q)
        self.done[q] = set()
        if self.round < self.max_rounds:
            sk = {v: self.witness(v.sort) for v in q.bound}
            # a false universal has a falsifying instance at the witnesses
            negated = self.c.neg(self.encode(substitute(q.body, sk)))
            if negated is False:
                self.c.clauses.append([lit])
            elif negated is not True:
                self.c.clauses.append([lit, negated])
        return lit

    def instantiate(self) -> None:
        i = 0
        while i < len(self.order):
            q = self.order[i]
            i += 1
            lit = self.quantifiers[q]
            pool = list(self.terms[q.sort])
            for values in product(pool, repeat=len(q.bound)):
                if values in self.done[q]:
                    continue
                self.done[q].add(values)
                body = self.encode(substitute(q.body, dict(zip(q.bound, values))))
                self.require_implication(lit, body)

    def require_implication(self, lit: int, body) -> None:
        if body is True:
            return
        if body is False:
            self.c.clauses.append([-lit])
        else:
            self.c.clauses.append([-lit, body])

    def require_iff(self, a, b) -> None:
        self.c.require(self.c.iff(a, b))

    # ------------------------------------------------------------- axioms

    def separation_witnesses(self) -> None:
        c = self.c
        for sort in (1, 2, 3):
            for a, b in combinations(list(self.terms[sort]), 2):
                if ("eq", min(a, b), max(a, b)) not in self.atoms:
                    # only equalities the formulas mention need a separator
                    continue
                w = self.witness(sort - 1)
                e = self.eq(a, b)
                ma, mb = self.mem(w, a), self.mem(w, b)
                c.clauses.append([e, ma, mb])
                c.clauses.append([e, -ma, -mb])

    def equality_axioms(self) -> None:
        c = self.c
        for sort in (0, 1, 2, 3):
            ts = self.terms[sort]
            for a, b, d in combinations(ts, 3):
                ab, bc, ac = self.eq(a, b), self.eq(b, d), self.eq(a, d)
                c.clauses += [[-ab, -bc, ac], [-ab, -ac, bc], [-ac, -bc, ab]]
                c.tick(3)
        for sort in (0, 1, 2):
            lower, upper = self.terms[sort], self.terms[sort + 1]
            for a, b in combinations(lower, 2):
                e = self.eq(a, b)
                for s in upper:
                    ma, mb = self.mem(a, s), self.mem(b, s)
                    c.clauses += [[-e, -ma, mb], [-e, ma, -mb]]
                    c.tick(2)
            for s, t in combinations(upper, 2):
                e = self.eq(s, t)
                for a in lower:
                    ms, mt = self.mem(a, s), self.mem(a, t)
                    c.clauses += [[-e, -ms, mt], [-e, ms, -mt]]
                    c.tick(2)

    def pair_axioms(self) -> None:
        c = self.c
        elems = self.terms[0]
        for (x, y), (single, double) in self.pair_sets.items():
            for t in elems:
                ex, ey = self.eq(t, x), self.eq(t, y)
                self.require_iff(self.mem(t, single), ex)
                self.require_iff(self.mem(t, double), c.or_([ex, ey]))
            for key in [k for k in self.atoms if k[0] == "eqp" and k[1:3] == (x, y)]:
                lit = self.atoms[key]
                S = key[3]
                for T in self.terms[1]:
                    self.require_implication(lit, c.iff(self.mem(T, S), c.or_([self.eq(T, single), self.eq(T, double)])))
            c.tick(len(elems) + len(self.terms[1]))
        for key in [k for k in self.atoms if k[0] in ("eqp", "memp")]:
            kind, x, y, s = key
            lit = self.atoms[key]
            same_sort = self.terms[s.sort]
            for x2, y2 in product(elems, repeat=2):
                if (x2, y2) == (x, y):
                    continue
                other = self.atom((kind, x2, y2, s))
                ex, ey = self.eq(x, x2), self.eq(y, y2)
                clause = [-lit, other]
                for e in (ex, ey):
                    if e is not True:
                        clause.append(-e)
                c.clauses.append(clause)
                if kind == "eqp":
                    # two pairs equal to the same set have equal components
                    for e in (ex, ey):
                        if e is not True:
                            c.clauses.append([-lit, -other, e])
            for t in same_sort:
                if t == s:
                    continue
                e = self.eq(s, t)
                c.clauses.append([-e, -lit, self.atom((kind, x, y, t))])
            if kind == "eqp":
                for big in self.terms[3]:
                    m = self.mem(s, big)
                    p = self.atom(("memp", x, y, big))
                    c.clauses += [[-lit, -m, p], [-lit, -p, m]]
            c.tick(len(elems) ** 2)


def refute_by_instantiation(formulas: list[Formula], rounds: int = 2, budget: int = 400_000) -> bool:
    """True when the conjunction of ``formulas`` is shown unsatisfiable.

    Tries ``0, 1, ..., rounds`` rounds of witness introduction in turn,
    each with its own ``budget``, and stops at the first refutation.  Round
    0 runs once without and once with witnesses separating the unequal sets
    the formulas mention.  The
    formulas without set quantifiers are tried on their own first: a
    contradiction among some of the conjuncts refutes all of them, and the
    set quantifiers are what makes instantiation expensive.  The formulas
    quantifying over sets but not over families come next.  The formulas'
    bound variables must be renamed apart from their free variables.
    """
    attempts: list[list[Formula]] = []
    for top in (1, 2):
        light = [f for f in formulas if all(q.level <= top for q in quantifiers(f))]
        if 0 < len(light) < len(formulas) and light not in attempts:
            attempts.append(light)
    attempts.append(list(formulas))
    # round 0 first without, then with separating witnesses
    stages = [(0, False)] + [(r, True) for r in range(rounds + 1)]
    return any(_refute(fs, r, budget, separate) for fs in attempts for r, separate in stages)


def _refute(formulas: list[Formula], rounds: int, budget: int, separate: bool = True) -> bool:
    ab = _Abstraction(budget)
    ab.max_rounds = rounds
    free: set[Var] = set()
    for f in formulas:
        free |= free_vars(f)
    for v in sorted(free):
        ab.add_term(v)
    if not ab.terms[0]:
        ab.witness(0)
    try:
        for f in formulas:
            ab.c.require(ab.encode(f))
            if ab.c.unsat:
                return True
        if separate:
            ab.separation_witnesses()
        for r in range(rounds + 1):
            ab.round = r
            ab.instantiate()
        ab.round = rounds
        ab.equality_axioms()
        ab.pair_axioms()
    except GroundingBudgetExceeded:
        return False
    return ab.c.solve() is None
