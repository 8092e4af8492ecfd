"""Satisfiability procedures.

* :func:`oracle_sat` searches finite interpretations of growing size for
  any formula of the language.
* :func:`saturate` and :func:`solve_h` decide the bounded subfragments:
  saturation splits the formula into branches of literals and universals,
  and each branch is searched for models whose higher-sort values consist
  of small sets only.
* :func:`certify` checks a candidate model while only ever quantifying over
  the members of the guard sets.
* :func:`reduce_sat` embeds propositional satisfiability.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import product
from typing import Iterator, Mapping

from .core import (
    And,
    CapacityError,
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
    evaluate,
    free_vars,
    guards,
    pair_value,
    powerset,
    small_subsets,
    substitute,
)
from .fragment import DEFAULT_BOUNDED2, DEFAULT_BOUNDED3, DEFAULT_UNIVERSE, decompose_h
from .grounding import Candidates, GroundingBudgetExceeded, find_model
from .normalize import FreshSupply, rename_apart
from .smallmodel import compute_bound

SAT = "SAT"
UNSAT = "UNSAT"
CAPPED = "CAPPED"

DEFAULT_BUDGET = 2_000_000


@dataclass
class Verdict:
    status: str
    model: Interpretation | None = None
    stats: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.status not in (SAT, UNSAT, CAPPED):
            raise ValueError(f"unknown status {self.status!r}")
        if self.status == SAT and self.model is None:
            raise ValueError("a SAT verdict needs a model")

    @property
    def definite(self) -> bool:
        return self.status != CAPPED

    def to_json(self) -> dict:
        from .syntax import model_to_json

        out: dict = {"status": self.status, "stats": dict(self.stats)}
        if self.model is not None:
            out["model"] = model_to_json(self.model)
        return out


# --------------------------------------------------------------------------
# Brute-force oracle


def oracle_sat(
    f: Formula,
    max_domain: int,
    *,
    method: str = "ground",
    budget: int | None = DEFAULT_BUDGET,
    member_cap: int | None = None,
    max_assignments: int = 200_000,
) -> Verdict:
    """Look for a model of ``f`` with at most ``max_domain`` elements.

    ``method="ground"`` encodes each domain size exactly into SAT (the
    free variables range over full powersets); ``budget`` bounds the
    encoding work.  ``method="enumerate"`` tries every assignment of the
    free variables and evaluates ``f``; ``member_cap`` limits the number of
    members of sort-2/3 values and ``max_assignments`` the number of
    assignments per size.  Hitting any limit makes a negative answer
    CAPPED.  UNSAT means: no model with at most ``max_domain`` elements.
    """
    if max_domain < 1:
        raise ValueError("max_domain must be at least 1")
    if method not in ("ground", "enumerate"):
        raise ValueError(f"unknown oracle method {method!r}")
    nodes = 0
    for n in range(1, max_domain + 1):
        if method == "ground":
            try:
                model, stats = find_model([f], n, budget=budget)
            except GroundingBudgetExceeded:
                return Verdict(CAPPED, stats={"nodes": nodes, "max_domain": n, "branches": 1})
            nodes += stats["work"]
        else:
            model, tried, truncated = _enumerate(f, n, member_cap, max_assignments)
            nodes += tried
            if model is None and truncated:
                return Verdict(CAPPED, stats={"nodes": nodes, "max_domain": n, "branches": 1})
        if model is not None:
            if not evaluate(model, f, family_cap=None):
                raise AssertionError("oracle produced a model that does not satisfy the formula")
            return Verdict(SAT, model, {"nodes": nodes, "max_domain": n, "branches": 1})
    return Verdict(UNSAT, stats={"nodes": nodes, "max_domain": max_domain, "branches": 1})


def _value_range(sort: int, domain: tuple[int, ...], cap: int | None) -> tuple[tuple, bool]:
    if sort == 0:
        return domain, False
    if sort == 1:
        return powerset(domain, 1), False
    base = powerset(domain, 1) if sort == 2 else powerset(powerset(domain, 1), 2)
    if cap is None or cap >= len(base):
        if len(base) > 20:
            return (), True
        return powerset(base, sort), False
    return small_subsets(base, sort, cap + 1), True


def _enumerate(f: Formula, n: int, cap: int | None, limit: int):
    domain = tuple(range(n))
    free = sorted(free_vars(f))
    ranges = []
    truncated = False
    total = 1
    for v in free:
        rng, cut = _value_range(v.sort, domain, cap)
        truncated |= cut
        ranges.append(rng)
        total *= len(rng)
    if total > limit:
        return None, 0, True
    tried = 0
    for values in product(*ranges):
        tried += 1
        interp = Interpretation(domain, dict(zip(free, values)))
        try:
            if evaluate(interp, f, family_cap=None):
                return interp, tried, truncated
        except CapacityError:
            truncated = True
    return None, tried, truncated


# --------------------------------------------------------------------------
# Saturation


@dataclass(frozen=True)
class SaturationBranch:
    formulas: tuple[Formula, ...]
    fresh: tuple[Var, ...]
    steps: int

    def conjunction(self) -> Formula:
        from .core import conj

        return conj(*self.formulas)


@dataclass
class SaturationState:
    H: list[Formula]
    pending: list[Formula]
    fresh: list[Var]
    steps: int = 0


def _complement(f: Formula) -> Formula:
    return f.body if isinstance(f, Not) else Not(f)


def saturate(f: Formula, supply: FreshSupply | None = None, prune: bool = True) -> Iterator[SaturationBranch]:
    """Apply the decomposition rules until only literals and positive
    universals remain, yielding one saturated set per disjunctive choice.

    Double negations are dropped, conjunctions (and negated disjunctions)
    are split, disjunctions (and negated conjunctions) branch, and negated
    quantifier blocks are instantiated with fresh variables.  With
    ``prune`` a branch is abandoned as soon as it holds a literal and its
    complement.  ``f`` should have its bound variables renamed apart.
    """
    supply = supply if supply is not None else FreshSupply(f)
    supply.reserve(f)
    stack = [SaturationState([], [f], [])]
    while stack:
        st = stack.pop()
        closed = False
        while st.pending and not closed:
            g = st.pending.pop()
            st.steps += 1
            if isinstance(g, Not) and isinstance(g.body, Not):
                st.pending.append(g.body.body)
            elif isinstance(g, And):
                st.pending += [g.right, g.left]
            elif isinstance(g, Not) and isinstance(g.body, Or):
                st.pending += [Not(g.body.right), Not(g.body.left)]
            elif isinstance(g, Or) or (isinstance(g, Not) and isinstance(g.body, And)):
                if isinstance(g, Or):
                    first, second = g.left, g.right
                else:
                    first, second = Not(g.body.left), Not(g.body.right)
                stack.append(SaturationState(list(st.H), st.pending + [second], list(st.fresh), st.steps))
                st.pending.append(first)
            elif isinstance(g, Not) and isinstance(g.body, Forall):
                q = g.body
                mapping = {v: supply.fresh(v.sort) for v in q.bound}
                st.fresh += mapping.values()
                st.pending.append(Not(substitute(q.body, mapping)))
            else:
                if prune and _complement(g) in st.H:
                    closed = True
                elif g not in st.H:
                    st.H.append(g)
        if not closed:
            yield SaturationBranch(tuple(st.H), tuple(st.fresh), st.steps)


# --------------------------------------------------------------------------
# Certificate checking


class CertificateRejected(ValueError):
    pass


class DoublePowersetError(AssertionError):
    """Raised if certification would enumerate all sets of sets."""


@dataclass
class CertifyCounter:
    steps: int = 0
    double_powerset: int = 0


def certify(
    model: Interpretation,
    f: Formula,
    h: int,
    b2: Var = DEFAULT_BOUNDED2,
    b3: Var = DEFAULT_BOUNDED3,
    counter: CertifyCounter | None = None,
) -> bool:
    """Decide ``model |= f`` for a bounded-fragment formula.

    Quantifiers over sets only visit the members of their guard, so the
    work is polynomial in the sizes of ``model`` and ``f``.  The model must
    assign every free variable and keep the designated sets small; otherwise
    :class:`CertificateRejected` is raised.
    """
    counter = counter if counter is not None else CertifyCounter()
    missing = [v for v in free_vars(f) if v not in model.assign]
    if missing:
        raise CertificateRejected(f"model leaves {', '.join(map(str, sorted(missing)))} unassigned")
    M = model.assign
    if b2 in M:
        for J in M[b2]:
            if len(J) >= h:
                raise CertificateRejected(f"{b2} has a member with {len(J)} >= {h} elements")
    if b3 in M:
        for K in M[b3]:
            if len(K) >= h:
                raise CertificateRejected(f"{b3} has a member with {len(K)} >= {h} members")
            if b2 in M and any(J not in M[b2] for J in K):
                raise CertificateRejected(f"a member of {b3} is not a subset of {b2}")
    return _Certifier(model, counter).holds(f)


class _Certifier:
    def __init__(self, model: Interpretation, counter: CertifyCounter):
        self.model = model
        self.env: dict[Var, object] = {}
        self.counter = counter
        self._guards: dict[int, dict[Var, Var]] = {}

    def value(self, t):
        if isinstance(t, Pair):
            return pair_value(self.value(t.left), self.value(t.right))
        if t in self.env:
            return self.env[t]
        return self.model.assign[t]

    def holds(self, f: Formula) -> bool:
        self.counter.steps += 1
        if isinstance(f, Eq):
            return self.value(f.left) == self.value(f.right)
        if isinstance(f, In):
            return self.value(f.element) in self.value(f.container)
        if isinstance(f, Not):
            return not self.holds(f.body)
        if isinstance(f, And):
            return self.holds(f.left) and self.holds(f.right)
        if isinstance(f, Or):
            return self.holds(f.left) or self.holds(f.right)
        if isinstance(f, Forall):
            g = self._guards.get(id(f))
            if g is None:
                g = self._guards[id(f)] = guards(f)
            ranges = []
            for v in f.bound:
                if v in g:
                    ranges.append(self.value(g[v]).members)
                elif v.sort == 0:
                    ranges.append(self.model.domain)
                elif v.sort == 1:
                    ranges.append(powerset(self.model.domain, 1))
                else:
                    self.counter.double_powerset += 1
                    raise DoublePowersetError(f"unguarded quantifier over {v} would enumerate all sets of sets")
            saved = {v: self.env[v] for v in f.bound if v in self.env}
            try:
                for values in product(*ranges):
                    self.counter.steps += 1
                    self.env.update(zip(f.bound, values))
                    if not self.holds(f.body):
                        return False
                return True
            finally:
                for v in f.bound:
                    self.env.pop(v, None)
                self.env.update(saved)
        raise TypeError(f"not a formula: {f!r}")


# --------------------------------------------------------------------------
# Bounded-fragment decision


def h_candidates(size: int, h: int) -> Candidates:
    domain = tuple(range(size))
    small = small_subsets(domain, 1, h)
    return Candidates(level2=small, level3=small_subsets(small, 2, h))


def _contradictory(formulas: tuple[Formula, ...]) -> bool:
    present = set(formulas)
    return any(_complement(g) in present for g in formulas)


def solve_h(
    f: Formula,
    h: int,
    *,
    universe: Var = DEFAULT_UNIVERSE,
    b2: Var = DEFAULT_BOUNDED2,
    b3: Var = DEFAULT_BOUNDED3,
    max_domain: int = 4,
    domain_bound: int | None = None,
    budget: int | None = DEFAULT_BUDGET,
    refute: bool = True,
    max_branches: int = 256,
) -> Verdict:
    """Decide satisfiability of a bounded-fragment formula.

    Every saturation branch is searched for models of size ``1..limit``,
    where ``limit`` is the smaller of ``max_domain`` and the branch's
    completeness bound (``domain_bound`` if the caller knows a better one).
    A branch is closed when it is contradictory, when the search reached
    its completeness bound, or when instantiation refutes it.  The answer is
    UNSAT only if every branch is closed and CAPPED if some branch stays
    open.  A caller-supplied ``domain_bound`` holds for the formula as a
    whole, so the formula is then searched as a single branch.
    """
    if h < 2:
        raise ValueError("h must be at least 2")
    decompose_h(f, h, universe=universe, b2=b2, b3=b3)
    from .refute import refute_by_instantiation

    started = time.perf_counter()
    supply = FreshSupply(f)
    g = rename_apart(f, supply)
    keep = free_vars(f)
    run = _Search(f, h, b2, b3, keep, budget)
    if domain_bound is not None:
        # the bound covers the whole formula, so its disjunctions can be
        # left to the SAT solver instead of being split into branches
        branches_iter = iter([SaturationBranch((g,), (), 0)])
    else:
        branches_iter = saturate(g, supply)
    branches = 0
    open_branches = 0
    for branch in branches_iter:
        branches += 1
        if branches > max_branches:
            open_branches += 1
            break
        formulas = branch.formulas
        if _contradictory(formulas):
            continue
        complete_at = domain_bound if domain_bound is not None else compute_bound(formulas).construction_bound
        limit = min(complete_at, max_domain)
        model, capped = run.search(formulas, limit)
        if model is not None:
            return Verdict(SAT, model, _stats(run.nodes, run.tried, branches, started))
        if not capped and limit >= complete_at:
            continue
        if refute and refute_by_instantiation(list(formulas)):
            continue
        open_branches += 1
    status = UNSAT if open_branches == 0 else CAPPED
    return Verdict(status, stats=_stats(run.nodes, run.tried, branches, started))


class _Search:
    """Bounded model search for one saturation branch at a time."""

    def __init__(self, f: Formula, h: int, b2: Var, b3: Var, keep: set, budget: int | None) -> None:
        self.f, self.h, self.b2, self.b3 = f, h, b2, b3
        self.keep = keep
        self.budget = budget
        self.nodes = 0
        self.tried = 0

    def search(self, formulas, limit: int) -> tuple[Interpretation | None, bool]:
        """A certified model of size ``<= limit``, and whether the search was cut short."""
        for n in range(1, limit + 1):
            self.tried = max(self.tried, n)
            try:
                model, stats = find_model(list(formulas), n, h_candidates(n, self.h), self.budget, extra_free=self.keep)
            except GroundingBudgetExceeded:
                return None, True
            self.nodes += stats["work"]
            if model is not None:
                model = model.restricted(self.keep)
                if not certify(model, self.f, self.h, self.b2, self.b3):
                    raise AssertionError("bounded search produced a model that fails certification")
                if not evaluate(model, self.f, family_cap=None):
                    raise AssertionError("bounded search produced a model that fails evaluation")
                return model, False
        return None, False


def _stats(nodes: int, max_domain: int, branches: int, started: float) -> dict:
    return {
        "nodes": nodes,
        "max_domain": max_domain,
        "branches": branches,
        "seconds": round(time.perf_counter() - started, 4),
    }


# --------------------------------------------------------------------------
# Propositional reduction


REDUCTION_SET = Var("X", 1)


def _letter_var(name: str) -> Var:
    digits = name.lstrip("pP")
    return Var(f"x{digits}" if digits.isdigit() else f"x_{name}", 0)


def reduce_sat(prop) -> Formula:
    """Replace every letter ``p_i`` by ``x_i in X^1``.

    ``prop`` is a modal formula without modal operators.
    """
    from .modal import Box, Diamond, Letter, MAnd, MNot, MOr

    if isinstance(prop, Letter):
        return In(_letter_var(prop.name), REDUCTION_SET)
    if isinstance(prop, MNot):
        return Not(reduce_sat(prop.body))
    if isinstance(prop, MAnd):
        return And(reduce_sat(prop.left), reduce_sat(prop.right))
    if isinstance(prop, MOr):
        return Or(reduce_sat(prop.left), reduce_sat(prop.right))
    if isinstance(prop, (Box, Diamond)):
        raise ValueError("reduce_sat takes propositional formulae only")
    raise TypeError(f"not a propositional formula: {prop!r}")


def reduction_assignment(model: Interpretation, letters: Mapping[str, Var] | None = None) -> dict[str, bool]:
    """Read a truth assignment off a model of a reduced formula."""
    members = model.assign.get(REDUCTION_SET, HSet(1))
    out = {}
    for v, x in model.assign.items():
        if v.sort == 0 and v.name.startswith("x"):
            out["p" + v.name[1:].lstrip("_")] = x in members
    return out
