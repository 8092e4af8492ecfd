"""Abstract syntax of four-level stratified formulae, hereditary finite sets,
finite interpretations, and the satisfaction evaluator.

Variables carry a sort between 0 and 3.  Sort-0 variables denote domain
elements, sort-1 variables sets of elements, sort-2 variables sets of such
sets, and sort-3 variables sets of sort-2 values.  Ordered pairs are
encoded as ``<x,y> = {{x},{x,y}}`` and are therefore sort-2 terms.

Implication and biconditional are not part of the tree.  The helpers
:func:`implies` and :func:`iff` build them out of negation, disjunction and
conjunction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations, product
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Union

SORTS = (0, 1, 2, 3)
QUANTIFIABLE_SORTS = (0, 1, 2)


class FormulaError(ValueError):
    """Raised when a term, atom or formula is built with the wrong sorts."""


class EvaluationError(ValueError):
    """Raised when a formula cannot be evaluated in an interpretation."""


class CapacityError(EvaluationError):
    """Raised when evaluation would enumerate a powerset beyond the configured cap."""


# --------------------------------------------------------------------------
# Terms and formulae


@dataclass(frozen=True, order=True)
class Var:
    name: str
    sort: int

    def __post_init__(self) -> None:
        if not self.name:
            raise FormulaError("variable names must be nonempty")
        if self.sort not in SORTS:
            raise FormulaError(f"sort must be one of 0..3, got {self.sort!r}")

    def __str__(self) -> str:
        return self.name if self.sort == 0 else f"{self.name}^{self.sort}"


@dataclass(frozen=True)
class Pair:
    """Kuratowski pair of two sort-0 variables, a sort-2 term."""

    left: Var
    right: Var

    def __post_init__(self) -> None:
        if self.left.sort != 0 or self.right.sort != 0:
            raise FormulaError("pair components must be sort-0 variables")

    @property
    def sort(self) -> int:
        return 2

    def __str__(self) -> str:
        return f"<{self.left},{self.right}>"


Term = Union[Var, Pair]


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term

    def __post_init__(self) -> None:
        ls, rs = self.left.sort, self.right.sort
        if ls != rs:
            raise FormulaError(
                f"equality between a sort-{ls} term and a sort-{rs} term is not an atom"
            )
        if ls == 3:
            raise FormulaError("equality between sort-3 variables is not an atom")

    @property
    def level(self) -> int:
        return self.left.sort


@dataclass(frozen=True)
class In:
    element: Term
    container: Term

    def __post_init__(self) -> None:
        es, cs = self.element.sort, self.container.sort
        if cs != es + 1:
            raise FormulaError(
                f"membership of sort-{es} term in sort-{cs} "
                f"{'pair' if isinstance(self.container, Pair) else 'variable'} is not an atom"
            )
        if isinstance(self.container, Pair):
            raise FormulaError("a pair term cannot stand on the right of a membership")

    @property
    def level(self) -> int:
        return self.element.sort


Atom = Union[Eq, In]


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Forall:
    """A block of universal quantifiers over variables of one sort.

    A block over sort-k variables is a purely universal formula of level
    k+1.  Its body may only contain quantifier blocks of strictly lower
    level.
    """

    bound: tuple[Var, ...]
    body: "Formula"

    def __post_init__(self) -> None:
        bound = tuple(self.bound)
        object.__setattr__(self, "bound", bound)
        if not bound:
            raise FormulaError("a quantifier must bind at least one variable")
        if len(set(bound)) != len(bound):
            raise FormulaError("a quantifier binds the same variable twice")
        sorts = {v.sort for v in bound}
        if len(sorts) != 1:
            raise FormulaError("a quantifier block mixes variables of different sorts")
        (sort,) = sorts
        if sort not in QUANTIFIABLE_SORTS:
            raise FormulaError("only variables of sort 0, 1 or 2 can be quantified")
        for inner in quantifiers(self.body):
            if inner.sort >= sort:
                raise FormulaError(
                    f"a level-{inner.sort + 1} quantifier cannot occur inside "
                    f"a level-{sort + 1} purely universal formula"
                )

    @property
    def sort(self) -> int:
        return self.bound[0].sort

    @property
    def level(self) -> int:
        return self.bound[0].sort + 1


Formula = Union[Eq, In, Not, And, Or, Forall]
ATOM_TYPES = (Eq, In)


def is_atom(f: Formula) -> bool:
    return isinstance(f, ATOM_TYPES)


def is_literal(f: Formula) -> bool:
    """Atoms, quantifier blocks, and their negations."""
    if isinstance(f, Not):
        f = f.body
    return isinstance(f, (Eq, In, Forall))


def conj(*parts: Formula) -> Formula:
    """Left-associated conjunction of one or more formulae."""
    if not parts:
        raise FormulaError("empty conjunction")
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disj(*parts: Formula) -> Formula:
    if not parts:
        raise FormulaError("empty disjunction")
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def implies(a: Formula, b: Formula) -> Formula:
    return Or(Not(a), b)


def iff(a: Formula, b: Formula) -> Formula:
    return And(Or(Not(a), b), Or(Not(b), a))


def forall(bound: Iterable[Var] | Var, body: Formula) -> Forall:
    if isinstance(bound, Var):
        bound = (bound,)
    return Forall(tuple(bound), body)


def flatten_and(f: Formula) -> list[Formula]:
    out: list[Formula] = []
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, And):
            stack.append(g.right)
            stack.append(g.left)
        else:
            out.append(g)
    return out


def flatten_or(f: Formula) -> list[Formula]:
    out: list[Formula] = []
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Or):
            stack.append(g.right)
            stack.append(g.left)
        else:
            out.append(g)
    return out


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, Not):
        return (f.body,)
    if isinstance(f, (And, Or)):
        return (f.left, f.right)
    if isinstance(f, Forall):
        return (f.body,)
    return ()


def subformulae(f: Formula) -> Iterator[Formula]:
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(reversed(children(g)))


def quantifiers(f: Formula) -> Iterator[Forall]:
    for g in subformulae(f):
        if isinstance(g, Forall):
            yield g


def size(f: Formula) -> int:
    """Number of connective, quantifier and atom nodes."""
    return sum(1 for _ in subformulae(f))


def term_vars(t: Term) -> tuple[Var, ...]:
    return (t.left, t.right) if isinstance(t, Pair) else (t,)


def atom_vars(a: Atom) -> tuple[Var, ...]:
    if isinstance(a, Eq):
        return term_vars(a.left) + term_vars(a.right)
    return term_vars(a.element) + term_vars(a.container)


def free_vars(f: Formula, sort: int | None = None) -> frozenset[Var]:
    """Free variables of ``f``, optionally only those of one sort."""
    out: set[Var] = set()

    def walk(g: Formula, bound: frozenset[Var]) -> None:
        if isinstance(g, (Eq, In)):
            out.update(v for v in atom_vars(g) if v not in bound)
        elif isinstance(g, Forall):
            walk(g.body, bound | set(g.bound))
        else:
            for c in children(g):
                walk(c, bound)

    walk(f, frozenset())
    if sort is None:
        return frozenset(out)
    return frozenset(v for v in out if v.sort == sort)


def bound_vars(f: Formula) -> frozenset[Var]:
    return frozenset(v for q in quantifiers(f) for v in q.bound)


def all_vars(f: Formula) -> frozenset[Var]:
    out: set[Var] = set()
    for g in subformulae(f):
        if isinstance(g, (Eq, In)):
            out.update(atom_vars(g))
        elif isinstance(g, Forall):
            out.update(g.bound)
    return frozenset(out)


# --------------------------------------------------------------------------
# Substitution, occurrences, alpha-equivalence


class CaptureError(FormulaError):
    """A substituted variable would be captured by a quantifier."""


def _sub_term(t: Term, mapping: Mapping[Var, Var]) -> Term:
    if isinstance(t, Pair):
        return Pair(mapping.get(t.left, t.left), mapping.get(t.right, t.right))
    return mapping.get(t, t)


def substitute(f: Formula, mapping: Mapping[Var, Var]) -> Formula:
    """Simultaneously replace free occurrences of variables.

    The mapping must be sort-preserving, and no replacement may end up
    under a quantifier binding it.
    """
    for old, new in mapping.items():
        if old.sort != new.sort:
            raise FormulaError(f"cannot substitute sort-{new.sort} {new} for sort-{old.sort} {old}")
    return _substitute(f, dict(mapping))


def _substitute(f: Formula, mapping: dict[Var, Var]) -> Formula:
    if not mapping:
        return f
    if isinstance(f, Eq):
        return Eq(_sub_term(f.left, mapping), _sub_term(f.right, mapping))
    if isinstance(f, In):
        return In(_sub_term(f.element, mapping), _sub_term(f.container, mapping))
    if isinstance(f, Not):
        return Not(_substitute(f.body, mapping))
    if isinstance(f, And):
        return And(_substitute(f.left, mapping), _substitute(f.right, mapping))
    if isinstance(f, Or):
        return Or(_substitute(f.left, mapping), _substitute(f.right, mapping))
    if isinstance(f, Forall):
        inner = {k: v for k, v in mapping.items() if k not in f.bound}
        if inner:
            body_free = free_vars(f.body)
            for old, new in inner.items():
                if old in body_free and new in f.bound:
                    raise CaptureError(f"substituting {new} for {old} would be captured by a quantifier")
        return Forall(f.bound, _substitute(f.body, inner))
    raise TypeError(f"not a formula: {f!r}")


def polarity_occurrences(f: Formula) -> list[tuple[tuple[int, ...], Formula, bool]]:
    """Every subformula occurrence with its path and polarity.

    An occurrence is positive when an even number of negation nodes lie
    strictly above it.  Paths are child-index tuples from the root.
    """
    out: list[tuple[tuple[int, ...], Formula, bool]] = []

    def walk(g: Formula, path: tuple[int, ...], positive: bool) -> None:
        out.append((path, g, positive))
        flip = isinstance(g, Not)
        for i, c in enumerate(children(g)):
            walk(c, path + (i,), positive != flip)

    walk(f, (), True)
    return out


def canonical_names(f: Formula) -> Formula:
    """Rename bound variables to positional names so that alpha-equivalent
    formulae become structurally equal."""
    counter = [0]

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
            fresh = []
            for v in g.bound:
                fresh.append(Var(f"#{counter[0]}", v.sort))
                counter[0] += 1
            inner = dict(env)
            inner.update(zip(g.bound, fresh))
            return Forall(tuple(fresh), walk(g.body, inner))
        raise TypeError(f"not a formula: {g!r}")

    return walk(f, {})


def alpha_equal(f: Formula, g: Formula) -> bool:
    return canonical_names(f) == canonical_names(g)


def guards(q: Forall) -> dict[Var, Var]:
    """Bound variables of ``q`` whose range is cut down by a membership guard.

    The matrix is read as a disjunction.  A disjunct ``~(... & v in G & ...)``
    makes every instance with ``v`` outside ``G`` true, so only members of
    ``G`` need to be visited.  ``G`` must be a variable not bound by ``q``.
    """
    found: dict[Var, Var] = {}
    bound = set(q.bound)
    for d in flatten_or(q.body):
        if not isinstance(d, Not):
            continue
        for c in flatten_and(d.body):
            if (
                isinstance(c, In)
                and isinstance(c.element, Var)
                and c.element in bound
                and isinstance(c.container, Var)
                and c.container not in bound
                and c.element not in found
            ):
                found[c.element] = c.container
    return found


# --------------------------------------------------------------------------
# Hereditarily finite sets over a domain of integer elements

Element = int


class HSet:
    """A finite set of level 1, 2 or 3 in canonical form.

    Level-1 members are integers, higher-level members are ``HSet`` values
    one level down.  Members are deduplicated and sorted, so structural
    equality coincides with extensional equality.
    """

    __slots__ = ("level", "members", "key", "_index", "_hash")

    def __init__(self, level: int, members: Iterable = ()) -> None:
        if level not in (1, 2, 3):
            raise ValueError(f"set level must be 1, 2 or 3, got {level}")
        uniq = set(members)
        if level == 1:
            for m in uniq:
                if not isinstance(m, int) or isinstance(m, bool):
                    raise ValueError(f"level-1 members must be elements, got {m!r}")
            ordered = tuple(sorted(uniq))
            key: tuple = ordered
        else:
            for m in uniq:
                if not isinstance(m, HSet) or m.level != level - 1:
                    raise ValueError(f"level-{level} members must be level-{level - 1} sets, got {m!r}")
            ordered = tuple(sorted(uniq, key=_set_key))
            key = tuple(m.key for m in ordered)
        self.level = level
        self.members = ordered
        self.key = key
        self._index = frozenset(ordered)
        self._hash = hash((level, key))

    def __contains__(self, item: object) -> bool:
        return item in self._index

    def __iter__(self) -> Iterator:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HSet):
            return NotImplemented
        return self._hash == other._hash and self.level == other.level and self.key == other.key

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "HSet") -> bool:
        return (self.level, self.key) < (other.level, other.key)

    def __repr__(self) -> str:
        return f"HSet({self.level}, {self.to_python()!r})"

    def to_python(self):
        """Nested lists mirroring the set structure."""
        if self.level == 1:
            return list(self.members)
        return [m.to_python() for m in self.members]

    def elements(self) -> frozenset[int]:
        """All domain elements reachable through membership."""
        if self.level == 1:
            return frozenset(self.members)
        out: set[int] = set()
        for m in self.members:
            out |= m.elements()
        return frozenset(out)

    def total_size(self) -> int:
        """Number of member slots at every nesting depth."""
        if self.level == 1:
            return len(self.members)
        return len(self.members) + sum(m.total_size() for m in self.members)

    def intersect_domain(self, domain: Iterable[int]) -> "HSet":
        if self.level != 1:
            raise ValueError("only level-1 sets can be intersected with a domain")
        d = set(domain)
        return HSet(1, (m for m in self.members if m in d))

    def over(self, domain: frozenset[int]) -> bool:
        """True when every element reachable from this set lies in ``domain``."""
        return self.elements() <= domain


def _set_key(s: HSet) -> tuple:
    return s.key


def pair_value(a: int, b: int) -> HSet:
    """Kuratowski pair ``{{a},{a,b}}``."""
    return HSet(2, (HSet(1, (a,)), HSet(1, (a, b))))


def decode_pair(s: HSet) -> tuple[int, int] | None:
    """Inverse of :func:`pair_value`; ``None`` for sets not of pair shape."""
    if s.level != 2 or not 1 <= len(s) <= 2:
        return None
    if len(s) == 1:
        (only,) = s.members
        if len(only) == 1:
            return (only.members[0], only.members[0])
        return None
    small, big = sorted(s.members, key=len)
    if len(small) != 1 or len(big) != 2 or small.members[0] not in big:
        return None
    a = small.members[0]
    (b,) = [m for m in big.members if m != a]
    return (a, b)


@lru_cache(maxsize=None)
def powerset(items: tuple, level: int) -> tuple[HSet, ...]:
    """All subsets of ``items`` as level-``level`` sets, in canonical order."""
    out = [HSet(level, combo) for r in range(len(items) + 1) for combo in combinations(items, r)]
    return tuple(sorted(out))


@lru_cache(maxsize=None)
def small_subsets(items: tuple, level: int, below: int) -> tuple[HSet, ...]:
    """Subsets with fewer than ``below`` members, in canonical order."""
    out = [
        HSet(level, combo)
        for r in range(min(below, len(items) + 1))
        for combo in combinations(items, r)
    ]
    return tuple(sorted(out))


# --------------------------------------------------------------------------
# Interpretations

Value = Union[int, HSet]


@dataclass(frozen=True, eq=False)
class Interpretation:
    """A nonempty finite domain plus a sort-respecting assignment.

    ``labels`` maps elements to display names for model certificates.
    """

    domain: tuple[int, ...]
    assign: Mapping[Var, Value]
    labels: Mapping[int, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        domain = tuple(sorted(set(self.domain)))
        if not domain:
            raise EvaluationError("empty domain")
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "assign", MappingProxyType(dict(self.assign)))
        object.__setattr__(self, "labels", MappingProxyType(dict(self.labels)))
        dom = frozenset(domain)
        for var, val in self.assign.items():
            if var.sort == 0:
                if isinstance(val, HSet) or val not in dom:
                    raise EvaluationError(f"{var} must denote a domain element, got {val!r}")
            else:
                if not isinstance(val, HSet) or val.level != var.sort:
                    raise EvaluationError(f"{var} must denote a level-{var.sort} set, got {val!r}")
                if not val.over(dom):
                    raise EvaluationError(f"the value of {var} is not hereditarily over the domain")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Interpretation):
            return NotImplemented
        return (
            self.domain == other.domain
            and dict(self.assign) == dict(other.assign)
            and self.label_list() == other.label_list()
        )

    def __hash__(self) -> int:
        return hash((self.domain, frozenset(self.assign.items())))

    def label(self, element: int) -> str:
        return self.labels.get(element, f"d{element}")

    def label_list(self) -> list[str]:
        return [self.label(e) for e in self.domain]

    def updated(self, changes: Mapping[Var, Value]) -> "Interpretation":
        merged = dict(self.assign)
        merged.update(changes)
        return Interpretation(self.domain, merged, self.labels)

    def restricted(self, variables: Iterable[Var]) -> "Interpretation":
        keep = set(variables)
        return Interpretation(self.domain, {v: x for v, x in self.assign.items() if v in keep}, self.labels)

    def total_size(self) -> int:
        """Domain size plus the nested sizes of all assigned values."""
        return len(self.domain) + sum(
            1 if v.sort == 0 else x.total_size() for v, x in self.assign.items()
        )


def eval_term2(interp: Interpretation, t: Term, env: Mapping[Var, Value] | None = None) -> HSet:
    """Value of a sort-2 term: a variable lookup or a Kuratowski pair."""
    if isinstance(t, Pair):
        return pair_value(_lookup(interp, t.left, env), _lookup(interp, t.right, env))
    if t.sort != 2:
        raise EvaluationError(f"{t} is not a sort-2 term")
    return _lookup(interp, t, env)


def _lookup(interp: Interpretation, v: Var, env: Mapping[Var, Value] | None):
    if env is not None and v in env:
        return env[v]
    try:
        return interp.assign[v]
    except KeyError:
        raise EvaluationError(f"variable {v} is not assigned") from None


DEFAULT_FAMILY_CAP = 4


class _Evaluator:
    def __init__(self, interp: Interpretation, family_cap: int | None):
        self.interp = interp
        self.env: dict[Var, Value] = {}
        self.family_cap = family_cap
        self._guards: dict[int, dict[Var, Var]] = {}

    def term(self, t: Term) -> Value:
        if isinstance(t, Pair):
            return pair_value(self.var(t.left), self.var(t.right))
        return self.var(t)

    def var(self, v: Var) -> Value:
        env = self.env
        if v in env:
            return env[v]
        try:
            return self.interp.assign[v]
        except KeyError:
            raise EvaluationError(f"variable {v} is not assigned") from None

    def range_of(self, sort: int) -> tuple:
        domain = self.interp.domain
        if sort == 0:
            return domain
        if sort == 1:
            return powerset(domain, 1)
        if self.family_cap is not None and len(domain) > self.family_cap:
            raise CapacityError(
                f"a sort-2 quantifier over a domain of {len(domain)} elements exceeds the cap of {self.family_cap}"
            )
        return powerset(powerset(domain, 1), 2)

    def holds(self, f: Formula) -> bool:
        if isinstance(f, Eq):
            return self.term(f.left) == self.term(f.right)
        if isinstance(f, In):
            return self.term(f.element) in self.term(f.container)
        if isinstance(f, Not):
            return not self.holds(f.body)
        if isinstance(f, And):
            return self.holds(f.left) and self.holds(f.right)
        if isinstance(f, Or):
            return self.holds(f.left) or self.holds(f.right)
        if isinstance(f, Forall):
            guarded = self._guards.get(id(f))
            if guarded is None:
                guarded = self._guards[id(f)] = guards(f)
            env = self.env
            ranges = []
            for v in f.bound:
                if v in guarded:
                    ranges.append(self.var(guarded[v]).members)
                else:
                    ranges.append(self.range_of(f.sort))
            saved = {v: env[v] for v in f.bound if v in env}
            try:
                for values in product(*ranges):
                    env.update(zip(f.bound, values))
                    if not self.holds(f.body):
                        return False
                return True
            finally:
                for v in f.bound:
                    env.pop(v, None)
                env.update(saved)
        raise TypeError(f"not a formula: {f!r}")


def evaluate(interp: Interpretation, f: Formula, family_cap: int | None = DEFAULT_FAMILY_CAP) -> bool:
    """Truth value of ``f`` in ``interp``.

    Sort-0 quantifiers range over the domain, sort-1 over its powerset and
    sort-2 over the powerset of that.  A bound variable whose matrix is
    guarded by membership in a set only visits that set's members, which
    gives the same truth value.  An unguarded sort-2 quantifier over a
    domain larger than ``family_cap`` raises :class:`CapacityError`; pass
    ``None`` to lift the cap.
    """
    return _Evaluator(interp, family_cap).holds(f)


# ``eval`` shadows the builtin, so the public name is ``evaluate``; the alias
# keeps the short name available for callers that import it explicitly.
eval = evaluate  # noqa: A001
