"""K45 modal formulae, their Kripke semantics and their set-theoretic translation.

Box and diamond are read globally: ``[]A`` holds when ``A`` holds at every
world that has a predecessor, and ``<>A`` when it holds at one such world.
The translation defines one sort-1 variable per subformula (the set of
worlds where it holds) and one sort-3 variable for the accessibility
relation, wraps everything in the ``h = 3`` shell and asks for a world
``x`` in the set of the input formula.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Hashable, Iterator, Union

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
    conj,
    decode_pair,
    iff,
    implies,
)
from .fragment import DEFAULT_BOUNDED2, DEFAULT_BOUNDED3, DEFAULT_UNIVERSE, psi_sort3, shell
from .syntax import ParseDiagnostic, ParseError, SourceSpan, tokenize


# --------------------------------------------------------------------------
# Syntax


@dataclass(frozen=True)
class Letter:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class MNot:
    body: "ModalFormula"


@dataclass(frozen=True)
class MAnd:
    left: "ModalFormula"
    right: "ModalFormula"


@dataclass(frozen=True)
class MOr:
    left: "ModalFormula"
    right: "ModalFormula"


@dataclass(frozen=True)
class Box:
    body: "ModalFormula"


@dataclass(frozen=True)
class Diamond:
    body: "ModalFormula"


ModalFormula = Union[Letter, MNot, MAnd, MOr, Box, Diamond]


def modal_children(f: ModalFormula) -> tuple:
    if isinstance(f, Letter):
        return ()
    if isinstance(f, (MNot, Box, Diamond)):
        return (f.body,)
    return (f.left, f.right)


def subformulae(f: ModalFormula) -> list[ModalFormula]:
    """Distinct subformulae, children before parents."""
    seen: dict = {}

    def walk(g):
        if g in seen:
            return
        for c in modal_children(g):
            walk(c)
        seen[g] = None

    walk(f)
    return list(seen)


def modal_size(f: ModalFormula) -> int:
    return 1 + sum(modal_size(c) for c in modal_children(f))


def modal_depth(f: ModalFormula) -> int:
    inner = max((modal_depth(c) for c in modal_children(f)), default=0)
    return inner + 1 if isinstance(f, (Box, Diamond)) else inner


def letters(f: ModalFormula) -> list[str]:
    return sorted({g.name for g in subformulae(f) if isinstance(g, Letter)})


def modal_operators(f: ModalFormula) -> list[ModalFormula]:
    return [g for g in subformulae(f) if isinstance(g, (Box, Diamond))]


class _ModalParser:
    def __init__(self, text: str) -> None:
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def at(self, text: str) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    def take(self):
        t = self.tok
        if t.kind != "end":
            self.i += 1
        return t

    def fail(self, message: str):
        t = self.tok
        raise ParseError([ParseDiagnostic(SourceSpan(t.start, t.end), message)])

    def formula(self) -> ModalFormula:
        left = self.imp()
        while self.at("<->"):
            self.take()
            right = self.imp()
            left = MAnd(MOr(MNot(left), right), MOr(MNot(right), left))
        return left

    def imp(self) -> ModalFormula:
        left = self.disjunction()
        if self.at("->"):
            self.take()
            return MOr(MNot(left), self.imp())
        return left

    def disjunction(self) -> ModalFormula:
        left = self.conjunction()
        while self.at("|"):
            self.take()
            left = MOr(left, self.conjunction())
        return left

    def conjunction(self) -> ModalFormula:
        left = self.unary()
        while self.at("&"):
            self.take()
            left = MAnd(left, self.unary())
        return left

    def unary(self) -> ModalFormula:
        if self.at("~"):
            self.take()
            return MNot(self.unary())
        if self.at("[]"):
            self.take()
            return Box(self.unary())
        if self.at("<>"):
            self.take()
            return Diamond(self.unary())
        if self.at("("):
            self.take()
            inner = self.formula()
            if not self.at(")"):
                self.fail("expected ')'")
            self.take()
            return inner
        t = self.tok
        if t.kind == "ident" and "^" not in t.text:
            self.take()
            return Letter(t.text)
        found = "end of input" if t.kind == "end" else repr(t.text)
        self.fail(f"expected a propositional letter, found {found}")


def parse_modal(text: str) -> ModalFormula:
    p = _ModalParser(text)
    f = p.formula()
    if p.tok.kind != "end":
        p.fail(f"unexpected {p.tok.text!r} after the formula")
    return f


_PREC = {MOr: 1, MAnd: 2}


def modal_to_text(f: ModalFormula) -> str:
    def render(g, outer: int) -> str:
        if isinstance(g, Letter):
            return g.name
        if isinstance(g, MNot):
            return "~" + render(g.body, 3)
        if isinstance(g, Box):
            return "[]" + render(g.body, 3)
        if isinstance(g, Diamond):
            return "<>" + render(g.body, 3)
        prec = _PREC[type(g)]
        sym = " & " if isinstance(g, MAnd) else " | "
        # left-associative: a right operand of equal precedence needs parentheses
        text = render(g.left, prec) + sym + render(g.right, prec + 1)
        return f"({text})" if prec < outer else text

    return render(f, 0)


# --------------------------------------------------------------------------
# Kripke semantics


@dataclass(frozen=True)
class KripkeModel:
    W: tuple
    R: frozenset
    h: dict = field(default_factory=dict, hash=False, compare=True)

    def __post_init__(self) -> None:
        if not self.W:
            raise ValueError("a Kripke model needs at least one world")
        worlds = set(self.W)
        for a, b in self.R:
            if a not in worlds or b not in worlds:
                raise ValueError(f"relation pair ({a}, {b}) leaves the set of worlds")
        for p, ws in self.h.items():
            if not set(ws) <= worlds:
                raise ValueError(f"valuation of {p} names unknown worlds")

    def with_predecessor(self) -> frozenset:
        return frozenset(b for _, b in self.R)

    def is_transitive(self) -> bool:
        return all((a, d) in self.R for a, b in self.R for c, d in self.R if b == c)

    def is_euclidean(self) -> bool:
        return all((b, d) in self.R for a, b in self.R for c, d in self.R if a == c)

    def to_json(self) -> dict:
        return {
            "worlds": list(self.W),
            "relation": sorted([a, b] for a, b in self.R),
            "valuation": {p: sorted(ws) for p, ws in sorted(self.h.items())},
        }


def kripke_eval(K: KripkeModel, w: Hashable, f: ModalFormula) -> bool:
    if w not in K.W:
        raise ValueError(f"unknown world {w!r}")
    reachable = K.with_predecessor()

    def holds(g, v) -> bool:
        if isinstance(g, Letter):
            return v in K.h.get(g.name, ())
        if isinstance(g, MNot):
            return not holds(g.body, v)
        if isinstance(g, MAnd):
            return holds(g.left, v) and holds(g.right, v)
        if isinstance(g, MOr):
            return holds(g.left, v) or holds(g.right, v)
        if isinstance(g, Box):
            return all(holds(g.body, u) for u in reachable)
        if isinstance(g, Diamond):
            return any(holds(g.body, u) for u in reachable)
        raise TypeError(f"not a modal formula: {g!r}")

    return holds(f, w)


def kripke_eval_local(K: KripkeModel, w: Hashable, f: ModalFormula) -> bool:
    """The usual world-relative reading: ``[]A`` looks at the successors of ``w``."""
    if w not in K.W:
        raise ValueError(f"unknown world {w!r}")

    def holds(g, v) -> bool:
        if isinstance(g, Letter):
            return v in K.h.get(g.name, ())
        if isinstance(g, MNot):
            return not holds(g.body, v)
        if isinstance(g, MAnd):
            return holds(g.left, v) and holds(g.right, v)
        if isinstance(g, MOr):
            return holds(g.left, v) or holds(g.right, v)
        succ = [b for a, b in K.R if a == v]
        if isinstance(g, Box):
            return all(holds(g.body, u) for u in succ)
        return any(holds(g.body, u) for u in succ)

    return holds(f, w)


def k45_frames(n: int) -> list[frozenset]:
    """All transitive and euclidean relations over worlds ``0..n-1``."""
    pairs = [(a, b) for a in range(n) for b in range(n)]
    out = []
    for bits in product((False, True), repeat=len(pairs)):
        R = frozenset(p for p, keep in zip(pairs, bits) if keep)
        if _transitive(R) and _euclidean(R):
            out.append(R)
    return out


def _transitive(R) -> bool:
    return all((a, d) in R for a, b in R for c, d in R if b == c)


def _euclidean(R) -> bool:
    return all((b, d) in R for a, b in R for c, d in R if a == c)


def kripke_oracle_sat(f: ModalFormula, max_worlds: int) -> tuple[KripkeModel, int] | None:
    """Search K45 models with at most ``max_worlds`` worlds for a world satisfying ``f``."""
    if max_worlds < 1:
        raise ValueError("max_worlds must be at least 1")
    names = letters(f)
    for n in range(1, max_worlds + 1):
        worlds = tuple(range(n))
        subsets = [frozenset(w for w in worlds if mask >> w & 1) for mask in range(1 << n)]
        for R in _frames(n):
            for vals in product(subsets, repeat=len(names)):
                K = KripkeModel(worlds, R, dict(zip(names, vals)))
                for w in worlds:
                    if kripke_eval(K, w, f):
                        return K, w
    return None


_FRAME_CACHE: dict[int, list[frozenset]] = {}


def _frames(n: int) -> list[frozenset]:
    if n not in _FRAME_CACHE:
        _FRAME_CACHE[n] = k45_frames(n)
    return _FRAME_CACHE[n]


# --------------------------------------------------------------------------
# Translation


@dataclass
class TranslationResult:
    formula: Formula
    phi_var: Var
    letter_vars: dict[str, Var]
    relation_var: Var
    query_var: Var
    shell: tuple[Formula, ...]
    psi_relation: Formula
    chi: tuple[Formula, ...]
    definitions: tuple[Formula, ...]
    query: Formula
    subformula_vars: dict = field(default_factory=dict)

    def conjuncts(self) -> list[Formula]:
        return [*self.shell, self.psi_relation, *self.chi, *self.definitions, self.query]


_z, _z1, _z2, _z3 = Var("z", 0), Var("z1", 0), Var("z2", 0), Var("z3", 0)
_Z2 = Var("Z", 2)


def _rin(a: Var, b: Var, R: Var) -> Formula:
    return In(Pair(a, b), R)


def relation_axioms(R: Var, b3: Var, *, full_relation: bool = False) -> tuple[Formula, ...]:
    """Every pair is a candidate, ``R`` holds pairs only, and ``R`` is
    transitive and euclidean.

    With ``full_relation`` the second axiom is a biconditional: every
    candidate pair is in ``R``, which (with the first axiom) makes ``R`` the
    full relation.  That reading is kept for comparison only; it loses the
    models in which some world has no predecessor.
    """
    every_pair = Forall((_z1, _z2), In(Pair(_z1, _z2), b3))
    is_pair = Not(Forall((_z1, _z2), Not(Eq(Pair(_z1, _z2), _Z2))))
    in_R = In(_Z2, R)
    pairs_only = Forall(
        (_Z2,),
        implies(In(_Z2, b3), iff(in_R, is_pair) if full_relation else implies(in_R, is_pair)),
    )
    transitive = Forall((_z1, _z2, _z3), implies(And(_rin(_z1, _z2, R), _rin(_z2, _z3, R)), _rin(_z1, _z3, R)))
    euclidean = Forall((_z1, _z2, _z3), implies(And(_rin(_z1, _z2, R), _rin(_z1, _z3, R)), _rin(_z2, _z3, R)))
    return every_pair, pairs_only, transitive, euclidean


def translate_k45(
    f: ModalFormula,
    *,
    universe: Var = DEFAULT_UNIVERSE,
    b2: Var = DEFAULT_BOUNDED2,
    b3: Var = DEFAULT_BOUNDED3,
    relation: Var = Var("R", 3),
    full_relation: bool = False,
) -> TranslationResult:
    letter_vars: dict[str, Var] = {}
    table: dict = {}
    definitions: list[Formula] = []
    R = relation

    def everywhere(X: Var, inside: bool) -> Formula:
        atom = In(_z, X)
        return Forall((_z,), atom if inside else Not(atom))

    def var_for(g) -> Var:
        hit = table.get(g)
        if hit is not None:
            return hit
        if isinstance(g, Letter):
            v = letter_vars[g.name] = Var(f"X{g.name}", 1)
            table[g] = v
            return v
        parts = [var_for(c) for c in modal_children(g)]
        v = table[g] = Var(f"S{len(table) - len(letter_vars) + 1}", 1)
        member = In(_z, v)
        if isinstance(g, MNot):
            definitions.append(Forall((_z,), iff(member, Not(In(_z, parts[0])))))
        elif isinstance(g, MAnd):
            definitions.append(Forall((_z,), iff(member, And(In(_z, parts[0]), In(_z, parts[1])))))
        elif isinstance(g, MOr):
            definitions.append(Forall((_z,), iff(member, Or(In(_z, parts[0]), In(_z, parts[1])))))
        elif isinstance(g, Box):
            # every world with a predecessor lies in the body's set
            all_good = Forall((_z1, _z2), implies(_rin(_z2, _z1, R), In(_z1, parts[0])))
            definitions.append(implies(all_good, everywhere(v, True)))
            definitions.append(implies(Not(all_good), everywhere(v, False)))
        else:
            # no world with a predecessor lies in the body's set
            none_good = Forall((_z1, _z2), Or(Not(_rin(_z2, _z1, R)), Not(In(_z1, parts[0]))))
            definitions.append(implies(Not(none_good), everywhere(v, True)))
            definitions.append(implies(none_good, everywhere(v, False)))
        return v

    phi_var = var_for(f)
    for name in letters(f):
        letter_vars.setdefault(name, Var(f"X{name}", 1))
    x = Var("x", 0)
    query = In(x, phi_var)
    shell_parts = tuple(shell(3, universe, b2, b3))
    psi_relation = psi_sort3(R, b3)
    chi = relation_axioms(R, b3, full_relation=full_relation)
    return TranslationResult(
        formula=conj(*shell_parts, psi_relation, *chi, *definitions, query),
        phi_var=phi_var,
        letter_vars=letter_vars,
        relation_var=R,
        query_var=x,
        shell=shell_parts,
        psi_relation=psi_relation,
        chi=chi,
        definitions=tuple(definitions),
        query=query,
        subformula_vars=dict(table),
    )


def decode_kripke(model: Interpretation, tr: TranslationResult) -> tuple[KripkeModel, int]:
    """Read the Kripke model and query world off a model of a translation."""
    worlds = tuple(model.domain)
    R: set = set()
    for member in model.assign.get(tr.relation_var, HSet(3)):
        pair = decode_pair(member)
        if pair is None:
            raise AssertionError(f"relation variable holds a non-pair {member}")
        R.add(pair)
    h = {p: frozenset(model.assign.get(v, HSet(1)).members) for p, v in tr.letter_vars.items()}
    return KripkeModel(worlds, frozenset(R), h), model.assign[tr.query_var]


def k45_domain_bound(f: ModalFormula) -> int:
    """Worlds needed for a model: the query world plus one witness per modal subformula."""
    return 1 + len(modal_operators(f))


def decide_k45(
    f: ModalFormula,
    *,
    budget: int | None = None,
    max_domain: int | None = None,
    full_relation: bool = False,
):
    """Decide ``f`` through its translation and decode any model found."""
    from .solver import DEFAULT_BUDGET, SAT, solve_h

    tr = translate_k45(f, full_relation=full_relation)
    bound = k45_domain_bound(f)
    verdict = solve_h(
        tr.formula,
        3,
        domain_bound=bound,
        max_domain=bound if max_domain is None else max_domain,
        budget=DEFAULT_BUDGET if budget is None else budget,
    )
    if verdict.status == SAT:
        K, w = decode_kripke(verdict.model, tr)
        if not (K.is_transitive() and K.is_euclidean()):
            raise AssertionError("decoded accessibility relation is not transitive and euclidean")
        if not kripke_eval(K, w, f):
            raise AssertionError("decoded Kripke model does not satisfy the formula")
        verdict.stats["kripke"] = K.to_json()
        verdict.stats["world"] = w
    return verdict


# --------------------------------------------------------------------------
# Corpus


def enumerate_modal(max_size: int, names: tuple[str, ...] = ("p1", "p2"), max_depth: int | None = None) -> Iterator[ModalFormula]:
    """Every formula over ``names`` built from ~ & | [] <> with at most
    ``max_size`` nodes (and modal depth at most ``max_depth``)."""
    by_size: dict[int, list[ModalFormula]] = {1: [Letter(p) for p in names]}
    for s in range(2, max_size + 1):
        level: list[ModalFormula] = []
        for g in by_size[s - 1]:
            level += [MNot(g), Box(g), Diamond(g)]
        for left_size in range(1, s - 1):
            right_size = s - 1 - left_size
            for a in by_size[left_size]:
                for b in by_size[right_size]:
                    level += [MAnd(a, b), MOr(a, b)]
        by_size[s] = level
    for s in range(1, max_size + 1):
        for g in by_size[s]:
            if max_depth is None or modal_depth(g) <= max_depth:
                yield g
