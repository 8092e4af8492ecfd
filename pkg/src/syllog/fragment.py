"""Membership tests for the restricted fragment and its bounded subfragments.

Two side conditions carve the restricted fragment out of the full language:

* a level-1 universal that occurs negatively inside a level-2 universal must
  be *linked* to the level-2 bound variables: whenever its matrix fails, the
  failing elements belong to every bound set.  The link condition is a
  quantifier-free formula over sort-0 and sort-1 atoms and is decided by
  :func:`validity_2ls`.
* inside a level-3 universal, level-2 universals occur only positively, and
  negative level-1 universals outside them are pair-equality blocks
  ``forall z1..zn . ~(<zi,zj> = Y^2 & ...)``.

The bounded subfragment with parameter ``h`` additionally fixes a universe
variable, a sort-2 variable collecting sets of fewer than ``h`` elements and
a sort-3 variable collecting families of fewer than ``h`` such sets, and it
caps every quantifier prefix at ``h``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Iterator

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
    canonical_names,
    children,
    conj,
    disj,
    flatten_and,
    flatten_or,
    free_vars,
    implies,
    subformulae,
)

DEFAULT_UNIVERSE = Var("U", 1)
DEFAULT_BOUNDED2 = Var("B", 2)
DEFAULT_BOUNDED3 = Var("B", 3)


@dataclass(frozen=True)
class Diagnostic:
    rule: str
    path: tuple[int, ...]
    message: str

    def to_json(self) -> dict:
        return {"rule": self.rule, "path": list(self.path), "message": self.message}


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    diagnostics: tuple[Diagnostic, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


class UnsupportedFragmentError(ValueError):
    pass


# --------------------------------------------------------------------------
# Validity of quantifier-free sort-0/sort-1 formulae


def set_partitions(n: int) -> Iterator[tuple[int, ...]]:
    """Restricted growth strings: block index of each of ``n`` items."""
    if n == 0:
        yield ()
        return
    labels = [0] * n

    def grow(i: int, top: int) -> Iterator[tuple[int, ...]]:
        if i == n:
            yield tuple(labels)
            return
        for b in range(top + 2):
            labels[i] = b
            yield from grow(i + 1, max(top, b))

    labels[0] = 0
    yield from grow(1, 0)


def _check_2ls(f: Formula) -> None:
    for g in subformulae(f):
        if isinstance(g, Forall):
            raise UnsupportedFragmentError("validity_2ls takes quantifier-free formulae")
        if isinstance(g, Eq) and g.level != 0:
            raise UnsupportedFragmentError(f"level-{g.level} equality is outside the sort-0/sort-1 fragment")
        if isinstance(g, In) and g.level != 0:
            raise UnsupportedFragmentError(f"level-{g.level} membership is outside the sort-0/sort-1 fragment")


def countermodel_2ls(f: Formula) -> tuple[dict[Var, int], dict[tuple[int, Var], bool]] | None:
    """A partition of the sort-0 variables plus membership bits falsifying ``f``.

    Returns ``None`` when ``f`` is valid.  Every interpretation induces such
    a partition (which variables denote the same element) and such bits
    (which classes fall in which sets), and ``f`` only observes those.
    """
    _check_2ls(f)
    elems = sorted(free_vars(f, 0))
    sets = sorted(free_vars(f, 1))
    for labels in set_partitions(len(elems)):
        block = dict(zip(elems, labels))
        nblocks = max(labels, default=-1) + 1
        slots = [(b, s) for b in range(nblocks) for s in sets]
        for bits in product((False, True), repeat=len(slots)):
            member = dict(zip(slots, bits))
            if not _holds_2ls(f, block, member):
                return block, member
    return None


def _holds_2ls(f: Formula, block: dict[Var, int], member: dict[tuple[int, Var], bool]) -> bool:
    if isinstance(f, Eq):
        return block[f.left] == block[f.right]
    if isinstance(f, In):
        return member[(block[f.element], f.container)]
    if isinstance(f, Not):
        return not _holds_2ls(f.body, block, member)
    if isinstance(f, And):
        return _holds_2ls(f.left, block, member) and _holds_2ls(f.right, block, member)
    if isinstance(f, Or):
        return _holds_2ls(f.left, block, member) or _holds_2ls(f.right, block, member)
    raise TypeError(f"not a formula: {f!r}")


def validity_2ls(f: Formula) -> bool:
    """True iff the quantifier-free formula ``f`` holds in every interpretation."""
    return countermodel_2ls(f) is None


# --------------------------------------------------------------------------
# Restriction on negative level-1 universals inside level-2 universals


@dataclass(frozen=True)
class LinkReport:
    universal: Forall
    enclosing: Forall
    path: tuple[int, ...]
    linked_vars: frozenset[Var]
    condition: Formula
    level0_only: bool
    valid: bool

    @property
    def message(self) -> str:
        if not self.level0_only:
            return "matrix of a negative level-1 universal uses atoms above level 0"
        if not self.valid:
            return "failing elements of a negative level-1 universal are not forced into the bound sets"
        return "linked"


def _occurrences(f: Formula, path: tuple[int, ...] = (), positive: bool = True, stop=None):
    """Subformula occurrences below ``f`` with polarity relative to ``f``.

    Descent stops below nodes for which ``stop`` returns true (the node
    itself is still reported).
    """
    yield path, f, positive
    if stop is not None and path and stop(f):
        return
    flip = isinstance(f, Not)
    for i, c in enumerate(children(f)):
        yield from _occurrences(c, path + (i,), positive != flip, stop)


def _is_level0(f: Formula) -> bool:
    return all(not isinstance(g, (Eq, In)) or g.level == 0 for g in subformulae(f))


def link_condition(universal: Forall, linked: tuple[Var, ...]) -> Formula:
    """``~matrix -> AND_i AND_j z_i in Z_j``."""
    memberships = [In(z, Z) for z in universal.bound for Z in linked]
    return implies(Not(universal.body), conj(*memberships))


def check_restriction_1(psi: Formula) -> list[LinkReport]:
    reports: list[LinkReport] = []
    for path, outer, _ in _occurrences(psi):
        if not (isinstance(outer, Forall) and outer.level == 2):
            continue
        for sub, inner, positive in _occurrences(outer.body):
            if positive or not (isinstance(inner, Forall) and inner.level == 1):
                continue
            cond = link_condition(inner, outer.bound)
            level0 = _is_level0(inner.body)
            reports.append(
                LinkReport(
                    universal=inner,
                    enclosing=outer,
                    path=path + (0,) + sub,
                    linked_vars=frozenset(outer.bound),
                    condition=cond,
                    level0_only=level0,
                    valid=level0 and validity_2ls(cond),
                )
            )
    return reports


# --------------------------------------------------------------------------
# Restriction on level-3 universals


def is_pair_block(q: Forall) -> bool:
    """``forall z1..zn . ~(<zi,zj> = Y^2 & ...)`` with ``zi, zj`` bound here."""
    if q.level != 1 or not isinstance(q.body, Not):
        return False
    bound = set(q.bound)
    for c in flatten_and(q.body.body):
        if not isinstance(c, Eq):
            return False
        sides = (c.left, c.right)
        pairs = [t for t in sides if isinstance(t, Pair)]
        others = [t for t in sides if not isinstance(t, Pair)]
        if len(pairs) != 1 or len(others) != 1 or others[0].sort != 2:
            return False
        if pairs[0].left not in bound or pairs[0].right not in bound:
            return False
    return True


def check_restriction_2(psi: Formula) -> CheckResult:
    diags: list[Diagnostic] = []
    for path, outer, _ in _occurrences(psi):
        if not (isinstance(outer, Forall) and outer.level == 3):
            continue
        level2 = lambda g: isinstance(g, Forall) and g.level == 2  # noqa: E731
        for sub, inner, positive in _occurrences(outer.body, stop=level2):
            where = path + (0,) + sub
            if not isinstance(inner, Forall) or positive:
                continue
            if inner.level == 2:
                diags.append(Diagnostic("RestrII", where, "level-2 universal occurs negatively inside a level-3 universal"))
            elif inner.level == 1 and not _inside_level2(outer.body, sub) and not is_pair_block(inner):
                diags.append(
                    Diagnostic(
                        "RestrII",
                        where,
                        "negative level-1 universal inside a level-3 universal is not a pair-equality block",
                    )
                )
    return CheckResult(not diags, tuple(diags))


def _inside_level2(root: Formula, path: tuple[int, ...]) -> bool:
    node = root
    for i in path[:-1] if path else ():
        if isinstance(node, Forall) and node.level == 2:
            return True
        node = children(node)[i]
    return False


def is_4lqsr(psi: Formula) -> CheckResult:
    diags = [
        Diagnostic("RestrI", r.path, r.message) for r in check_restriction_1(psi) if not r.valid
    ]
    diags.extend(check_restriction_2(psi).diagnostics)
    return CheckResult(not diags, tuple(diags))


# --------------------------------------------------------------------------
# Shape schemas of the bounded subfragments


def _small_matrix(members: list[Formula], eqs: list[Formula]) -> Formula:
    return implies(conj(*members), disj(*eqs))


def xi_universe(universe: Var = DEFAULT_UNIVERSE) -> Formula:
    z = Var("z", 0)
    return Forall((z,), In(z, universe))


def xi_bounded2(h: int, b2: Var = DEFAULT_BOUNDED2) -> Formula:
    """Every member of ``b2`` has fewer than ``h`` elements."""
    Z = Var("Z", 1)
    zs = tuple(Var(f"z{i}", 0) for i in range(1, h + 1))
    inner = Forall(zs, _small_matrix([In(z, Z) for z in zs], [Eq(a, b) for a, b in combinations(zs, 2)]))
    return Forall((Z,), implies(In(Z, b2), inner))


def xi_bounded3(h: int, b2: Var = DEFAULT_BOUNDED2, b3: Var = DEFAULT_BOUNDED3) -> Formula:
    """Every member of ``b3`` is a subset of ``b2`` with fewer than ``h`` members."""
    Z2 = Var("Z", 2)
    Z1 = Var("Z", 1)
    zs = tuple(Var(f"Z{i}", 1) for i in range(1, h + 1))
    subset = Forall((Z1,), implies(In(Z1, Z2), In(Z1, b2)))
    small = Forall(zs, _small_matrix([In(z, Z2) for z in zs], [Eq(a, b) for a, b in combinations(zs, 2)]))
    return Forall((Z2,), implies(In(Z2, b3), And(subset, small)))


def psi_subset(x2: Var, b2: Var = DEFAULT_BOUNDED2) -> Formula:
    Z = Var("Z", 1)
    return Forall((Z,), implies(In(Z, x2), In(Z, b2)))


def psi_member(x2: Var, b3: Var = DEFAULT_BOUNDED3) -> Formula:
    return In(x2, b3)


def psi_sort3(x3: Var, b3: Var = DEFAULT_BOUNDED3) -> Formula:
    Z = Var("Z", 2)
    return Forall((Z,), implies(In(Z, x3), In(Z, b3)))


def shell(h: int, universe: Var = DEFAULT_UNIVERSE, b2: Var = DEFAULT_BOUNDED2, b3: Var = DEFAULT_BOUNDED3) -> list[Formula]:
    """The three designated-variable conjuncts every bounded formula starts with."""
    return [xi_universe(universe), xi_bounded2(h, b2), xi_bounded3(h, b2, b3)]


def _ac_form(f: Formula):
    """Hashable normal form modulo associativity and commutativity of & and |."""
    if isinstance(f, And):
        return ("and", tuple(sorted((_ac_form(g) for g in flatten_and(f)), key=repr)))
    if isinstance(f, Or):
        return ("or", tuple(sorted((_ac_form(g) for g in flatten_or(f)), key=repr)))
    if isinstance(f, Not):
        return ("not", _ac_form(f.body))
    if isinstance(f, Forall):
        return ("forall", f.bound, _ac_form(f.body))
    return f


def same_shape(f: Formula, g: Formula) -> bool:
    """Equal up to bound-variable names and the order of conjuncts and disjuncts."""
    return _ac_form(canonical_names(f)) == _ac_form(canonical_names(g))


# --------------------------------------------------------------------------
# Decomposition into the bounded-fragment conjunct classes


@dataclass(frozen=True)
class HFragmentDecomposition:
    universe_var: Var
    bounded2_var: Var
    bounded3_var: Var
    xi1: Formula
    xi2: Formula
    xi3: Formula
    psi2: tuple[tuple[Var, str, Formula], ...]
    psi3: tuple[tuple[Var, Formula], ...]
    chi_parts: tuple[Formula, ...]
    h: int
    extra_shell: tuple[Formula, ...] = field(default=())

    @property
    def chi(self) -> Formula | None:
        return conj(*self.chi_parts) if self.chi_parts else None

    def parts(self) -> list[Formula]:
        out = [self.xi1, self.xi2, self.xi3]
        out += [f for _, _, f in self.psi2]
        out += [f for _, f in self.psi3]
        out += list(self.extra_shell)
        out += list(self.chi_parts)
        return out


class NotInHFragment(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(f"{d.rule}: {d.message}" for d in diagnostics))


def _guard_vars(body: Formula, bound: tuple[Var, ...], container: Var) -> Formula | None:
    """Matrix of ``(Z1 in C & ... & Zm in C) -> rest``, or ``None`` on mismatch."""
    if not (isinstance(body, Or) and isinstance(body.left, Not)):
        return None
    guard = flatten_and(body.left.body)
    expected = {In(z, container) for z in bound}
    if len(guard) != len(bound) or set(guard) != expected:
        return None
    return body.right


def _chi_item_problem(f: Formula, h: int, b2: Var, b3: Var, allowed_level: int) -> tuple[tuple[int, ...], str] | None:
    """First violation of the propositional-combination shape, with its path."""

    def walk(g: Formula, path: tuple[int, ...], top: int):
        if isinstance(g, (Eq, In)):
            return None
        if isinstance(g, (Not, And, Or)):
            for i, c in enumerate(children(g)):
                bad = walk(c, path + (i,), top)
                if bad:
                    return bad
            return None
        assert isinstance(g, Forall)
        if g.level > top:
            return path, f"level-{g.level} universal is not allowed here"
        if len(g.bound) > h:
            return path, f"quantifier prefix of length {len(g.bound)} exceeds h={h}"
        if g.level == 1:
            return None
        container = b2 if g.level == 2 else b3
        matrix = _guard_vars(g.body, g.bound, container)
        if matrix is None:
            return path, f"level-{g.level} universal is not guarded by membership in {container}"
        return walk(matrix, path + (0, 1), g.level - 1)

    return walk(f, (), allowed_level)


def decompose_h(
    psi: Formula,
    h: int,
    universe: Var = DEFAULT_UNIVERSE,
    b2: Var = DEFAULT_BOUNDED2,
    b3: Var = DEFAULT_BOUNDED3,
) -> HFragmentDecomposition:
    """Split ``psi`` into shell, subset and free-form conjuncts.

    Raises :class:`NotInHFragment` naming the first conjunct that does not
    fit.
    """
    if h < 2:
        raise ValueError("h must be at least 2")
    conjuncts = flatten_and(psi)
    want_xi1 = xi_universe(universe)
    want_xi2 = xi_bounded2(h, b2)
    want_xi3 = xi_bounded3(h, b2, b3)
    xi1 = xi2 = xi3 = None
    psi2: list[tuple[Var, str, Formula]] = []
    psi3: list[tuple[Var, Formula]] = []
    chi: list[tuple[int, Formula]] = []
    covered2: set[Var] = set()
    covered3: set[Var] = set()
    free2 = sorted(v for v in free_vars(psi, 2) if v != b2)
    free3 = sorted(v for v in free_vars(psi, 3) if v != b3)

    for i, c in enumerate(conjuncts):
        if xi1 is None and same_shape(c, want_xi1):
            xi1 = c
            continue
        if xi2 is None and same_shape(c, want_xi2):
            xi2 = c
            continue
        if xi3 is None and same_shape(c, want_xi3):
            xi3 = c
            continue
        if isinstance(c, In) and isinstance(c.element, Var) and c.element.sort == 2 and c.element != b2 and c.container == b3:
            psi2.append((c.element, "member", c))
            covered2.add(c.element)
            continue
        matched = False
        for x in free2:
            if same_shape(c, psi_subset(x, b2)):
                psi2.append((x, "subset", c))
                covered2.add(x)
                matched = True
                break
        if not matched:
            for x in free3:
                if same_shape(c, psi_sort3(x, b3)):
                    psi3.append((x, c))
                    covered3.add(x)
                    matched = True
                    break
        if not matched:
            chi.append((i, c))

    diags: list[Diagnostic] = []
    if xi1 is None:
        diags.append(Diagnostic("Def2-item-1", (), f"no conjunct states that {universe} is the universe"))
    if xi2 is None:
        diags.append(Diagnostic("Def2-item-2", (), f"no conjunct bounds the members of {b2} below {h} elements"))
    if xi3 is None:
        diags.append(Diagnostic("Def2-item-3", (), f"no conjunct bounds the members of {b3}"))
    for x in free2:
        if x not in covered2:
            diags.append(Diagnostic("Def2-item-4", (), f"free sort-2 variable {x} is not tied to {b2} or {b3}"))
    for x in free3:
        if x not in covered3:
            diags.append(Diagnostic("Def2-item-5", (), f"free sort-3 variable {x} is not a subset of {b3}"))
    for i, c in chi:
        bad = _chi_item_problem(c, h, b2, b3, 3)
        if bad is not None:
            diags.append(Diagnostic("Def2-item-6", (i,) + bad[0], bad[1]))
            break
    if not diags:
        diags.extend(is_4lqsr(psi).diagnostics)
    if diags:
        raise NotInHFragment(diags)
    return HFragmentDecomposition(
        universe_var=universe,
        bounded2_var=b2,
        bounded3_var=b3,
        xi1=xi1,
        xi2=xi2,
        xi3=xi3,
        psi2=tuple(psi2),
        psi3=tuple(psi3),
        chi_parts=tuple(c for _, c in chi),
        h=h,
    )


def in_h_fragment(psi: Formula, h: int, **designated) -> CheckResult:
    try:
        decompose_h(psi, h, **designated)
    except NotInHFragment as e:
        return CheckResult(False, tuple(e.diagnostics))
    return CheckResult(True)
