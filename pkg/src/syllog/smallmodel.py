"""Small-universe construction for normalized conjunctions.

Given a model of a normalized conjunction, :func:`build_universe` picks a
subset ``D*`` of its domain that keeps every free variable distinguishable,
and :func:`relativize` cuts the model down to ``D*`` while preserving the
membership facts between free variables.  :func:`compute_bound` bounds
``|D*|`` in terms of variable counts and quantifier prefix lengths.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

from .core import (
    CapacityError,
    Forall,
    Formula,
    HSet,
    Interpretation,
    Var,
    evaluate,
    flatten_and,
    free_vars,
    pair_value,
    subformulae,
    substitute,
)
from .fragment import CheckResult, Diagnostic
from .normalize import FreshSupply, NormalizedConjunction

DEFAULT_SEARCH_CAP = 200_000


def distinguish(family: Iterable) -> tuple:
    """Members that tell apart every two distinct sets of ``family``.

    Partition refinement: while some block holds two or more sets, add the
    canonically smallest member that splits it.  Every added member splits
    at least one block, so the result has at most ``len(family) - 1`` members.
    """
    sets = sorted(set(family))
    blocks = [sets] if len(sets) > 1 else []
    chosen = []
    while blocks:
        block = blocks[0]
        union = sorted(set().union(*(set(s) for s in block)))
        pick = next(m for m in union if any(m in s for s in block) and not all(m in s for s in block))
        chosen.append(pick)
        refined = []
        for b in blocks:
            inside = [s for s in b if pick in s]
            outside = [s for s in b if pick not in s]
            refined += [part for part in (inside, outside) if len(part) > 1]
        blocks = refined
    return tuple(sorted(chosen))


def _smallest(members: Sequence, k: int) -> list:
    return sorted(members)[:k]


# --------------------------------------------------------------------------
# Size bound


@dataclass(frozen=True)
class SizeBudget:
    v0: int
    v1: int
    v2: int
    Lm: int
    Ln: int
    phi_count: int
    bound: int
    construction_bound: int

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _literals(psi) -> list[Formula]:
    if isinstance(psi, NormalizedConjunction):
        return list(psi.literals)
    if isinstance(psi, (list, tuple)):
        return list(psi)
    return flatten_and(psi)


def level2_conjuncts(lits: list[Formula]) -> list[Forall]:
    return [lit for lit in lits if isinstance(lit, Forall) and lit.level == 2]


def phi_members(chi: Forall) -> list[Forall]:
    """Level-1 universals inside the matrix of a level-2 conjunct."""
    seen: dict[Forall, None] = {}
    for g in subformulae(chi.body):
        if isinstance(g, Forall) and g.level == 1:
            seen.setdefault(g, None)
    return list(seen)


def compute_bound(psi) -> SizeBudget:
    """Variable counts and the domain-size bound for a normalized conjunction.

    ``bound`` is the closed-form estimate, clamped below by 1 and by the
    number of sort-0 variables.  The estimate assumes at least one sort-2
    variable; ``construction_bound`` also covers the case without one, where
    the distinguishing elements of the sort-1 values alone can exceed it.
    """
    lits = _literals(psi)
    everything: set[Var] = set()
    for lit in lits:
        everything |= free_vars(lit)
    v0 = sum(1 for v in everything if v.sort == 0)
    v1 = sum(1 for v in everything if v.sort == 1)
    v2 = sum(1 for v in everything if v.sort == 2)
    chis = level2_conjuncts(lits)
    phis = [(chi, phi) for chi in chis for phi in phi_members(chi)]
    Lm = max((len(chi.bound) for chi in chis), default=0)
    Ln = max((len(phi.bound) for _, phi in phis), default=0)
    base = max(0, v1 + 4 * v2 - 1)
    raw = v0 + 4 * v1 + 16 * v2 + (base**Lm * Ln) * len(phis) - 5
    bound = max(1, v0, raw)

    # Tally of what each construction stage can add, without assuming v2 >= 1.
    fam = 4 * v2 - 1 if v2 else 0
    named_sets = v1 + fam
    delta = 4 * named_sets - 1 if named_sets else 0
    witness_room = sum(named_sets ** len(chi.bound) * len(phi.bound) for chi, phi in phis)
    construction = max(1, v0 + delta + witness_room)
    return SizeBudget(v0, v1, v2, Lm, Ln, len(phis), bound, max(bound, construction))


# --------------------------------------------------------------------------
# Universe construction


@dataclass(frozen=True)
class WitnessEntry:
    phi: Forall
    arguments: tuple[Var, ...]
    inserted: tuple[int, ...]


@dataclass(frozen=True)
class UniverseArtifacts:
    F1: tuple[HSet, ...]
    F2: tuple[HSet, ...]
    F: tuple[HSet, ...]
    Delta1: tuple[int, ...]
    Delta2: tuple[int, ...]
    Delta: tuple[int, ...]
    V1F: tuple[tuple[Var, HSet], ...]
    Dstar: tuple[int, ...]
    witness_log: tuple[WitnessEntry, ...]
    V0p: tuple[Var, ...] = field(default=())
    V1p: tuple[Var, ...] = field(default=())
    V2p: tuple[Var, ...] = field(default=())
    padded: bool = False

    def to_json(self) -> dict:
        from .syntax import to_text

        return {
            "F1": [s.to_python() for s in self.F1],
            "F2": [s.to_python() for s in self.F2],
            "F": [s.to_python() for s in self.F],
            "Delta1": list(self.Delta1),
            "Delta2": list(self.Delta2),
            "Delta": list(self.Delta),
            "V1F": [[str(v), s.to_python()] for v, s in self.V1F],
            "Dstar": list(self.Dstar),
            "padded": self.padded,
            "witness_log": [
                {"phi": to_text(w.phi), "arguments": [str(a) for a in w.arguments], "inserted": list(w.inserted)}
                for w in self.witness_log
            ],
        }


def extended(model: Interpretation, arts: UniverseArtifacts) -> Interpretation:
    """The source model with the fresh sort-1 names bound to their sets."""
    return model.updated(dict(arts.V1F))


def build_universe(model: Interpretation, psi, search_cap: int = DEFAULT_SEARCH_CAP) -> UniverseArtifacts:
    lits = _literals(psi)
    free: set[Var] = set()
    for lit in lits:
        free |= free_vars(lit)
    V0p = tuple(sorted(v for v in free if v.sort == 0))
    V1p = tuple(sorted(v for v in free if v.sort == 1))
    V2p = tuple(sorted(v for v in free if v.sort == 2))
    M = model.assign

    # sets separating the sort-2 values, plus small members of each
    S = sorted({M[X] for X in V2p})
    F1 = distinguish(S)
    F2: set[HSet] = set()
    for X in V2p:
        F2.update(_smallest(M[X].members, 3))
    F = tuple(sorted(set(F1) | F2))

    # fresh sort-1 names for those sets that no variable already denotes
    named = {M[X] for X in V1p}
    extra = [s for s in F if s not in named]
    supply = FreshSupply()
    for lit in lits:
        supply.reserve(lit)
    V1F = tuple((supply.fresh(1), s) for s in extra)

    # elements separating the sort-1 values, plus small members of each
    sort1 = list(V1p) + [v for v, _ in V1F]
    values1 = dict(M)
    values1.update(dict(V1F))
    T = sorted({values1[X] for X in sort1})
    Delta1 = distinguish(T)
    Delta2: set[int] = set()
    for J in T:
        Delta2.update(_smallest(J.members, 3))
    Delta = tuple(sorted(set(Delta1) | Delta2))
    dstar = {M[x] for x in V0p} | set(Delta)

    # witnesses for the level-2 conjuncts' inner universals
    ext = model.updated(dict(V1F))
    log: list[WitnessEntry] = []
    for chi in level2_conjuncts(lits):
        for phi in phi_members(chi):
            m = len(chi.bound)
            for args in product(sort1, repeat=m):
                inst = substitute(phi, dict(zip(chi.bound, args)))
                if evaluate(ext, inst):
                    continue
                witness = _first_counterexample(ext, inst, search_cap)
                dstar.update(witness)
                log.append(WitnessEntry(phi, tuple(args), witness))

    padded = False
    if not dstar:
        dstar.add(min(model.domain))
        padded = True
    return UniverseArtifacts(
        F1=tuple(F1),
        F2=tuple(sorted(F2)),
        F=F,
        Delta1=tuple(Delta1),
        Delta2=tuple(sorted(Delta2)),
        Delta=Delta,
        V1F=V1F,
        Dstar=tuple(sorted(dstar)),
        witness_log=tuple(log),
        V0p=V0p,
        V1p=V1p,
        V2p=V2p,
        padded=padded,
    )


def _first_counterexample(model: Interpretation, phi: Forall, cap: int) -> tuple[int, ...]:
    n = len(phi.bound)
    if len(model.domain) ** n > cap:
        raise CapacityError(f"witness search over {len(model.domain)}^{n} tuples exceeds the cap of {cap}")
    for values in product(model.domain, repeat=n):
        local = model.updated(dict(zip(phi.bound, values)))
        if not evaluate(local, phi.body):
            return tuple(values)
    raise AssertionError("a false universal must have a falsifying instance")


# --------------------------------------------------------------------------
# Relativized interpretation


def relativize(
    model: Interpretation,
    arts: UniverseArtifacts,
    dstar_pick: int | None = None,
    V1p: Iterable[Var] | None = None,
    V1F: Iterable[tuple[Var, HSet]] | None = None,
    V2p: Iterable[Var] | None = None,
) -> Interpretation:
    """Cut ``model`` down to ``arts.Dstar``.

    Elements keep their ids and labels.  Every variable the model assigns
    is carried over; the fresh sort-1 names are added.
    """
    dstar = frozenset(arts.Dstar)
    pick = min(dstar) if dstar_pick is None else dstar_pick
    if pick not in dstar:
        raise ValueError(f"{pick} is not an element of the small universe")
    V1p = tuple(arts.V1p if V1p is None else V1p)
    V1F = tuple(arts.V1F if V1F is None else V1F)
    V2p = tuple(arts.V2p if V2p is None else V2p)
    source = dict(model.assign)
    source.update(dict(V1F))
    named1 = list(V1p) + [v for v, _ in V1F]

    out: dict[Var, object] = {}
    for v, val in source.items():
        if v.sort == 0:
            out[v] = val if val in dstar else pick
        elif v.sort == 1:
            out[v] = HSet(1, (e for e in val if e in dstar))
    relativized1 = {X: out[X] for X in named1}
    for v, val in source.items():
        if v.sort != 2:
            continue
        kept = {J for J in val if J.over(dstar)} - set(relativized1.values())
        kept |= {relativized1[X] for X in named1 if source[X] in val}
        out[v] = HSet(2, kept)
    relativized2 = {X: out[X] for X in V2p}
    for v, val in source.items():
        if v.sort != 3:
            continue
        kept = {K for K in val if K.over(dstar)} - set(relativized2.values())
        kept |= {relativized2[X] for X in V2p if source[X] in val}
        out[v] = HSet(3, kept)
    labels = {e: model.label(e) for e in dstar}
    return Interpretation(tuple(sorted(dstar)), out, labels)


def verify_properties_abc(model: Interpretation, arts: UniverseArtifacts) -> CheckResult:
    """Separation properties of ``D*`` for the named variables."""
    dstar = frozenset(arts.Dstar)
    M = dict(model.assign)
    M.update(dict(arts.V1F))
    named1 = [M[X] for X in list(arts.V1p) + [v for v, _ in arts.V1F]]
    diags: list[Diagnostic] = []

    V1p = arts.V1p
    for i, X in enumerate(V1p):
        for Y in V1p[i + 1 :]:
            a, b = set(M[X]), set(M[Y])
            if a != b and not ((a ^ b) & dstar):
                diags.append(Diagnostic("A", (), f"{X} and {Y} differ only outside D*"))

    def separated(big: HSet, other: HSet, x=None, y=None) -> bool:
        for J in (set(big) ^ set(other)) & set(named1):
            cut = set(J) & dstar
            if not cut:
                continue
            if x is not None and J in big and (cut == {x} or cut == {x, y}):
                continue
            return True
        return False

    V2p = arts.V2p
    for i, X in enumerate(V2p):
        for Y in V2p[i + 1 :]:
            if M[X] != M[Y] and not separated(M[X], M[Y]):
                diags.append(Diagnostic("B", (), f"{X} and {Y} are not separated by a named set meeting D*"))
    for x in arts.V0p:
        for y in arts.V0p:
            p = pair_value(M[x], M[y])
            for X in V2p:
                if M[X] != p and not separated(M[X], p, M[x], M[y]):
                    diags.append(Diagnostic("C", (), f"<{x},{y}> and {X} are not separated by a named set"))
    return CheckResult(not diags, tuple(diags))
