"""Concrete text syntax for formulae and JSON certificates for finite models.

Grammar, loosest binding first::

    formula  := imp ('<->' imp)*
    imp      := or ('->' imp)?
    or       := and ('|' and)*
    and      := unary ('&' unary)*
    unary    := '~' unary | 'forall' var (',' var)* '.' formula
              | '(' formula ')' | term ('=' | 'in') term
    term     := var | '<' var ',' var '>'

A bare identifier starting with a lowercase letter is a sort-0 variable;
``X^1``, ``X^2`` and ``X^3`` carry their sort explicitly.  ``#`` starts a
comment that runs to the end of the line.  Implication and biconditional
are expanded into negation, disjunction and conjunction while parsing, and
the printer folds those shapes back.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .core import (
    And,
    Eq,
    Forall,
    Formula,
    FormulaError,
    HSet,
    In,
    Interpretation,
    EvaluationError,
    Not,
    Or,
    Pair,
    Term,
    Var,
    iff,
    implies,
)


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError("span start after end")


@dataclass(frozen=True)
class ParseDiagnostic:
    span: SourceSpan
    message: str
    severity: str = "error"

    def render(self, text: str | None = None) -> str:
        where = f"{self.span.start}-{self.span.end}"
        return f"{self.severity}: {self.message} (bytes {where})"


class ParseError(ValueError):
    def __init__(self, diagnostics: list[ParseDiagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(d.message for d in diagnostics))


# --------------------------------------------------------------------------
# Tokens

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<op><->|->|<>|\[\]|[~&|().,=<>])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*(?:\^[0-9]+)?)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "op", "ident", "end"
    text: str
    start: int
    end: int


def tokenize(text: str) -> list[Token]:
    """Split ``text`` into tokens whose offsets are UTF-8 byte positions."""
    offsets = _byte_offsets(text)
    tokens: list[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            bad = text[pos]
            raise ParseError([ParseDiagnostic(SourceSpan(offsets[pos], offsets[pos + 1]), f"unknown token {bad!r}")])
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, m.group(), offsets[m.start()], offsets[m.end()]))
        pos = m.end()
    end = offsets[len(text)]
    tokens.append(Token("end", "", end, end))
    return tokens


def _byte_offsets(text: str) -> list[int]:
    out = [0]
    total = 0
    for ch in text:
        total += len(ch.encode("utf-8"))
        out.append(total)
    return out


class _Cursor:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "ident") and t.text == text

    def take(self) -> Token:
        t = self.tok
        if t.kind != "end":
            self.i += 1
        return t

    def expect(self, text: str, what: str | None = None) -> Token:
        if not self.at(text):
            t = self.tok
            found = "end of input" if t.kind == "end" else repr(t.text)
            fail(t.start, t.end, f"expected {what or repr(text)}, found {found}")
        return self.take()


def fail(start: int, end: int, message: str):
    raise ParseError([ParseDiagnostic(SourceSpan(start, end), message)])


KEYWORDS = {"in", "forall"}


def var_from_token(t: Token) -> Var:
    if t.kind != "ident" or t.text in KEYWORDS:
        found = "end of input" if t.kind == "end" else repr(t.text)
        fail(t.start, t.end, f"expected a variable, found {found}")
    name, _, suffix = t.text.partition("^")
    if not suffix:
        if not name[0].islower():
            fail(t.start, t.end, f"variable {name!r} needs a sort suffix ^1, ^2 or ^3 (bare names must start lowercase)")
        return Var(name, 0)
    if suffix not in ("1", "2", "3"):
        fail(t.start, t.end, f"unknown sort suffix ^{suffix} on {name!r}")
    return Var(name, int(suffix))


# --------------------------------------------------------------------------
# Formula parser


class _Parser:
    def __init__(self, text: str):
        self.c = _Cursor(tokenize(text))

    def formula(self) -> Formula:
        left = self.imp()
        while self.c.at("<->"):
            self.c.take()
            left = iff(left, self.imp())
        return left

    def imp(self) -> Formula:
        left = self.disjunction()
        if self.c.at("->"):
            self.c.take()
            return implies(left, self.imp())
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        while self.c.at("|"):
            self.c.take()
            left = Or(left, self.conjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.unary()
        while self.c.at("&"):
            self.c.take()
            left = And(left, self.unary())
        return left

    def unary(self) -> Formula:
        c = self.c
        if c.at("~"):
            c.take()
            return Not(self.unary())
        if c.at("forall"):
            return self.quantifier()
        if c.at("("):
            c.take()
            inner = self.formula()
            c.expect(")")
            return inner
        return self.atom()

    def quantifier(self) -> Formula:
        c = self.c
        start = c.take().start
        bound = [var_from_token(c.take())]
        while c.at(","):
            c.take()
            bound.append(var_from_token(c.take()))
        dot = c.expect(".", "'.' after the bound variables")
        sorts = {v.sort for v in bound}
        if len(sorts) > 1:
            fail(start, dot.end, "a quantifier block mixes variables of different sorts")
        body = self.formula()
        # `forall z1 . forall z2 . A` is one block over z1, z2
        if isinstance(body, Forall) and body.sort == bound[0].sort:
            bound += list(body.bound)
            body = body.body
        try:
            return Forall(tuple(bound), body)
        except FormulaError as e:
            fail(start, c.tok.start, str(e))

    def term(self) -> tuple[Term, int, int]:
        c = self.c
        if c.at("<"):
            start = c.take().start
            left = var_from_token(c.take())
            c.expect(",")
            right = var_from_token(c.take())
            end = c.expect(">").end
            try:
                return Pair(left, right), start, end
            except FormulaError as e:
                fail(start, end, str(e))
        t = c.take()
        return var_from_token(t), t.start, t.end

    def atom(self) -> Formula:
        c = self.c
        left, start, _ = self.term()
        if c.at("="):
            c.take()
            right, _, end = self.term()
            try:
                return Eq(left, right)
            except FormulaError as e:
                fail(start, end, str(e))
        if c.at("in"):
            c.take()
            right, _, end = self.term()
            try:
                return In(left, right)
            except FormulaError as e:
                fail(start, end, str(e))
        t = c.tok
        found = "end of input" if t.kind == "end" else repr(t.text)
        fail(t.start, t.end, f"expected '=' or 'in', found {found}")


def parse(text: str) -> Formula:
    """Parse one formula; raises :class:`ParseError` carrying diagnostics."""
    p = _Parser(text)
    if p.c.tok.kind == "end":
        fail(0, 0, "empty input")
    f = p.formula()
    t = p.c.tok
    if t.kind != "end":
        fail(t.start, t.end, f"unexpected {t.text!r} after a complete formula")
    return f


# --------------------------------------------------------------------------
# Printer

_IFF, _IMP, _OR, _AND, _UNARY, _ATOM = 1, 2, 3, 4, 5, 6


def term_text(t: Term) -> str:
    return str(t)


def _as_implication(f: Formula):
    if isinstance(f, Or) and isinstance(f.left, Not):
        return f.left.body, f.right
    return None


def _as_biconditional(f: Formula):
    if isinstance(f, And):
        a = _as_implication(f.left)
        b = _as_implication(f.right)
        if a and b and a[0] == b[1] and a[1] == b[0]:
            return a
    return None


def _render(f: Formula) -> tuple[str, int]:
    if isinstance(f, Eq):
        return f"{f.left} = {f.right}", _ATOM
    if isinstance(f, In):
        return f"{f.element} in {f.container}", _ATOM
    if isinstance(f, Forall):
        names = ",".join(str(v) for v in f.bound)
        return f"forall {names} . {_at(f.body, 0)}", 0
    if isinstance(f, Not):
        return "~" + _at(f.body, _UNARY), _UNARY
    bi = _as_biconditional(f)
    if bi is not None:
        return f"{_at(bi[0], _IFF)} <-> {_at(bi[1], _IMP)}", _IFF
    imp = _as_implication(f)
    if imp is not None:
        return f"{_at(imp[0], _OR)} -> {_at(imp[1], _IMP)}", _IMP
    if isinstance(f, Or):
        return f"{_at(f.left, _OR)} | {_at(f.right, _AND)}", _OR
    if isinstance(f, And):
        return f"{_at(f.left, _AND)} & {_at(f.right, _UNARY)}", _AND
    raise TypeError(f"not a formula: {f!r}")


def _at(f: Formula, required: int) -> str:
    text, level = _render(f)
    return f"({text})" if level < required else text


def to_text(f: Formula) -> str:
    """Render ``f`` with minimal parentheses; the output parses back to ``f``."""
    return _at(f, 0)


print_formula = to_text


# --------------------------------------------------------------------------
# Model certificates


class ModelError(ValueError):
    pass


def parse_var_name(name: str) -> Var:
    try:
        return var_from_token(Token("ident", name, 0, len(name)))
    except ParseError as e:
        raise ModelError(str(e)) from None


def parse_model(text: str) -> Interpretation:
    """Read ``{"domain": [...], "assign": {...}}`` into an interpretation.

    Elements are numbered by their position in ``domain``.  Set values are
    nested arrays whose depth equals the variable's sort.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelError(f"invalid JSON: {e}") from None
    if not isinstance(doc, dict) or "domain" not in doc:
        raise ModelError("a model needs a 'domain' list")
    labels = doc["domain"]
    if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
        raise ModelError("'domain' must be a list of strings")
    if not labels:
        raise ModelError("empty domain")
    if len(set(labels)) != len(labels):
        raise ModelError("duplicate element names in 'domain'")
    index = {name: i for i, name in enumerate(labels)}
    assign_doc = doc.get("assign", {})
    if not isinstance(assign_doc, dict):
        raise ModelError("'assign' must be an object")

    def element(x) -> int:
        if not isinstance(x, str):
            raise ModelError(f"expected an element name, got {x!r}")
        if x not in index:
            raise ModelError(f"unknown element {x!r}")
        return index[x]

    def value(x, depth: int, var: str):
        if depth == 0:
            return element(x)
        if not isinstance(x, list):
            raise ModelError(f"value of {var} is not hereditary: expected a list at depth {depth}")
        return HSet(depth, (value(m, depth - 1, var) for m in x))

    assign = {}
    for name, raw in assign_doc.items():
        var = parse_var_name(name)
        assign[var] = value(raw, var.sort, name)
    try:
        return Interpretation(tuple(range(len(labels))), assign, dict(enumerate(labels)))
    except EvaluationError as e:
        raise ModelError(str(e)) from None


def model_to_json(interp: Interpretation) -> dict:
    def encode(x):
        if isinstance(x, HSet):
            return [encode(m) for m in x.members]
        return interp.label(x)

    ordered = sorted(interp.assign.items(), key=lambda kv: (kv[0].sort, kv[0].name))
    return {
        "domain": interp.label_list(),
        "assign": {str(v): encode(x) for v, x in ordered},
    }


def print_model(interp: Interpretation) -> str:
    """JSON certificate with one assignment per line."""
    doc = model_to_json(interp)
    lines = ["{", f'  "domain": {json.dumps(doc["domain"])},', '  "assign": {']
    entries = [f"    {json.dumps(k)}: {json.dumps(v)}" for k, v in doc["assign"].items()]
    lines.append(",\n".join(entries))
    lines.append("  }")
    lines.append("}")
    return "\n".join(line for line in lines if line) + "\n"
