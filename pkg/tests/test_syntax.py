import json

import pytest
from hypothesis import given, settings

from syllog.core import And, Forall, HSet, In, Interpretation, Not, Or, Pair, Var
from syllog.syntax import ModelError, ParseError, parse, parse_model, print_model, to_text

from strategies import X1, X3, formulas, small_models, x, y, z

A, B, C = In(x, X1), In(y, X1), In(z, X1)


def test_parse_quantifier():
    assert parse("forall z . z in X^1") == Forall((z,), In(z, X1))


def test_parse_pair_membership():
    assert parse("<x,y> in R^3") == In(Pair(x, y), Var("R", 3))


def test_sort_mismatch_is_reported():
    with pytest.raises(ParseError) as err:
        parse("x in X^2")
    assert "membership of sort-0 term in sort-2 variable is not an atom" in str(err.value)


def test_mixed_sort_quantifier_rejected():
    with pytest.raises(ParseError):
        parse("forall z, Z^1 . z in Z^1")


def test_unknown_token_has_span():
    text = "x in X^1 & $"
    with pytest.raises(ParseError) as err:
        parse(text)
    d = err.value.diagnostics[0]
    assert 0 <= d.span.start <= d.span.end <= len(text.encode())
    assert text.encode()[d.span.start : d.span.end] == b"$"


def test_arrows_desugar():
    assert parse("x in X^1 -> y in X^1") == Or(Not(A), B)
    assert parse("x in X^1 <-> y in X^1") == parse("(x in X^1 -> y in X^1) & (y in X^1 -> x in X^1)")


def test_implication_is_right_associative():
    assert parse("x in X^1 -> y in X^1 -> z in X^1") == parse("x in X^1 -> (y in X^1 -> z in X^1)")


def test_precedence():
    assert parse("~x in X^1 & y in X^1 | z in X^1") == Or(And(Not(A), B), C)


def test_comments_ignored():
    assert parse("# a comment\nx in X^1 # trailing\n") == A


def test_round_trip_simple():
    f = parse("forall z . z in X^1")
    assert parse(to_text(f)) == f


def test_minimal_parentheses():
    assert to_text(And(Or(A, B), C)) == "(x in X^1 | y in X^1) & z in X^1"


def test_no_double_negation_simplification():
    assert to_text(Not(Not(A))) == "~~x in X^1"


@settings(max_examples=1000, deadline=None)
@given(formulas(6))
def test_parse_inverts_print(f):
    assert parse(to_text(f)) == f


# models


def test_parse_model_minimal():
    m = parse_model('{"domain":["d0"],"assign":{"x":"d0"}}')
    assert m.domain == (0,)
    assert m.assign[x] == 0
    assert m.label(0) == "d0"


def test_empty_domain_is_an_error():
    with pytest.raises(ModelError, match="empty domain"):
        parse_model('{"domain":[],"assign":{}}')


def test_nesting_must_match_sort():
    with pytest.raises(ModelError):
        parse_model('{"domain":["d0"],"assign":{"X^2":["d0"]}}')


def test_unknown_element_rejected():
    with pytest.raises(ModelError):
        parse_model('{"domain":["d0"],"assign":{"x":"d1"}}')


def test_level3_nesting_survives():
    m = parse_model('{"domain":["d0"],"assign":{"X^3":[[["d0"]]]}}')
    assert m.assign[X3] == HSet(3, [HSet(2, [HSet(1, [0])])])
    back = json.loads(print_model(m))
    assert back["assign"]["X^3"] == [[["d0"]]]
    assert parse_model(print_model(m)) == m


@settings(max_examples=200, deadline=None)
@given(small_models(3))
def test_model_round_trip(m):
    assert parse_model(print_model(m)) == m
