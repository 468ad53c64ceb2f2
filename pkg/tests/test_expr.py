import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nashflow.expr import (ArityError, BinOp, Call, Compare, DomainError, LexError, Neg, Number,
                           ParseError, UnboundVariableError, UnknownFunctionError, Var, evaluate,
                           evaluate_array, free_variables, parse, to_source, tokenize)
from oracles import OracleError, direct_eval, random_expression


def kinds(src):
    return [(t.kind, t.text) for t in tokenize(src)]


def test_tokenize_literal():
    assert kinds("1.8") == [("number", "1.8")]


def test_tokenize_minimal_expression():
    assert kinds("q2+q3") == [("identifier", "q2"), ("operator", "+"), ("identifier", "q3")]


def test_tokenize_if_has_ten_tokens():
    toks = tokenize("if(Q > 200, 150, 50)")
    assert [t.kind for t in toks] == ["identifier", "punctuation", "identifier", "operator",
                                      "number", "punctuation", "number", "punctuation",
                                      "number", "punctuation"]


@pytest.mark.parametrize("src", ["1", "12.", ".5", "3.25e-4", "1E+3", "7e2"])
def test_number_forms(src):
    assert kinds(src) == [("number", src)]


def test_lex_error_reports_position():
    with pytest.raises(LexError) as err:
        tokenize("q1 + $")
    assert err.value.position == 5


@given(st.lists(st.sampled_from(["q1", "12.5", "+", "-", "*", "(", ")", ",", "<=", "min", " ", "  "]),
                max_size=30))
def test_token_positions_reproduce_source(parts):
    src = "".join(parts)
    toks = tokenize(src)
    assert all(a.position < b.position for a, b in zip(toks, toks[1:]))
    rebuilt = list(" " * len(src))
    for t in toks:
        rebuilt[t.position:t.position + len(t.text)] = t.text
    assert "".join(rebuilt) == src.replace("\t", " ")


def test_parse_price_is_left_associative():
    q = Var
    assert parse("(900 - q1 - q2 - q3)/10") == BinOp(
        "/", BinOp("-", BinOp("-", BinOp("-", Number(900.0), q("q1")), q("q2")), q("q3")),
        Number(10.0))


def test_unary_minus_binds_looser_than_power():
    assert parse("-q1^2") == Neg(BinOp("^", Var("q1"), Number(2.0)))
    assert evaluate(parse("-q1^2"), {"q1": 3.0}) == -9.0


def test_power_right_associative():
    assert parse("2^3^2") == BinOp("^", Number(2.0), BinOp("^", Number(3.0), Number(2.0)))
    assert evaluate(parse("2^-1"), {}) == 0.5


def test_parse_min_call():
    e = parse("min(200 - q2 - q3, 0)")
    assert isinstance(e, Call) and e.func == "min" and e.args[1] == Number(0.0)
    assert e.args[0] == parse("200 - q2 - q3")


def test_parse_if_builds_comparison():
    e = parse("if(Q > 200, 150, 50)")
    assert e == Call("if", (Compare(">", Var("Q"), Number(200.0)), Number(150.0), Number(50.0)))


@pytest.mark.parametrize("src, exc", [
    ("min(1)", ArityError),
    ("max(1, 2, 3)", ArityError),
    ("if(1, 2, 3)", ArityError),
    ("foo(1)", UnknownFunctionError),
    ("1 +", ParseError),
    ("(1 + 2", ParseError),
    ("1 < 2 < 3", ParseError),
    ("", ParseError),
    ("1e999", ParseError),
])
def test_parse_errors(src, exc):
    with pytest.raises(exc):
        parse(src)


def test_parse_error_lists_expected_tokens():
    with pytest.raises(ParseError) as err:
        parse("(1 + 2")
    assert ")" in err.value.expected
    assert err.value.position == 6


def test_evaluate_price_at_equilibrium():
    b = {"q1": 6.25, "q2": 6.25, "q3": 6.25}
    assert evaluate(parse("(900 - q1 - q2 - q3)/10"), b) == 88.125


def test_evaluate_tax_below_threshold():
    assert evaluate(parse("if(Q > 200, 150, 50)"), {"Q": 160.0}) == 50.0
    assert evaluate(parse("if(Q > 200, 150, 50)"), {"Q": 200.0}) == 50.0
    assert evaluate(parse("if(Q > 200, 150, 50)"), {"Q": 200.5}) == 150.0


def test_evaluate_literal():
    assert evaluate(parse("0"), {}) == 0.0


def test_comparisons_are_numeric():
    assert evaluate(parse("(1 < 2) + (2 <= 2) + (3 = 3) + (1 > 2)"), {}) == 3.0


def test_if_short_circuits():
    assert evaluate(parse("if(1 > 0, 1, 1/0)"), {}) == 1.0


@pytest.mark.parametrize("src", ["1/0", "0^-1", "(-8)^0.5", "10^400", "q/(q-q)"])
def test_domain_errors(src):
    with pytest.raises(DomainError):
        evaluate(parse(src), {"q": 2.0})


def test_unbound_variable_is_named():
    with pytest.raises(UnboundVariableError) as err:
        evaluate(parse("q1 * p"), {"q1": 1.0})
    assert err.value.name == "p"


def test_identifiers_case_sensitive():
    with pytest.raises(UnboundVariableError):
        evaluate(parse("q"), {"Q": 1.0})


@pytest.mark.parametrize("src, names", [
    ("q1*p", {"q1", "p"}),
    ("200", set()),
    ("(10 + (q2 + q3)/10)/1.8", {"q2", "q3"}),
    ("if(Q > 200, a, min(b, -c^d))", {"Q", "a", "b", "c", "d"}),
])
def test_free_variables(src, names):
    assert free_variables(parse(src)) == names


def test_evaluate_array_matches_scalar():
    e = parse("if(Q > 200, 150, 50) * q1 - min(q1, 3)^2")
    q1 = np.linspace(0, 10, 7)
    Q = np.linspace(150, 250, 7)
    out = evaluate_array(e, {"q1": q1, "Q": Q})
    assert list(out) == [evaluate(e, {"q1": a, "Q": b}) for a, b in zip(q1, Q)]


def test_evaluate_array_ignores_untaken_branch_and_reports_taken():
    e = parse("if(x > 0, 1/x, 0)")
    assert list(evaluate_array(e, {"x": np.array([0.0, 2.0])})) == [0.0, 0.5]
    with pytest.raises(DomainError):
        evaluate_array(parse("1/x"), {"x": np.array([1.0, 0.0])})


NAMES = ["a", "b", "c", "q1"]


def _same(x, y):
    return x == y and math.copysign(1, x) == math.copysign(1, y) if x == 0 else x == y


def test_precedence_fuzz_against_direct_interpreter():
    rng = random.Random(7)
    agreed = 0
    for _ in range(1000):
        src = random_expression(rng, NAMES)
        env = {n: rng.choice([0.0, 1.0, -2.0, 0.5, 3.75, 10.0]) for n in NAMES}
        try:
            expected = direct_eval(src, env)
        except OracleError:
            expected = None
        try:
            got = evaluate(parse(src), env)
        except DomainError:
            got = None
        assert (expected is None) == (got is None), src
        if got is not None:
            assert _same(got, expected), src
            agreed += 1
    assert agreed > 500


# AST strategy for the round-trip property: only trees that parse can produce.
_leaf = st.one_of(
    st.builds(Number, st.floats(0, 1e6, allow_nan=False).map(lambda x: round(x, 3))),
    st.builds(Var, st.from_regex(r"[A-Za-z][A-Za-z0-9_]{0,4}", fullmatch=True)
              .filter(lambda s: s not in ("min", "max", "if"))),
)


def _extend(children):
    arith = st.builds(BinOp, st.sampled_from("+-*/^"), children, children)
    return st.one_of(
        arith,
        st.builds(Neg, children),
        st.builds(lambda f, a, b: Call(f, (a, b)), st.sampled_from(["min", "max"]), children, children),
        st.builds(lambda op, l, r, a, b: Call("if", (Compare(op, l, r), a, b)),
                  st.sampled_from(["<", "<=", ">", ">=", "="]), children, children, children, children),
        st.builds(Compare, st.sampled_from(["<", "<=", ">", ">=", "="]), children, children),
    )


@settings(max_examples=300)
@given(st.recursive(_leaf, _extend, max_leaves=12))
def test_pretty_print_round_trip(tree):
    assert parse(to_source(tree)) == tree


@given(st.text(alphabet="q1+-*/^() 0.5<>=,minax", max_size=25))
def test_parse_never_crashes_unexpectedly(src):
    try:
        e = parse(src)
    except ParseError:
        return
    except LexError:
        return
    assert parse(to_source(e)) == e
