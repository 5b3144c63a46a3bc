from __future__ import annotations

import random
from fractions import Fraction

import pytest

import gen
from jetvar.dsl import parse, parse_expr, print_theory
from jetvar.errors import JetvarParseError
from jetvar.jetspace import Bundle
from jetvar.render import from_json, to_json

B = Bundle(("t", "x"), ("u", "v"))


def test_jet_notation():
    assert parse_expr("u_tx", B) == B.jet("u", (1, 1))
    assert parse_expr("u[1,2]", B) == B.jet("u", (1, 2))
    assert parse_expr("v_xxt", B) == B.jet("v", (1, 2))


def test_wave_lagrangian_expression():
    e = parse_expr("1/2*(u_t^2 - u_x^2)", B)
    assert e == (B.jet("u", (1, 0)) ** 2 - B.jet("u", (0, 1)) ** 2) / 2


def test_operator_precedence():
    u = B.jet("u")
    assert parse_expr("-u^2", B) == -(u**2)
    assert parse_expr("2*u + 3*u*u", B) == 2 * u + 3 * u**2
    assert parse_expr("2^-2", B) == Fraction(1, 4)
    assert parse_expr("(u + 1)^2 / 4", B) == (u + 1) ** 2 / 4
    assert parse_expr("sin(u)*cos(x)", B) is not None


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("u_y", "undeclared coordinate"),
        ("w", "undeclared identifier"),
        ("u[1]", "multi-index of length 1"),
        ("1.5*u", "decimal"),
        ("u/u", "division"),
        ("u/0", "division by zero"),
        ("u^-1", "negative exponents"),
        ("u^100", "exponent larger"),
        ("(u", "missing"),
        ("u)", "unbalanced"),
        ("u $ v", "unexpected character"),
        ("t_x", "not a field"),
        ("u + ", "expected an expression"),
        ("u v", "after expression"),
        ("sin u", "expected '('"),
        ("u^2^2", "chained exponents"),
    ],
)
def test_expression_errors(text, fragment):
    with pytest.raises(JetvarParseError) as info:
        parse_expr(text, B)
    assert fragment in str(info.value)
    assert info.value.line == 1 or info.value.line is None


def test_error_positions():
    text = "bundle { base: [t, x]; fields: [u]; }\nlagrangian L = u_t^2 + u_y\n"
    with pytest.raises(JetvarParseError) as info:
        parse(text)
    assert (info.value.line, info.value.column) == (2, 24)


def test_theory_example():
    text = """
    # comment line
    bundle { base: [t, x]; fields: [u, v]; params: [m]; }
    metric g = [[1, 0], [0, -1]]
    lagrangian L = 1/2*(u_t^2 - u_x^2) - 1/2*m^2*u^2
    vfield X = d/dt + u*d/du
    gauge R(chi) : u -> chi_t, v -> chi_x
    """
    T = parse(text)
    assert T.bundle.base == ("t", "x")
    assert T.metric == ((1, 0), (0, -1))
    X = T.vfields["X"]
    assert X.base[0] == 1 and X.fiber[0] == T.bundle.jet("u")
    R = T.gauges["R"]
    assert R.bundle.fields == ("u", "v", "chi")
    assert R.variation().component(1) == R.bundle.jet("chi", (0, 1))
    assert parse(print_theory(T)) == T


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("lagrangian L = 1", "expected 'bundle'"),
        ("bundle { base: []; fields: [u]; }", "non-empty 'base'"),
        ("bundle { base: [t]; fields: [t]; }", "duplicate name"),
        ("bundle { base: [t]; fields: [lagrangian]; }", "reserved word"),
        ("bundle { base: [t]; fields: [u]; }\nbundle { base: [t]; fields: [u]; }", "only one bundle"),
        ("bundle { base: [t]; fields: [u]; }\nlagrangian L = u\nlagrangian L = u", "already declared"),
        ("bundle { base: [t, x]; fields: [u]; }\nmetric g = [[1]]", "2x2"),
        ("bundle { base: [t, x]; fields: [u]; }\nmetric g = [[1, 2], [0, 1]]", "symmetric"),
        ("bundle { base: [t]; fields: [u]; }\nvfield X = u*d/dy", "not a base coordinate"),
        ("bundle { base: [t]; fields: [u]; }\nvfield X = u + d/dt", "linear in the d/d"),
        ("bundle { base: [t]; fields: [u]; }\nvfield X = u*d/dt", "may not depend on jets"),
        ("bundle { base: [t]; fields: [u]; }\ngauge R(chi) : u -> chi^2", "linear"),
        ("bundle { base: [t]; fields: [u]; }\ngauge R(u) : u -> u", "clashes"),
        ("bundle { base: [t]; fields: [u]; }\ngauge R(chi) : w -> chi", "undeclared field"),
        ("bundle { base: [t]; fields: [u]; }\nfoo", "expected a declaration"),
        ("bundle { base: [t]; fields: [u]; } lagrangian L = u", "end of statement"),
    ],
)
def test_theory_errors(text, fragment):
    with pytest.raises(JetvarParseError) as info:
        parse(text)
    assert fragment in str(info.value)


def test_bytes_input():
    T = parse(b"bundle { base: [t]; fields: [q]; }\nlagrangian L = q_t^2\n")
    assert "L" in T.lagrangians
    with pytest.raises(JetvarParseError):
        parse(b"\xff\xfe")


def test_deep_nesting_is_rejected_cleanly():
    with pytest.raises(JetvarParseError):
        parse_expr("(" * 5000 + "u" + ")" * 5000, B)
    with pytest.raises(JetvarParseError):
        parse_expr("-" * 5000 + "u", B)


def test_multi_character_coordinates_need_brackets():
    b = Bundle(("tau", "x"), ("u",))
    assert parse_expr("u[2,1]", b) == b.jet("u", (2, 1))
    assert parse_expr("u_taux", b) == b.jet("u", (1, 1))


def test_round_trip_fuzzed_sample():
    rng = random.Random(21)
    for _ in range(100):
        T = gen.theory(rng)
        text = print_theory(T)
        assert parse(text) == T
        assert print_theory(parse(text)) == text


def test_json_round_trip():
    rng = random.Random(22)
    for _ in range(50):
        e = gen.polynomial(rng, B, 3, functions=True)
        assert from_json(to_json(e), B) == e
    with pytest.raises(JetvarParseError):
        from_json("{", B)
    with pytest.raises(JetvarParseError):
        from_json('{"schema": 2, "terms": []}', B)
    with pytest.raises(JetvarParseError):
        from_json('{"schema": 1, "terms": [{"coeff": "1", "atoms": [{"field": "w", "mi": [0, 0]}]}]}', B)
