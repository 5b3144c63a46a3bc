from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import gen
from jetvar.errors import JetvarError, MultiIndexError, OrderLimitError
from jetvar.symkernel import Coord
from jetvar.jetspace import (
    Bundle,
    EvolutionaryField,
    MultiIndex,
    ProjectableVectorField,
    bracket,
    evolutionary_prolong,
    mi_add,
    mi_multinomial,
    multi_indices,
    prolong,
    split,
    total_derivative,
    total_derivative_multi,
)

B = Bundle(("t", "x"), ("u",))
B1 = Bundle(("x",), ("u",))
Q = Bundle(("t",), ("q",))


def test_multi_index_addition():
    assert mi_add((1, 0), (0, 2)) == (1, 2)
    assert mi_add((0, 0), (3, 1)) == (3, 1)
    assert mi_add((2, 1), (1, 1)) == (3, 2)
    with pytest.raises(MultiIndexError):
        mi_add((1,), (1, 0))
    with pytest.raises(MultiIndexError):
        MultiIndex((1, -1))


def test_multinomial():
    assert mi_multinomial((1, 0), (1, 0)) == 2
    assert mi_multinomial((0, 0), (3, 2)) == 1
    assert mi_multinomial((2, 1), (1, 1)) == 6


def test_multi_indices_graded():
    idx = multi_indices(2, 2)
    assert idx[0] == (0, 0)
    assert [sum(a) for a in idx] == [0, 1, 1, 2, 2, 2]
    assert len(multi_indices(3, 3)) == 20


def test_total_derivative_examples():
    u = B.jet("u")
    x = B.coord("x")
    ux = B.jet("u", (0, 1))
    assert total_derivative(u, 1) == ux
    assert total_derivative(x * u, 1) == u + x * ux
    assert total_derivative(ux**2 / 2, 0) == ux * B.jet("u", (1, 1))
    assert total_derivative_multi(u, (1, 1)) == B.jet("u", (1, 1))
    e = u**3 + x
    assert total_derivative_multi(e, (0, 0)) == e
    ut = B.jet("u", (1, 0))
    assert total_derivative_multi(u**2, (2, 0)) == 2 * ut**2 + 2 * u * B.jet("u", (2, 0))


def test_order_cap(monkeypatch):
    monkeypatch.setenv("JETVAR_MAX_ORDER", "3")
    with pytest.raises(OrderLimitError):
        total_derivative(B.jet("u", (0, 3)), 0)
    monkeypatch.setenv("JETVAR_MAX_ORDER", "nonsense")
    with pytest.raises(JetvarError):
        total_derivative(B.jet("u", (0, 1)), 0)


def test_prolong_translation_is_trivial():
    u = ProjectableVectorField(B, (B.lift(1), B.zero()), {})
    comps = prolong(u, 1)
    assert all(not c for c in comps.values())


def test_prolong_scaling_examples():
    u = B1.jet("u")
    x = B1.coord("x")
    scale = ProjectableVectorField(B1, (B1.zero(),), {0: u})
    assert prolong(scale, 1)[(0, (1,))] == B1.jet("u", (1,))
    stretch = ProjectableVectorField(B1, (x,), {})
    assert prolong(stretch, 1)[(0, (1,))] == -B1.jet("u", (1,))


def test_split_examples():
    q = Q.jet("q")
    vert = ProjectableVectorField(Q, (Q.zero(),), {0: q})
    base, v = split(vert)
    assert not any(base) and v.component(0) == q
    base, v = split(ProjectableVectorField(Q, (Q.lift(1),), {}))
    assert v.component(0) == -Q.jet("q", (1,))
    u = B1.jet("u")
    base, v = split(ProjectableVectorField(B1, (B1.lift(1),), {0: u}))
    assert v.component(0) == u - B1.jet("u", (1,))


def test_evolutionary_prolong_examples():
    shift = EvolutionaryField(B1, {0: 1})
    comps = evolutionary_prolong(shift, 2)
    assert all(not c for (i, a), c in comps.items() if sum(a))
    ident = EvolutionaryField(B1, {0: B1.jet("u")})
    assert evolutionary_prolong(ident, 1)[(0, (1,))] == B1.jet("u", (1,))
    back = EvolutionaryField(Q, {0: -Q.jet("q", (1,))})
    assert evolutionary_prolong(back, 1)[(0, (1,))] == -Q.jet("q", (2,))


def test_projectable_validation():
    with pytest.raises(JetvarError):
        ProjectableVectorField(B, (B.jet("u"), B.zero()), {})
    with pytest.raises(JetvarError):
        ProjectableVectorField(B, (B.zero(), B.zero()), {0: B.jet("u", (1, 0))})


def test_bracket_of_translations_vanishes():
    T = ProjectableVectorField(B, (B.lift(1), B.zero()), {})
    X = ProjectableVectorField(B, (B.zero(), B.lift(1)), {})
    assert bracket(T, X).is_zero()
    S = ProjectableVectorField(B, (B.coord("t"), B.zero()), {})
    assert bracket(T, S).base[0] == 1


exprs = st.integers(min_value=0, max_value=10**6).map(
    lambda s: gen.polynomial(random.Random(s), Bundle(("t", "x", "y"), ("u", "v")), max_order=3, functions=True)
)


@settings(max_examples=200, deadline=None)
@given(exprs, st.integers(0, 2), st.integers(0, 2))
def test_total_derivatives_commute(e, s, m):
    assert total_derivative(total_derivative(e, s), m) == total_derivative(total_derivative(e, m), s)


@settings(max_examples=100, deadline=None)
@given(exprs, exprs, st.integers(0, 2))
def test_total_derivative_leibniz(a, b, s):
    assert total_derivative(a * b, s) == total_derivative(a, s) * b + a * total_derivative(b, s)


def _section(coeffs, k):
    """k-th derivative of sum_j c_j x^j as an expression in x."""
    out = B1.zero()
    for j, c in enumerate(coeffs):
        if j >= k:
            fall = 1
            for r in range(k):
                fall *= j - r
            out = out + c * fall * B1.coord("x") ** (j - k)
    return out


def test_total_derivative_is_the_derivative_along_sections():
    rng = random.Random(7)
    for _ in range(20):
        f = gen.polynomial(rng, B1, max_order=2)
        coeffs = [gen.rational(rng) for _ in range(6)]

        def pull(expr):
            return expr.substitute({a: _section(coeffs, a.mi[0]) for a in expr.jets()})

        assert pull(total_derivative(f, 0)) == pull(f).partial(Coord(0))
