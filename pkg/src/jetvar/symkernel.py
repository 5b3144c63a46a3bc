"""Exact symbolic scalar expressions in canonical normal form.

An :class:`Expr` is a finite sum of monomials with :class:`~fractions.Fraction`
coefficients. A monomial is a sorted tuple of ``(factor, exponent)`` pairs,
where a factor is an atom (:class:`Coord`, :class:`Jet`, :class:`Param`) or an
elementary-function wrapper (:class:`Func`) around a normalized sub-expression.
Zero coefficients are never stored, so two expressions are mathematically
equal on the polynomial fragment iff their term dictionaries are equal.

Atoms order as base coordinates < jet coordinates (field index, then jet
order, then earlier base directions first) < parameters (by name) < function
wrappers. That order fixes monomial sorting and therefore every printed form.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Mapping

from .errors import IncompatibleBundleError, UnsupportedStructureError

__all__ = [
    "Coord",
    "Jet",
    "Param",
    "Func",
    "Expr",
    "ZERO",
    "ONE",
    "const",
    "sin",
    "cos",
    "exp",
    "as_expr",
]


class _Factor:
    __slots__ = ("key",)

    def __eq__(self, other):
        return isinstance(other, _Factor) and self.key == other.key

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash(self.key)

    def __lt__(self, other):
        return self.key < other.key


class Coord(_Factor):
    """Base coordinate ``x^index``."""

    __slots__ = ("index",)

    def __init__(self, index: int):
        self.index = index
        self.key = (0, index)

    def __repr__(self):
        return f"Coord({self.index})"


class Jet(_Factor):
    """Jet coordinate ``y^field_mi``; ``mi`` is a tuple of length n."""

    __slots__ = ("field", "mi", "order")

    def __init__(self, field: int, mi: tuple[int, ...]):
        mi = tuple(mi)
        self.field = field
        self.mi = mi
        self.order = sum(mi)
        self.key = (1, field, self.order, tuple(-a for a in mi))

    def __repr__(self):
        return f"Jet({self.field}, {self.mi})"


class Param(_Factor):
    """Named constant parameter; annihilated by every total derivative."""

    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self.key = (2, name)

    def __repr__(self):
        return f"Param({self.name!r})"


FUNCTIONS = ("sin", "cos", "exp")


class Func(_Factor):
    """``sin``, ``cos`` or ``exp`` applied to a normalized expression."""

    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        if name not in FUNCTIONS:
            raise ValueError(f"unknown elementary function {name!r}")
        self.name = name
        self.arg = arg
        self.key = (3, name, arg.sort_key)

    def __repr__(self):
        return f"Func({self.name!r}, {self.arg!r})"


Atom = Coord | Jet | Param
Monomial = tuple  # tuple[tuple[_Factor, int], ...]


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    out = []
    i = j = 0
    n1, n2 = len(m1), len(m2)
    while i < n1 and j < n2:
        f1, e1 = m1[i]
        f2, e2 = m2[j]
        k1, k2 = f1.key, f2.key
        if k1 == k2:
            out.append((f1, e1 + e2))
            i += 1
            j += 1
        elif k1 < k2:
            out.append(m1[i])
            i += 1
        else:
            out.append(m2[j])
            j += 1
    out.extend(m1[i:])
    out.extend(m2[j:])
    return tuple(out)


def _mono_key(m: Monomial) -> tuple:
    return tuple((f.key, e) for f, e in m)


def _join(a, b):
    """Combine two bundle descriptors, accepting a field-extension of the other."""
    if a is b or b is None:
        return a
    if a is None:
        return b
    if a == b:
        return a
    if a.base == b.base:
        if b.fields[: len(a.fields)] == a.fields:
            return b
        if a.fields[: len(b.fields)] == b.fields:
            return a
    raise IncompatibleBundleError(
        f"cannot combine expressions over bases {a.base}/{b.base} with fields {a.fields}/{b.fields}"
    )


def _coerce_coeff(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    raise TypeError(f"exact rational expected, got {type(c).__name__}")


class Expr:
    """Immutable polynomial in atoms and elementary-function wrappers."""

    __slots__ = ("_terms", "bundle", "_hash", "_key")

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None, bundle=None):
        # callers guarantee normalized monomials and non-zero coefficients
        self._terms = dict(terms) if terms else {}
        self.bundle = bundle
        self._hash = None
        self._key = None

    # -- construction -------------------------------------------------
    @classmethod
    def const(cls, c) -> Expr:
        c = _coerce_coeff(c)
        return cls({(): c}) if c else cls()

    @classmethod
    def atom(cls, a: Atom, bundle=None) -> Expr:
        return cls({((a, 1),): Fraction(1)}, bundle)

    # -- inspection ---------------------------------------------------
    @property
    def terms(self) -> list[tuple[Monomial, Fraction]]:
        """Terms in canonical order."""
        return sorted(self._terms.items(), key=lambda mc: _mono_key(mc[0]))

    @property
    def sort_key(self) -> tuple:
        if self._key is None:
            self._key = tuple(sorted((_mono_key(m), c) for m, c in self._terms.items()))
        return self._key

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __len__(self):
        return len(self._terms)

    def as_constant(self) -> Fraction | None:
        if not self._terms:
            return Fraction(0)
        if len(self._terms) == 1 and () in self._terms:
            return self._terms[()]
        return None

    def is_constant(self) -> bool:
        return self.as_constant() is not None

    def factors(self) -> set:
        """Top-level factors (atoms and function wrappers)."""
        return {f for m in self._terms for f, _ in m}

    def atoms(self) -> set:
        """All atoms, including those nested inside function arguments."""
        out = set()
        for m in self._terms:
            for f, _ in m:
                if isinstance(f, Func):
                    out |= f.arg.atoms()
                else:
                    out.add(f)
        return out

    def jets(self) -> set:
        return {a for a in self.atoms() if isinstance(a, Jet)}

    def order(self) -> int:
        """Highest jet order present (0 when no jet coordinate occurs)."""
        return max((a.order for a in self.jets()), default=0)

    def degree(self) -> int:
        return max((sum(e for _, e in m) for m in self._terms), default=0)

    def has_functions(self) -> bool:
        return any(isinstance(f, Func) for m in self._terms for f, _ in m)

    def coefficient_dict(self) -> dict[Monomial, Fraction]:
        return dict(self._terms)

    # -- equality -----------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, Expr):
            return self._terms == other._terms
        if isinstance(other, (int, Rational)):
            c = self.as_constant()
            return c is not None and c == other
        return NotImplemented

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # -- ring operations ----------------------------------------------
    def __add__(self, other):
        other = as_expr(other)
        if other is None:
            return NotImplemented
        bundle = _join(self.bundle, other.bundle)
        if not other._terms:
            return self if bundle is self.bundle else Expr(self._terms, bundle)
        if not self._terms:
            return other if bundle is other.bundle else Expr(other._terms, bundle)
        terms = dict(self._terms)
        for m, c in other._terms.items():
            v = terms.get(m)
            if v is None:
                terms[m] = c
            else:
                v += c
                if v:
                    terms[m] = v
                else:
                    del terms[m]
        return Expr(terms, bundle)

    __radd__ = __add__

    def __neg__(self):
        return Expr({m: -c for m, c in self._terms.items()}, self.bundle)

    def __sub__(self, other):
        other = as_expr(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = as_expr(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Rational)):
            c = _coerce_coeff(other)
            if not c:
                return Expr(bundle=self.bundle)
            return Expr({m: v * c for m, v in self._terms.items()}, self.bundle)
        if not isinstance(other, Expr):
            return NotImplemented
        bundle = _join(self.bundle, other.bundle)
        terms: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                v = terms.get(m, 0) + c1 * c2
                if v:
                    terms[m] = v
                else:
                    terms.pop(m, None)
        return Expr(terms, bundle)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Expr):
            c = other.as_constant()
            if c is None:
                raise UnsupportedStructureError("division by a non-constant expression is not supported")
            other = c
        c = _coerce_coeff(other)
        if not c:
            raise ZeroDivisionError("division by zero")
        return self * (1 / c)

    def __pow__(self, k):
        if not isinstance(k, int):
            raise TypeError("only integer exponents are supported")
        if k < 0:
            c = self.as_constant()
            if c is None:
                raise UnsupportedStructureError("negative powers are only defined for constants")
            if not c:
                raise ZeroDivisionError("zero to a negative power")
            return Expr.const(c**k).with_bundle(self.bundle)
        if k == 0:
            return Expr.const(1).with_bundle(self.bundle)
        if len(self._terms) == 1:
            ((m, c),) = self._terms.items()
            return Expr({tuple((f, e * k) for f, e in m): c**k}, self.bundle)
        result = Expr.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    # -- calculus -----------------------------------------------------
    def derive(self, rule: Callable[[_Factor], Expr | None]) -> Expr:
        """Apply the derivation determined by its values ``rule(atom)`` on atoms.

        ``rule`` returns ``None`` for atoms it annihilates. Function wrappers are
        differentiated by the chain rule.
        """
        out: dict = {}
        bundle = self.bundle
        for m, c in self._terms.items():
            for idx, (f, e) in enumerate(m):
                if isinstance(f, Func):
                    inner = f.arg.derive(rule)
                    if not inner._terms:
                        continue
                    df = _func_derivative(f) * inner
                else:
                    df = rule(f)
                    if df is None or not df._terms:
                        continue
                if e == 1:
                    rest = m[:idx] + m[idx + 1 :]
                else:
                    rest = m[:idx] + ((f, e - 1),) + m[idx + 1 :]
                coeff = c * e
                bundle = _join(bundle, df.bundle)
                for m2, c2 in df._terms.items():
                    mm = _mono_mul(rest, m2)
                    v = out.get(mm, 0) + coeff * c2
                    if v:
                        out[mm] = v
                    else:
                        out.pop(mm, None)
        return Expr(out, bundle)

    def partial(self, a: Atom) -> Expr:
        """Formal partial derivative with respect to one atom."""
        one = ONE
        return self.derive(lambda f: one if f == a else None)

    def substitute(self, bindings: Mapping[_Factor, object]) -> Expr:
        """Simultaneous substitution of atoms, followed by renormalization."""
        if not bindings:
            return self
        bind = {a: as_expr(v) for a, v in bindings.items()}
        result = Expr(bundle=self.bundle)
        for m, c in self._terms.items():
            term = Expr.const(c)
            for f, e in m:
                if isinstance(f, Func):
                    repl = _make_func(f.name, f.arg.substitute(bindings))
                else:
                    repl = bind.get(f)
                    if repl is None:
                        repl = Expr.atom(f, self.bundle)
                term = term * (repl**e)
            result = result + term
        return result

    def collect(self, selector: Callable[[_Factor], bool]) -> dict[Monomial, Expr]:
        """Split by the selected factors: ``{selected monomial: coefficient}``.

        Selected factors must not occur inside function arguments for the split
        to be meaningful; callers check linearity themselves.
        """
        out: dict[Monomial, dict] = {}
        for m, c in self._terms.items():
            sel = tuple(fe for fe in m if selector(fe[0]))
            rest = tuple(fe for fe in m if not selector(fe[0]))
            out.setdefault(sel, {})[rest] = c
        return {k: Expr(v, self.bundle) for k, v in out.items()}

    def evaluate(self, env: Mapping[_Factor, object]):
        """Numerically evaluate; exact when env values and the expression allow it."""
        total = 0
        for m, c in self._terms.items():
            val = c
            for f, e in m:
                if isinstance(f, Func):
                    x = float(f.arg.evaluate(env))
                    val = val * getattr(math, f.name)(x) ** e
                else:
                    val = val * env[f] ** e
            total = total + val
        return total

    def with_bundle(self, bundle) -> Expr:
        return Expr(self._terms, _join(bundle, self.bundle) if self.bundle is not None else bundle)

    # -- display ------------------------------------------------------
    def __repr__(self):
        from .render import to_text

        return f"Expr({to_text(self)!r})"

    def __str__(self):
        from .render import to_text

        return to_text(self)


ZERO = Expr()
ONE = Expr.const(1)


def as_expr(v) -> Expr | None:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, Rational)):
        return Expr.const(v)
    if isinstance(v, _Factor) and not isinstance(v, Func):
        return Expr.atom(v)
    return None


def const(c) -> Expr:
    return Expr.const(c)


def _make_func(name: str, arg: Expr) -> Expr:
    c = arg.as_constant()
    if c == 0:
        return ZERO if name == "sin" else ONE
    return Expr({((Func(name, Expr(arg._terms)), 1),): Fraction(1)}, arg.bundle)


def _func_derivative(f: Func) -> Expr:
    if f.name == "sin":
        return _make_func("cos", f.arg)
    if f.name == "cos":
        return -_make_func("sin", f.arg)
    return _make_func("exp", f.arg)


def sin(arg) -> Expr:
    return _make_func("sin", as_expr(arg))


def cos(arg) -> Expr:
    return _make_func("cos", as_expr(arg))


def exp(arg) -> Expr:
    return _make_func("exp", as_expr(arg))


def expr_sum(items: Iterable[Expr]) -> Expr:
    """Sum of expressions accumulated in a single dictionary."""
    terms: dict = {}
    bundle = None
    for e in items:
        bundle = _join(bundle, e.bundle)
        for m, c in e._terms.items():
            v = terms.get(m, 0) + c
            if v:
                terms[m] = v
            else:
                terms.pop(m, None)
    return Expr(terms, bundle)
