"""Differential forms on jet space in the contact basis ``{dx^s, theta^i_a}``.

A basis covector is a tuple: ``(0, s)`` for ``dx^s`` and ``(1, i, a)`` for the
contact form ``theta^i_a = dy^i_a - y^i_{a+l} dx^l``. Words are stored sorted
(all ``dx`` first, then contact forms by field and multi-index) without
repetition; the sign of the reordering goes into the coefficient.

Sign conventions: ``d_H f = D_s f dx^s``, ``d_V f = df/dy^i_a theta^i_a``,
``d_H theta^i_a = dx^l ^ theta^i_{a+l}``, ``d_V`` kills both covector types;
``d_H`` and ``d_V`` extend as graded derivations. ``omega_0 = dx^1 ^ ... ^ dx^n``
and ``omega_s = d/dx^s _| omega_0``, so ``dx^s ^ omega_s = omega_0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import IncompatibleBundleError, JetvarError
from .jetspace import Bundle, EvolutionaryField, ProjectableVectorField, mi_add, total_derivative, unit
from .symkernel import Expr, Jet, _join, expr_sum

__all__ = [
    "dx",
    "theta",
    "covector_key",
    "DiffForm",
    "JetVectorField",
    "wedge",
    "horizontalize",
    "d_H",
    "d_V",
    "d",
    "interior",
    "lie_derivative_form",
    "volume",
    "omega",
    "omega2",
    "dy",
]


def dx(sigma: int) -> tuple:
    return (0, sigma)


def theta(field: int, mi: Iterable[int]) -> tuple:
    return (1, field, tuple(mi))


def covector_key(c: tuple) -> tuple:
    if c[0] == 0:
        return (0, c[1])
    mi = c[2]
    return (1, c[1], sum(mi), tuple(-a for a in mi))


def _canon(word: Iterable[tuple]) -> tuple[int, tuple]:
    """Sort a word of covectors; returns ``(sign, sorted word)`` or ``(0, ())``."""
    items = list(word)
    keys = [covector_key(c) for c in items]
    if len(set(keys)) != len(keys):
        return 0, ()
    sign = 1
    # insertion sort, counting transpositions
    for i in range(1, len(items)):
        j = i
        while j > 0 and keys[j - 1] > keys[j]:
            keys[j - 1], keys[j] = keys[j], keys[j - 1]
            items[j - 1], items[j] = items[j], items[j - 1]
            sign = -sign
            j -= 1
    return sign, tuple(items)


class DiffForm:
    """Homogeneous p-form: ``{word: coefficient}`` with all words of length p."""

    __slots__ = ("bundle", "degree", "_terms")

    def __init__(self, bundle: Bundle, degree: int, terms: Mapping[tuple, Expr] | None = None):
        self.bundle = bundle
        self.degree = degree
        clean: dict[tuple, Expr] = {}
        for word, c in (terms or {}).items():
            if len(word) != degree:
                raise JetvarError(f"word {word} does not have degree {degree}")
            if c:
                clean[word] = c
        self._terms = clean

    # -- construction -------------------------------------------------
    @classmethod
    def from_words(cls, bundle: Bundle, degree: int, items: Iterable[tuple[Iterable[tuple], Expr]]) -> DiffForm:
        acc: dict[tuple, list[Expr]] = {}
        for word, c in items:
            sign, w = _canon(word)
            if sign and c:
                acc.setdefault(w, []).append(c if sign > 0 else -c)
        return cls(bundle, degree, {w: expr_sum(cs) for w, cs in acc.items()})

    @classmethod
    def function(cls, bundle: Bundle, f) -> DiffForm:
        return cls(bundle, 0, {(): bundle.lift(f)})

    @classmethod
    def zero(cls, bundle: Bundle, degree: int) -> DiffForm:
        return cls(bundle, degree)

    # -- inspection ---------------------------------------------------
    @property
    def terms(self) -> list[tuple[tuple, Expr]]:
        return sorted(self._terms.items(), key=lambda wc: tuple(covector_key(c) for c in wc[0]))

    def coefficient(self, word: Iterable[tuple]) -> Expr:
        sign, w = _canon(word)
        if not sign:
            return self.bundle.zero()
        c = self._terms.get(w, self.bundle.zero())
        return c if sign > 0 else -c

    def is_zero(self) -> bool:
        return not self._terms

    def is_horizontal(self) -> bool:
        return all(c[0] == 0 for w in self._terms for c in w)

    def contact_degree(self) -> int:
        return max((sum(1 for c in w if c[0] == 1) for w in self._terms), default=0)

    def __eq__(self, other):
        if isinstance(other, DiffForm):
            if self.degree != other.degree and (self._terms or other._terms):
                return False
            return self._terms == other._terms
        if other == 0:
            return not self._terms
        return NotImplemented

    def __hash__(self):
        return hash((self.degree, frozenset(self._terms.items())))

    def __repr__(self):
        inner = ", ".join(f"{w}: {c}" for w, c in self.terms)
        return f"DiffForm(degree={self.degree}, {{{inner}}})"

    # -- linear structure ---------------------------------------------
    def _check(self, other: DiffForm) -> Bundle:
        if not isinstance(other, DiffForm):
            raise TypeError("DiffForm expected")
        if self.degree != other.degree:
            raise JetvarError(f"cannot add forms of degree {self.degree} and {other.degree}")
        try:
            return _join(self.bundle, other.bundle)
        except IncompatibleBundleError:
            raise

    def __add__(self, other):
        if isinstance(other, int) and other == 0:
            return self
        bundle = self._check(other)
        terms = dict(self._terms)
        for w, c in other._terms.items():
            terms[w] = terms[w] + c if w in terms else c
        return DiffForm(bundle, self.degree, terms)

    __radd__ = __add__

    def __neg__(self):
        return DiffForm(self.bundle, self.degree, {w: -c for w, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, f) -> DiffForm:
        f = self.bundle.lift(f)
        return DiffForm(self.bundle, self.degree, {w: f * c for w, c in self._terms.items()})

    def __mul__(self, f):
        if isinstance(f, DiffForm):
            return NotImplemented
        return self.scale(f)

    __rmul__ = __mul__

    def map_coefficients(self, fn) -> DiffForm:
        return DiffForm(self.bundle, self.degree, {w: fn(c) for w, c in self._terms.items()})


def wedge(a: DiffForm, b: DiffForm) -> DiffForm:
    bundle = _join(a.bundle, b.bundle)
    items = []
    for w1, c1 in a._terms.items():
        for w2, c2 in b._terms.items():
            items.append((w1 + w2, c1 * c2))
    return DiffForm.from_words(bundle, a.degree + b.degree, items)


def volume(bundle: Bundle) -> DiffForm:
    """``omega_0 = dx^1 ^ ... ^ dx^n``."""
    return DiffForm(bundle, bundle.n, {tuple(dx(s) for s in range(bundle.n)): bundle.lift(1)})


def omega(bundle: Bundle, sigma: int) -> DiffForm:
    """``omega_s = d/dx^s _| omega_0``."""
    return interior(JetVectorField.coordinate(bundle, sigma), volume(bundle))


def omega2(bundle: Bundle, sigma: int, mu: int) -> DiffForm:
    """``omega_{s m} = d/dx^m _| d/dx^s _| omega_0``."""
    return interior(JetVectorField.coordinate(bundle, mu), omega(bundle, sigma))


def dy(bundle: Bundle, field: int, mi: Iterable[int]) -> DiffForm:
    """Coordinate differential ``dy^i_a = theta^i_a + y^i_{a+l} dx^l``."""
    mi = tuple(mi)
    items = [((theta(field, mi),), bundle.lift(1))]
    for lam in range(bundle.n):
        items.append(((dx(lam),), bundle.jet(field, mi_add(mi, unit(bundle.n, lam)))))
    return DiffForm.from_words(bundle, 1, items)


def horizontalize(form: DiffForm) -> DiffForm:
    """Projection ``h``: every contact covector is sent to zero."""
    return DiffForm(form.bundle, form.degree, {w: c for w, c in form._terms.items() if all(x[0] == 0 for x in w)})


def _d_function_H(f: Expr, n: int):
    for s in range(n):
        df = total_derivative(f, s)
        if df:
            yield dx(s), df


def _d_function_V(f: Expr):
    for a in sorted(f.jets(), key=lambda a: a.key):
        df = f.partial(a)
        if df:
            yield theta(a.field, a.mi), df


def d_H(form: DiffForm) -> DiffForm:
    """Horizontal differential."""
    n = form.bundle.n
    items = []
    for w, f in form._terms.items():
        for c, df in _d_function_H(f, n):
            items.append(((c,) + w, df))
        for j, cov in enumerate(w):
            if cov[0] == 1:
                sign = -1 if j % 2 else 1
                for lam in range(n):
                    new = (dx(lam), theta(cov[1], mi_add(cov[2], unit(n, lam))))
                    items.append((w[:j] + new + w[j + 1 :], f if sign > 0 else -f))
    return DiffForm.from_words(form.bundle, form.degree + 1, items)


def d_V(form: DiffForm) -> DiffForm:
    """Vertical differential."""
    items = []
    for w, f in form._terms.items():
        for c, df in _d_function_V(f):
            items.append(((c,) + w, df))
    return DiffForm.from_words(form.bundle, form.degree + 1, items)


def d(form: DiffForm) -> DiffForm:
    """Exterior differential ``d_H + d_V`` (up to pull-back)."""
    return d_H(form) + d_V(form)


@dataclass(frozen=True)
class JetVectorField:
    """Vector field on jet space written in the basis dual to ``{dx, theta}``.

    ``horizontal[s]`` pairs with ``dx^s``; the pairing with ``theta^i_a`` is
    ``D_a v^i`` for the evolutionary field ``vertical``. Prolonged projectable
    fields and evolutionary fields both have this shape.
    """

    bundle: Bundle
    horizontal: tuple[Expr, ...]
    vertical: EvolutionaryField

    @classmethod
    def from_projectable(cls, u: ProjectableVectorField) -> JetVectorField:
        return cls(u.bundle, u.base, u.vertical_part())

    @classmethod
    def from_evolutionary(cls, v: EvolutionaryField) -> JetVectorField:
        return cls(v.bundle, (v.bundle.zero(),) * v.bundle.n, v)

    @classmethod
    def coordinate(cls, bundle: Bundle, sigma: int) -> JetVectorField:
        """The horizontal lift ``D_sigma`` (pairs to 1 with ``dx^sigma`` only)."""
        hor = tuple(bundle.lift(1 if s == sigma else 0) for s in range(bundle.n))
        return cls(bundle, hor, EvolutionaryField(bundle, {}))

    def horizontal_part(self) -> JetVectorField:
        return JetVectorField(self.bundle, self.horizontal, EvolutionaryField(self.bundle, {}))

    def pair(self, cov: tuple) -> Expr:
        if cov[0] == 0:
            return self.horizontal[cov[1]]
        return self.vertical.derivative(cov[1], cov[2])


def interior(X: JetVectorField, form: DiffForm) -> DiffForm:
    """Contraction on the first slot: ``X _| (c_1 ^ ... ^ c_k)``."""
    if form.degree == 0:
        raise JetvarError("cannot contract a vector field with a 0-form")
    items = []
    for w, f in form._terms.items():
        for j, cov in enumerate(w):
            val = X.pair(cov)
            if val:
                c = f * val
                items.append((w[:j] + w[j + 1 :], c if j % 2 == 0 else -c))
    return DiffForm.from_words(_join(form.bundle, X.bundle), form.degree - 1, items)


def lie_derivative_form(X: JetVectorField, form: DiffForm) -> DiffForm:
    """Cartan formula ``X _| d(form) + d(X _| form)``."""
    out = interior(X, d(form))
    if form.degree > 0:
        out = out + d(interior(X, form))
    return out
