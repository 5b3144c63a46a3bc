"""Bundles, multi-indices, total derivatives and prolongation of vector fields."""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

from .errors import JetvarError, MultiIndexError, OrderLimitError
from .symkernel import ONE, ZERO, Coord, Expr, Jet, Param, expr_sum

__all__ = [
    "MultiIndex",
    "mi_add",
    "mi_sub",
    "mi_multinomial",
    "unit",
    "multi_indices",
    "Bundle",
    "max_order",
    "total_derivative",
    "total_derivative_multi",
    "ProjectableVectorField",
    "EvolutionaryField",
    "prolong",
    "split",
    "evolutionary_prolong",
    "bracket",
]

DEFAULT_MAX_ORDER = 16


def max_order() -> int:
    """Order cap for jet coordinates, overridable through ``JETVAR_MAX_ORDER``."""
    raw = os.environ.get("JETVAR_MAX_ORDER")
    if raw is None:
        return DEFAULT_MAX_ORDER
    try:
        value = int(raw)
    except ValueError:
        raise JetvarError(f"JETVAR_MAX_ORDER must be an integer, got {raw!r}") from None
    if value < 1:
        raise JetvarError("JETVAR_MAX_ORDER must be positive")
    return value


# ---------------------------------------------------------------------------
# multi-indices
# ---------------------------------------------------------------------------
class MultiIndex(tuple):
    """Tuple of non-negative derivative counts, one per base coordinate."""

    def __new__(cls, entries: Iterable[int] = ()):
        entries = tuple(entries)
        for a in entries:
            if not isinstance(a, int) or a < 0:
                raise MultiIndexError(f"multi-index entries must be non-negative integers: {entries}")
        return super().__new__(cls, entries)

    @property
    def order(self) -> int:
        return sum(self)

    @property
    def factorial(self) -> int:
        return math.prod(math.factorial(a) for a in self)

    def contains(self, other: Iterable[int]) -> bool:
        """Entrywise ``self >= other``."""
        other = tuple(other)
        if len(other) != len(self):
            raise MultiIndexError("multi-index length mismatch")
        return all(a >= b for a, b in zip(self, other))

    def __repr__(self):
        return f"MultiIndex{tuple(self)}"


def mi_add(a: Iterable[int], b: Iterable[int]) -> MultiIndex:
    a, b = tuple(a), tuple(b)
    if len(a) != len(b):
        raise MultiIndexError(f"multi-index length mismatch: {a} + {b}")
    return MultiIndex(x + y for x, y in zip(a, b))


def mi_sub(a: Iterable[int], b: Iterable[int]) -> MultiIndex:
    a, b = tuple(a), tuple(b)
    if len(a) != len(b):
        raise MultiIndexError(f"multi-index length mismatch: {a} - {b}")
    if any(x < y for x, y in zip(a, b)):
        raise MultiIndexError(f"{b} is not contained in {a}")
    return MultiIndex(x - y for x, y in zip(a, b))


def mi_multinomial(mu: Iterable[int], alpha: Iterable[int]) -> Fraction:
    """``(mu + alpha)! / (mu! alpha!)`` as an exact rational."""
    mu, alpha = MultiIndex(mu), MultiIndex(alpha)
    total = mi_add(mu, alpha)
    return Fraction(total.factorial, mu.factorial * alpha.factorial)


def unit(n: int, sigma: int) -> MultiIndex:
    return MultiIndex(1 if k == sigma else 0 for k in range(n))


@lru_cache(maxsize=None)
def _indices_of_order(n: int, k: int) -> tuple[MultiIndex, ...]:
    out = []
    for combo in itertools.combinations_with_replacement(range(n), k):
        entries = [0] * n
        for c in combo:
            entries[c] += 1
        out.append(MultiIndex(entries))
    # earlier base directions first, matching the atom order of the kernel
    return tuple(sorted(out, key=lambda a: tuple(-x for x in a)))


def multi_indices(n: int, max_ord: int, min_ord: int = 0) -> list[MultiIndex]:
    """All multi-indices of length n with ``min_ord <= |a| <= max_ord`` in graded order."""
    out: list[MultiIndex] = []
    for k in range(min_ord, max_ord + 1):
        out.extend(_indices_of_order(n, k))
    return out


# ---------------------------------------------------------------------------
# bundles
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Bundle:
    """Trivial fibered manifold with named base coordinates and fields.

    Identity is given by ``base`` and ``fields``; ``order`` is the declared jet
    order (operations grow it on demand) and ``params`` lists the named
    constants allowed in expressions.
    """

    base: tuple[str, ...]
    fields: tuple[str, ...]
    order: int = field(default=2, compare=False)
    params: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(self.base))
        object.__setattr__(self, "fields", tuple(self.fields))
        object.__setattr__(self, "params", tuple(self.params))
        if not self.base:
            raise JetvarError("a bundle needs at least one base coordinate")
        names = list(self.base) + list(self.fields) + list(self.params)
        if len(set(names)) != len(names):
            raise JetvarError(f"bundle names must be pairwise distinct: {names}")
        for name in names:
            if not (isinstance(name, str) and name.isidentifier()):
                raise JetvarError(f"invalid identifier {name!r}")

    @property
    def n(self) -> int:
        return len(self.base)

    @property
    def m(self) -> int:
        return len(self.fields)

    def field_index(self, name: str | int) -> int:
        if isinstance(name, int):
            if not 0 <= name < self.m:
                raise JetvarError(f"field index {name} out of range")
            return name
        try:
            return self.fields.index(name)
        except ValueError:
            raise JetvarError(f"undeclared field {name!r}") from None

    def coord_index(self, name: str | int) -> int:
        if isinstance(name, int):
            if not 0 <= name < self.n:
                raise JetvarError(f"coordinate index {name} out of range")
            return name
        try:
            return self.base.index(name)
        except ValueError:
            raise JetvarError(f"undeclared coordinate {name!r}") from None

    def coord(self, name: str | int) -> Expr:
        return Expr.atom(Coord(self.coord_index(name)), self)

    def jet(self, name: str | int, mi: Iterable[int] | None = None) -> Expr:
        mi = MultiIndex(mi if mi is not None else (0,) * self.n)
        if len(mi) != self.n:
            raise MultiIndexError(f"multi-index {tuple(mi)} has length {len(mi)}, base dimension is {self.n}")
        return Expr.atom(Jet(self.field_index(name), tuple(mi)), self)

    def param(self, name: str) -> Expr:
        return Expr.atom(Param(name), self)

    def zero(self) -> Expr:
        return Expr(bundle=self)

    def lift(self, e) -> Expr:
        """Attach this bundle to a constant or compatible expression."""
        if not isinstance(e, Expr):
            e = Expr.const(e)
        return e.with_bundle(self)

    def extend(self, new_fields: Iterable[str]) -> Bundle:
        return Bundle(self.base, self.fields + tuple(new_fields), self.order, self.params)

    def with_params(self, params: Iterable[str]) -> Bundle:
        extra = tuple(p for p in params if p not in self.params)
        return Bundle(self.base, self.fields, self.order, self.params + extra)

    def fresh_name(self, stem: str) -> str:
        taken = set(self.base) | set(self.fields) | set(self.params)
        if stem not in taken:
            return stem
        k = 1
        while f"{stem}{k}" in taken:
            k += 1
        return f"{stem}{k}"


def auxiliary_bundle(bundle: Bundle, stem: str = "zeta", fields: Iterable[int] | None = None):
    """Extend ``bundle`` by one auxiliary field per selected field.

    A single field gets ``stem``; several get ``stem1, stem2, ...`` numbered by
    field position.

    Returns ``(extended bundle, {original field index: auxiliary field index})``.
    """
    fields = list(range(bundle.m)) if fields is None else list(fields)
    names: list[str] = []
    current = bundle
    for i in fields:
        stem_i = stem if len(fields) == 1 else f"{stem}{i + 1}"
        name = current.fresh_name(stem_i)
        names.append(name)
        current = current.extend([name])
    mapping = {i: bundle.m + k for k, i in enumerate(fields)}
    return current, mapping


# ---------------------------------------------------------------------------
# total derivatives
# ---------------------------------------------------------------------------
def _shift_rule(sigma: int, cap: int):
    one = ONE

    def rule(a):
        if isinstance(a, Coord):
            return one if a.index == sigma else None
        if isinstance(a, Jet):
            mi = list(a.mi)
            mi[sigma] += 1
            if a.order + 1 > cap:
                raise OrderLimitError(
                    f"total derivative needs jet order {a.order + 1} > cap {cap} (set JETVAR_MAX_ORDER)"
                )
            return Expr.atom(Jet(a.field, tuple(mi)))
        return None

    return rule


@lru_cache(maxsize=200_000)
def _total_derivative_cached(e: Expr, bundle, sigma: int, cap: int) -> Expr:
    out = e.derive(_shift_rule(sigma, cap))
    return out if out.bundle is e.bundle else Expr(out._terms, e.bundle)


def total_derivative(e: Expr, sigma: int) -> Expr:
    """``D_sigma e = de/dx^sigma + y^j_{a+sigma} de/dy^j_a``."""
    if not e:
        return e
    return _total_derivative_cached(e, e.bundle, sigma, max_order())


def total_derivative_multi(e: Expr, alpha: Iterable[int]) -> Expr:
    """Iterated total derivative ``D_alpha``."""
    for sigma, k in enumerate(alpha):
        for _ in range(k):
            e = total_derivative(e, sigma)
    return e


def divergence(components: Iterable[Expr]) -> Expr:
    return expr_sum(total_derivative(c, s) for s, c in enumerate(components))


# ---------------------------------------------------------------------------
# vector fields
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class EvolutionaryField:
    """Vertical generalized field ``v^i d/dy^i`` with components on selected fields."""

    bundle: Bundle
    components: Mapping[int, Expr]

    def __post_init__(self):
        comps = {}
        for k, v in dict(self.components).items():
            i = self.bundle.field_index(k)
            v = self.bundle.lift(v)
            if v:
                comps[i] = v
        object.__setattr__(self, "components", dict(sorted(comps.items())))

    def __hash__(self):
        return hash((self.bundle, tuple(self.components.items())))

    def component(self, i: int) -> Expr:
        return self.components.get(i, self.bundle.zero())

    def derivative(self, i: int, alpha: Iterable[int]) -> Expr:
        """``D_alpha v^i``, the component along ``d/dy^i_alpha`` of the prolongation."""
        v = self.components.get(i)
        if v is None:
            return self.bundle.zero()
        return total_derivative_multi(v, alpha)

    def is_zero(self) -> bool:
        return not self.components

    def apply(self, e: Expr) -> Expr:
        """Action of the infinite prolongation on a function: ``sum D_a v^i d e/dy^i_a``."""
        terms = []
        for a in e.jets():
            if a.field in self.components:
                d = e.partial(a)
                if d:
                    terms.append(self.derivative(a.field, a.mi) * d)
        return expr_sum(terms).with_bundle(self.bundle) if terms else self.bundle.zero()


@dataclass(frozen=True)
class ProjectableVectorField:
    """``xi^s d/dx^s + Xi^i d/dy^i`` with ``xi`` depending on the base only.

    ``fiber`` maps field indices to components. Components may depend on base
    coordinates, parameters, order-zero jets of the transformed fields, and on
    jets of any order of fields that the vector field does not transform
    (gauge parameters on an extended bundle).
    """

    bundle: Bundle
    base: tuple[Expr, ...]
    fiber: Mapping[int, Expr]

    def __post_init__(self):
        b = self.bundle
        base = tuple(b.lift(x) for x in self.base)
        if len(base) != b.n:
            raise JetvarError(f"expected {b.n} base components, got {len(base)}")
        for x in base:
            if x.jets():
                raise JetvarError("base components of a projectable vector field may not depend on jets")
        fiber = {}
        for k, v in dict(self.fiber).items():
            i = b.field_index(k)
            v = b.lift(v)
            if v:
                fiber[i] = v
        for v in fiber.values():
            for a in v.jets():
                if a.field in fiber and a.order > 0:
                    raise JetvarError(
                        "fiber components may only depend on order-zero jets of the transformed fields"
                    )
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "fiber", dict(sorted(fiber.items())))

    def __hash__(self):
        return hash((self.bundle, self.base, tuple(self.fiber.items())))

    @classmethod
    def zero(cls, bundle: Bundle) -> ProjectableVectorField:
        return cls(bundle, (bundle.zero(),) * bundle.n, {})

    def is_zero(self) -> bool:
        return not self.fiber and not any(self.base)

    def vertical_part(self) -> EvolutionaryField:
        """Components ``Xi^i - y^i_g xi^g`` (the negative Lie derivative of sections)."""
        b = self.bundle
        comps = {}
        fields = set(self.fiber) | (set(range(b.m)) if any(self.base) else set())
        for i in sorted(fields):
            v = self.fiber.get(i, b.zero())
            for g, xi in enumerate(self.base):
                if xi:
                    v = v - b.jet(i, unit(b.n, g)) * xi
            comps[i] = v
        return EvolutionaryField(b, comps)

    def as_derivation(self, a):
        """Value of the order-zero field on a single atom (for brackets)."""
        if isinstance(a, Coord):
            return self.base[a.index]
        if isinstance(a, Jet) and a.order == 0:
            return self.fiber.get(a.field)
        return None


def prolong(u: ProjectableVectorField, s: int) -> dict[tuple[int, MultiIndex], Expr]:
    """Components ``Xi^i_a = D_a(Xi^i - y^i_g xi^g) + y^i_{a+g} xi^g`` for ``|a| <= s``.

    Only the fields carrying a vertical component (or all fields when ``xi`` is
    non-zero) are listed.
    """
    b = u.bundle
    v = u.vertical_part()
    out = {}
    fields = sorted(set(v.components) | (set(range(b.m)) if any(u.base) else set()))
    for i in fields:
        for alpha in multi_indices(b.n, s):
            comp = v.derivative(i, alpha)
            for g, xi in enumerate(u.base):
                if xi:
                    comp = comp + b.jet(i, mi_add(alpha, unit(b.n, g))) * xi
            out[(i, alpha)] = comp
    return out


def split(u: ProjectableVectorField) -> tuple[tuple[Expr, ...], EvolutionaryField]:
    """Horizontal part ``xi^g D_g`` (its coefficients) and vertical part of ``u``."""
    return u.base, u.vertical_part()


def evolutionary_prolong(v: EvolutionaryField, s: int) -> dict[tuple[int, MultiIndex], Expr]:
    """``{(i, a): D_a v^i}`` for every component and ``|a| <= s``."""
    return {
        (i, alpha): v.derivative(i, alpha)
        for i in v.components
        for alpha in multi_indices(v.bundle.n, s)
    }


def bracket(u: ProjectableVectorField, w: ProjectableVectorField) -> ProjectableVectorField:
    """Lie bracket of two projectable fields on the total space ``Y``."""
    b = u.bundle

    def act(field: ProjectableVectorField, e: Expr) -> Expr:
        terms = []
        for a in e.atoms():
            coef = field.as_derivation(a)
            if coef:
                terms.append(coef * e.partial(a))
        return expr_sum(terms).with_bundle(b) if terms else b.zero()

    base = tuple(act(u, w.base[s]) - act(w, u.base[s]) for s in range(b.n))
    fields = set(u.fiber) | set(w.fiber)
    fiber = {i: act(u, w.fiber.get(i, b.zero())) - act(w, u.fiber.get(i, b.zero())) for i in fields}
    return ProjectableVectorField(b, base, fiber)


def apply_coordinate_field(components: Mapping, e: Expr) -> Expr:
    """Apply ``sum c_a d/da`` given ``{atom: coefficient}`` to an expression."""
    terms = [c * e.partial(a) for a, c in components.items() if c]
    return expr_sum(terms) if terms else ZERO
