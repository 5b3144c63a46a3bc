"""Variational calculus on jets: Euler-Lagrange forms, momenta, Noether currents,
Helmholtz residuals, second variations, Jacobi and Bergmann-Bianchi morphisms,
reduced currents, superpotentials and the naturality checks of the Lagrangian
``omega = v . E(lambda)``.

Conventions
-----------
* A variation field ``v`` is the vertical part ``Xi^i - y^i_g xi^g`` of a
  projectable field, i.e. ``v = -(Lie derivative of the section)``.
* ``jv _| p`` is written with ``D_a v^i`` paired against ``theta^i_a``.
* Momenta come from single integrations by parts that always peel off the
  *first* base direction present in the multi-index, highest order first. Any
  two admissible momenta differ by a ``d_H``-closed term.
* Noether currents are ``eps = -(jv _| p + xi _| lambda)`` so that
  ``d_H eps = v . E`` off shell; together with ``omega = <chi, beta> + d_H eps~``
  this makes ``eps - eps~`` strongly conserved whenever ``beta`` vanishes, and
  the superpotential satisfies ``d_H nu = eps - eps~`` with
  ``(d_H nu)^s = D_m nu^{s m}``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping

from . import linsolve
from .calculus import (
    DiffForm,
    JetVectorField,
    d_H,
    dx,
    horizontalize,
    interior,
    lie_derivative_form,
    omega,
    omega2,
    theta,
    volume,
    wedge,
)
from .errors import (
    BianchiObstructionError,
    DegenerateDimensionError,
    JetvarError,
    NotASymmetryError,
    PreconditionError,
    UnsupportedOrderError,
    UnsupportedStructureError,
)
from .jetspace import (
    Bundle,
    EvolutionaryField,
    MultiIndex,
    ProjectableVectorField,
    auxiliary_bundle,
    divergence,
    mi_multinomial,
    mi_sub,
    multi_indices,
    total_derivative,
    total_derivative_multi,
    unit,
)
from .symkernel import Coord, Expr, Func, Jet, Param, expr_sum

__all__ = [
    "MAX_MOMENTUM_ORDER",
    "Lagrangian",
    "SourceForm",
    "Momentum",
    "Current",
    "Superpotential",
    "GaugeGenerator",
    "SymmetryKind",
    "SymmetryCheck",
    "NaturalityResiduals",
    "euler_lagrange",
    "momentum",
    "first_variation_residual",
    "lie_density",
    "check_symmetry",
    "noether_current",
    "helmholtz_residuals",
    "second_variation",
    "jacobi",
    "jacobi_from_second_variation",
    "kernel_check",
    "omega_lagrangian",
    "bianchi",
    "reduced_current",
    "superpotential",
    "naturality_residuals",
    "energy_momentum_current",
    "on_shell",
    "divergence_potential",
    "auxiliary_variation",
]

MAX_MOMENTUM_ORDER = 3


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Lagrangian:
    """Scalar density ``L`` standing for the horizontal n-form ``L omega_0``."""

    density: Expr
    bundle: Bundle

    def __post_init__(self):
        object.__setattr__(self, "density", self.bundle.lift(self.density))

    @classmethod
    def of(cls, obj, bundle: Bundle | None = None) -> Lagrangian:
        if isinstance(obj, Lagrangian):
            return obj if bundle is None else cls(obj.density, bundle)
        if bundle is None:
            bundle = getattr(obj, "bundle", None)
            if bundle is None:
                raise JetvarError("a bundle is required for a constant Lagrangian")
        return cls(obj, bundle)

    @property
    def order(self) -> int:
        return self.density.order()

    def form(self) -> DiffForm:
        return volume(self.bundle).scale(self.density)

    def on(self, bundle: Bundle) -> Lagrangian:
        return Lagrangian(self.density, bundle)


@dataclass(frozen=True)
class SourceForm:
    """``sum_i E_i theta^i ^ omega_0``; ``components`` is keyed by field index."""

    bundle: Bundle
    components: Mapping[int, Expr]

    def __post_init__(self):
        object.__setattr__(
            self, "components", {i: self.bundle.lift(e) for i, e in sorted(dict(self.components).items())}
        )

    def __hash__(self):
        return hash((self.bundle, tuple(self.components.items())))

    def __getitem__(self, i: int) -> Expr:
        return self.components[i]

    def is_zero(self) -> bool:
        return not any(self.components.values())

    @property
    def order(self) -> int:
        return max((e.order() for e in self.components.values()), default=0)

    def form(self) -> DiffForm:
        vol = volume(self.bundle)
        out = DiffForm.zero(self.bundle, self.bundle.n + 1)
        for i, e in self.components.items():
            th = DiffForm(self.bundle, 1, {(theta(i, (0,) * self.bundle.n),): self.bundle.lift(1)})
            out = out + wedge(th, vol).scale(e)
        return out

    def labelled(self) -> list[tuple[str, Expr]]:
        return [(self.bundle.fields[i], e) for i, e in self.components.items()]


@dataclass(frozen=True)
class Current:
    """Horizontal (n-1)-form ``eps^s omega_s``."""

    bundle: Bundle
    components: tuple[Expr, ...]

    def __post_init__(self):
        comps = tuple(self.bundle.lift(c) for c in self.components)
        if len(comps) != self.bundle.n:
            raise JetvarError(f"a current needs {self.bundle.n} components")
        object.__setattr__(self, "components", comps)

    @classmethod
    def zero(cls, bundle: Bundle) -> Current:
        return cls(bundle, (bundle.zero(),) * bundle.n)

    def __add__(self, other: Current) -> Current:
        return Current(self.bundle, tuple(a + b for a, b in zip(self.components, other.components)))

    def __neg__(self) -> Current:
        return Current(self.bundle, tuple(-a for a in self.components))

    def __sub__(self, other: Current) -> Current:
        return self + (-other)

    def is_zero(self) -> bool:
        return not any(self.components)

    def divergence(self) -> Expr:
        """Coefficient of ``omega_0`` in ``d_H`` of the current."""
        return divergence(self.components).with_bundle(self.bundle)

    def form(self) -> DiffForm:
        out = DiffForm.zero(self.bundle, self.bundle.n - 1)
        for s, c in enumerate(self.components):
            if c:
                out = out + omega(self.bundle, s).scale(c)
        return out

    @classmethod
    def from_form(cls, form: DiffForm) -> Current:
        b = form.bundle
        if form.degree != b.n - 1 or not form.is_horizontal():
            raise JetvarError("a current is a horizontal (n-1)-form")
        comps = []
        for s in range(b.n):
            ((word, sign),) = omega(b, s).terms
            comps.append(form.coefficient(word) * sign)
        return cls(b, tuple(comps))

    def labelled(self) -> list[tuple[str, Expr]]:
        return list(zip(self.bundle.base, self.components))


@dataclass(frozen=True)
class Momentum:
    """``p = p_i^{a,s} theta^i_a ^ omega_s`` keyed by ``(i, a, s)``."""

    bundle: Bundle
    components: Mapping[tuple[int, MultiIndex, int], Expr]

    def __post_init__(self):
        comps = {k: self.bundle.lift(v) for k, v in dict(self.components).items() if v}
        key = lambda k: (k[0], sum(k[1]), tuple(-a for a in k[1]), k[2])  # noqa: E731
        object.__setattr__(self, "components", dict(sorted(comps.items(), key=lambda kv: key(kv[0]))))

    def __hash__(self):
        return hash((self.bundle, tuple(self.components.items())))

    def is_zero(self) -> bool:
        return not self.components

    def form(self) -> DiffForm:
        b = self.bundle
        out = DiffForm.zero(b, b.n)
        for (i, a, s), c in self.components.items():
            th = DiffForm(b, 1, {(theta(i, a),): b.lift(1)})
            out = out + wedge(th, omega(b, s)).scale(c)
        return out

    def contract(self, v: EvolutionaryField) -> Current:
        """``jv _| p`` as a current."""
        comps = [self.bundle.zero() for _ in range(self.bundle.n)]
        for (i, a, s), c in self.components.items():
            if i in v.components:
                comps[s] = comps[s] + v.derivative(i, a) * c
        return Current(_wider(self.bundle, v.bundle), tuple(comps))


@dataclass(frozen=True)
class Superpotential:
    """Antisymmetric ``nu^{s m}`` stored for ``s < m``; the form is ``sum_{s<m} nu^{s m} omega_{s m}``."""

    bundle: Bundle
    components: Mapping[tuple[int, int], Expr]

    def __post_init__(self):
        comps = {}
        for (s, m), v in dict(self.components).items():
            if s == m:
                raise JetvarError("diagonal superpotential component")
            if s > m:
                s, m, v = m, s, -v
            comps[(s, m)] = comps.get((s, m), self.bundle.zero()) + self.bundle.lift(v)
        object.__setattr__(self, "components", {k: v for k, v in sorted(comps.items()) if v})

    def __hash__(self):
        return hash((self.bundle, tuple(self.components.items())))

    def component(self, s: int, m: int) -> Expr:
        if s == m:
            return self.bundle.zero()
        if s < m:
            return self.components.get((s, m), self.bundle.zero())
        return -self.components.get((m, s), self.bundle.zero())

    def is_zero(self) -> bool:
        return not self.components

    def divergence(self) -> Current:
        n = self.bundle.n
        return Current(
            self.bundle,
            tuple(
                expr_sum(total_derivative(self.component(s, m), m) for m in range(n)).with_bundle(self.bundle)
                for s in range(n)
            ),
        )

    def form(self) -> DiffForm:
        out = DiffForm.zero(self.bundle, self.bundle.n - 2)
        for (s, m), c in self.components.items():
            out = out + omega2(self.bundle, s, m).scale(c)
        return out

    def labelled(self) -> list[tuple[str, Expr]]:
        b = self.bundle
        return [
            (f"{b.base[s]},{b.base[m]}", self.component(s, m))
            for s in range(b.n)
            for m in range(s + 1, b.n)
        ]


@dataclass(frozen=True)
class GaugeGenerator:
    """Linear operator ``chi -> v^i = sum_a R^{i a}_A D_a chi^A``.

    ``bundle`` already contains the parameter fields ``chi^A`` (indices in
    ``params``); ``coefficients`` is keyed by ``(i, A, a)``.
    """

    bundle: Bundle
    params: tuple[int, ...]
    coefficients: Mapping[tuple[int, int, MultiIndex], Expr]

    def __post_init__(self):
        comps = {
            (i, A, MultiIndex(a)): self.bundle.lift(c)
            for (i, A, a), c in dict(self.coefficients).items()
            if c
        }
        for (i, A, a), c in comps.items():
            if A not in self.params or i in self.params:
                raise JetvarError("gauge coefficients must map parameter fields to physical fields")
            if any(j.field in self.params for j in c.jets()):
                raise JetvarError("gauge coefficients may not depend on the parameter fields")
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "coefficients", dict(sorted(comps.items(), key=lambda kv: _rkey(kv[0]))))

    def __hash__(self):
        return hash((self.bundle, self.params, tuple(self.coefficients.items())))

    @classmethod
    def from_variation(
        cls, bundle: Bundle, params: Iterable[str], variations: Mapping[str | int, Expr]
    ) -> GaugeGenerator:
        """Build from explicit field variations linear in the parameter jets."""
        params = list(params)
        ext = bundle.extend([p for p in params if p not in bundle.fields])
        pidx = tuple(ext.field_index(p) for p in params)
        coeffs: dict = {}
        for key, expr in variations.items():
            i = ext.field_index(key)
            expr = ext.lift(expr)
            for f in expr.factors():
                if isinstance(f, Func) and any(
                    isinstance(a, Jet) and a.field in pidx for a in f.arg.atoms()
                ):
                    raise JetvarError("gauge variations must be linear in the parameter fields")
            split = expr.collect(lambda f: isinstance(f, Jet) and f.field in pidx)
            for mono, coef in split.items():
                if not mono:
                    raise JetvarError(f"variation of {ext.fields[i]} has a term free of the parameter fields")
                if len(mono) != 1 or mono[0][1] != 1:
                    raise JetvarError("gauge variations must be linear in the parameter fields")
                jet = mono[0][0]
                k = (i, jet.field, MultiIndex(jet.mi))
                coeffs[k] = coeffs.get(k, ext.zero()) + coef
        return cls(ext, pidx, coeffs)

    @property
    def order(self) -> int:
        return max((sum(a) for (_, _, a) in self.coefficients), default=0)

    def variation(self) -> EvolutionaryField:
        comps: dict[int, list[Expr]] = {}
        for (i, A, a), c in self.coefficients.items():
            comps.setdefault(i, []).append(c * self.bundle.jet(A, a))
        return EvolutionaryField(self.bundle, {i: expr_sum(cs) for i, cs in comps.items()})

    def lift(self) -> ProjectableVectorField:
        """Pure gauge transformation: zero base part, fibre part ``v^i(chi)``."""
        v = self.variation()
        return ProjectableVectorField(self.bundle, (self.bundle.zero(),) * self.bundle.n, v.components)


def _rkey(k):
    i, A, a = k
    return (i, A, sum(a), tuple(-x for x in a))


class SymmetryKind(Enum):
    EXACT = "exact"
    DIVERGENCE = "divergence"
    NONE = "none"


@dataclass(frozen=True)
class SymmetryCheck:
    kind: SymmetryKind
    residual: Expr
    potential: Current | None = None


@dataclass(frozen=True)
class NaturalityResiduals:
    """Classes of ``L_{u_H} omega + d_H(jv _| p_omega)`` and ``L_{u_H} omega``.

    ``r3`` and ``r4`` represent the classes through their Euler-Lagrange forms
    (zero exactly when the density is a total divergence); the raw densities
    are kept alongside.
    """

    r3: SourceForm
    r4: SourceForm
    r3_density: Expr
    r4_density: Expr

    def is_zero(self) -> bool:
        return self.r3.is_zero() and self.r4.is_zero()


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------
def _wider(a: Bundle, b: Bundle) -> Bundle:
    return a if len(a.fields) >= len(b.fields) else b


def _field_set(bundle: Bundle, fields) -> list[int]:
    if fields is None:
        return list(range(bundle.m))
    return sorted({bundle.field_index(f) for f in fields})


def _jets_by_field(e: Expr, fields: Iterable[int]) -> list[Jet]:
    fields = set(fields)
    return sorted((a for a in e.jets() if a.field in fields), key=lambda a: a.key)


def integrate_by_parts(coeffs: Mapping[tuple[int, MultiIndex], Expr], n: int):
    """Rewrite ``sum c_{i,b} D_b w^i`` as ``sum z_i w^i + D_s(F^s)``.

    Returns ``(z, flux)`` with ``F^s = sum flux[(i, a, s)] D_a w^i``. Each step
    moves the first base direction present in ``b`` onto the coefficient,
    processing the highest order first.
    """
    pending: dict[tuple[int, tuple[int, ...]], Expr] = {}
    for (i, b), c in coeffs.items():
        if c:
            k = (i, tuple(b))
            pending[k] = pending[k] + c if k in pending else c
    flux: dict[tuple[int, MultiIndex, int], Expr] = {}
    top = max((sum(b) for _, b in pending), default=0)
    for order in range(top, 0, -1):
        batch = sorted((k for k in pending if sum(k[1]) == order), key=lambda k: (k[0], tuple(-x for x in k[1])))
        for k in batch:
            c = pending.pop(k)
            if not c:
                continue
            i, b = k
            s = next(idx for idx, x in enumerate(b) if x)
            lower = tuple(mi_sub(b, unit(n, s)))
            fk = (i, MultiIndex(lower), s)
            flux[fk] = flux[fk] + c if fk in flux else c
            dk = (i, lower)
            dc = -total_derivative(c, s)
            pending[dk] = pending[dk] + dc if dk in pending else dc
    zeroth = {i: c for (i, b), c in pending.items() if not any(b)}
    return zeroth, flux


def auxiliary_variation(bundle: Bundle, stem: str = "zeta", fields=None) -> EvolutionaryField:
    """Evolutionary field ``v^i = zeta^i`` on the bundle extended by auxiliary fields."""
    ext, mapping = auxiliary_bundle(bundle, stem, _field_set(bundle, fields))
    return EvolutionaryField(ext, {i: ext.jet(k) for i, k in mapping.items()})


def lie_density(lag: Lagrangian, X: JetVectorField) -> tuple[DiffForm, Expr]:
    """``L_X(L omega_0)`` as a form, together with its ``omega_0`` coefficient."""
    bundle = _wider(lag.bundle, X.bundle)
    lag = lag.on(bundle)
    form = lie_derivative_form(X, lag.form())
    vol_word = tuple(dx(s) for s in range(bundle.n))
    return form, horizontalize(form).coefficient(vol_word)


# ---------------------------------------------------------------------------
# Euler-Lagrange, momentum, first variation
# ---------------------------------------------------------------------------
def euler_lagrange(lag, fields=None) -> SourceForm:
    """``E_i = sum_a (-1)^|a| D_a (dL/dy^i_a)`` for the selected fields."""
    lag = Lagrangian.of(lag)
    b = lag.bundle
    selected = _field_set(b, fields)
    comps = {}
    for i in selected:
        terms = []
        for a in _jets_by_field(lag.density, [i]):
            t = total_derivative_multi(lag.density.partial(a), a.mi)
            terms.append(-t if a.order % 2 else t)
        comps[i] = expr_sum(terms).with_bundle(b) if terms else b.zero()
    return SourceForm(b, comps)


def momentum(lag, fields=None) -> Momentum:
    """Momentum ``p`` of the first-variation decomposition (fixed IBP convention)."""
    lag = Lagrangian.of(lag)
    b = lag.bundle
    selected = _field_set(b, fields)
    jets = _jets_by_field(lag.density, selected)
    s = max((a.order for a in jets), default=0)
    if s > MAX_MOMENTUM_ORDER:
        raise UnsupportedOrderError(
            f"momentum is implemented for Lagrangians of order <= {MAX_MOMENTUM_ORDER}, got {s}"
        )
    coeffs = {(a.field, MultiIndex(a.mi)): lag.density.partial(a) for a in jets if a.order > 0}
    _, flux = integrate_by_parts(coeffs, b.n)
    return Momentum(b, flux)


def first_variation_residual(lag, v: EvolutionaryField) -> DiffForm:
    """``L_{jv}(L omega_0) - v _| E(L) - d_H(jv _| p)``; identically zero."""
    lag = Lagrangian.of(lag)
    bundle = _wider(lag.bundle, v.bundle)
    lag = lag.on(bundle)
    X = JetVectorField.from_evolutionary(EvolutionaryField(bundle, v.components))
    fields = sorted(v.components)
    lie = lie_derivative_form(X, lag.form())
    E = euler_lagrange(lag, fields) if fields else SourceForm(bundle, {})
    p = momentum(lag, fields) if fields else Momentum(bundle, {})
    vE = interior(X, E.form()) if fields else DiffForm.zero(bundle, bundle.n)
    boundary = d_H(interior(X, p.form())) if not p.is_zero() else DiffForm.zero(bundle, bundle.n)
    return lie - vE - boundary


# ---------------------------------------------------------------------------
# symmetries and Noether currents
# ---------------------------------------------------------------------------
def _polynomial_atoms(e: Expr) -> bool:
    return not e.has_functions()


def divergence_potential(density: Expr, bundle: Bundle, max_degree: int = 4, max_unknowns: int = 4000):
    """Search for a polynomial current ``P`` with ``D_s P^s = density``.

    The ansatz spans all monomials of degree ``<= deg + 1`` in base
    coordinates, the parameters present, and jets of order ``<= order - 1``.
    Returns a :class:`Current` or ``None``.
    """
    density = bundle.lift(density)
    if not density:
        return Current.zero(bundle)
    if not _polynomial_atoms(density):
        return None
    order = density.order()
    pool: list = [Coord(s) for s in range(bundle.n)]
    pool += sorted((a for a in density.atoms() if isinstance(a, Param)), key=lambda a: a.key)
    jet_order = max(order - 1, 0)
    for i in range(bundle.m):
        for a in multi_indices(bundle.n, jet_order):
            pool.append(Jet(i, tuple(a)))
    degree = min(density.degree() + 1, max_degree)
    monomials = []
    for k in range(degree + 1):
        for combo in itertools.combinations_with_replacement(pool, k):
            monomials.append(combo)
    if len(monomials) * bundle.n > max_unknowns:
        return None
    rows: dict = {}
    basis = {}
    for k, combo in enumerate(monomials):
        m = bundle.lift(1)
        for a in combo:
            m = m * Expr.atom(a, bundle)
        basis[k] = m
        for s in range(bundle.n):
            col = total_derivative(m, s)
            for mono, c in col.coefficient_dict().items():
                rows.setdefault(mono, {})[(s, k)] = c
    target = density.coefficient_dict()
    keys = list(rows) + [mono for mono in target if mono not in rows]
    sol = linsolve.solve([rows.get(mono, {}) for mono in keys], [target.get(mono, Fraction(0)) for mono in keys])
    if sol is None:
        return None
    comps = [bundle.zero() for _ in range(bundle.n)]
    for (s, k), c in sol.items():
        if c:
            comps[s] = comps[s] + basis[k] * c
    return Current(bundle, tuple(comps))


def check_symmetry(lag, u: ProjectableVectorField, max_degree: int = 4) -> SymmetryCheck:
    """Classify ``u`` as an exact, divergence, or non-symmetry of ``lag``."""
    lag = Lagrangian.of(lag)
    X = JetVectorField.from_projectable(u)
    form, density = lie_density(lag, X)
    if form.is_zero():
        return SymmetryCheck(SymmetryKind.EXACT, density)
    bundle = form.bundle
    if not form.is_horizontal():
        return SymmetryCheck(SymmetryKind.NONE, density)
    if not euler_lagrange(Lagrangian(density, bundle)).is_zero():
        return SymmetryCheck(SymmetryKind.NONE, density)
    potential = divergence_potential(density, bundle, max_degree)
    return SymmetryCheck(SymmetryKind.DIVERGENCE, density, potential)


def noether_current(lag, u: ProjectableVectorField, potential: Current | None = None) -> Current:
    """``eps = -(jv _| p + xi _| L)`` for an exact symmetry ``u``.

    For a divergence symmetry pass ``potential`` with ``d_H P = L_u(L omega_0)``;
    the current becomes ``P - jv _| p - xi _| L``.
    """
    lag = Lagrangian.of(lag)
    bundle = _wider(lag.bundle, u.bundle)
    lag = lag.on(bundle)
    X = JetVectorField.from_projectable(u)
    form, density = lie_density(lag, X)
    if potential is None:
        if not form.is_zero():
            raise NotASymmetryError("the vector field is not a symmetry of the Lagrangian", density)
        potential = Current.zero(bundle)
    elif not form.is_horizontal() or density != potential.divergence():
        raise NotASymmetryError("the potential does not match the Lie derivative of the Lagrangian", density)
    v = u.vertical_part()
    p = momentum(lag)
    eps = p.contract(v)
    comps = [P - c - xi * lag.density for P, c, xi in zip(potential.components, eps.components, u.base)]
    return Current(bundle, tuple(comps))


def on_shell(e: Expr, source: SourceForm, max_steps: int = 10_000) -> Expr:
    """Reduce ``e`` modulo ``E_i = 0`` and all their total derivatives.

    Each non-zero component must contain a jet appearing linearly with a
    constant coefficient; the highest such jet (in an orderly ranking) is
    solved for and its prolongations are rewritten until none remain.
    """

    def rank(a: Jet):
        return (a.order, a.field, tuple(-x for x in a.mi))

    rules = []
    for comp in source.components.values():
        if not comp:
            continue
        best = None
        for a in sorted(comp.jets(), key=rank, reverse=True):
            c = comp.partial(a).as_constant()
            if c and a not in (comp - Expr.atom(a) * c).atoms():
                best = (a, c)
                break
        if best is None:
            raise UnsupportedStructureError("cannot solve the field equations for a leading jet")
        a, c = best
        rules.append((a, -(comp - Expr.atom(a, comp.bundle) * c) / c))
    for _ in range(max_steps):
        hit = None
        for b in sorted(e.jets(), key=rank, reverse=True):
            for a, sol in rules:
                if b.field == a.field and all(x >= y for x, y in zip(b.mi, a.mi)):
                    hit = (b, total_derivative_multi(sol, [x - y for x, y in zip(b.mi, a.mi)]))
                    break
            if hit:
                break
        if hit is None:
            return e
        e = e.substitute({hit[0]: hit[1]})
    raise UnsupportedStructureError("on-shell reduction did not terminate")


# ---------------------------------------------------------------------------
# Helmholtz conditions
# ---------------------------------------------------------------------------
def helmholtz_residuals(source: SourceForm) -> dict[tuple[int, int, MultiIndex], Expr]:
    """Residuals ``dE_i/dy^j_a - sum_{b>=a} (-1)^|b| C(b,a) D_{b-a}(dE_j/dy^i_b)``.

    All vanish exactly when the source form is locally variational.
    """
    b = source.bundle
    fields = list(source.components)
    q = source.order
    alphas = multi_indices(b.n, q)
    out = {}
    for i in fields:
        for j in fields:
            Ei, Ej = source.components[i], source.components[j]
            for alpha in alphas:
                lhs = Ei.partial(Jet(j, tuple(alpha)))
                terms = []
                for beta in alphas:
                    if not beta.contains(alpha):
                        continue
                    dEj = Ej.partial(Jet(i, tuple(beta)))
                    if not dEj:
                        continue
                    gamma = mi_sub(beta, alpha)
                    t = total_derivative_multi(dEj, gamma) * mi_multinomial(alpha, gamma)
                    terms.append(-t if beta.order % 2 else t)
                out[(i, j, alpha)] = (lhs - expr_sum(terms)).with_bundle(b)
    return out


def is_locally_variational(source: SourceForm) -> bool:
    return not any(helmholtz_residuals(source).values())


# ---------------------------------------------------------------------------
# second variation and Jacobi morphism
# ---------------------------------------------------------------------------
def second_variation(lag, v: EvolutionaryField | None = None) -> DiffForm:
    """``L_{jv} L_{jv} (L omega_0)`` with ``v`` held fixed (default: auxiliary ``zeta``)."""
    lag = Lagrangian.of(lag)
    if v is None:
        v = auxiliary_variation(lag.bundle)
    bundle = _wider(lag.bundle, v.bundle)
    X = JetVectorField.from_evolutionary(EvolutionaryField(bundle, v.components))
    first = lie_derivative_form(X, lag.on(bundle).form())
    return lie_derivative_form(X, first)


def jacobi(lag, v: EvolutionaryField | None = None) -> SourceForm:
    """Linearization ``J_i(v) = sum_a d E_i / d y^j_a D_a v^j``, keyed by original field."""
    lag = Lagrangian.of(lag)
    if v is None:
        v = auxiliary_variation(lag.bundle)
    bundle = _wider(lag.bundle, v.bundle)
    E = euler_lagrange(lag.on(bundle), range(lag.bundle.m))
    comps = {i: v.apply(e) for i, e in E.components.items()}
    return SourceForm(bundle, comps)


def jacobi_from_second_variation(lag) -> SourceForm:
    """Half the Euler-Lagrange form, in the auxiliary fields, of the second variation.

    Keyed by the original field index so that it compares directly with :func:`jacobi`.
    """
    lag = Lagrangian.of(lag)
    v = auxiliary_variation(lag.bundle)
    vol = tuple(dx(s) for s in range(lag.bundle.n))
    density = second_variation(lag, v).coefficient(vol) * Fraction(1, 2)
    aux = {i: next(iter(c.jets())).field for i, c in v.components.items()}
    E = euler_lagrange(Lagrangian(density, v.bundle), list(aux.values()))
    return SourceForm(v.bundle, {i: E[k] for i, k in aux.items()})


def kernel_check(lag, v) -> bool:
    """True iff ``v`` (a field or a gauge generator) lies in the Jacobi kernel."""
    if isinstance(v, GaugeGenerator):
        v = v.variation()
    return jacobi(lag, v).is_zero()


def omega_lagrangian(lag, v) -> Lagrangian:
    """``omega = sum_i v^i E_i(L)`` on the bundle carrying ``v``."""
    lag = Lagrangian.of(lag)
    if isinstance(v, GaugeGenerator):
        v = v.variation()
    bundle = _wider(lag.bundle, v.bundle)
    E = euler_lagrange(lag.on(bundle), range(lag.bundle.m))
    terms = [v.components[i] * e for i, e in E.components.items() if i in v.components]
    return Lagrangian(expr_sum(terms), bundle)


# ---------------------------------------------------------------------------
# Bergmann-Bianchi morphism, reduced current, superpotential
# ---------------------------------------------------------------------------
def _gauge_coefficients(lag: Lagrangian, gauge: GaugeGenerator):
    """``c_{A,a} = sum_i R^{i a}_A E_i`` so that ``omega = c_{A,a} D_a chi^A``."""
    bundle = gauge.bundle
    E = euler_lagrange(lag.on(bundle), range(lag.bundle.m))
    coeffs: dict[tuple[int, MultiIndex], list[Expr]] = {}
    for (i, A, a), R in gauge.coefficients.items():
        coeffs.setdefault((A, a), []).append(R * E.components[i])
    return {k: expr_sum(v) for k, v in coeffs.items()}


def bianchi(lag, gauge: GaugeGenerator) -> SourceForm:
    """``beta_A = sum_a (-1)^|a| D_a (R^{i a}_A E_i)``, keyed by parameter field."""
    lag = Lagrangian.of(lag)
    comps = {A: [] for A in gauge.params}
    for (A, a), c in _gauge_coefficients(lag, gauge).items():
        t = total_derivative_multi(c, a)
        comps[A].append(-t if sum(a) % 2 else t)
    return SourceForm(gauge.bundle, {A: expr_sum(ts).with_bundle(gauge.bundle) for A, ts in comps.items()})


def reduced_current(lag, gauge: GaugeGenerator) -> Current:
    """``eps~`` with ``omega = <chi, beta> + d_H eps~``; vanishes on shell."""
    lag = Lagrangian.of(lag)
    bundle = gauge.bundle
    _, flux = integrate_by_parts(_gauge_coefficients(lag, gauge), bundle.n)
    comps = [bundle.zero() for _ in range(bundle.n)]
    for (A, a, s), c in flux.items():
        comps[s] = comps[s] + c * bundle.jet(A, a)
    return Current(bundle, tuple(comps))


def _split_linear(e: Expr, params: Iterable[int]) -> dict[tuple[int, MultiIndex], Expr]:
    params = set(params)
    out = {}
    for f in e.factors():
        if isinstance(f, Func) and any(isinstance(a, Jet) and a.field in params for a in f.arg.atoms()):
            raise UnsupportedStructureError("current is not linear in the parameter jets")
    for mono, coef in e.collect(lambda f: isinstance(f, Jet) and f.field in params).items():
        if not mono or len(mono) != 1 or mono[0][1] != 1:
            raise UnsupportedStructureError("current is not linear in the parameter jets")
        a = mono[0][0]
        out[(a.field, MultiIndex(a.mi))] = coef
    return out


def _potential_for_closed_current(current: Current, params: tuple[int, ...]) -> Superpotential:
    """Antisymmetric ``nu`` with ``D_m nu^{s m} = J^s`` for a divergence-free ``J``
    linear in the parameter jets, removing the top order at every step."""
    b = current.bundle
    n = b.n
    nu: dict[tuple[int, int], Expr] = {}
    J = current
    for _ in range(64):
        parts = [_split_linear(c, params) for c in J.components]
        top = max((sum(a) for part in parts for (_, a) in part), default=-1)
        if top < 0:
            return Superpotential(b, nu)
        if top == 0:
            raise UnsupportedStructureError("current has an order-zero part that is not a divergence")
        rows, rhs = [], []
        for s in range(n):
            for A in params:
                for alpha in multi_indices(n, top, top):
                    row = {}
                    for m in range(n):
                        if m == s or alpha[m] == 0:
                            continue
                        gamma = tuple(mi_sub(alpha, unit(n, m)))
                        key = (min(s, m), max(s, m), A, gamma)
                        row[key] = row.get(key, 0) + (1 if s < m else -1)
                    rows.append(row)
                    rhs.append(parts[s].get((A, alpha), b.zero()))
        sol = linsolve.solve(rows, rhs)
        if sol is None:
            raise UnsupportedStructureError("top-order symbol of the current is not a divergence")
        step: dict[tuple[int, int], Expr] = {}
        for (s, m, A, gamma), c in sol.items():
            if c:
                step[(s, m)] = step.get((s, m), b.zero()) + c * b.jet(A, gamma)
        sp = Superpotential(b, step)
        for k, v in sp.components.items():
            nu[k] = nu.get(k, b.zero()) + v
        J = J - sp.divergence()
    raise UnsupportedStructureError("superpotential cascade did not terminate")


def superpotential(lag, gauge: GaugeGenerator, u: ProjectableVectorField | None = None) -> Superpotential:
    """``nu`` with ``d_H nu = eps - eps~`` (default ``u``: the pure gauge lift)."""
    lag = Lagrangian.of(lag)
    bundle = gauge.bundle
    beta = bianchi(lag, gauge)
    if not beta.is_zero():
        raise BianchiObstructionError("the Bergmann-Bianchi morphism does not vanish", beta)
    if bundle.n < 2:
        raise DegenerateDimensionError("superpotentials are (n-2)-forms and need n >= 2")
    if u is None:
        u = gauge.lift()
    eps = noether_current(lag.on(bundle), u)
    reduced = reduced_current(lag, gauge)
    return _potential_for_closed_current(eps - reduced, gauge.params)


# ---------------------------------------------------------------------------
# naturality of omega and the covariant conservation law
# ---------------------------------------------------------------------------
def _lift_field(u: ProjectableVectorField, bundle: Bundle) -> ProjectableVectorField:
    return ProjectableVectorField(bundle, u.base, u.fiber)


def _omega_data(lag: Lagrangian, gauge: GaugeGenerator):
    v = gauge.variation()
    if not kernel_check(lag, v):
        raise PreconditionError("the gauge variation is not in the kernel of the Jacobi morphism")
    om = omega_lagrangian(lag, v)
    p = momentum(om, range(lag.bundle.m))
    return v, om, p


def naturality_residuals(lag, u: ProjectableVectorField, gauge: GaugeGenerator) -> NaturalityResiduals:
    """Residual classes of ``L_{u_H} omega = -d_H(-jv _| p_omega)`` and ``L_{u_H} omega = 0``."""
    lag = Lagrangian.of(lag)
    v, om, p = _omega_data(lag, gauge)
    bundle = gauge.bundle
    u = _lift_field(u, bundle)
    X_H = JetVectorField.from_projectable(u).horizontal_part()
    _, r4 = lie_density(om, X_H)
    r3 = r4 + p.contract(v).divergence()
    every = range(bundle.m)
    return NaturalityResiduals(
        euler_lagrange(Lagrangian(r3, bundle), every),
        euler_lagrange(Lagrangian(r4, bundle), every),
        r3,
        r4,
    )


def energy_momentum_current(lag, gauge: GaugeGenerator) -> Current:
    """``-jv _| p_omega`` for ``v = R(chi)`` in the Jacobi kernel."""
    lag = Lagrangian.of(lag)
    v, _, p = _omega_data(lag, gauge)
    return -p.contract(v)
