from __future__ import annotations

import random
from fractions import Fraction

import pytest

import gen
from jetvar.calculus import JetVectorField, d_H, interior
from jetvar.errors import (
    BianchiObstructionError,
    DegenerateDimensionError,
    JetvarError,
    NotASymmetryError,
    PreconditionError,
    UnsupportedOrderError,
)
from jetvar.jetspace import Bundle, EvolutionaryField, ProjectableVectorField, total_derivative
from jetvar.symkernel import Jet, sin
from jetvar.variational import (
    Current,
    GaugeGenerator,
    Lagrangian,
    SourceForm,
    SymmetryKind,
    auxiliary_variation,
    bianchi,
    check_symmetry,
    divergence_potential,
    energy_momentum_current,
    euler_lagrange,
    first_variation_residual,
    helmholtz_residuals,
    integrate_by_parts,
    jacobi,
    jacobi_from_second_variation,
    kernel_check,
    momentum,
    naturality_residuals,
    noether_current,
    omega_lagrangian,
    on_shell,
    reduced_current,
    second_variation,
    superpotential,
)

W = Bundle(("t", "x"), ("u",))
X1 = Bundle(("x",), ("u",))
OSC = Bundle(("t",), ("q",), params=("w",))
MX = Bundle(("t", "x"), ("A0", "A1"))


def wave():
    return Lagrangian((W.jet("u", (1, 0)) ** 2 - W.jet("u", (0, 1)) ** 2) / 2, W)


def oscillator():
    q, qt, w = OSC.jet("q"), OSC.jet("q", (1,)), OSC.param("w")
    return Lagrangian(qt**2 / 2 - w**2 * q**2 / 2, OSC)


def maxwell_F(b=MX):
    return b.jet("A1", (1, 0)) - b.jet("A0", (0, 1))


def maxwell():
    return Lagrangian(-maxwell_F() ** 2 / 2, MX)


def maxwell_gauge(delta=0):
    ext = MX.extend(["chi"])
    chi = ext.jet("chi")
    return GaugeGenerator.from_variation(
        MX, ["chi"], {"A0": ext.jet("chi", (1, 0)) + delta * chi, "A1": ext.jet("chi", (0, 1))}
    )


def vertical(b, comps):
    return ProjectableVectorField(b, (b.zero(),) * b.n, comps)


def translation(b, s):
    return ProjectableVectorField(b, tuple(b.lift(1 if k == s else 0) for k in range(b.n)), {})


# -- Euler-Lagrange --------------------------------------------------------
def test_euler_lagrange_examples():
    assert euler_lagrange(Lagrangian(X1.jet("u", (1,)) ** 2 / 2, X1))[0] == -X1.jet("u", (2,))
    assert euler_lagrange(wave())[0] == -W.jet("u", (2, 0)) + W.jet("u", (0, 2))
    rng = random.Random(2)
    for _ in range(20):
        f = gen.polynomial(rng, X1, max_order=2)
        assert euler_lagrange(Lagrangian(total_derivative(f, 0), X1)).is_zero()


def test_euler_lagrange_with_functions():
    lam = Lagrangian(W.jet("u", (1, 0)) ** 2 / 2 - (1 - sin(W.jet("u"))), W)
    E = euler_lagrange(lam)[0]
    assert E == -W.jet("u", (2, 0)) + sin(W.jet("u")).partial(Jet(0, (0, 0)))


# -- momentum and first variation -------------------------------------------
def test_momentum_examples():
    p = momentum(Lagrangian(X1.jet("u", (1,)) ** 2 / 2, X1))
    assert p.components == {(0, (0,), 0): X1.jet("u", (1,))}
    assert momentum(Lagrangian(X1.jet("u") ** 3, X1)).is_zero()
    p2 = momentum(Lagrangian(X1.jet("u", (2,)) ** 2 / 2, X1))
    assert p2.components == {(0, (0,), 0): -X1.jet("u", (3,)), (0, (1,), 0): X1.jet("u", (2,))}


def test_momentum_order_cap():
    momentum(Lagrangian(X1.jet("u", (3,)) ** 2, X1))
    with pytest.raises(UnsupportedOrderError):
        momentum(Lagrangian(X1.jet("u", (4,)) ** 2, X1))


def test_integrate_by_parts_identity():
    rng = random.Random(8)
    b = Bundle(("t", "x"), ("u", "w"))
    aux = b.extend(["z0", "z1"])
    for _ in range(20):
        coeffs = {}
        for _ in range(3):
            i = rng.randrange(2)
            a = tuple(rng.randint(0, 2) for _ in range(2))
            coeffs[(i, a)] = gen.polynomial(rng, b, 1)
        zeroth, flux = integrate_by_parts(coeffs, 2)
        lhs = sum((c * aux.jet(2 + i, a) for (i, a), c in coeffs.items()), aux.zero())
        rhs = sum((c * aux.jet(2 + i) for i, c in zeroth.items()), aux.zero())
        for (i, a, s), c in flux.items():
            rhs = rhs + total_derivative(c * aux.jet(2 + i, a), s)
        assert lhs == rhs


def test_first_variation_examples():
    half = Lagrangian(X1.jet("u", (1,)) ** 2 / 2, X1)
    assert first_variation_residual(half, EvolutionaryField(X1, {0: X1.jet("u")})).is_zero()
    assert first_variation_residual(half, EvolutionaryField(X1, {})).is_zero()
    rng = random.Random(1)
    for _ in range(20):
        v = EvolutionaryField(W, {0: gen.polynomial(rng, W, 1)})
        assert first_variation_residual(wave(), v).is_zero()


def test_first_variation_detects_a_wrong_momentum(monkeypatch):
    import jetvar.variational as var

    original = var.momentum

    def flipped(lag, fields=None):
        p = original(lag, fields)
        return var.Momentum(p.bundle, {k: -c for k, c in p.components.items()})

    monkeypatch.setattr(var, "momentum", flipped)
    v = EvolutionaryField(W, {0: W.jet("u") ** 2})
    assert not var.first_variation_residual(wave(), v).is_zero()


# -- symmetries and currents ------------------------------------------------
def test_check_symmetry_examples():
    assert check_symmetry(wave(), translation(W, 0)).kind is SymmetryKind.EXACT
    b = Bundle(("t",), ("q",))
    lam = Lagrangian(b.jet("q", (1,)) ** 2 / 2 - b.jet("q"), b)
    assert check_symmetry(lam, translation(b, 0)).kind is SymmetryKind.EXACT
    shift = check_symmetry(lam, vertical(b, {0: 1}))
    assert shift.kind is SymmetryKind.DIVERGENCE
    assert shift.potential.components == (-b.coord("t"),)
    assert check_symmetry(lam, ProjectableVectorField.zero(b)).kind is SymmetryKind.EXACT
    scale = check_symmetry(oscillator(), vertical(OSC, {0: OSC.jet("q") + 1}))
    assert scale.kind is SymmetryKind.NONE


def test_divergence_potential_recovers_divergences():
    rng = random.Random(9)
    for _ in range(15):
        comps = tuple(gen.polynomial(rng, W, 1, max_terms=2, max_factors=2) for _ in range(2))
        density = Current(W, comps).divergence()
        P = divergence_potential(density, W)
        assert P is not None and P.divergence() == density


def test_noether_examples():
    eps = noether_current(oscillator(), translation(OSC, 0))
    q, qt, w = OSC.jet("q"), OSC.jet("q", (1,)), OSC.param("w")
    assert eps.components == (qt**2 / 2 + w**2 * q**2 / 2,)
    free = noether_current(wave(), translation(W, 1))
    ut, ux = W.jet("u", (1, 0)), W.jet("u", (0, 1))
    assert free.components == (ut * ux, -(ut**2) / 2 - ux**2 / 2)
    assert noether_current(wave(), ProjectableVectorField.zero(W)).is_zero()
    with pytest.raises(NotASymmetryError) as info:
        noether_current(oscillator(), vertical(OSC, {0: 1}))
    assert info.value.residual == -(w**2) * q


def test_noether_current_identity_and_weak_conservation():
    cases = (
        (wave(), [translation(W, 0), translation(W, 1), vertical(W, {0: 1})]),
        (oscillator(), [translation(OSC, 0)]),
        (maxwell(), [translation(MX, 0), translation(MX, 1)]),
    )
    for lam, fields in cases:
        E = euler_lagrange(lam)
        for u in fields:
            eps = noether_current(lam, u)
            X = JetVectorField.from_evolutionary(u.vertical_part())
            assert d_H(eps.form()) == interior(X, E.form())
            assert on_shell(eps.divergence(), E) == 0


def test_divergence_symmetry_current():
    b = Bundle(("t",), ("q",))
    lam = Lagrangian(b.jet("q", (1,)) ** 2 / 2 - b.jet("q"), b)
    u = vertical(b, {0: 1})
    P = check_symmetry(lam, u).potential
    eps = noether_current(lam, u, P)
    E = euler_lagrange(lam)
    assert eps.divergence() == E[0]
    assert eps.components == (-b.coord("t") - b.jet("q", (1,)),)


def test_on_shell():
    E = euler_lagrange(wave())
    assert on_shell(W.jet("u", (3, 1)), E) in (W.jet("u", (1, 3)), W.jet("u", (3, 1)))
    E = euler_lagrange(maxwell())
    assert on_shell(MX.jet("A1", (2, 0)), E) == MX.jet("A0", (1, 1))


# -- Helmholtz ------------------------------------------------------------
def test_helmholtz_examples():
    rng = random.Random(4)
    for _ in range(20):
        assert not any(helmholtz_residuals(euler_lagrange(gen.lagrangian(rng))).values())
    res = helmholtz_residuals(SourceForm(X1, {0: X1.jet("u", (1,))}))
    assert res[(0, 0, (1,))] == 2
    assert not any(helmholtz_residuals(SourceForm(X1, {0: X1.jet("u", (2,))})).values())


def test_helmholtz_detects_asymmetric_couplings():
    b = Bundle(("t",), ("u", "v"))
    src = SourceForm(b, {0: b.jet("v"), 1: 2 * b.jet("u")})
    assert any(helmholtz_residuals(src).values())
    sym = SourceForm(b, {0: b.jet("v"), 1: b.jet("u")})
    assert not any(helmholtz_residuals(sym).values())


# -- second variation and Jacobi --------------------------------------------
def _density(form, b):
    return form.coefficient(tuple((0, s) for s in range(b.n)))


def test_second_variation_examples():
    lin = Lagrangian(X1.jet("u", (1,)) + 3 * X1.jet("u"), X1)
    assert second_variation(lin).is_zero()
    v = auxiliary_variation(OSC)
    z, zt, w = v.bundle.jet("zeta"), v.bundle.jet("zeta", (1,)), v.bundle.param("w")
    assert _density(second_variation(oscillator(), v), OSC) == zt**2 - w**2 * z**2
    v1 = auxiliary_variation(X1)
    half = Lagrangian(X1.jet("u", (1,)) ** 2 / 2, X1)
    assert _density(second_variation(half, v1), X1) == v1.bundle.jet("zeta", (1,)) ** 2


def test_jacobi_examples():
    J = jacobi(oscillator())
    b = J.bundle
    assert J[0] == -b.jet("zeta", (2,)) - b.param("w") ** 2 * b.jet("zeta")
    Jw = jacobi(wave())
    assert Jw[0] == -Jw.bundle.jet("zeta", (2, 0)) + Jw.bundle.jet("zeta", (0, 2))
    assert not any(a.field == 0 for a in Jw[0].jets())


def test_jacobi_equals_half_el_of_second_variation():
    rng = random.Random(12)
    for _ in range(20):
        lam = gen.lagrangian(rng)
        assert jacobi_from_second_variation(lam) == jacobi(lam)


def test_jacobi_is_self_adjoint():
    """<z', J(z)> - <z, J(z')> is a divergence."""
    rng = random.Random(13)
    for _ in range(15):
        lam = gen.lagrangian(rng, max_m=1)
        b = lam.bundle.extend(["z", "y"])
        J1 = jacobi(lam, EvolutionaryField(b, {0: b.jet("z")}))
        J2 = jacobi(lam, EvolutionaryField(b, {0: b.jet("y")}))
        density = b.jet("y") * J1[0] - b.jet("z") * J2[0]
        assert euler_lagrange(Lagrangian(density, b)).is_zero()


def test_kernel_check_examples():
    assert kernel_check(maxwell(), maxwell_gauge())
    assert not kernel_check(oscillator(), auxiliary_variation(OSC))
    assert kernel_check(oscillator(), EvolutionaryField(OSC, {}))


def test_omega_lagrangian_examples():
    assert omega_lagrangian(oscillator(), EvolutionaryField(OSC, {})).density == 0
    v = auxiliary_variation(OSC)
    b = v.bundle
    expected = b.jet("zeta") * (-b.jet("q", (2,)) - b.param("w") ** 2 * b.jet("q"))
    assert omega_lagrangian(oscillator(), v).density == expected
    om = omega_lagrangian(maxwell(), maxwell_gauge()).density
    ext = maxwell_gauge().bundle
    E = euler_lagrange(maxwell())
    assert om == ext.jet("chi", (1, 0)) * E[0] + ext.jet("chi", (0, 1)) * E[1]


# -- gauge sector -----------------------------------------------------------
def test_bianchi_examples():
    assert bianchi(maxwell(), maxwell_gauge()).is_zero()
    gen0 = GaugeGenerator.from_variation(OSC, ["chi"], {"q": OSC.extend(["chi"]).jet("chi") * 3})
    beta = bianchi(oscillator(), gen0)
    assert beta[1] == 3 * euler_lagrange(oscillator())[0]


def test_reduced_current_examples():
    gen0 = GaugeGenerator.from_variation(OSC, ["chi"], {"q": OSC.extend(["chi"]).jet("chi")})
    assert reduced_current(oscillator(), gen0).is_zero()
    g = maxwell_gauge()
    E = euler_lagrange(maxwell())
    chi = g.bundle.jet("chi")
    assert reduced_current(maxwell(), g).components == (chi * E[0], chi * E[1])
    trivial = Lagrangian(total_derivative(MX.jet("A0") * MX.jet("A1", (0, 1)), 0), MX)
    assert reduced_current(trivial, g).is_zero()


def test_reduced_current_decomposition():
    for lam, g in ((maxwell(), maxwell_gauge()), (maxwell(), maxwell_gauge(1)), (wave(), None)):
        if g is None:
            g = GaugeGenerator.from_variation(W, ["chi"], {"u": W.extend(["chi"]).jet("chi", (1, 1))})
        om = omega_lagrangian(lam, g).density
        beta = bianchi(lam, g)
        pairing = sum((g.bundle.jet(A) * e for A, e in beta.components.items()), g.bundle.zero())
        assert om == pairing + reduced_current(lam, g).divergence()


def test_maxwell_superpotential():
    g = maxwell_gauge()
    nu = superpotential(maxwell(), g)
    chi = g.bundle.jet("chi")
    F = maxwell_F(g.bundle)
    assert nu.component(0, 1) == chi * F
    assert nu.component(1, 0) == -chi * F
    eps = noether_current(maxwell().on(g.bundle), g.lift())
    J = eps - reduced_current(maxwell(), g)
    assert J.divergence() == 0
    assert nu.divergence() == J


def test_superpotential_errors_and_trivial_cases():
    with pytest.raises(BianchiObstructionError):
        superpotential(maxwell(), maxwell_gauge(1))
    zero = GaugeGenerator(MX.extend(["chi"]), (2,), {})
    assert superpotential(maxwell(), zero).is_zero()
    with pytest.raises(DegenerateDimensionError):
        superpotential(oscillator(), GaugeGenerator(OSC.extend(["chi"]), (1,), {}))


def test_nonlinear_electrodynamics_superpotential():
    F = maxwell_F()
    lam = Lagrangian(-F**2 / 2 + Fraction(1, 3) * F**4, MX)
    g = maxwell_gauge()
    assert bianchi(lam, g).is_zero()
    nu = superpotential(lam, g)
    eps = noether_current(lam.on(g.bundle), g.lift())
    assert nu.divergence() == eps - reduced_current(lam, g)


def test_three_dimensional_maxwell():
    b = Bundle(("t", "x", "y"), ("A0", "A1", "A2"))
    def e(k):
        return [1 if j == k else 0 for j in range(3)]

    F = {(m, n): b.jet(n, e(m)) - b.jet(m, e(n)) for m in range(3) for n in range(m + 1, 3)}
    lam = Lagrangian(sum((f**2 for f in F.values()), b.zero()) * Fraction(-1, 2), b)
    ext = b.extend(["chi"])
    g = GaugeGenerator.from_variation(
        b, ["chi"], {f"A{k}": ext.jet("chi", e(k)) for k in range(3)}
    )
    assert bianchi(lam, g).is_zero()
    assert kernel_check(lam, g)
    nu = superpotential(lam, g)
    eps = noether_current(lam.on(ext), g.lift())
    assert nu.divergence() == eps - reduced_current(lam, g)
    nat = naturality_residuals(lam, translation(b, 2), g)
    assert nat.is_zero()


def test_naturality_examples():
    g = maxwell_gauge()
    for s in range(2):
        assert naturality_residuals(maxwell(), translation(MX, s), g).is_zero()
    assert naturality_residuals(maxwell(), ProjectableVectorField.zero(MX), g).is_zero()
    assert naturality_residuals(Lagrangian(MX.zero(), MX), translation(MX, 0), g).is_zero()
    with pytest.raises(PreconditionError):
        naturality_residuals(maxwell(), translation(MX, 0), maxwell_gauge(1))


def test_energy_momentum_current_is_conserved():
    T = energy_momentum_current(maxwell(), maxwell_gauge())
    assert T.divergence() == 0
    with pytest.raises(PreconditionError):
        energy_momentum_current(maxwell(), maxwell_gauge(1))


def test_gauge_generator_validation():
    ext = MX.extend(["chi"])
    with pytest.raises(JetvarError):
        GaugeGenerator.from_variation(MX, ["chi"], {"A0": ext.jet("chi") ** 2})
    with pytest.raises(JetvarError):
        GaugeGenerator.from_variation(MX, ["chi"], {"A0": ext.jet("chi") + 1})
    g = maxwell_gauge()
    assert g.order == 1
    assert g.variation().component(0) == ext.jet("chi", (1, 0))
