"""``jetvar`` command-line driver.

Exit status: 0 on success, 2 when a mathematical check fails (``--verify``
mismatch, Bergmann-Bianchi obstruction, not a symmetry, failed ``check``
row), 1 on usage, input or operational errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

from . import __version__
from .dsl import TheoryFile, parse
from .errors import (
    BianchiObstructionError,
    DegenerateDimensionError,
    JetvarError,
    NotASymmetryError,
    PreconditionError,
)
from .jetspace import max_order
from .render import SCHEMA_VERSION, jet_text, to_json_obj, to_latex, to_text
from .symkernel import Expr, Jet
from .variational import (
    Current,
    SourceForm,
    SymmetryKind,
    auxiliary_variation,
    bianchi,
    check_symmetry,
    energy_momentum_current,
    euler_lagrange,
    first_variation_residual,
    helmholtz_residuals,
    jacobi,
    jacobi_from_second_variation,
    kernel_check,
    momentum,
    naturality_residuals,
    noether_current,
    omega_lagrangian,
    reduced_current,
    second_variation,
    superpotential,
)

COMMANDS = ("el", "momentum", "noether", "helmholtz", "jacobi", "bianchi", "superpotential", "check", "second-variation")

EXIT_OK, EXIT_USAGE, EXIT_MATH = 0, 1, 2


class UsageError(Exception):
    pass


class MathFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="jetvar", description="Variational calculus on jet bundles.")
    parser.add_argument("--version", action="version", version=f"jetvar {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "el": "Euler-Lagrange expressions",
        "momentum": "momentum form of the first-variation decomposition",
        "noether": "Noether current of a symmetry (--vfield)",
        "helmholtz": "Helmholtz residuals of the Euler-Lagrange form",
        "jacobi": "Jacobi morphism in auxiliary fields",
        "bianchi": "Bergmann-Bianchi morphism of a gauge generator (--gauge)",
        "superpotential": "superpotential of a gauge generator (--gauge)",
        "check": "run the identity suite and print a pass/fail table",
        "second-variation": "density of the second variation in auxiliary fields",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name], description=helps[name])
        p.add_argument("input", help="theory file (.jvt), or - for stdin")
        p.add_argument("--format", choices=("text", "latex", "json"), default="text")
        p.add_argument("--lagrangian", help="Lagrangian name (default: the first declared)")
        p.add_argument("--field", help="restrict output to one field")
        p.add_argument("--vfield", help="vector field name (default: the first declared)")
        p.add_argument("--gauge", help="gauge generator name (default: the first declared)")
        p.add_argument("--verify", action="store_true", help="check the defining identity of the result")
    return parser


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------
@dataclass
class Output:
    components: list[tuple[str, Expr]]

    def render(self, fmt: str, command: str) -> str:
        if fmt == "json":
            doc = {
                "schema": SCHEMA_VERSION,
                "command": command,
                "components": [{"label": k, "expr": to_json_obj(e)} for k, e in self.components],
            }
            return json.dumps(doc, indent=2) + "\n"
        show = to_latex if fmt == "latex" else to_text
        if len(self.components) == 1:
            return show(self.components[0][1]) + "\n"
        return "".join(f"{k}: {show(e)}\n" for k, e in self.components)


@dataclass
class CheckRow:
    identity: str
    subject: str
    passed: bool
    detail: str = ""


def render_table(rows: list[CheckRow], fmt: str) -> str:
    if fmt == "json":
        doc = {
            "schema": SCHEMA_VERSION,
            "command": "check",
            "results": [
                {"identity": r.identity, "subject": r.subject, "status": "PASS" if r.passed else "FAIL", "detail": r.detail}
                for r in rows
            ],
        }
        return json.dumps(doc, indent=2) + "\n"
    w1 = max(len(r.identity) for r in rows)
    w2 = max(len(r.subject) for r in rows)
    lines = []
    for r in rows:
        status = "PASS" if r.passed else "FAIL"
        tail = f"  {r.detail}" if r.detail else ""
        lines.append(f"{status}  {r.identity.ljust(w1)}  {r.subject.ljust(w2)}{tail}".rstrip())
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# selection helpers
# ---------------------------------------------------------------------------
def _pick(table: dict, name: str | None, kind: str, flag: str):
    if name is not None:
        if name not in table:
            raise UsageError(f"no {kind} named {name!r}")
        return name, table[name]
    if not table:
        raise UsageError(f"the theory declares no {kind}; {flag} cannot be resolved")
    first = next(iter(table))
    return first, table[first]


def _fields(theory: TheoryFile, args) -> list[int] | None:
    if args.field is None:
        return None
    if args.field not in theory.bundle.fields:
        raise UsageError(f"no field named {args.field!r}")
    return [theory.bundle.fields.index(args.field)]


def _source_components(src: SourceForm, keep: list[int] | None) -> list[tuple[str, Expr]]:
    return [(src.bundle.fields[i], e) for i, e in src.components.items() if keep is None or i in keep]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------
def cmd_el(theory, args) -> Output:
    _, lag = _pick(theory.lagrangians, args.lagrangian, "lagrangian", "--lagrangian")
    E = euler_lagrange(lag)
    if args.verify and any(helmholtz_residuals(E).values()):
        raise MathFailure("Helmholtz conditions fail for the Euler-Lagrange form")
    return Output(_source_components(E, _fields(theory, args)))


def _momentum_label(bundle, key) -> str:
    i, a, s = key
    return f"theta({jet_text(bundle, Jet(i, tuple(a)))}) ^ omega_{bundle.base[s]}"


def cmd_momentum(theory, args) -> Output:
    _, lag = _pick(theory.lagrangians, args.lagrangian, "lagrangian", "--lagrangian")
    p = momentum(lag)
    keep = _fields(theory, args)
    if args.verify and not first_variation_residual(lag, auxiliary_variation(lag.bundle)).is_zero():
        raise MathFailure("first variation identity fails")
    comps = [(_momentum_label(lag.bundle, k), e) for k, e in p.components.items() if keep is None or k[0] in keep]
    return Output(comps or [("0", lag.bundle.zero())])


def _current_for(lag, u) -> Current:
    result = check_symmetry(lag, u)
    if result.kind is SymmetryKind.EXACT:
        return noether_current(lag, u)
    if result.kind is SymmetryKind.DIVERGENCE and result.potential is not None:
        return noether_current(lag, u, result.potential)
    raise NotASymmetryError(f"not a symmetry: L_u(L omega_0) = {to_text(result.residual)}", result.residual)


def cmd_noether(theory, args) -> Output:
    _, lag = _pick(theory.lagrangians, args.lagrangian, "lagrangian", "--lagrangian")
    _, u = _pick(theory.vfields, args.vfield, "vfield", "--vfield")
    eps = _current_for(lag, u)
    if args.verify:
        v = u.vertical_part()
        E = euler_lagrange(lag)
        vE = sum((v.component(i) * e for i, e in E.components.items()), lag.bundle.zero())
        if eps.divergence() != vE:
            raise MathFailure("d_H eps differs from v . E")
    return Output(eps.labelled())


def cmd_helmholtz(theory, args) -> Output:
    _, lag = _pick(theory.lagrangians, args.lagrangian, "lagrangian", "--lagrangian")
    E = euler_lagrange(lag)
    b = lag.bundle
    res = helmholtz_residuals(E)
    nonzero = [
        (f"{b.fields[i]}, {jet_text(b, Jet(j, tuple(a)))}", e) for (i, j, a), e in res.items() if e
    ]
    if args.verify and nonzero:
        raise MathFailure("Helmholtz conditions fail")
    return Output(nonzero or [("0", b.zero())])


def cmd_jacobi(theory, args) -> Output:
    _, lag = _pick(theory.lagrangians, args.lagrangian, "lagrangian", "--lagrangian")
    J = jacobi(lag)
    if args.verify and jacobi_from_second_variation(lag) != J:
        raise MathFailure("second variation does not reproduce the Jacobi morphism")
    return Output(_source_components(J, _fields(theory, args)))


def cmd_second_variation(theory, args) -> Output:
    _, lag = _pick(theory.lagrangians, args.lagrangian, "lagrangian", "--lagrangian")
    v = auxiliary_variation(lag.bundle)
    form = second_variation(lag, v)
    density = form.coefficient(tuple((0, s) for s in range(lag.bundle.n)))
    if args.verify:
        if jacobi_from_second_variation(lag) != jacobi(lag, v):
            raise MathFailure("second variation does not reproduce the Jacobi morphism")
    return Output([("density", density.with_bundle(v.bundle))])


def cmd_bianchi(theory, args) -> Output:
    _, lag = _pick(theory.lagrangians, args.lagrangian, "lagrangian", "--lagrangian")
    _, g = _pick(theory.gauges, args.gauge, "gauge generator", "--gauge")
    beta = bianchi(lag, g)
    if args.verify:
        _verify_reduced(lag, g, beta)
    return Output([(g.bundle.fields[A], e) for A, e in beta.components.items()])


def _verify_reduced(lag, g, beta):
    om = omega_lagrangian(lag, g).density
    pairing = sum((g.bundle.jet(A) * e for A, e in beta.components.items()), g.bundle.zero())
    if om != pairing + reduced_current(lag, g).divergence():
        raise MathFailure("omega differs from <chi, beta> + d_H eps~")


def cmd_superpotential(theory, args) -> Output:
    _, lag = _pick(theory.lagrangians, args.lagrangian, "lagrangian", "--lagrangian")
    _, g = _pick(theory.gauges, args.gauge, "gauge generator", "--gauge")
    nu = superpotential(lag, g)
    if args.verify:
        eps = noether_current(lag.on(g.bundle), g.lift())
        if nu.divergence() != eps - reduced_current(lag, g):
            raise MathFailure("d_H nu differs from eps - eps~")
    return Output(nu.labelled())


def _row(rows, identity, subject, fn):
    try:
        ok, detail = fn()
    except JetvarError as exc:
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    rows.append(CheckRow(identity, subject, ok, detail))


def run_check(theory: TheoryFile) -> list[CheckRow]:
    rows: list[CheckRow] = []
    for lname, lag in theory.lagrangians.items():
        b = lag.bundle

        def first_variation():
            v = auxiliary_variation(b)
            return first_variation_residual(lag, v).is_zero(), ""

        def helmholtz():
            return not any(helmholtz_residuals(euler_lagrange(lag)).values()), ""

        def comparison():
            return jacobi_from_second_variation(lag) == jacobi(lag), ""

        _row(rows, "first variation formula", lname, first_variation)
        _row(rows, "Helmholtz conditions of E(L)", lname, helmholtz)
        _row(rows, "second variation = Jacobi morphism", lname, comparison)

        for vname, u in theory.vfields.items():

            def conservation(u=u):
                result = check_symmetry(lag, u)
                if result.kind is SymmetryKind.NONE:
                    return True, "not a symmetry (skipped)"
                if result.kind is SymmetryKind.DIVERGENCE and result.potential is None:
                    return True, "divergence symmetry without polynomial potential (skipped)"
                eps = _current_for(lag, u)
                v = u.vertical_part()
                E = euler_lagrange(lag)
                vE = sum((v.component(i) * e for i, e in E.components.items()), b.zero())
                return eps.divergence() == vE, result.kind.value

            _row(rows, "Noether current: d_H eps = v . E", f"{lname}, {vname}", conservation)

        for gname, g in theory.gauges.items():

            def gate(g=g):
                beta_zero = bianchi(lag, g).is_zero()
                in_kernel = kernel_check(lag, g)
                detail = f"bianchi {'= 0' if beta_zero else '!= 0'}, kernel {'yes' if in_kernel else 'no'}"
                return beta_zero == in_kernel, detail

            def reduced(g=g):
                try:
                    _verify_reduced(lag, g, bianchi(lag, g))
                except MathFailure:
                    return False, ""
                return True, ""

            _row(rows, "gauge gate: bianchi = 0 iff R(chi) in ker J", f"{lname}, {gname}", gate)
            _row(rows, "omega = <chi, beta> + d_H eps~", f"{lname}, {gname}", reduced)

            if bianchi(lag, g).is_zero() and g.bundle.n >= 2:

                def strong(g=g):
                    eps = noether_current(lag.on(g.bundle), g.lift())
                    J = eps - reduced_current(lag, g)
                    if J.divergence():
                        return False, "d_H(eps - eps~) != 0"
                    nu = superpotential(lag, g)
                    return nu.divergence() == J, ""

                _row(rows, "strong conservation: d_H nu = eps - eps~", f"{lname}, {gname}", strong)

            if kernel_check(lag, g):
                for vname, u in theory.vfields.items():
                    if any(u.fiber.values()):
                        continue

                    def natural(g=g, u=u):
                        return naturality_residuals(lag, u, g).is_zero(), ""

                    _row(rows, "naturality of omega (r3 = r4 = 0)", f"{lname}, {gname}, {vname}", natural)

                def emc(g=g):
                    return not energy_momentum_current(lag, g).divergence(), ""

                _row(rows, "energy-momentum current conserved", f"{lname}, {gname}", emc)
    if not rows:
        raise UsageError("the theory declares no lagrangian to check")
    return rows


HANDLERS = {
    "el": cmd_el,
    "momentum": cmd_momentum,
    "noether": cmd_noether,
    "helmholtz": cmd_helmholtz,
    "jacobi": cmd_jacobi,
    "bianchi": cmd_bianchi,
    "superpotential": cmd_superpotential,
    "second-variation": cmd_second_variation,
}


def _read(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    with open(path, "rb") as fh:
        return fh.read()


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = sys.stdout
    try:
        max_order()
        theory = parse(_read(args.input))
        if args.command == "check":
            rows = run_check(theory)
            out.write(render_table(rows, args.format))
            return EXIT_OK if all(r.passed for r in rows) else EXIT_MATH
        result = HANDLERS[args.command](theory, args)
        out.write(result.render(args.format, args.command))
        return EXIT_OK
    except OSError as exc:
        print(f"jetvar: cannot read {args.input}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"jetvar: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MathFailure as exc:
        print(f"jetvar: verification failed: {exc}", file=sys.stderr)
        return EXIT_MATH
    except BianchiObstructionError as exc:
        comps = "; ".join(f"{k}: {to_text(e)}" for k, e in exc.bianchi.labelled()) if exc.bianchi else ""
        print(f"jetvar: Bianchi obstruction: {exc} ({comps})", file=sys.stderr)
        return EXIT_MATH
    except (NotASymmetryError, DegenerateDimensionError, PreconditionError) as exc:
        print(f"jetvar: {exc}", file=sys.stderr)
        return EXIT_MATH
    except JetvarError as exc:
        print(f"jetvar: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
