"""The one-dimensional wave equation: field equation, symmetries and currents."""

from __future__ import annotations

from pathlib import Path

from jetvar import (
    check_symmetry,
    euler_lagrange,
    is_locally_variational,
    jacobi,
    noether_current,
    on_shell,
    parse,
    to_text,
)

THEORY = Path(__file__).resolve().parent.parent / "theories" / "wave.jvt"


def show(title: str, pairs) -> None:
    print(title)
    for label, e in pairs:
        print(f"  {label}: {to_text(e)}")


def main() -> None:
    theory = parse(THEORY.read_text(encoding="utf-8"))
    lam = theory.lagrangians["L"]
    print(f"lagrangian density: {to_text(lam.density)}")

    E = euler_lagrange(lam)
    show("Euler-Lagrange form", E.labelled())
    print(f"passes the Helmholtz conditions: {is_locally_variational(E)}")

    for name, u in theory.vfields.items():
        check = check_symmetry(lam, u)
        current = noether_current(lam, u, check.potential)
        show(f"vector field {name} ({check.kind.name.lower()} symmetry), Noether current", current.labelled())
        print(f"  d_H eps on shell: {to_text(on_shell(current.divergence(), E))}")

    show("Jacobi morphism", jacobi(lam).labelled())


if __name__ == "__main__":
    main()
