"""Two-dimensional Maxwell theory: gauge identities, superpotential and energy-momentum."""

from __future__ import annotations

from pathlib import Path

from jetvar import (
    bianchi,
    energy_momentum_current,
    kernel_check,
    naturality_residuals,
    noether_current,
    parse,
    reduced_current,
    superpotential,
    to_text,
)

THEORY = Path(__file__).resolve().parent.parent / "theories" / "maxwell.jvt"


def show(title: str, pairs) -> None:
    print(title)
    for label, e in pairs:
        print(f"  {label}: {to_text(e)}")


def main() -> None:
    theory = parse(THEORY.read_text(encoding="utf-8"))
    lam = theory.lagrangians["L"]
    gauge = theory.gauges["R"]
    print(f"lagrangian density: {to_text(lam.density)}")

    print(f"Bianchi morphism vanishes: {bianchi(lam, gauge).is_zero()}")
    print(f"R(chi) lies in the kernel of the Jacobi morphism: {kernel_check(lam, gauge)}")

    eps = noether_current(lam.on(gauge.bundle), gauge.lift())
    reduced = reduced_current(lam, gauge)
    show("gauge Noether current eps", eps.labelled())
    show("reduced current (vanishes on shell)", reduced.labelled())

    nu = superpotential(lam, gauge)
    show("superpotential nu", nu.labelled())
    print(f"d_H nu = eps - reduced: {nu.divergence() == eps - reduced}")

    for name in ("T", "X"):
        residuals = naturality_residuals(lam, theory.vfields[name], gauge)
        print(f"naturality residuals for {name} vanish: {residuals.is_zero()}")
    current = energy_momentum_current(lam, gauge)
    show("energy-momentum current", current.labelled())
    print(f"conserved off shell: {current.divergence() == 0}")

    deformed = theory.gauges["Rp"]
    print(f"deformed generator Rp: Bianchi vanishes = {bianchi(lam, deformed).is_zero()}, "
          f"kernel check = {kernel_check(lam, deformed)}")


if __name__ == "__main__":
    main()
