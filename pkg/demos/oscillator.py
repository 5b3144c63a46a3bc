"""Harmonic oscillator: energy, second variation and a gauge operator that is not a symmetry."""

from __future__ import annotations

from pathlib import Path

from jetvar import (
    BianchiObstructionError,
    bianchi,
    euler_lagrange,
    jacobi,
    jacobi_from_second_variation,
    kernel_check,
    noether_current,
    parse,
    second_variation,
    superpotential,
    to_text,
)
from jetvar.calculus import dx

THEORY = Path(__file__).resolve().parent.parent / "theories" / "oscillator.jvt"


def main() -> None:
    theory = parse(THEORY.read_text(encoding="utf-8"))
    lam = theory.lagrangians["L"]
    print(f"lagrangian density: {to_text(lam.density)}")
    print(f"equation of motion: {to_text(euler_lagrange(lam)[0])} = 0")

    energy = noether_current(lam, theory.vfields["T"])
    print(f"energy from time translation: {to_text(energy.components[0])}")

    delta2 = second_variation(lam)
    print(f"second variation density: {to_text(delta2.coefficient([dx(0)]))}")
    J = jacobi(lam)
    print(f"Jacobi morphism: {to_text(J[0])}")
    print(f"agrees with half the E-L form of the second variation: {J == jacobi_from_second_variation(lam)}")

    # The shift q -> q + chi is not a symmetry; the Bianchi morphism records the obstruction.
    gauge = theory.gauges["R"]
    print(f"R(chi) lies in the kernel of J: {kernel_check(lam, gauge)}")
    for label, e in bianchi(lam, gauge).labelled():
        print(f"Bianchi morphism, {label}: {to_text(e)}")
    try:
        superpotential(lam, gauge)
    except BianchiObstructionError as exc:
        print(f"superpotential refused: {exc}")


if __name__ == "__main__":
    main()
