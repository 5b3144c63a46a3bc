"""Exact symbolic variational calculus on jet bundles."""

from __future__ import annotations

__version__ = "0.1.0"

from .calculus import (
    DiffForm,
    JetVectorField,
    d,
    d_H,
    d_V,
    horizontalize,
    interior,
    lie_derivative_form,
    omega,
    omega2,
    volume,
    wedge,
)
from .dsl import TheoryFile, parse, parse_expr, print_theory
from .errors import (
    BianchiObstructionError,
    DegenerateDimensionError,
    IncompatibleBundleError,
    JetvarError,
    JetvarParseError,
    MultiIndexError,
    NotASymmetryError,
    OrderLimitError,
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
    prolong,
    total_derivative,
    total_derivative_multi,
)
from .render import from_json, to_json, to_latex, to_text
from .symkernel import Expr, const, cos, exp, sin
from .variational import (
    Current,
    GaugeGenerator,
    Lagrangian,
    Momentum,
    SourceForm,
    Superpotential,
    SymmetryCheck,
    SymmetryKind,
    bianchi,
    check_symmetry,
    energy_momentum_current,
    euler_lagrange,
    first_variation_residual,
    helmholtz_residuals,
    is_locally_variational,
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
