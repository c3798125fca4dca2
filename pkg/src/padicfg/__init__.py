"""Exact p-adic toolkit: formal group laws, torsion towers, subscheme scans.

Verifies, at desk scale, torsion/distance dichotomies on formal subschemes
of p-divisible formal groups, the Boxall-style Galois descent on division
points, and multiplicative-group rigid-analytic instances.
"""

from .padic import (
    INF,
    NEG_INF,
    BudgetError,
    CertificationError,
    InternalCheckError,
    PAdicNumber,
    PAdicStructure,
    PadicError,
    PrecisionError,
    Qp,
    RationalValuation,
    StructureMismatchError,
    arith,
    extend_field,
    hensel_root,
    newton_polygon,
    teichmuller_lift,
    valuation,
)

__all__ = [
    "INF",
    "NEG_INF",
    "BudgetError",
    "CertificationError",
    "InternalCheckError",
    "PAdicNumber",
    "PAdicStructure",
    "PadicError",
    "PrecisionError",
    "Qp",
    "RationalValuation",
    "StructureMismatchError",
    "arith",
    "extend_field",
    "hensel_root",
    "newton_polygon",
    "teichmuller_lift",
    "valuation",
]

__version__ = "0.1.0"
