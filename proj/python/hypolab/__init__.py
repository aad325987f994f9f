"""Kinetic Langevin hypocoercivity laboratory.

Thin python surface over the C++ core: operator assembly, condition
checks, the decay-rate ledger, semigroup evolution and SDE sampling.
"""

from hypolab._core import (  # noqa: F401
    ModelParams,
    OperatorSet,
    Potential,
    apply_A2P,
    apply_AP,
    apply_B,
    assemble,
    build_B,
    build_G,
    build_ledger,
    certify,
    check_c3,
    check_hypo,
    estimate_poincare,
    evaluate_at,
    evolve,
    make_potential,
    nu2_curve,
    observable_coefficients,
    simulate,
    spectral_gap,
)

__all__ = [
    "ModelParams",
    "OperatorSet",
    "Potential",
    "apply_A2P",
    "apply_AP",
    "apply_B",
    "assemble",
    "build_B",
    "build_G",
    "build_ledger",
    "certify",
    "check_c3",
    "check_hypo",
    "estimate_poincare",
    "evaluate_at",
    "evolve",
    "make_potential",
    "nu2_curve",
    "observable_coefficients",
    "simulate",
    "spectral_gap",
]

__version__ = "0.1.0"
