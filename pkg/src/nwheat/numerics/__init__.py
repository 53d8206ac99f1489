"""Certified real arithmetic: balls, signed logarithms, precision control."""

from .ball import Ball, exp2, hull, ln2, one, pi, zero
from .kernels import BACKEND
from .precision import (
    DEFAULT_PREC,
    DomainError,
    NumericsError,
    Precision,
    PrecisionError,
    RefineResult,
    SignIndeterminate,
    Undecidable,
    check_prec,
    prec_cap,
    refine,
)
from .signedlog import SignedLog, log_sum_exp

__all__ = [
    "BACKEND",
    "Ball",
    "DEFAULT_PREC",
    "DomainError",
    "NumericsError",
    "Precision",
    "PrecisionError",
    "RefineResult",
    "SignIndeterminate",
    "SignedLog",
    "Undecidable",
    "check_prec",
    "exp2",
    "hull",
    "ln2",
    "log_sum_exp",
    "one",
    "pi",
    "prec_cap",
    "refine",
    "zero",
]
