"""Numerical checks for delta-convex cones, conformal Schouten tensors and
singular solutions of fully nonlinear conformal curvature equations."""

from .cones import (
    ConeSpec,
    ExponentTable,
    Verdict,
    delta_of_k,
    exponents,
    gamma_delta_margin,
    gamma_sigmak_margin,
    gamma_tau,
)
from .errors import DeltaConvexError
from .fields import GridDomain, ScalarField
from .report import AnalysisReport
from .symmat import EigenTuple, SymTensor

__all__ = [
    "AnalysisReport",
    "ConeSpec",
    "DeltaConvexError",
    "EigenTuple",
    "ExponentTable",
    "GridDomain",
    "ScalarField",
    "SymTensor",
    "Verdict",
    "delta_of_k",
    "exponents",
    "gamma_delta_margin",
    "gamma_sigmak_margin",
    "gamma_tau",
]
