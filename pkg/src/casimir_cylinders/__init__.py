"""Casimir interaction energies for eccentric cylindrical shells.

Exact mode-summation energies via log-determinants of truncated scattering
kernels, together with the concentric, cylinder-plane, quasi-concentric
(tridiagonal) and proximity/large-separation closed forms.
"""

__version__ = "0.1.0"

from .geometry import CylPlaneGeometry, Geometry
from .bessel import BesselSeq, LogScaled, bessel_ratio_g, mod_bessel_seq, ord_bessel_seq
from .kernels import (
    KernelMatrix,
    Truncation,
    build_kernel_concentric,
    build_kernel_cylplane,
    build_kernel_eccentric,
    q_matrix,
    q_matrix_det,
    tridiag_terms,
)
from .linalg import logdet_one_minus
from .quadrature import IntegralResult, QuadratureSpec, energy_integral
from .energies import (
    AsymptoticConstants,
    ElectrostaticResult,
    EnergyResult,
    PfaForms,
    asymptotic_constants,
    casimir_concentric,
    casimir_cylplane,
    casimir_exact,
    delta_e_exact,
    delta_e_tridiagonal,
    electrostatics,
    exact_with_delta,
    large_alpha_asymptote,
    pfa_closed_forms,
)

__all__ = [
    "AsymptoticConstants",
    "BesselSeq",
    "CylPlaneGeometry",
    "ElectrostaticResult",
    "EnergyResult",
    "Geometry",
    "IntegralResult",
    "KernelMatrix",
    "LogScaled",
    "PfaForms",
    "QuadratureSpec",
    "Truncation",
    "asymptotic_constants",
    "bessel_ratio_g",
    "build_kernel_concentric",
    "build_kernel_cylplane",
    "build_kernel_eccentric",
    "casimir_concentric",
    "casimir_cylplane",
    "casimir_exact",
    "delta_e_exact",
    "delta_e_tridiagonal",
    "electrostatics",
    "energy_integral",
    "exact_with_delta",
    "large_alpha_asymptote",
    "logdet_one_minus",
    "mod_bessel_seq",
    "ord_bessel_seq",
    "pfa_closed_forms",
    "q_matrix",
    "q_matrix_det",
    "tridiag_terms",
]
