"""Numerical laboratory for second-order rough paths on Wiener space."""

from .domains import DomainSpec, in_B, in_O, in_section, in_U, in_Uab
from .experiments import (
    ConvergenceTable,
    EstimateReport,
    convergence_study,
    cross_bound_study,
    estimate_measure,
    overlap_study,
)
from .lift import CrossIntegral, RoughLift, cross, lift, rough_distance, subtract
from .paths import DiscretePath, RngStream, cm_norm, dyadic_project, sample_brownian
from .variation import (
    TwoParamTable,
    VarParams,
    cp_norm,
    dyadic_constant,
    dyadic_norm,
    level1_norm,
    level2_norm,
    qvar,
)
from .wpi import FiniteProductSpace, WpiCertificate, gaussian_convex_check, section_pi_constants, verify_product_wpi

__version__ = "0.1.0"
