"""Linear and spectral stability of planar relative equilibria."""

from .analysis import AnalysisReport, analyze
from .central_config import (CentralConfiguration, central_configuration_from, ngon_configuration,
                             solve_central_config, verify_central_configuration)
from .core_model import BodySystem, Tolerances
from .linearization import augmented_hessian, build_linearization, parity_instability_test
from .potentials import PotentialSpec, eval_potential, grad_potential, hess_potential
from .reduction import build_reduction, restrict_blocks
from .spectral_flow import HermitianPath, analyze_path, krein_signature
from .stability import classify, instability_inequality, ngon_alpha_threshold

__all__ = [
    "AnalysisReport", "BodySystem", "CentralConfiguration", "HermitianPath", "PotentialSpec",
    "Tolerances", "analyze", "analyze_path", "augmented_hessian", "build_linearization",
    "build_reduction", "central_configuration_from", "classify", "eval_potential",
    "grad_potential", "hess_potential", "instability_inequality", "krein_signature",
    "ngon_alpha_threshold", "ngon_configuration", "parity_instability_test", "restrict_blocks",
    "solve_central_config", "verify_central_configuration",
]
