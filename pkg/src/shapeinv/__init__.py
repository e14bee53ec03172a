"""Inversion of first-kind integral transforms with a shape-constrained ansatz.

The derivative of the unknown solution is parametrised with exact threshold
and asymptotic behaviour and a fixed number of sign changes; the parameters
are found by weighted least squares against the sampled transform.
"""

from .ansatz import (ConstraintError, ShapeAnsatz, constrained, count_sign_changes,
                     eliminate_root, eval_f, eval_fprime, moment, normalize_C)
from .baseline import BasisExpansion, basis_fn, fit_standard
from .fitter import FitResult, ScanConfig, fit, grid_scan, objective, refine
from .forward_map import TransformCurve, apply_ktilde, model_transform, transform_of
from .kernels import DomainError, Family, KernelSpec, kernel_K, kernel_Ktilde, sigma_grid
from .metrics import ChiReport, chi_fit, chi_input, chi_solution, deviation_profile
from .model_problem import (ModelProblem, Provenance, SampledInput, exact_f, exact_input,
                            galerkin_input, noisy_input)

__version__ = "0.1.0"

__all__ = [
    "BasisExpansion", "ChiReport", "ConstraintError", "DomainError", "Family", "FitResult",
    "KernelSpec", "ModelProblem", "Provenance", "SampledInput", "ScanConfig", "ShapeAnsatz",
    "TransformCurve", "apply_ktilde", "basis_fn", "chi_fit", "chi_input", "chi_solution",
    "constrained", "count_sign_changes", "deviation_profile", "eliminate_root", "eval_f",
    "eval_fprime", "exact_f", "exact_input", "fit", "fit_standard", "galerkin_input",
    "grid_scan", "kernel_K", "kernel_Ktilde", "model_transform", "moment", "noisy_input",
    "normalize_C", "objective", "refine", "sigma_grid", "transform_of",
]
