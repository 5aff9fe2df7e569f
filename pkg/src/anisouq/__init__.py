"""Multilevel quasi-Monte Carlo for diffusion problems with a random anisotropic coefficient.

Modules
-------
mesh         nested Kuhn tetrahedral meshes of the unit cube, prolongation
coefficient  the tensor ``A = a I + (|V| - a) V V^T / |V|^2`` and its terms
covkl        covariance models and pivoted-Cholesky KL expansions
fem          P1 assembly, Jacobi-PCG solve, L2 / H1 / W11 norms
quadrature   nested Halton rules and per-level sample counts
estimator    single-level and multilevel QMC moment estimates
regularity   derivative-bound constants, finite-difference and combinatorial checks
study, cli   the convergence study and its command line
"""

from .coefficient import CoefficientParams, eval_A, eval_terms
from .covkl import build_expansion, example_model, sample_field
from .estimator import Problem, error_vs_reference, ml_estimate, qmc_estimate
from .mesh import build_base_mesh, build_hierarchy, prolongate, refine
from .quadrature import build_rule, sample_count
from .study import StudyConfig, run_study

__version__ = "0.1.0"

__all__ = [
    "CoefficientParams",
    "eval_A",
    "eval_terms",
    "build_expansion",
    "example_model",
    "sample_field",
    "Problem",
    "error_vs_reference",
    "ml_estimate",
    "qmc_estimate",
    "build_base_mesh",
    "build_hierarchy",
    "prolongate",
    "refine",
    "build_rule",
    "sample_count",
    "StudyConfig",
    "run_study",
]
