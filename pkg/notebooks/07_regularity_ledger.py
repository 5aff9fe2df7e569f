# %% [markdown]
# # Derivative bounds for the tensor
#
# The constants bounding ``|d^alpha_y A| <= |alpha|! k_A c_A^|alpha| gamma^alpha``
# are built up from the terms B, C, D, E, F and G. The hand example uses
# kappa = 1, a_lower = 1, a_upper = 2 and c_gamma = 2.

# %%
import itertools

from anisouq.coefficient import CoefficientParams
from anisouq.covkl import build_expansion, example_model
from anisouq.mesh import build_base_mesh
from anisouq.regularity import (
    bound_constants,
    combinatorial_checks,
    fd_derivative_check,
    format_fd_report,
    gamma_sequence,
)

for convention in ("proof", "statement"):
    c = bound_constants(1, 1.0, 2.0, 2.0, convention=convention)
    print(f"{convention:9s}: k_D={c.k_D:g} k_E={c.k_E:g} k_A={c.k_A:g} c_A={c.c_A:.4f}")

# %% [markdown]
# Finite differences of the actual tensor against the bound, first three modes.

# %%
kl = build_expansion(example_model(1), build_base_mesh())
p = CoefficientParams()
consts = bound_constants(0, p.a_lower, p.a_upper, gamma_sequence(kl, 0))
checks = [
    fd_derivative_check(kl, p, alpha, constants=consts)
    for alpha in itertools.product(range(3), repeat=3)
    if sum(alpha) <= 2
]
print(format_fd_report(checks))
print(combinatorial_checks(6))
