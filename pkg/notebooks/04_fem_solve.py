# %% [markdown]
# # One sample solve
#
# Draw a parameter vector, synthesise the vector field, assemble the P1
# system with one tensor per element, and solve it with Jacobi PCG.

# %%
import numpy as np

from anisouq import fem
from anisouq.coefficient import CoefficientParams
from anisouq.covkl import build_expansion, example_model, sample_field
from anisouq.mesh import build_hierarchy

mesh = build_hierarchy(2)[2]
kl = build_expansion(example_model(2), mesh)
y = np.random.default_rng(1).uniform(-1, 1, kl.rank)
system = fem.assemble(mesh, sample_field(kl, y), CoefficientParams())
u, info = fem.solve(system, 1e-10, return_info=True)
print(f"{system.matrix.shape[0]} unknowns, {info.iterations} CG iterations, residual {info.residual:.1e}")

# %% [markdown]
# Norms of the solution; the H1 seminorm must stay below the energy bound
# ``C_P / a_lower`` with ``C_P = 1 / (sqrt(3) pi)``.

# %%
print("L2  ", fem.l2_norm(mesh, u))
print("H1  ", fem.h1_norm(mesh, u))
print("W11 ", fem.w11_norm(mesh, u))
print("|u|_H1 =", fem.h1_seminorm(mesh, u), "bound", 1 / (0.12 * np.sqrt(3) * np.pi))
