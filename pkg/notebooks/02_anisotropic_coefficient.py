# %% [markdown]
# # The anisotropic diffusion tensor
#
# A vector V defines ``A = a I + (|V| - a) V V^T / |V|^2``: strength |V|
# along V and a across it.

# %%
import numpy as np

from anisouq.coefficient import CoefficientParams, eval_A, eval_terms

p = CoefficientParams(a=0.12)
v = np.array([0.6, 0.8, 0.0])
A = eval_A(v, p)
print(A)
print("eigenvalues:", np.linalg.eigvalsh(A))

# %% [markdown]
# The same tensor written through its building blocks ``G = |V| F`` and the
# projector ``F = V V^T / |V|^2`` reads ``A = a I + G - a F``.

# %%
t = eval_terms(v)
print("decomposition error:", np.abs(A - (p.a * np.eye(3) + t.G - p.a * t.F)).max())
print("F idempotent:", np.allclose(t.F @ t.F, t.F))
