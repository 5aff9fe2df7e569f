# %% [markdown]
# # Nested Halton rules
#
# Point i (from 1) has coordinate j equal to the radical inverse of i in the
# j-th prime base, mapped to [-1, 1]. Rules are nested: the first N points
# never change when N grows.

# %%
import numpy as np

from anisouq.quadrature import build_rule, sample_counts

print("N_l for levels 0..5:", sample_counts(5))
print("log-boosted variant:", sample_counts(5, variant="log-boosted"))
rule = build_rule(1000, 5)
print("first points:\n", rule.points[:3])

# %% [markdown]
# Averages of a smooth integrand converge faster than Monte Carlo's N^-1/2.

# %%
exact = np.sinh(1.0) ** 5  # integral of exp(sum y) / 2^5 over [-1,1]^5
for N in (10, 100, 1000):
    r = build_rule(N, 5)
    print(N, abs(r.integrate(np.exp(r.points.sum(axis=1))) - exact))
