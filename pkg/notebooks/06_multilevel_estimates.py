# %% [markdown]
# # Single-level and multilevel QMC moments
#
# The multilevel estimate pairs the coarse mesh with many samples and the
# fine mesh with few, ``sum_k (Q_{N_k} - Q_{N_{k-1}})[u_{l-k}]``.

# %%
from anisouq.estimator import CachedProblem, Problem, error_vs_reference, ml_moments, qmc_moments
from anisouq.quadrature import build_rule, sample_counts

problem = Problem.from_example(1, 3)
cached = CachedProblem(problem)
ref = qmc_moments(3, build_rule(100, problem.dimension([3])), cached)
counts = sample_counts(2)
for l in range(3):
    qmc = qmc_moments(l, build_rule(counts[l], problem.dimension()), cached)
    ml = ml_moments(l, counts, cached)
    print(
        f"level {l}: mean H1 err QMC {error_vs_reference(qmc[1], ref[1], 'H1', problem):.4f}, "
        f"MLQMC {error_vs_reference(ml[1], ref[1], 'H1', problem):.4f}"
    )
print("solves performed:", len(problem.log))
