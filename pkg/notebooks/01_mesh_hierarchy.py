# %% [markdown]
# # Nested tetrahedral meshes of the unit cube
#
# Level 0 is a 2x2x2 grid of subcubes, each cut into six Kuhn tetrahedra
# around its (0,0,0)-(1,1,1) diagonal. Red refinement splits every
# tetrahedron into eight, and the diagonal choice keeps the Kuhn pattern, so
# level l is again a Kuhn mesh with 2^(l+1) cells per side.

# %%
import numpy as np

from anisouq.mesh import build_hierarchy, prolongate

meshes = build_hierarchy(3)
for m in meshes:
    print(f"level {m.level}: {m.n_tets:6d} tets, {m.n_vertices:5d} vertices, volume {m.volumes.sum():.15f}")

# %% [markdown]
# Vertices are numbered lexicographically, x1 slowest. Every fine vertex
# records the two parent vertices it is the midpoint of, which makes P1
# prolongation a chain of averages. Linear functions are reproduced exactly.

# %%
coarse, fine = meshes[0], meshes[3]
u = coarse.vertices @ [1.0, 2.0, 0.0]
err = np.abs(prolongate(u, coarse, fine) - fine.vertices @ [1.0, 2.0, 0.0]).max()
print(f"prolongation error on x1 + 2 x2: {err:.1e}")
