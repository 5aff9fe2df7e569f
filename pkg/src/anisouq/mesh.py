"""Nested tetrahedral meshes of the unit cube.

The base mesh splits the 2x2x2 cube grid into Kuhn simplices (six per
subcube, all sharing the (0,0,0)->(1,1,1) diagonal). Red refinement cuts each
tetrahedron into eight and reproduces the Kuhn structure on the once-finer
grid, so level ``l`` is the Kuhn mesh of a ``2**(l+1)`` grid.

Vertices are always numbered lexicographically in ``(x1, x2, x3)`` with
``x1`` varying slowest.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

__all__ = [
    "TetMesh",
    "build_base_mesh",
    "refine",
    "build_hierarchy",
    "prolongate",
    "prolongation_matrix",
    "write_mesh",
    "read_mesh",
]

# local vertex pairs of the six tetrahedron edges, in lexicographic order
_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
# the three octahedron diagonals as pairs of opposite edges
_DIAGONALS = (((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2)))


@dataclass(frozen=True, eq=False)
class TetMesh:
    """One level of the nested Kuhn hierarchy on ``(0, 1)^3``.

    Attributes
    ----------
    level : int
        Refinement level; the grid has ``2**(level+1)`` cells per side.
    vertices : ndarray, shape (n, 3)
    tets : ndarray, shape (m, 4)
        Vertex indices, positively oriented.
    boundary : ndarray of bool, shape (n,)
    parent : TetMesh or None
        The mesh this one was refined from.
    parent_edges : ndarray, shape (n, 2) or None
        For each vertex, the two parent vertices whose midpoint it is
        (a repeated index for vertices inherited from the parent).
    parent_tet : ndarray, shape (m,) or None
        Parent tetrahedron of each child.
    """

    level: int
    vertices: np.ndarray
    tets: np.ndarray
    boundary: np.ndarray
    parent: TetMesh | None = None
    parent_edges: np.ndarray | None = None
    parent_tet: np.ndarray | None = None

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_tets(self) -> int:
        return self.tets.shape[0]

    @property
    def cells_per_side(self) -> int:
        return 2 ** (self.level + 1)

    @property
    def h(self) -> float:
        return 1.0 / self.cells_per_side

    @cached_property
    def volumes(self) -> np.ndarray:
        """Signed volumes of all tetrahedra."""
        return _signed_volumes(self.vertices, self.tets)

    @cached_property
    def interior(self) -> np.ndarray:
        """Indices of the vertices not on the boundary."""
        return np.flatnonzero(~self.boundary)

    @cached_property
    def grid_index(self) -> np.ndarray:
        """Integer grid coordinates of the vertices, shape (n, 3)."""
        return np.rint(self.vertices * self.cells_per_side).astype(np.int64)


def _signed_volumes(vertices, tets):
    p = vertices[tets]
    d = p[:, 1:, :] - p[:, :1, :]
    return np.linalg.det(d) / 6.0


def _grid_vertices(n):
    ticks = np.arange(n + 1) / n
    g = np.stack(np.meshgrid(ticks, ticks, ticks, indexing="ij"), axis=-1)
    return g.reshape(-1, 3)


def _lex_index(ijk, n):
    return (ijk[..., 0] * (n + 1) + ijk[..., 1]) * (n + 1) + ijk[..., 2]


def _boundary_flags(vertices):
    eps = 1e-14
    return np.any((np.abs(vertices) <= eps) | (np.abs(vertices - 1.0) <= eps), axis=1)


def _orient(vertices, tets):
    vol = _signed_volumes(vertices, tets)
    neg = vol < 0
    tets = tets.copy()
    tets[neg, 2], tets[neg, 3] = tets[neg, 3], tets[neg, 2].copy()
    return tets


def build_base_mesh() -> TetMesh:
    """Level-0 mesh: 2x2x2 subcubes, six Kuhn tetrahedra each (48 in total)."""
    n = 2
    eye = np.eye(3, dtype=np.int64)
    tets = []
    for corner in itertools.product(range(n), repeat=3):
        c = np.array(corner, dtype=np.int64)
        for perm in itertools.permutations(range(3)):
            path = [c, c + eye[perm[0]], c + eye[perm[0]] + eye[perm[1]], c + 1]
            tets.append([_lex_index(p, n) for p in path])
    vertices = _grid_vertices(n)
    tets = _orient(vertices, np.array(tets, dtype=np.int64))
    return TetMesh(0, vertices, tets, _boundary_flags(vertices))


def _choose_diagonals(p):
    """Pick the interior octahedron diagonal for every tetrahedron.

    Shortest diagonal first; ties go to a diagonal whose direction has no
    mixed-sign components (an edge of the Kuhn lattice), then to the lowest
    local label pair.
    """
    mid = {e: 0.5 * (p[:, e[0]] + p[:, e[1]]) for e in _EDGES}
    lengths = []
    mixed = []
    for e1, e2 in _DIAGONALS:
        d = mid[e2] - mid[e1]
        lengths.append(np.einsum("ij,ij->i", d, d))
        tiny = 1e-12 * np.max(np.abs(d), axis=1, keepdims=True)
        has_pos = np.any(d > tiny, axis=1)
        has_neg = np.any(d < -tiny, axis=1)
        mixed.append(has_pos & has_neg)
    lengths = np.stack(lengths, axis=1)
    mixed = np.stack(mixed, axis=1)
    shortest = lengths <= lengths.min(axis=1, keepdims=True) * (1 + 1e-10)
    # rank: shortest, then lattice-compatible, then label order
    key = (~shortest) * 4 + mixed * 2
    key = key * 3 + np.arange(3)
    return np.argmin(key, axis=1)


def refine(m: TetMesh) -> TetMesh:
    """Red refinement: each tetrahedron is cut into 8 via its edge midpoints."""
    n_coarse = m.cells_per_side
    n = 2 * n_coarse
    ijk = m.grid_index[m.tets]  # (t, 4, 3) coarse grid coordinates

    def node(a, b):
        return _lex_index(ijk[:, a] + ijk[:, b], n)

    corner = {i: node(i, i) for i in range(4)}
    mid = {e: node(*e) for e in _EDGES}

    def midpoint(i, j):
        return mid[(min(i, j), max(i, j))]

    children = np.empty((m.n_tets, 8, 4), dtype=np.int64)
    for i in range(4):
        others = [j for j in range(4) if j != i]
        children[:, i] = np.stack([corner[i]] + [midpoint(i, j) for j in others], axis=1)

    diag = _choose_diagonals(m.vertices[m.tets])
    for k, ((a, b), (c, d)) in enumerate(_DIAGONALS):
        sel = diag == k
        if not np.any(sel):
            continue
        d1, d2 = mid[(a, b)][sel], mid[(c, d)][sel]
        ring = [midpoint(a, c), midpoint(b, c), midpoint(b, d), midpoint(a, d)]
        ring = [r[sel] for r in ring]
        for s in range(4):
            children[sel, 4 + s] = np.stack([d1, d2, ring[s], ring[(s + 1) % 4]], axis=1)

    tets = children.reshape(-1, 4)
    vertices = _grid_vertices(n)
    tets = _orient(vertices, tets)

    parent_edges = np.empty((vertices.shape[0], 2), dtype=np.int64)
    coarse_ids = m.tets
    for a in range(4):
        for b in range(a, 4):
            parent_edges[node(a, b)] = np.stack([coarse_ids[:, a], coarse_ids[:, b]], axis=1)
    parent_tet = np.repeat(np.arange(m.n_tets), 8)
    return TetMesh(m.level + 1, vertices, tets, _boundary_flags(vertices), m, parent_edges, parent_tet)


def build_hierarchy(max_level: int) -> list[TetMesh]:
    """Meshes for levels ``0..max_level``, each refined from the previous one."""
    meshes = [build_base_mesh()]
    for _ in range(max_level):
        meshes.append(refine(meshes[-1]))
    return meshes


def prolongation_matrix(coarse: TetMesh, fine: TetMesh):
    """Sparse P1 interpolation matrix from ``coarse`` to ``fine`` vertices."""
    from scipy import sparse

    if fine.level < coarse.level:
        raise ValueError(f"fine level {fine.level} below coarse level {coarse.level}")
    P = sparse.identity(fine.n_vertices, format="csr")
    m = fine
    while m.level > coarse.level:
        if m.parent is None:
            raise ValueError("fine mesh is not a refinement of the coarse mesh")
        rows = np.repeat(np.arange(m.n_vertices), 2)
        step = sparse.csr_matrix(
            (np.full(rows.size, 0.5), (rows, m.parent_edges.ravel())),
            shape=(m.n_vertices, m.parent.n_vertices),
        )
        P = P @ step
        m = m.parent
    if m is not coarse and m.n_vertices != coarse.n_vertices:
        raise ValueError("fine mesh is not a refinement of the coarse mesh")
    return P.tocsr()


def prolongate(u, coarse: TetMesh, fine: TetMesh) -> np.ndarray:
    """Interpolate nodal values ``u`` (shape (n,) or (n, k)) onto ``fine``."""
    u = np.asarray(u, dtype=float)
    if u.shape[0] != coarse.n_vertices:
        raise ValueError(
            f"field has {u.shape[0]} values, coarse mesh has {coarse.n_vertices} vertices"
        )
    if fine.level < coarse.level:
        raise ValueError(f"fine level {fine.level} below coarse level {coarse.level}")
    m = fine
    chain = []
    while m.level > coarse.level:
        if m.parent is None:
            raise ValueError("fine mesh is not a refinement of the coarse mesh")
        chain.append(m)
        m = m.parent
    if m is not coarse and m.n_vertices != coarse.n_vertices:
        raise ValueError("fine mesh is not a refinement of the coarse mesh")
    if not chain:
        return u.copy()
    for m in reversed(chain):
        u = 0.5 * (u[m.parent_edges[:, 0]] + u[m.parent_edges[:, 1]])
    return u


def write_mesh(mesh: TetMesh, path) -> None:
    """Dump a mesh as plain text.

    Format::

        # anisouq mesh v1 level=<l>
        vertices <n>
        <x1> <x2> <x3> <boundary 0|1>      (n lines)
        tets <m>
        <i0> <i1> <i2> <i3>                (m lines)
    """
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"# anisouq mesh v1 level={mesh.level}\n")
        fh.write(f"vertices {mesh.n_vertices}\n")
        for x, b in zip(mesh.vertices, mesh.boundary):
            fh.write(f"{x[0]:.17g} {x[1]:.17g} {x[2]:.17g} {int(b)}\n")
        fh.write(f"tets {mesh.n_tets}\n")
        for t in mesh.tets:
            fh.write(f"{t[0]} {t[1]} {t[2]} {t[3]}\n")


def read_mesh(path) -> TetMesh:
    """Read a mesh written by :func:`write_mesh` (without parent links)."""
    lines = Path(path).read_text().splitlines()
    header = lines[0]
    if not header.startswith("# anisouq mesh v1"):
        raise ValueError(f"not an anisouq mesh file: {header!r}")
    level = int(header.split("level=")[1])
    nv = int(lines[1].split()[1])
    vdata = np.array([ln.split() for ln in lines[2 : 2 + nv]], dtype=float)
    nt = int(lines[2 + nv].split()[1])
    tets = np.array([ln.split() for ln in lines[3 + nv : 3 + nv + nt]], dtype=np.int64)
    return TetMesh(level, vdata[:, :3], tets, vdata[:, 3].astype(bool))
