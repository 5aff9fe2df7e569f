"""P1 finite elements on :class:`~anisouq.mesh.TetMesh`.

The diffusion tensor is evaluated once per tetrahedron from the vector field
at the barycentre, which matches the element-constant P1 gradients. The load
is ``f = 1``, integrated exactly (``vol / 4`` per vertex). Dirichlet vertices
are eliminated; solutions are returned on all vertices with zeros on the
boundary.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .coefficient import CoefficientParams, anisotropic_tensor, ellipticity_violations
from .mesh import TetMesh

__all__ = [
    "NodalField",
    "SparseSystem",
    "SolverError",
    "SolveInfo",
    "element_gradients",
    "assemble",
    "assemble_full",
    "load_vector",
    "solve",
    "pcg",
    "l2_norm",
    "h1_seminorm",
    "h1_norm",
    "w11_norm",
]


class SolverError(RuntimeError):
    """Conjugate gradients did not converge or met non-positive curvature."""


@dataclass
class NodalField:
    """Vertex values of a P1 function; ``values`` has shape (n,) or (n, 3)."""

    level: int
    values: np.ndarray

    @property
    def components(self) -> int:
        return 1 if self.values.ndim == 1 else self.values.shape[1]


@dataclass
class SparseSystem:
    """Stiffness matrix and load restricted to the interior vertices."""

    mesh: TetMesh
    matrix: sparse.csr_matrix
    rhs: np.ndarray
    violations: int = 0


@dataclass
class SolveInfo:
    iterations: int = 0
    residual: float = 0.0
    min_curvature: float = np.inf


def element_gradients(mesh: TetMesh) -> np.ndarray:
    """Gradients of the four barycentric functions per tet, shape (m, 4, 3)."""
    return _geometry(mesh).grads


class _Geometry:
    def __init__(self, mesh: TetMesh):
        p = mesh.vertices[mesh.tets]
        J = (p[:, 1:, :] - p[:, :1, :]).transpose(0, 2, 1)  # columns are edge vectors
        Jinv = np.linalg.inv(J)  # rows: gradients of lambda_1..3
        grads = np.empty((mesh.n_tets, 4, 3))
        grads[:, 1:, :] = Jinv
        grads[:, 0, :] = -Jinv.sum(axis=1)
        self.grads = grads
        self.vol = mesh.volumes

        n = mesh.n_vertices
        rows = np.repeat(mesh.tets, 4, axis=1).ravel()
        cols = np.tile(mesh.tets, (1, 4)).ravel()
        self.full_rows, self.full_cols = rows, cols

        free = np.full(n, -1, dtype=np.int64)
        free[mesh.interior] = np.arange(mesh.interior.size)
        fr, fc = free[rows], free[cols]
        keep = (fr >= 0) & (fc >= 0)
        nf = mesh.interior.size
        keys = fr[keep] * nf + fc[keep]
        uniq, inverse = np.unique(keys, return_inverse=True)
        self.keep = keep
        self.inverse = inverse
        self.n_free = nf
        self.indices = (uniq % nf).astype(np.int32)
        counts = np.bincount(uniq // nf, minlength=nf)
        self.indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int32)
        self.nnz = uniq.size


@functools.lru_cache(maxsize=16)
def _geometry(mesh: TetMesh) -> _Geometry:
    return _Geometry(mesh)


def _element_tensors(mesh, vfield, p):
    V = vfield.values if isinstance(vfield, NodalField) else np.asarray(vfield, dtype=float)
    if V.shape != (mesh.n_vertices, 3):
        raise ValueError(
            f"vector field of shape {V.shape} does not live on level {mesh.level} "
            f"({mesh.n_vertices} vertices)"
        )
    if isinstance(vfield, NodalField) and vfield.level != mesh.level:
        raise ValueError(f"field level {vfield.level} != mesh level {mesh.level}")
    Vb = V[mesh.tets].mean(axis=1)
    return anisotropic_tensor(Vb, p.a), ellipticity_violations(Vb, p)


def _element_stiffness(geo, A):
    K = np.matmul(np.matmul(geo.grads, A), geo.grads.transpose(0, 2, 1))
    K *= geo.vol[:, None, None]
    return K


def load_vector(mesh: TetMesh, f: float = 1.0) -> np.ndarray:
    """Exact load for a constant source ``f`` on all vertices."""
    w = np.repeat(f * mesh.volumes / 4.0, 4)
    return np.bincount(mesh.tets.ravel(), weights=w, minlength=mesh.n_vertices)


def assemble_full(mesh: TetMesh, vfield, p: CoefficientParams, f: float = 1.0):
    """Stiffness matrix and load over all vertices, before Dirichlet elimination."""
    geo = _geometry(mesh)
    A, _ = _element_tensors(mesh, vfield, p)
    K = _element_stiffness(geo, A)
    n = mesh.n_vertices
    mat = sparse.coo_matrix((K.ravel(), (geo.full_rows, geo.full_cols)), shape=(n, n)).tocsr()
    return mat, load_vector(mesh, f)


def assemble(mesh: TetMesh, vfield, p: CoefficientParams, f: float = 1.0) -> SparseSystem:
    """Galerkin system on the interior vertices for the field ``vfield``.

    ``vfield`` is a 3-component :class:`NodalField` (or array) on ``mesh``.
    """
    geo = _geometry(mesh)
    A, violations = _element_tensors(mesh, vfield, p)
    K = _element_stiffness(geo, A).ravel()
    data = np.bincount(geo.inverse, weights=K[geo.keep], minlength=geo.nnz)
    mat = sparse.csr_matrix((data, geo.indices, geo.indptr), shape=(geo.n_free, geo.n_free))
    rhs = load_vector(mesh, f)[mesh.interior]
    return SparseSystem(mesh, mat, rhs, violations)


def pcg(A, b, rel_tol=1e-10, maxiter=None, x0=None):
    """Jacobi-preconditioned conjugate gradients.

    Stops when ``|r| <= rel_tol * |b|``. Raises :class:`SolverError` on
    non-positive curvature or when ``maxiter`` (default ``10 n``) is exceeded.
    """
    n = b.shape[0]
    info = SolveInfo()
    if maxiter is None:
        maxiter = 10 * n
    bnorm = np.linalg.norm(b)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0:
        return np.zeros(n), info
    r = b - A @ x if x0 is not None else b.copy()
    inv_diag = 1.0 / A.diagonal()
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    tol = rel_tol * bnorm
    rnorm = np.linalg.norm(r)
    it = 0
    while rnorm > tol:
        if it >= maxiter:
            raise SolverError(f"CG did not reach {rel_tol:g} in {maxiter} iterations (residual {rnorm / bnorm:.3e})")
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0.0:
            raise SolverError(f"non-positive curvature {pAp:.3e} at iteration {it}")
        info.min_curvature = min(info.min_curvature, pAp / (p @ p))
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = inv_diag * r
        rz_new = r @ z
        p *= rz_new / rz
        p += z
        rz = rz_new
        rnorm = np.linalg.norm(r)
        it += 1
    info.iterations = it
    info.residual = rnorm / bnorm
    return x, info


def solve(sys: SparseSystem, rel_tol: float = 1e-10, return_info: bool = False):
    """Solve the system with Jacobi PCG; zeros are reinstated on the boundary."""
    x, info = pcg(sys.matrix, sys.rhs, rel_tol=rel_tol)
    u = np.zeros(sys.mesh.n_vertices)
    u[sys.mesh.interior] = x
    out = NodalField(sys.mesh.level, u)
    return (out, info) if return_info else out


def _values(u):
    return u.values if isinstance(u, NodalField) else np.asarray(u, dtype=float)


def _tet_gradients(mesh, u):
    return np.einsum("ti,tia->ta", u[mesh.tets], _geometry(mesh).grads)


def l2_norm(mesh: TetMesh, u) -> float:
    """Exact L2 norm of a P1 function (via the element mass matrix)."""
    ut = _values(u)[mesh.tets]
    local = (np.einsum("ti,ti->t", ut, ut) + ut.sum(axis=1) ** 2) / 20.0
    return float(np.sqrt(np.dot(mesh.volumes, local)))


def h1_seminorm(mesh: TetMesh, u) -> float:
    g = _tet_gradients(mesh, _values(u))
    return float(np.sqrt(np.dot(mesh.volumes, np.einsum("ta,ta->t", g, g))))


def h1_norm(mesh: TetMesh, u) -> float:
    return float(np.hypot(l2_norm(mesh, u), h1_seminorm(mesh, u)))


def w11_norm(mesh: TetMesh, u) -> float:
    """``int |u| + int |grad u|_2``, with vertex quadrature for the first term."""
    u = _values(u)
    mass = np.dot(mesh.volumes, np.abs(u[mesh.tets]).mean(axis=1))
    grad = np.dot(mesh.volumes, np.linalg.norm(_tet_gradients(mesh, u), axis=1))
    return float(mass + grad)
