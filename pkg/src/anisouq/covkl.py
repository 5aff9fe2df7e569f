"""Covariance models of the random vector field and their truncated KL expansion.

Both models have a diagonal matrix-valued covariance, so each component is
factored on its own by a greedy pivoted Cholesky decomposition with relative
trace-error control. The retained columns ``L_k`` satisfy ``sum L_k L_k^T ~ K``;
since the parameters ``y_k`` are uniform on ``[-1, 1]`` (variance 1/3), the
stored modes are ``sqrt(3) L_k`` so that the synthesised field reproduces the
covariance.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .mesh import TetMesh

__all__ = [
    "CovarianceModel",
    "example_model",
    "eval_kernel",
    "DenseEntries",
    "KernelEntries",
    "PivotedCholesky",
    "pivoted_cholesky",
    "KLExpansion",
    "build_expansion",
    "sample_field",
    "save_expansion",
    "load_expansion",
]

MODE_SCALE = np.sqrt(3.0)


def _bump(xj, xpj):
    return 16.0 * xj * (1.0 - xj) * xpj * (1.0 - xpj)


@dataclass(frozen=True)
class CovarianceModel:
    """Mean field and diagonal covariance kernel of the random vector field.

    ``kernel(j, X, Y)`` returns ``k_j(X[i], Y[i])`` row-wise (with broadcasting),
    ``j`` being 0-based.
    """

    example_id: int
    mean: Callable[[np.ndarray], np.ndarray]
    kernel: Callable[[int, np.ndarray, np.ndarray], np.ndarray]


def _gauss(X, Y):
    d = X - Y
    return np.exp(-np.einsum("...i,...i->...", d, d) / 50.0)


def _kernel_1(j, X, Y):
    base = _gauss(X, Y) / 100.0
    if j == 0:
        return base
    return 9.0 * base * _bump(X[..., j], Y[..., j])


def _kernel_2(j, X, Y):
    return 9.0 / 100.0 * _gauss(X, Y) * _bump(X[..., j], Y[..., j])


def _mean_1(X):
    X = np.atleast_2d(X)
    out = np.zeros((X.shape[0], 3))
    out[:, 0] = 1.0
    return out


def _mean_2(X):
    X = np.atleast_2d(X)
    phase = (X[:, 2] - 0.5) * np.pi / 3.0
    return np.stack([np.cos(phase), np.sin(phase), np.zeros_like(phase)], axis=1)


def example_model(example_id: int) -> CovarianceModel:
    """The two test configurations: straight fibres (1) and twisted fibres (2)."""
    if example_id == 1:
        return CovarianceModel(1, _mean_1, _kernel_1)
    if example_id == 2:
        return CovarianceModel(2, _mean_2, _kernel_2)
    raise ValueError(f"unknown example_id {example_id!r}")


def eval_kernel(model: CovarianceModel, j: int, x, xp) -> float:
    """Entry ``(j, j)`` of the covariance at ``(x, x')``; ``j`` is 1-based."""
    if model.example_id not in (1, 2):
        raise ValueError(f"unknown example_id {model.example_id!r}")
    if j not in (1, 2, 3):
        raise ValueError(f"component must be 1, 2 or 3, got {j}")
    return float(model.kernel(j - 1, np.asarray(x, float), np.asarray(xp, float)))


class DenseEntries:
    """Entry accessor over an explicit symmetric matrix."""

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix, dtype=float)
        self.n = self.matrix.shape[0]

    def diagonal(self):
        return self.matrix.diagonal().copy()

    def row(self, i):
        return self.matrix[i]


class KernelEntries:
    """Lazy entries ``k_j(x_p, x_q)`` over a point set; rows computed on demand."""

    def __init__(self, model: CovarianceModel, j: int, points):
        self.model = model
        self.j = j
        self.points = np.asarray(points, dtype=float)
        self.n = self.points.shape[0]

    def diagonal(self):
        return self.model.kernel(self.j, self.points, self.points)

    def row(self, i):
        return self.model.kernel(self.j, self.points[i][None, :], self.points)


@dataclass
class PivotedCholesky:
    columns: np.ndarray       # (n, rank)
    pivots: np.ndarray        # (rank,)
    trace_error_history: np.ndarray  # relative trace error after each step
    removed_trace: np.ndarray  # trace removed by each column
    converged: bool

    @property
    def rank(self) -> int:
        return self.columns.shape[1]


def pivoted_cholesky(entries, tol: float) -> PivotedCholesky:
    """Greedy pivoted Cholesky with relative trace-error stopping.

    Stops at the first rank with ``remaining trace / initial trace < tol``.
    Ties between pivots go to the lowest index. If the tolerance is not met at
    full rank, the full factor is returned with ``converged=False`` and a
    warning.
    """
    if not hasattr(entries, "row"):
        entries = DenseEntries(entries)
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = np.array(entries.diagonal(), dtype=float)
    n = d.size
    trace0 = d.sum()
    if not trace0 > 0:
        raise ValueError("initial trace must be positive")
    floor = -1e-12 * trace0
    if d.min() < floor:
        raise ValueError(f"negative diagonal entry {d.min():.3e}: matrix is not PSD")

    cap = min(n, 64)
    L = np.zeros((n, cap))
    pivots, history, removed = [], [], []
    converged = False
    for m in range(n):
        i = int(np.argmax(d))
        piv = d[i]
        if piv <= 0.0:
            break
        if m == cap:
            cap = min(n, 2 * cap)
            L = np.concatenate([L, np.zeros((n, cap - L.shape[1]))], axis=1)
        col = np.array(entries.row(i), dtype=float)
        col -= L[:, :m] @ L[i, :m]
        col /= np.sqrt(piv)
        col[pivots] = 0.0
        col[i] = np.sqrt(piv)
        L[:, m] = col
        pivots.append(i)
        d -= col * col
        d[pivots] = 0.0
        if d.min() < floor:
            raise ValueError(f"negative pivot {d.min():.3e}: matrix is not PSD")
        removed.append(float(col @ col))
        history.append(float(d.sum() / trace0))
        if history[-1] < tol:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"trace tolerance {tol:g} not reached at full rank {len(pivots)}",
            RuntimeWarning,
            stacklevel=2,
        )
    k = len(pivots)
    return PivotedCholesky(
        L[:, :k].copy(), np.array(pivots, dtype=np.int64), np.array(history), np.array(removed), converged
    )


@dataclass
class KLExpansion:
    """Truncated KL expansion of the vector field on the vertices of one mesh.

    ``modes[k]`` holds ``sigma_k psi_k`` as an ``(n, 3)`` nodal field.
    """

    mesh_level: int
    mean_field: np.ndarray    # (n, 3)
    modes: np.ndarray         # (M, n, 3)
    trace_tol: float
    component: np.ndarray = field(default=None)  # (M,) vector component carried by each mode
    factors: list = field(default_factory=list, repr=False)

    @property
    def rank(self) -> int:
        return self.modes.shape[0]

    M = rank


def build_expansion(model: CovarianceModel, mesh: TetMesh, tol_base: float = 1e-4) -> KLExpansion:
    """Factor each covariance component on the mesh vertices.

    The trace tolerance is ``tol_base * 4**(-level)``. Modes from the three
    components are merged in order of decreasing removed trace.
    """
    tol = tol_base * 4.0 ** (-mesh.level)
    X = mesh.vertices
    factors = [pivoted_cholesky(KernelEntries(model, j, X), tol) for j in range(3)]
    keys = []
    for j, fac in enumerate(factors):
        keys.extend((-r, j, k) for k, r in enumerate(fac.removed_trace))
    keys.sort()
    n = mesh.n_vertices
    modes = np.zeros((len(keys), n, 3))
    comp = np.empty(len(keys), dtype=np.int64)
    for m, (_, j, k) in enumerate(keys):
        modes[m, :, j] = MODE_SCALE * factors[j].columns[:, k]
        comp[m] = j
    return KLExpansion(mesh.level, model.mean(X), modes, tol, comp, factors)


def sample_field(kl: KLExpansion, y) -> np.ndarray:
    """Nodal values of ``E[V] + sum_k y_k sigma_k psi_k``, shape (n, 3).

    ``y`` may be longer than the rank; only its leading entries are used.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size < kl.rank:
        raise ValueError(f"need at least {kl.rank} parameters, got shape {y.shape}")
    return kl.mean_field + np.tensordot(y[: kl.rank], kl.modes, axes=1)


_KL_MAGIC = "# anisouq kl v1"


def save_expansion(kl: KLExpansion, path) -> None:
    """Text table, one row per vertex: mean (3 values) then mode 1..M (3 each).

    The header line is ``# anisouq kl v1 level=<l> M=<M> tol=<tol>``.
    """
    n = kl.mean_field.shape[0]
    table = np.concatenate([kl.mean_field[:, None, :], kl.modes.transpose(1, 0, 2)], axis=1)
    header = f"{_KL_MAGIC[2:]} level={kl.mesh_level} M={kl.rank} tol={kl.trace_tol:.17g}"
    np.savetxt(Path(path), table.reshape(n, -1), fmt="%.17g", header=header)


def load_expansion(path) -> KLExpansion:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip()
    if not header.startswith(_KL_MAGIC):
        raise ValueError(f"not an anisouq KL file: {header!r}")
    meta = dict(item.split("=") for item in header.split()[4:])
    M = int(meta["M"])
    table = np.loadtxt(path, ndmin=2).reshape(-1, M + 1, 3)
    modes = table[:, 1:, :].transpose(1, 0, 2).copy()
    comp = np.argmax(np.abs(modes).sum(axis=1), axis=1) if M else np.zeros(0, dtype=np.int64)
    return KLExpansion(int(meta["level"]), table[:, 0, :].copy(), modes, float(meta["tol"]), comp)
