"""Single-level and multilevel QMC estimates of the solution moments.

The multilevel estimate pairs the level-``k`` rule difference with solutions
on spatial level ``l - k``::

    Q^ML_l = sum_k (Q_{N_k} - Q_{N_{k-1}}) [u_{l-k}],   Q_{N_{-1}} := 0

and is evaluated in its explicit nested form: on level ``l - k`` the first
``N_{k-1}`` points get weight ``1/N_k - 1/N_{k-1}`` and points
``N_{k-1}+1 .. N_k`` get ``1/N_k``. Partial sums are prolongated to level
``l`` and added with ``k`` ascending, so results are bit-reproducible.

The second moment uses the nodal square of each sample (the P1 interpolant
of ``u**2``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fem
from .coefficient import CoefficientParams
from .covkl import KLExpansion, build_expansion, example_model, sample_field
from .mesh import TetMesh, build_hierarchy, prolongate
from .quadrature import QuadratureRule, build_rule

__all__ = [
    "MomentEstimate",
    "SolveRecord",
    "Problem",
    "CachedProblem",
    "qmc_estimate",
    "qmc_moments",
    "ml_estimate",
    "ml_moments",
    "ml_weights",
    "variance",
    "error_vs_reference",
]


@dataclass
class MomentEstimate:
    order: int
    level: int
    values: np.ndarray


@dataclass
class SolveRecord:
    level: int
    h1_seminorm: float
    iterations: int
    violations: int


@dataclass
class Problem:
    """Sample solver over a mesh hierarchy with one KL expansion per level."""

    meshes: list[TetMesh]
    expansions: list[KLExpansion]
    params: CoefficientParams = field(default_factory=CoefficientParams)
    cg_tol: float = 1e-10
    source: float = 1.0
    log: list[SolveRecord] = field(default_factory=list, repr=False)

    @classmethod
    def from_example(
        cls,
        example_id: int,
        max_level: int,
        params: CoefficientParams | None = None,
        kl_tol_base: float = 1e-4,
        cg_tol: float = 1e-10,
    ) -> Problem:
        meshes = build_hierarchy(max_level)
        model = example_model(example_id)
        kls = [build_expansion(model, m, kl_tol_base) for m in meshes]
        return cls(meshes, kls, params or CoefficientParams(), cg_tol)

    @property
    def max_level(self) -> int:
        return len(self.meshes) - 1

    def dimension(self, levels=None) -> int:
        """Parameter dimension covering the given levels (default: all)."""
        levels = range(len(self.expansions)) if levels is None else levels
        return max(self.expansions[l].rank for l in levels)

    def mesh(self, level: int) -> TetMesh:
        return self.meshes[level]

    def solve(self, level: int, y) -> np.ndarray:
        mesh = self.meshes[level]
        V = sample_field(self.expansions[level], y)
        sys = fem.assemble(mesh, V, self.params, self.source)
        u, info = fem.solve(sys, self.cg_tol, return_info=True)
        self.log.append(SolveRecord(level, fem.h1_seminorm(mesh, u), info.iterations, sys.violations))
        return u.values

    def prolongate(self, u, from_level: int, to_level: int) -> np.ndarray:
        return prolongate(u, self.meshes[from_level], self.meshes[to_level])


class CachedProblem:
    """Wraps a problem and memoises ``solve`` per (level, parameter point)."""

    def __init__(self, problem, levels=None):
        self.problem = problem
        self.levels = levels
        self._cache = {}

    def __getattr__(self, name):
        return getattr(self.problem, name)

    def solve(self, level, y):
        if self.levels is not None and level not in self.levels:
            return self.problem.solve(level, y)
        key = (level, np.asarray(y, dtype=float).tobytes())
        if key not in self._cache:
            self._cache[key] = self.problem.solve(level, y)
        return self._cache[key]


def _check_orders(orders):
    for o in orders:
        if o not in (1, 2):
            raise ValueError(f"moment order must be 1 or 2, got {o}")


def _weighted_sums(problem, level, points, weights, orders):
    acc = {o: None for o in orders}
    for y, w in zip(points, weights):
        u = problem.solve(level, y)
        for o in orders:
            term = w * (u if o == 1 else u * u)
            acc[o] = term if acc[o] is None else acc[o] + term
    return acc


def qmc_moments(level: int, rule: QuadratureRule, problem, orders=(1, 2)) -> dict[int, MomentEstimate]:
    """``Q_N[g(u_level)]`` for each requested order, sharing the solves."""
    _check_orders(orders)
    sums = _weighted_sums(problem, level, rule.points, rule.weights, orders)
    return {o: MomentEstimate(o, level, sums[o]) for o in orders}


def qmc_estimate(level: int, rule: QuadratureRule, problem, order: int = 1) -> MomentEstimate:
    return qmc_moments(level, rule, problem, (order,))[order]


def ml_weights(counts, k: int) -> np.ndarray:
    """Weights of ``Q_{N_k} - Q_{N_{k-1}}`` on points ``1..N_k``."""
    n_k = counts[k]
    w = np.full(n_k, 1.0 / n_k)
    if k > 0:
        n_prev = counts[k - 1]
        w[:n_prev] -= 1.0 / n_prev
    return w


def ml_moments(max_level: int, counts, problem, orders=(1, 2), points=None) -> dict[int, MomentEstimate]:
    """Multilevel QMC estimate on spatial level ``max_level``.

    ``counts`` gives ``N_0..N_l`` (nondecreasing); ``points`` defaults to the
    first ``N_l`` Halton points in the problem's full parameter dimension.
    """
    _check_orders(orders)
    l = max_level
    counts = list(counts)[: l + 1]
    if len(counts) != l + 1:
        raise ValueError(f"need {l + 1} sample counts, got {len(counts)}")
    if any(b < a for a, b in zip(counts, counts[1:])):
        raise ValueError("sample counts must be nondecreasing")
    if points is None:
        points = build_rule(counts[-1], problem.dimension(range(l + 1))).points
    total = {o: None for o in orders}
    for k in range(l + 1):
        level = l - k
        sums = _weighted_sums(problem, level, points[: counts[k]], ml_weights(counts, k), orders)
        for o in orders:
            part = problem.prolongate(sums[o], level, l)
            total[o] = part if total[o] is None else total[o] + part
    return {o: MomentEstimate(o, l, total[o]) for o in orders}


def ml_estimate(max_level: int, counts, problem, order: int = 1, points=None) -> MomentEstimate:
    return ml_moments(max_level, counts, problem, (order,), points)[order]


def variance(first: MomentEstimate, second: MomentEstimate) -> np.ndarray:
    if first.level != second.level:
        raise ValueError("moments live on different levels")
    return second.values - first.values**2


_NORMS = {"H1": fem.h1_norm, "W11": fem.w11_norm, "L2": fem.l2_norm}


def error_vs_reference(est: MomentEstimate, ref: MomentEstimate, norm: str, problem) -> float:
    """Norm of ``ref - est`` on the reference level (``est`` prolongated)."""
    if ref.level < est.level:
        raise ValueError(f"reference level {ref.level} below estimate level {est.level}")
    try:
        normf = _NORMS[norm]
    except KeyError:
        raise ValueError(f"unknown norm {norm!r}") from None
    diff = ref.values - problem.prolongate(est.values, est.level, ref.level)
    return normf(problem.mesh(ref.level), diff)
