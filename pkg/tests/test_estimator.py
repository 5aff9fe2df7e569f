import numpy as np
import pytest

from anisouq import fem
from anisouq.coefficient import CoefficientParams
from anisouq.covkl import KLExpansion, build_expansion, example_model
from anisouq.estimator import (
    CachedProblem,
    MomentEstimate,
    Problem,
    error_vs_reference,
    ml_estimate,
    ml_moments,
    ml_weights,
    qmc_estimate,
    qmc_moments,
    variance,
)
from anisouq.mesh import prolongation_matrix
from anisouq.quadrature import build_rule, sample_counts


@pytest.fixture(scope="module")
def problem(meshes):
    model = example_model(1)
    kls = [build_expansion(model, m) for m in meshes[:3]]
    return Problem(meshes[:3], kls)


class Aliased:
    """Every spatial level answered by the same level-``base`` solver."""

    def __init__(self, problem, base=0):
        self.inner = CachedProblem(problem)
        self.base = base

    def solve(self, level, y):
        return self.inner.solve(self.base, y)

    def prolongate(self, u, from_level, to_level):
        return u

    def dimension(self, levels=None):
        return self.inner.problem.dimension([self.base])


class Manufactured:
    """Closed-form 'solutions' g(level, y) on the real mesh hierarchy."""

    def __init__(self, meshes, coeffs):
        self.meshes = meshes
        self.coeffs = np.asarray(coeffs)

    def solve(self, level, y):
        X = self.meshes[level].vertices
        return np.sin(X @ self.coeffs[:3] + y[0]) * (1 + 0.5 * y[1] * X[:, 0]) + 0.1 * level * X[:, 2]

    def prolongate(self, u, a, b):
        return prolongation_matrix(self.meshes[a], self.meshes[b]) @ u

    def dimension(self, levels=None):
        return 4


class Sum:
    def __init__(self, p, q):
        self.p, self.q = p, q

    def solve(self, level, y):
        return self.p.solve(level, y) + self.q.solve(level, y)

    def prolongate(self, u, a, b):
        return self.p.prolongate(u, a, b)

    def dimension(self, levels=None):
        return 4


def test_ml_weights():
    counts = [10, 24, 57]
    np.testing.assert_allclose(ml_weights(counts, 0), np.full(10, 0.1))
    w = ml_weights(counts, 1)
    np.testing.assert_allclose(w[:10], 1 / 24 - 1 / 10)
    np.testing.assert_allclose(w[10:], 1 / 24)
    assert abs(ml_weights(counts, 2).sum()) < 1e-15


@pytest.mark.parametrize("l", range(4))
def test_telescoping_aliased(problem, l):
    counts = sample_counts(3)
    aliased = Aliased(problem)
    ml = ml_moments(l, counts, aliased)
    rule = build_rule(counts[l], aliased.dimension())
    qmc = qmc_moments(0, rule, aliased)
    for o in (1, 2):
        assert np.max(np.abs(ml[o].values - qmc[o].values)) <= 1e-12


def test_level_zero_is_single_level(problem):
    counts = [10]
    rule = build_rule(10, problem.dimension([0]))
    cached = CachedProblem(problem)
    ml = ml_estimate(0, counts, cached, 1)
    np.testing.assert_array_equal(ml.values, qmc_estimate(0, rule, cached, 1).values)


def test_two_level_oracle(problem):
    counts = [3, 7]
    cached = CachedProblem(problem)
    M = problem.dimension([0, 1])
    pts = build_rule(7, M).points
    u0 = [cached.solve(0, y) for y in pts]
    u1 = [cached.solve(1, y) for y in pts[:3]]
    P = prolongation_matrix(problem.meshes[0], problem.meshes[1])
    oracle = np.mean([P @ u for u in u0], axis=0) + np.mean([u1[i] - P @ u0[i] for i in range(3)], axis=0)
    ml = ml_estimate(1, counts, cached, 1)
    assert ml.level == 1
    np.testing.assert_allclose(ml.values, oracle, atol=1e-12)


def test_one_point_rule(problem):
    rule = build_rule(1, problem.dimension([0]))
    est = qmc_estimate(0, rule, problem, 1)
    np.testing.assert_array_equal(est.values, problem.solve(0, rule.points[0]))


def test_second_moment_two_points(problem):
    rule = build_rule(2, problem.dimension([0]))
    est = qmc_estimate(0, rule, problem, 2)
    a, b = (problem.solve(0, y) for y in rule.points)
    np.testing.assert_allclose(est.values, (a**2 + b**2) / 2, rtol=1e-15)


def test_zero_modes_give_deterministic_solution(meshes):
    mesh = meshes[0]
    kl = build_expansion(example_model(2), mesh)
    flat = KLExpansion(0, kl.mean_field, np.zeros_like(kl.modes), kl.trace_tol)
    prob = Problem([mesh], [flat])
    det = fem.solve(fem.assemble(mesh, kl.mean_field, CoefficientParams())).values
    for N in (1, 5, 12):
        est = qmc_estimate(0, build_rule(N, flat.rank), prob, 1)
        np.testing.assert_allclose(est.values, det, rtol=1e-12, atol=1e-15)


def test_linearity(meshes):
    g1 = Manufactured(meshes[:3], [1.0, 2.0, -0.5])
    g2 = Manufactured(meshes[:3], [-0.3, 0.7, 1.1])
    counts = [5, 9, 14]
    a = ml_estimate(2, counts, g1).values
    b = ml_estimate(2, counts, g2).values
    c = ml_estimate(2, counts, Sum(g1, g2)).values
    np.testing.assert_allclose(c, a + b, atol=1e-13)


def test_variance_nonnegative(problem):
    rule = build_rule(24, problem.dimension([1]))
    m = qmc_moments(1, rule, problem)
    assert np.all(m[2].values >= 0)
    assert np.all(variance(m[1], m[2]) >= -1e-12)
    with pytest.raises(ValueError):
        variance(m[1], MomentEstimate(2, 0, m[2].values))


def test_error_vs_reference(problem):
    mesh = problem.meshes[2]
    rng = np.random.default_rng(0)
    ref = MomentEstimate(1, 2, rng.random(mesh.n_vertices))
    assert error_vs_reference(ref, ref, "H1", problem) == 0.0
    bump = np.zeros(mesh.n_vertices)
    bump[mesh.interior] = 0.3
    est = MomentEstimate(1, 2, ref.values + bump)
    assert error_vs_reference(est, ref, "H1", problem) == pytest.approx(fem.h1_norm(mesh, bump), rel=1e-14)
    # coarse estimate: recompute through the prolongation matrix
    coarse = MomentEstimate(2, 1, rng.random(problem.meshes[1].n_vertices))
    diff = ref.values - prolongation_matrix(problem.meshes[1], mesh) @ coarse.values
    for norm, f in (("H1", fem.h1_norm), ("W11", fem.w11_norm), ("L2", fem.l2_norm)):
        assert error_vs_reference(coarse, ref, norm, problem) == pytest.approx(f(mesh, diff), rel=1e-12)
    with pytest.raises(ValueError):
        error_vs_reference(ref, coarse, "H1", problem)
    with pytest.raises(ValueError):
        error_vs_reference(coarse, ref, "H2", problem)


def test_input_validation(problem):
    with pytest.raises(ValueError):
        ml_moments(1, [10, 5], problem)
    with pytest.raises(ValueError):
        ml_moments(2, [10, 24], problem)
    with pytest.raises(ValueError):
        qmc_moments(0, build_rule(1, 20), problem, orders=(3,))
    with pytest.raises(ValueError):
        problem.solve(0, np.zeros(3))


def test_cache_reuses_solves(problem):
    cached = CachedProblem(problem, levels={0})
    before = len(problem.log)
    y = build_rule(2, problem.dimension()).points
    a = cached.solve(0, y[0])
    b = cached.solve(0, y[0])
    assert a is b and len(problem.log) == before + 1
    cached.solve(1, y[1])
    cached.solve(1, y[1])
    assert len(problem.log) == before + 3


def test_solve_log(problem):
    problem.solve(1, np.zeros(problem.dimension()))
    rec = problem.log[-1]
    assert rec.level == 1 and rec.iterations > 0 and rec.violations == 0
    assert 0 < rec.h1_seminorm <= 1 / (0.12 * np.sqrt(3) * np.pi) * 1.05
