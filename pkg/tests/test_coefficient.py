import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.spatial.transform import Rotation

from anisouq.coefficient import (
    CoefficientParams,
    EllipticityWarning,
    anisotropic_tensor,
    ellipticity_violations,
    eval_A,
    eval_terms,
)

P = CoefficientParams(a=0.12, a_lower=0.12, a_upper=2.0)


def admissible(rng, n, p=P):
    d = rng.standard_normal((n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d * rng.uniform(p.a_lower, p.a_upper, (n, 1))


vectors = arrays(np.float64, 3, elements=st.floats(-3, 3)).filter(lambda v: 0.1 < np.linalg.norm(v) < 5)


def test_params_validation():
    with pytest.raises(ValueError):
        CoefficientParams(a=0.1, a_lower=0.12)
    with pytest.raises(ValueError):
        CoefficientParams(a=0.5, a_lower=0.2, a_upper=0.9)


def test_terms_unit_vector():
    t = eval_terms([1.0, 0, 0])
    e = np.diag([1.0, 0, 0])
    np.testing.assert_array_equal(t.B, e)
    assert (t.C, t.D, t.E) == (1.0, 1.0, 1.0)
    np.testing.assert_array_equal(t.F, e)
    np.testing.assert_array_equal(t.G, e)


def test_terms_planar():
    t = eval_terms([0.6, 0.8, 0])
    assert t.C == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(t.F, [[0.36, 0.48, 0], [0.48, 0.64, 0], [0, 0, 0]], atol=1e-15)


def test_zero_vector():
    with pytest.raises(ValueError):
        eval_terms(np.zeros(3))
    with pytest.raises(ValueError):
        eval_A(np.zeros(3), P)


@given(vectors)
def test_projector_identities(v):
    t = eval_terms(v)
    np.testing.assert_allclose(t.F @ t.F, t.F, atol=1e-13)
    np.testing.assert_allclose(t.D * t.C, 1.0, rtol=1e-15)
    np.testing.assert_allclose(t.G, t.E * t.F, rtol=1e-14, atol=1e-15)


def test_eval_A_examples():
    np.testing.assert_allclose(eval_A([1.0, 0, 0], P), np.diag([1, 0.12, 0.12]), atol=1e-15)
    d = np.array([1.0, 2.0, -2.0]) / 3
    np.testing.assert_allclose(eval_A(0.12 * d, P), 0.12 * np.eye(3), atol=1e-15)
    A = eval_A([0.6, 0.8, 0], P)
    np.testing.assert_allclose(A, [[0.4368, 0.4224, 0], [0.4224, 0.6832, 0], [0, 0, 0.12]], atol=1e-14)
    np.testing.assert_allclose(np.linalg.eigvalsh(A), [0.12, 0.12, 1.0], atol=1e-14)


def test_spectrum_random():
    rng = np.random.default_rng(0)
    V = admissible(rng, 1000)
    A = anisotropic_tensor(V, P.a)
    ev = np.linalg.eigvalsh(A)
    norms = np.linalg.norm(V, axis=1)
    np.testing.assert_allclose(np.sort(np.c_[norms, [P.a] * 1000, [P.a] * 1000], axis=1), ev, atol=1e-10)
    assert ev.min() >= min(P.a, P.a_lower) - 1e-12 and ev.max() <= max(P.a, P.a_upper) + 1e-12
    np.testing.assert_allclose(np.einsum("nij,nj->ni", A, V), norms[:, None] * V, atol=1e-12)
    w = np.cross(V, rng.standard_normal((1000, 3)))
    np.testing.assert_allclose(np.einsum("nij,nj->ni", A, w), P.a * w, atol=1e-12)


def test_rotation_equivariance():
    rng = np.random.default_rng(1)
    V = admissible(rng, 200)
    R = Rotation.random(200, random_state=2).as_matrix()
    lhs = anisotropic_tensor(np.einsum("nij,nj->ni", R, V), P.a)
    rhs = R @ anisotropic_tensor(V, P.a) @ R.transpose(0, 2, 1)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@settings(max_examples=200)
@given(vectors, st.floats(0.01, 1.0))
def test_decomposition(v, a):
    t = eval_terms(v)
    np.testing.assert_allclose(anisotropic_tensor(v, a), a * np.eye(3) + t.G - a * t.F, atol=1e-13)


@given(vectors)
def test_symmetric(v):
    A = anisotropic_tensor(v, 0.12)
    np.testing.assert_array_equal(A, A.T)


def test_violation_warns_but_evaluates():
    with pytest.warns(EllipticityWarning):
        A = eval_A([3.0, 0, 0], P)
    np.testing.assert_allclose(A, np.diag([3.0, 0.12, 0.12]), atol=1e-15)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        eval_A([1.0, 0, 0], P)
    V = np.array([[1.0, 0, 0], [0.05, 0, 0], [0, 2.5, 0]])
    assert ellipticity_violations(V, P) == 2
