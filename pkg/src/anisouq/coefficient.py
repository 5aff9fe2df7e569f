"""The anisotropic diffusion tensor ``A = a I + (|v| - a) v v^T / (v^T v)``.

``A`` has eigenvalue ``|v|`` along ``v`` and ``a`` on the orthogonal plane.
The helper terms B, C, D, E, F, G are the pieces used to bound the parametric
derivatives of ``A``; :func:`eval_terms` exposes them for a single vector.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "CoefficientParams",
    "EllipticityWarning",
    "Terms",
    "eval_terms",
    "eval_A",
    "anisotropic_tensor",
    "ellipticity_violations",
]


class EllipticityWarning(UserWarning):
    """A vector field value left the admissible band ``[a_lower, a_upper]``."""


@dataclass(frozen=True)
class CoefficientParams:
    """Perpendicular strength ``a`` and the ellipticity band.

    The band follows the usual normalisation ``a_lower <= 1 <= a_upper``.
    """

    a: float = 0.12
    a_lower: float = 0.12
    a_upper: float = 2.0

    def __post_init__(self):
        if not 0 < self.a_lower <= self.a <= self.a_upper:
            raise ValueError(
                f"need 0 < a_lower <= a <= a_upper, got {self.a_lower}, {self.a}, {self.a_upper}"
            )
        if not self.a_lower <= 1.0 <= self.a_upper:
            raise ValueError("need a_lower <= 1 <= a_upper")


class Terms(NamedTuple):
    B: np.ndarray
    C: float
    D: float
    E: float
    F: np.ndarray
    G: np.ndarray


def _as_vector(v):
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    if not np.any(v):
        raise ValueError("zero vector has no direction")
    return v


def eval_terms(v) -> Terms:
    """B = v v^T, C = v^T v, D = 1/C, E = sqrt(C), F = D B, G = E F."""
    v = _as_vector(v)
    B = np.outer(v, v)
    C = float(v @ v)
    D = 1.0 / C
    E = np.sqrt(C)
    F = D * B
    G = E * F
    return Terms(B, C, D, E, F, G)


def anisotropic_tensor(V, a: float) -> np.ndarray:
    """Vectorised ``A`` for an array of vectors ``V`` of shape (..., 3)."""
    V = np.asarray(V, dtype=float)
    C = np.einsum("...i,...i->...", V, V)
    norm = np.sqrt(C)
    scale = (norm - a) / C
    A = (V[..., :, None] * V[..., None, :]) * scale[..., None, None]
    A[..., [0, 1, 2], [0, 1, 2]] += a
    return A


def ellipticity_violations(V, p: CoefficientParams) -> int:
    """Number of vectors in ``V`` whose length is outside ``[a_lower, a_upper]``."""
    norm = np.linalg.norm(np.asarray(V, dtype=float), axis=-1)
    # relative slack so vectors exactly on the band edge are not flagged by rounding
    lo, hi = p.a_lower * (1 - 1e-12), p.a_upper * (1 + 1e-12)
    return int(np.count_nonzero((norm < lo) | (norm > hi)))


def eval_A(v, p: CoefficientParams) -> np.ndarray:
    """Diffusion tensor for a single vector; warns if ``|v|`` is outside the band."""
    v = _as_vector(v)
    if ellipticity_violations(v, p):
        warnings.warn(
            f"|v| = {np.linalg.norm(v):.6g} outside [{p.a_lower}, {p.a_upper}]",
            EllipticityWarning,
            stacklevel=2,
        )
    return anisotropic_tensor(v, p.a)
