"""Nested Halton quasi-Monte Carlo rules on ``[-1, 1]^M``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "primes",
    "radical_inverse",
    "halton_point",
    "halton_points",
    "QuadratureRule",
    "build_rule",
    "sample_count",
    "sample_counts",
]

MAX_DIM = 200


@lru_cache(maxsize=None)
def primes(count: int) -> tuple[int, ...]:
    """The first ``count`` primes."""
    if count <= 0:
        return ()
    limit = max(16, int(count * (math.log(count + 1) + math.log(math.log(count + 3))) + 10))
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(limit**0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    found = np.flatnonzero(sieve)
    if found.size < count:
        raise AssertionError("prime sieve bound too small")
    return tuple(int(p) for p in found[:count])


def radical_inverse(i: int, b: int) -> float:
    """Reverse the base-``b`` digits of ``i`` behind the radix point."""
    if i < 0 or b < 2:
        raise ValueError("need i >= 0 and b >= 2")
    f, x = 1.0 / b, 0.0
    while i > 0:
        i, digit = divmod(i, b)
        x += digit * f
        f /= b
    return x


def _radical_inverse_array(idx, b):
    idx = np.array(idx, dtype=np.int64)
    x = np.zeros(idx.shape)
    f = 1.0 / b
    while np.any(idx):
        idx, digit = np.divmod(idx, b)
        x += digit * f
        f /= b
    return x


def halton_point(i: int, M: int) -> np.ndarray:
    """The ``i``-th Halton point in ``(0, 1)^M``; coordinate ``j`` uses the ``j``-th prime."""
    if i < 1:
        raise ValueError("Halton indexing starts at 1")
    if M > MAX_DIM:
        raise ValueError(f"dimension {M} exceeds {MAX_DIM}")
    return np.array([radical_inverse(i, b) for b in primes(M)])


def halton_points(N: int, M: int, start: int = 1) -> np.ndarray:
    """Halton points ``start .. start+N-1`` as an ``(N, M)`` array in ``(0, 1)``."""
    if M > MAX_DIM:
        raise ValueError(f"dimension {M} exceeds {MAX_DIM}")
    idx = np.arange(start, start + N)
    if M == 0:
        return np.zeros((N, 0))
    return np.stack([_radical_inverse_array(idx, b) for b in primes(M)], axis=1)


@dataclass(frozen=True)
class QuadratureRule:
    """Equal-weight rule on the first ``N`` Halton points mapped to ``[-1, 1]^M``."""

    points: np.ndarray
    weights: np.ndarray

    @property
    def N(self) -> int:
        return self.points.shape[0]

    @property
    def M(self) -> int:
        return self.points.shape[1]

    def integrate(self, values) -> np.ndarray:
        """Weighted sum over the leading axis of ``values``."""
        return np.tensordot(self.weights, np.asarray(values, dtype=float), axes=1)


def build_rule(N: int, M: int) -> QuadratureRule:
    if N < 1:
        raise ValueError("need at least one point")
    points = 2.0 * halton_points(N, M) - 1.0
    return QuadratureRule(points, np.full(N, 1.0 / N))


def sample_count(l: int, delta: float = 0.2, base: int = 10, variant: str = "plain", eps: float = 0.1) -> int:
    """Sample count ``ceil(2**(l / (1 - delta)) * base)`` for level ``l``.

    ``variant="log-boosted"`` multiplies by ``max(l, 1)**((1 + eps) / (1 - delta))``,
    the slightly faster growth that removes the logarithmic factor of the
    multilevel error.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    r = 1.0 - delta
    n = 2.0 ** (l / r) * base
    if variant == "log-boosted":
        n *= max(l, 1) ** ((1.0 + eps) / r)
    elif variant != "plain":
        raise ValueError(f"unknown variant {variant!r}")
    # guard against 2**k * base landing a hair above an integer
    return int(math.ceil(n - 1e-9 * n))


def sample_counts(max_level: int, delta: float = 0.2, base: int = 10, variant: str = "plain") -> list[int]:
    return [sample_count(l, delta, base, variant) for l in range(max_level + 1)]
