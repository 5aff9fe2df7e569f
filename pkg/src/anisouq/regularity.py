"""Bound constants for the parametric derivatives of the diffusion tensor.

For the KL-parametrised field ``V[y] = psi_0 + sum_k y_k sigma_k psi_k`` with
decay weights ``gamma_k``, the tensor satisfies

    |d^alpha_y A| <= |alpha|! k_A c_A^|alpha| gamma^alpha,

built up from bounds on B = V V^T, C = V^T V, D = 1/C, E = sqrt(C),
F = D B and G = E F. This module computes those constants, checks the bounds
against finite differences of the actual tensor, and verifies the
combinatorial identities the derivation relies on by enumeration.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .coefficient import CoefficientParams, anisotropic_tensor
from .covkl import KLExpansion
from .fem import element_gradients
from .mesh import TetMesh

__all__ = [
    "DecaySequence",
    "BoundConstants",
    "gamma_sequence",
    "bound_constants",
    "FDCheck",
    "fd_derivative",
    "fd_derivative_check",
    "format_fd_report",
    "stirling2",
    "ordered_bell_bruteforce",
    "set_partitions",
    "multi_index_partitions",
    "CombinatorialReport",
    "combinatorial_checks",
]


@dataclass(frozen=True)
class DecaySequence:
    """``gamma[0]`` belongs to the mean field, ``gamma[k]`` to mode ``k``."""

    kappa: int
    gamma: np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.gamma) < 0):
            raise ValueError("decay weights must be nonnegative")

    @property
    def c_gamma(self) -> float:
        return max(float(np.sum(self.gamma)), 2.0)


def gamma_sequence(kl: KLExpansion, kappa: int, mesh: TetMesh | None = None) -> DecaySequence:
    """Discrete ``W^{kappa,inf}`` norms of the mean and of each mode.

    The sup part is the largest nodal Euclidean norm. For ``kappa == 1`` each
    first partial derivative contributes the largest element-wise Euclidean
    norm of the (element-constant) derivative; ``mesh`` is then required.
    """
    if kappa not in (0, 1):
        raise ValueError("P1 fields support kappa in {0, 1} only")
    fields = np.concatenate([kl.mean_field[None], kl.modes], axis=0)  # (M+1, n, 3)
    gamma = np.linalg.norm(fields, axis=2).max(axis=1)
    if kappa == 1:
        if mesh is None:
            raise ValueError("kappa = 1 needs the mesh")
        grads = element_gradients(mesh)  # (t, 4, 3)
        # d_i field per tet: (M+1, t, i, component)
        deriv = np.einsum("mtvc,tvi->mtic", fields[:, mesh.tets, :], grads)
        gamma = gamma + np.linalg.norm(deriv, axis=3).max(axis=1).sum(axis=1)
    return DecaySequence(kappa, gamma)


@dataclass(frozen=True)
class BoundConstants:
    kappa: int
    a_lower: float
    a_upper: float
    c_gamma: float
    k_B: float
    k_C: float
    k_D: float
    k_E: float
    k_F: float
    k_G: float
    k_A: float
    c_D: float
    c_E: float
    c_F: float
    c_G: float
    c_A: float
    gamma: np.ndarray | None = None

    @property
    def mu(self) -> np.ndarray | None:
        """``c_A * gamma``, the weights of the tensor's derivative bound."""
        return None if self.gamma is None else self.c_A * self.gamma

    def bound(self, alpha, term: str = "A") -> float:
        """Bound on ``|d^alpha term|`` for a multi-index over modes ``1..M``."""
        alpha = np.asarray(alpha, dtype=int)
        if self.gamma is None:
            raise ValueError("no decay sequence attached")
        g = np.asarray(self.gamma[1 : 1 + alpha.size], dtype=float)
        n = int(alpha.sum())
        gpow = float(np.prod(g**alpha))
        if term in ("B", "C"):
            return getattr(self, f"k_{term}") * gpow
        k = getattr(self, f"k_{term}")
        c = getattr(self, f"c_{term}")
        return math.factorial(n) * k * c**n * gpow


def bound_constants(
    kappa: int,
    a_lower: float,
    a_upper: float,
    ds: DecaySequence | float,
    convention: str = "proof",
) -> BoundConstants:
    """Evaluate the constant ledger.

    ``ds`` is a :class:`DecaySequence` or just the value of ``c_gamma``.
    ``convention="proof"`` puts ``1/a_lower**2`` into ``k_D`` and ``a_upper``
    into ``k_E`` (what the derivation of the reciprocal and square-root bounds
    yields); ``"statement"`` swaps the two prefactors.
    """
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    if not 0 < a_lower <= 1 <= a_upper:
        raise ValueError("need 0 < a_lower <= 1 <= a_upper")
    if isinstance(ds, DecaySequence):
        c_gamma, gamma = ds.c_gamma, np.asarray(ds.gamma, dtype=float)
    else:
        c_gamma, gamma = max(float(ds), 2.0), None

    k_B = k_C = c_gamma**2
    growth = (2 * k_C / a_lower**2) ** kappa
    recip, root = (kappa + 1) / a_lower**2 * growth, (kappa + 1) * a_upper * growth
    if convention == "proof":
        k_D, k_E = recip, root
    elif convention == "statement":
        k_D, k_E = root, recip
    else:
        raise ValueError(f"unknown convention {convention!r}")
    c_D = c_E = 2 * k_C / (a_lower**2 * math.log(2))
    k_F = 3 * k_D * k_B
    c_F = c_D
    k_G = k_E * k_F
    c_G = 2 * max(c_E, c_F)
    k_A = k_G + a_upper * k_F + a_upper
    c_A = max(c_G, c_F)
    return BoundConstants(
        kappa, a_lower, a_upper, c_gamma,
        k_B, k_C, k_D, k_E, k_F, k_G, k_A, c_D, c_E, c_F, c_G, c_A, gamma,
    )


# central difference stencils: offsets (in steps) and weights (times h**order)
_STENCILS = {
    0: ((0,), (1.0,)),
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
}


def _term_values(V, term, a):
    C = np.einsum("...i,...i->...", V, V)
    if term == "A":
        return anisotropic_tensor(V, a)
    if term == "B":
        return V[..., :, None] * V[..., None, :]
    if term == "C":
        return C
    if term == "D":
        return 1.0 / C
    if term == "E":
        return np.sqrt(C)
    B = V[..., :, None] * V[..., None, :]
    if term == "F":
        return B / C[..., None, None]
    if term == "G":
        return B / np.sqrt(C)[..., None, None]
    raise ValueError(f"unknown term {term!r}")


def fd_derivative(kl: KLExpansion, alpha, y, h: float = 1e-4, term: str = "A", a: float = 0.12, vertices=None):
    """Central finite difference of ``d^alpha_y term`` at ``y`` on the given vertices."""
    alpha = [int(v) for v in alpha]
    if any(v < 0 or v > 3 for v in alpha):
        raise ValueError("each multi-index entry must be in 0..3")
    if h < 1e-8:
        raise ValueError(f"step {h:g} too small for double precision differences")
    y = np.asarray(y, dtype=float)
    vertices = slice(None) if vertices is None else vertices
    mean = kl.mean_field[vertices]
    modes = kl.modes[:, vertices]
    active = [k for k, v in enumerate(alpha) if v]
    stencils = [_STENCILS[alpha[k]] for k in active]
    total = None
    for combo in itertools.product(*[list(zip(*s)) for s in stencils]):
        yy = y[: kl.rank].copy()
        w = 1.0
        for k, (off, wt) in zip(active, combo):
            yy[k] += off * h
            w *= wt
        V = mean + np.tensordot(yy, modes, axes=1)
        val = w * _term_values(V, term, a)
        total = val if total is None else total + val
    return total / h ** sum(alpha)


def _norm(values):
    if values.ndim == 1:
        return np.abs(values)
    return np.abs(np.linalg.eigvalsh(values)).max(axis=-1)


@dataclass
class FDCheck:
    alpha: tuple
    lhs: float
    rhs: float
    passed: bool

    @property
    def margin(self) -> float:
        return self.rhs / self.lhs if self.lhs > 0 else math.inf


def fd_derivative_check(
    kl: KLExpansion,
    p: CoefficientParams,
    alpha,
    vertices=None,
    ys=None,
    h: float = 1e-4,
    term: str = "A",
    constants: BoundConstants | None = None,
    n_random: int = 4,
    seed: int = 0,
) -> FDCheck:
    """Compare finite-difference derivatives of ``term`` with their bound.

    Uses the sup-norm (``kappa = 0``) decay weights. The derivative is
    evaluated at ``y = 0`` and ``n_random`` interior points; ``lhs`` is the
    largest spectral norm over those points and the sampled vertices.
    """
    if constants is None:
        ds = gamma_sequence(kl, 0)
        constants = bound_constants(0, p.a_lower, p.a_upper, ds)
    if ys is None:
        rng = np.random.default_rng(seed)
        ys = [np.zeros(kl.rank)] + [rng.uniform(-0.9, 0.9, kl.rank) for _ in range(n_random)]
    lhs = 0.0
    for y in ys:
        d = fd_derivative(kl, alpha, y, h, term, p.a, vertices)
        lhs = max(lhs, float(_norm(d).max()))
    alpha = tuple(int(v) for v in alpha)
    rhs = constants.bound(alpha, term)
    return FDCheck(alpha, lhs, rhs, lhs <= rhs * (1 + 1e-2))


def format_fd_report(checks) -> str:
    lines = [f"{'alpha':<16}{'lhs':>14}{'rhs':>14}{'margin':>12}"]
    for c in checks:
        lines.append(f"{str(c.alpha):<16}{c.lhs:>14.6e}{c.rhs:>14.6e}{c.margin:>12.3e}")
    return "\n".join(lines)


# combinatorics


def stirling2(n: int, r: int) -> int:
    """Stirling number of the second kind by the standard recurrence."""
    table = [[0] * (n + 1) for _ in range(n + 1)]
    table[0][0] = 1
    for i in range(1, n + 1):
        for j in range(1, i + 1):
            table[i][j] = j * table[i - 1][j] + table[i - 1][j - 1]
    return table[n][r] if 0 <= r <= n else 0


def set_partitions(items):
    """All partitions of ``items`` into nonempty blocks."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part


def ordered_bell_bruteforce(n: int) -> int:
    """Count ordered set partitions of ``n`` elements by enumeration."""
    return sum(math.factorial(len(part)) for part in set_partitions(range(n)))


def _multi_indices_below(alpha):
    return itertools.product(*[range(a + 1) for a in alpha])


def multi_index_partitions(alpha, r: int):
    """Ordered ``r``-tuples of nonzero multi-indices summing to ``alpha``."""
    alpha = tuple(alpha)
    if r == 0:
        if not any(alpha):
            yield ()
        return
    for beta in _multi_indices_below(alpha):
        if not any(beta):
            continue
        rest = tuple(a - b for a, b in zip(alpha, beta))
        for tail in multi_index_partitions(rest, r - 1):
            yield (beta,) + tail


def _mfact(alpha):
    return math.prod(math.factorial(a) for a in alpha)


def _mbinom(alpha, beta):
    return math.prod(math.comb(a, b) for a, b in zip(alpha, beta))


@dataclass
class CombinatorialReport:
    entries: list  # (name, passed, detail)

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.entries)

    def __str__(self):
        return "\n".join(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}" for name, ok, detail in self.entries)


def _alphas(n_max, dims):
    for d in range(1, dims + 1):
        for alpha in itertools.product(range(n_max + 1), repeat=d):
            if sum(alpha) <= n_max:
                yield alpha


def combinatorial_checks(n_max: int = 6, faa_max: int | None = None) -> CombinatorialReport:
    """Enumerate and verify the identities behind the derivative bounds.

    * ``sum_{beta <= alpha, |beta| = j} binom(alpha, beta) = binom(|alpha|, j)``
      for multi-indices in up to three variables;
    * ordered Bell numbers ``sum_r r! S(n, r)`` against brute-force
      enumeration of ordered set partitions, and ``<= n! / (log 2)^n``;
    * ``alpha! sum_{P(alpha, r)} prod 1/beta_j! = r! S(|alpha|, r)`` by
      enumerating multi-index partitions (``|alpha| <= faa_max``);
    * the two binomial sums used for the product bounds.
    """
    if n_max > 8:
        raise ValueError("n_max above 8 is too expensive to enumerate")
    faa_max = min(n_max, 5) if faa_max is None else faa_max
    entries = []

    bad = []
    for alpha in _alphas(n_max, 3):
        n = sum(alpha)
        for j in range(n + 1):
            s = sum(_mbinom(alpha, b) for b in _multi_indices_below(alpha) if sum(b) == j)
            if s != math.comb(n, j):
                bad.append((alpha, j, s))
    entries.append(("binomial identity", not bad, f"{len(bad)} failures" if bad else f"all |alpha| <= {n_max}"))

    bells = []
    ok = True
    for n in range(n_max + 1):
        brute = ordered_bell_bruteforce(n)
        formula = sum(math.factorial(r) * stirling2(n, r) for r in range(n + 1))
        bound = math.factorial(n) / math.log(2) ** n
        ok &= brute == formula and brute <= bound
        bells.append(brute)
    entries.append(("ordered Bell", ok, f"{bells}"))

    ok = True
    for alpha in _alphas(faa_max, 3):
        n = sum(alpha)
        if n == 0:
            continue
        for r in range(1, n + 1):
            s = sum(Fraction(1, math.prod(_mfact(b) for b in part)) for part in multi_index_partitions(alpha, r))
            ok &= s * _mfact(alpha) == math.factorial(r) * stirling2(n, r)
    entries.append(("partition identity", ok, f"all |alpha| <= {faa_max}"))

    ok = True
    for alpha in _alphas(n_max, 3):
        n = sum(alpha)
        betas = list(_multi_indices_below(alpha))
        s1 = sum(_mbinom(alpha, b) * math.factorial(sum(b)) for b in betas)
        s2 = sum(_mbinom(alpha, b) * math.factorial(sum(b)) * math.factorial(n - sum(b)) for b in betas)
        e1 = sum(Fraction(math.factorial(n), math.factorial(k)) for k in range(n + 1))
        ok &= s1 == e1 and s1 <= 3 * math.factorial(n)
        ok &= s2 == (n + 1) * math.factorial(n) and s2 <= 2**n * math.factorial(n)
    entries.append(("product sums", ok, f"all |alpha| <= {n_max}"))
    return CombinatorialReport(entries)
