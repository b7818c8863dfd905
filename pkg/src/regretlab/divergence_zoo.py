"""Canonical divergences with closed forms.

All divergences are reported in nats (natural log throughout); a
display-only conversion to bits is provided.  +infinity is an ordinary
return value, never an error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import state_space as ss
from .errors import DomainError, ShapeMismatch
from .regret_core import SmoothGenerator, neg_entropy_generator, quadratic_generator
from .state_space import DEFAULT_TOL, State

__all__ = [
    "Divergence",
    "kl",
    "quantum_relative_entropy",
    "itakura_saito",
    "is_translation",
    "separable_bregman",
    "itakura_saito_vector",
    "unnormalized_kl",
    "sq_euclidean",
    "nats_to_bits",
    "get_divergence",
    "KL",
    "QRE",
    "SQEUCLIDEAN",
    "BRIER",
]


@dataclass(frozen=True, eq=False)
class Divergence:
    """Named pair-of-states functional with optional generator metadata."""

    name: str
    eval: Callable[[State, State], float]
    generator: Optional[SmoothGenerator] = None
    differentiable: bool = True

    def __call__(self, s1: State, s2: State) -> float:
        return self.eval(s1, s2)


def _probs(s) -> np.ndarray:
    if isinstance(s, State):
        return ss.classical_probs(s)
    return np.asarray(s, dtype=float).ravel()


def kl(p, q) -> float:
    """Information divergence sum_x P(x) ln(P(x)/Q(x)).

    Summation runs over the support of P with 0 ln(0/q) = 0; the value
    is +inf exactly when P puts mass where Q has none.
    """
    P, Q = _probs(p), _probs(q)
    if P.shape != Q.shape:
        raise ShapeMismatch("distributions must have equal length")
    supp = P > 0.0
    if np.any(Q[supp] <= 0.0):
        return math.inf
    Ps, Qs = P[supp], Q[supp]
    return float(np.sum(Ps * (np.log(Ps) - np.log(Qs))))


def quantum_relative_entropy(s1: State, s2: State, tol=DEFAULT_TOL) -> float:
    """tr[s1 ln s1 - s1 ln s2] via blockwise eigendecompositions.

    Returns +inf when the support of s1 leaks outside the support of
    s2 (eigenbasis projection, threshold ``tol.supp``).  On diagonal
    states this reduces to :func:`kl`.
    """
    if s1.shape.block_dims != s2.shape.block_dims:
        raise ShapeMismatch("states must share one shape")
    total = 0.0
    for b1, b2 in zip(s1.blocks, s2.blocks):
        lam1, v1 = np.linalg.eigh(b1)
        lam2, v2 = np.linalg.eigh(b2)
        lam1 = np.where(lam1 < 0.0, 0.0, lam1)
        pos1 = lam1 > 0.0
        total += float(np.sum(lam1[pos1] * np.log(lam1[pos1])))
        # mass of s1 in the kernel of s2
        kernel = lam2 <= tol.supp
        if np.any(kernel):
            overlap = np.real(np.einsum("ij,jk,ki->i", v2.conj().T, b1, v2))
            if float(np.sum(overlap[kernel])) > tol.supp:
                return math.inf
        supp2 = ~kernel
        overlap = np.real(np.einsum("ij,jk,ki->i", v2.conj().T, b1, v2))
        total -= float(np.sum(overlap[supp2] * np.log(lam2[supp2])))
    return total


def itakura_saito(lam: float, mu: float) -> float:
    """lam/mu - 1 - ln(lam/mu) for positive reals; zero iff lam == mu."""
    if lam <= 0.0 or mu <= 0.0:
        raise DomainError("Itakura-Saito needs strictly positive arguments")
    r = lam / mu
    return r - 1.0 - math.log(r)


def is_translation(lam: float, mu: float, t: float) -> float:
    """Itakura-Saito distance of the right-translated pair (lam+t, mu+t).

    Non-increasing in t >= 0: the t-derivative is
    -(lam - mu)^2 / ((lam + t)(mu + t)^2).
    """
    if t < 0.0:
        raise DomainError("translation must be non-negative")
    return itakura_saito(lam + t, mu + t)


def separable_bregman(phi, dphi, p, q) -> float:
    """sum_i phi(p_i) - phi(q_i) - (p_i - q_i) phi'(q_i) for a scalar
    convex phi with derivative dphi.

    Inputs are positive vectors (probability normalization is not
    required); a zero coordinate is only accepted where phi extends
    continuously and phi' stays bounded.
    """
    P, Q = _probs(p), _probs(q)
    if P.shape != Q.shape:
        raise ShapeMismatch("vectors must have equal length")
    total = 0.0
    for pi, qi in zip(P, Q):
        try:
            total += phi(pi) - phi(qi) - (pi - qi) * dphi(qi)
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"generator undefined at ({pi}, {qi})") from exc
    if not math.isfinite(total):
        raise DomainError("generator unbounded on the given inputs")
    return float(total)


def sq_euclidean(s1: State, s2: State) -> float:
    """Squared Hilbert-Schmidt distance sum_blocks tr[(a - b)^2]."""
    if s1.shape.block_dims != s2.shape.block_dims:
        raise ShapeMismatch("states must share one shape")
    return float(
        sum(np.sum(np.abs(b1 - b2) ** 2) for b1, b2 in zip(s1.blocks, s2.blocks))
    )


def nats_to_bits(x: float) -> float:
    """Display-only unit conversion."""
    return x / math.log(2.0)


# ---------------------------------------------------------------------------
# registry

KL = Divergence("kl", kl, generator=neg_entropy_generator(), differentiable=True)
QRE = Divergence(
    "qre", quantum_relative_entropy, generator=neg_entropy_generator(), differentiable=True
)
SQEUCLIDEAN = Divergence(
    "sqeuclidean", sq_euclidean, generator=quadratic_generator(), differentiable=True
)


def _brier_eval(s1: State, s2: State) -> float:
    n = s1.shape.total_dim
    return sq_euclidean(s1, s2) / n


BRIER = Divergence("brier", _brier_eval, generator=None, differentiable=True)


def itakura_saito_vector(a, b) -> float:
    """Sum of coordinatewise Itakura-Saito distances of two positive
    vectors; the separable divergence of -ln."""
    return separable_bregman(lambda x: -math.log(x), lambda x: -1.0 / x, a, b)


def unnormalized_kl(a, b) -> float:
    """sum a_i ln(a_i/b_i) + b_i - a_i for positive vectors, the
    separable divergence of x ln x - x.  Normalized inputs reduce it
    to :func:`kl` on full support."""
    return separable_bregman(
        lambda x: x * math.log(x) - x if x > 0.0 else 0.0,
        math.log,
        a,
        b,
    )


_REGISTRY = {
    "kl": KL,
    "qre": QRE,
    "sqeuclidean": SQEUCLIDEAN,
    "brier": BRIER,
    "is": Divergence("is", itakura_saito_vector, generator=None, differentiable=True),
}


def get_divergence(name: str) -> Divergence:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(
            f"unknown divergence {name!r}; available: {sorted(_REGISTRY)}"
        ) from None
