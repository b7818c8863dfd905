"""Numerical verification of monotonicity, sufficiency and locality.

The three properties of a divergence D on a state space:

* monotone:    D(Phi(s1), Phi(s2)) <= D(s1, s2) for every affine map
               Phi of the state space into itself;
* sufficiency: equality whenever Phi has a recovery map fixing s1, s2;
* local:       D(s1, t s1 + (1-t) sigma) does not depend on the state
               sigma orthogonal to s1.

Checks sample seeded random channels and states and report violations
with serialized certificates.  Sample i derives its generator from the
root seed by stable splitting, so a report is independent of execution
order or parallelism.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import state_space as ss
from .divergence_zoo import kl
from .errors import (
    DegenerateSample,
    DimensionTooSmall,
    NotARecoveryPair,
    NotOrthogonal,
    ShapeMismatch,
)
from .state_space import Observable, State

__all__ = [
    "AffineChannel",
    "ChannelPair",
    "CheckReport",
    "stochastic_channel",
    "kraus_channel",
    "identity_channel",
    "permutation_channel",
    "pinching_channel",
    "apply_channel",
    "dual_apply",
    "random_stochastic_channel",
    "random_cptp_channel",
    "random_doubly_stochastic_channel",
    "classical_monotonicity_sampler",
    "quantum_monotonicity_sampler",
    "monotonicity_check",
    "sufficiency_check",
    "build_locality_pair",
    "locality_check",
    "kl_proportionality_fit",
    "sample_orthogonal_triple",
    "rng_for_sample",
]


@dataclass(frozen=True, eq=False)
class AffineChannel:
    """Trace-preserving positive affine map of states.

    kind "stochastic": column-stochastic matrix acting on classical
    states.  kind "kraus": Kraus operators acting on a single matrix
    block; ``pre_transpose`` composes with the transpose map first,
    which keeps positivity and trace preservation but drops complete
    positivity.
    """

    kind: str
    matrix: Optional[np.ndarray] = None
    kraus: tuple[np.ndarray, ...] = ()
    pre_transpose: bool = False

    def __post_init__(self):
        if self.kind == "stochastic":
            m = np.array(self.matrix, dtype=float)
            if m.ndim != 2:
                raise ValueError("stochastic channel needs a matrix")
            if np.any(m < -1e-12):
                raise ValueError("stochastic matrix has negative entries")
            cols = m.sum(axis=0)
            if np.max(np.abs(cols - 1.0)) > 1e-9:
                raise ValueError("columns must sum to one")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
        elif self.kind == "kraus":
            ops = tuple(np.array(k, dtype=complex) for k in self.kraus)
            if not ops:
                raise ValueError("kraus channel needs operators")
            d_in = ops[0].shape[1]
            acc = np.zeros((d_in, d_in), dtype=complex)
            for k in ops:
                if k.shape[1] != d_in:
                    raise ValueError("kraus operators must share input dim")
                acc += k.conj().T @ k
            if np.max(np.abs(acc - np.eye(d_in))) > 1e-9:
                raise ValueError("sum K*K must be the identity")
            for k in ops:
                k.setflags(write=False)
            object.__setattr__(self, "kraus", ops)
        else:
            raise ValueError(f"unknown channel kind {self.kind!r}")

    @property
    def in_dim(self) -> int:
        if self.kind == "stochastic":
            return self.matrix.shape[1]
        return self.kraus[0].shape[1]

    @property
    def out_dim(self) -> int:
        if self.kind == "stochastic":
            return self.matrix.shape[0]
        return self.kraus[0].shape[0]

    def to_dict(self) -> dict:
        if self.kind == "stochastic":
            return {"kind": "stochastic", "matrix": self.matrix.tolist()}
        return {
            "kind": "kraus",
            "pre_transpose": self.pre_transpose,
            "operators": [
                [[[float(x.real), float(x.imag)] for x in row] for row in k]
                for k in self.kraus
            ],
        }


@dataclass(frozen=True, eq=False)
class ChannelPair:
    """Forward map and its recovery map for some designated states."""

    forward: AffineChannel
    recovery: AffineChannel


@dataclass
class CheckReport:
    """Outcome of a sampled property check."""

    name: str
    samples_run: int
    tol: float
    violations: list = field(default_factory=list)
    max_gap: float = 0.0
    vacuous: bool = False

    @property
    def passed(self) -> bool:
        return len(self.violations) == 0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "samples_run": self.samples_run,
            "tol": self.tol,
            "passed": self.passed,
            "vacuous": self.vacuous,
            "max_gap": self.max_gap,
            "violations": self.violations,
        }


def stochastic_channel(matrix) -> AffineChannel:
    return AffineChannel("stochastic", matrix=np.asarray(matrix, dtype=float))


def kraus_channel(ops, pre_transpose: bool = False) -> AffineChannel:
    return AffineChannel("kraus", kraus=tuple(ops), pre_transpose=pre_transpose)


def identity_channel(dim: int, kind: str = "stochastic") -> AffineChannel:
    if kind == "stochastic":
        return stochastic_channel(np.eye(dim))
    return kraus_channel([np.eye(dim, dtype=complex)])


def permutation_channel(perm: Sequence[int]) -> AffineChannel:
    d = len(perm)
    m = np.zeros((d, d))
    for src, dst in enumerate(perm):
        m[dst, src] = 1.0
    return stochastic_channel(m)


def pinching_channel(dim: int) -> AffineChannel:
    """Diagonal restriction: Kraus operators are the basis projectors."""
    ops = []
    for i in range(dim):
        p = np.zeros((dim, dim), dtype=complex)
        p[i, i] = 1.0
        ops.append(p)
    return kraus_channel(ops)


def apply_channel(phi: AffineChannel, s: State) -> State:
    """Image of a state; trace and positivity are preserved by
    construction of the channel."""
    if phi.kind == "stochastic":
        p = ss.classical_probs(s)
        if len(p) != phi.in_dim:
            raise ShapeMismatch(f"channel expects dim {phi.in_dim}, state has {len(p)}")
        return ss.classical_state(phi.matrix @ p)
    if len(s.shape.block_dims) != 1:
        raise ShapeMismatch("kraus channels act on single-block states")
    b = s.blocks[0]
    if b.shape[0] != phi.in_dim:
        raise ShapeMismatch(f"channel expects dim {phi.in_dim}, state has {b.shape[0]}")
    if phi.pre_transpose:
        b = b.T
    out = np.zeros((phi.out_dim, phi.out_dim), dtype=complex)
    for k in phi.kraus:
        out += k @ b @ k.conj().T
    return State(ss.AlgebraShape((phi.out_dim,)), (out,))


def dual_apply(phi: AffineChannel, a: Observable) -> Observable:
    """Dual map on observables: <a, Phi(s)> = <Phi*(a), s>."""
    if phi.kind == "stochastic":
        v = np.array([b[0, 0].real for b in a.blocks])
        return ss.classical_observable(phi.matrix.T @ v)
    m = a.blocks[0]
    out = np.zeros((phi.in_dim, phi.in_dim), dtype=complex)
    for k in phi.kraus:
        out += k.conj().T @ m @ k
    if phi.pre_transpose:
        out = out.T
    return Observable(ss.AlgebraShape((phi.in_dim,)), (out,))


# ---------------------------------------------------------------------------
# seeded sampling


def rng_for_sample(seed: int, index: int) -> np.random.Generator:
    """Stable per-sample generator: identical regardless of how the
    sample loop is ordered or sharded."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def random_stochastic_channel(rng: np.random.Generator, dim: int,
                              concentration: Optional[float] = None) -> AffineChannel:
    """Columns drawn on the simplex from normalized Gamma entries.

    The concentration alternates between flat (1.0) and peaked (0.3)
    draws: flat columns almost never expand Euclidean-type divergences,
    so an all-flat sampler would miss the violations the checks exist
    to certify, while the mixture still covers the channel polytope
    densely.
    """
    if concentration is None:
        concentration = 1.0 if rng.integers(2) else 0.3
    cols = rng.gamma(concentration, size=(dim, dim)) + 1e-300
    return stochastic_channel(cols / cols.sum(axis=0, keepdims=True))


def random_cptp_channel(rng: np.random.Generator, dim: int,
                        env_dim: Optional[int] = None,
                        pre_transpose: bool = False) -> AffineChannel:
    """Random channel through a Stinespring isometry into dim x env,
    traced over the environment; Kraus rank is at most dim^2."""
    if env_dim is None:
        env_dim = int(rng.integers(1, dim * dim + 1))
    g = rng.normal(size=(dim * env_dim, dim)) + 1j * rng.normal(size=(dim * env_dim, dim))
    q, r = np.linalg.qr(g)
    v = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
    ops = [v.reshape(dim, env_dim, dim)[:, e, :] for e in range(env_dim)]
    return kraus_channel(ops, pre_transpose=pre_transpose)


def random_doubly_stochastic_channel(rng: np.random.Generator, dim: int,
                                     sweeps: int = 200) -> AffineChannel:
    """Sinkhorn-balanced positive matrix; rows and columns sum to one."""
    m = rng.gamma(1.0, size=(dim, dim)) + 1e-3
    for _ in range(sweeps):
        m /= m.sum(axis=0, keepdims=True)
        m /= m.sum(axis=1, keepdims=True)
    m /= m.sum(axis=0, keepdims=True)
    return stochastic_channel(m)


def classical_monotonicity_sampler(dim: int) -> Callable:
    def draw(rng: np.random.Generator):
        return (
            random_stochastic_channel(rng, dim),
            ss.random_classical(dim, rng),
            ss.random_classical(dim, rng),
        )

    return draw


def quantum_monotonicity_sampler(dim: int, include_transpose: bool = False) -> Callable:
    """CPTP maps by default; with ``include_transpose`` half the draws
    are composed with the transpose, covering positive maps that are
    not completely positive."""

    def draw(rng: np.random.Generator):
        shape = ss.AlgebraShape((dim,))
        pre_t = bool(include_transpose and rng.integers(2))
        return (
            random_cptp_channel(rng, dim, pre_transpose=pre_t),
            ss.random_state(shape, rng),
            ss.random_state(shape, rng),
        )

    return draw


# ---------------------------------------------------------------------------
# checks


def _relative_gap_violation(gap: float, rhs: float, tol: float) -> bool:
    # infinity on the right satisfies any comparison
    if np.isinf(rhs):
        return False
    return gap > tol * max(1.0, abs(rhs))


def monotonicity_check(D, sampler, n_samples: int, seed: int = 0,
                       tol: float = 1e-7, widen_rounds: int = 40) -> CheckReport:
    """Sample channels and state pairs; record every case where the
    divergence grows under the channel.

    A violation certificate carries the serialized channel and states;
    a short seeded hill climb first widens the gap so certificates sit
    clearly above roundoff.
    """
    report = CheckReport(name=f"monotonicity[{getattr(D, 'name', 'D')}]",
                         samples_run=n_samples, tol=tol)
    for i in range(n_samples):
        rng = rng_for_sample(seed, i)
        channel, s1, s2 = sampler(rng)
        rhs = D(s1, s2)
        lhs = D(apply_channel(channel, s1), apply_channel(channel, s2))
        gap = lhs - rhs
        if _relative_gap_violation(gap, rhs, tol):
            channel, s1, s2, lhs, rhs = _widen_monotonicity(
                D, channel, s1, s2, rng, widen_rounds
            )
            report.violations.append(
                {
                    "sample": i,
                    "channel": channel.to_dict(),
                    "s1": ss.state_to_dict(s1),
                    "s2": ss.state_to_dict(s2),
                    "lhs": lhs,
                    "rhs": rhs,
                    "gap": lhs - rhs,
                }
            )
            report.max_gap = max(report.max_gap, lhs - rhs)
        elif np.isfinite(gap):
            report.max_gap = max(report.max_gap, gap)
    return report


def _widen_monotonicity(D, channel, s1, s2, rng, rounds):
    """Local coordinate ascent on the violation gap (classical only)."""
    if channel.kind != "stochastic" or rounds <= 0:
        lhs = D(apply_channel(channel, s1), apply_channel(channel, s2))
        return channel, s1, s2, lhs, D(s1, s2)

    def gap_of(ch, a, b):
        rhs = D(a, b)
        lhs = D(apply_channel(ch, a), apply_channel(ch, b))
        return lhs - rhs

    best = (channel, s1, s2)
    best_gap = gap_of(*best)
    dim = channel.in_dim
    for _ in range(rounds):
        ch, a, b = best
        which = rng.integers(3)
        if which == 0:
            m = ch.matrix * np.exp(0.25 * rng.normal(size=ch.matrix.shape))
            cand = (stochastic_channel(m / m.sum(axis=0, keepdims=True)), a, b)
        else:
            target = a if which == 1 else b
            p = ss.classical_probs(target) * np.exp(0.25 * rng.normal(size=dim))
            moved = ss.classical_state(p / p.sum())
            cand = (ch, moved, b) if which == 1 else (ch, a, moved)
        g = gap_of(*cand)
        if np.isfinite(g) and g > best_gap:
            best, best_gap = cand, g
    ch, a, b = best
    return ch, a, b, D(apply_channel(ch, a), apply_channel(ch, b)), D(a, b)


def _state_distance(a: State, b: State) -> float:
    return max(
        float(np.max(np.abs(ba - bb))) for ba, bb in zip(a.blocks, b.blocks)
    )


def sufficiency_check(D, s1: State, s2: State, pair: ChannelPair,
                      tol: float = 1e-7, recovery_tol: float = 1e-8) -> CheckReport:
    """Equality of the divergence under a channel that has a recovery
    map for the two states."""
    for s in (s1, s2):
        restored = apply_channel(pair.recovery, apply_channel(pair.forward, s))
        err = _state_distance(restored, s)
        if err > recovery_tol:
            raise NotARecoveryPair(f"recovery misses a designated state by {err:.3e}")
    rhs = D(s1, s2)
    lhs = D(apply_channel(pair.forward, s1), apply_channel(pair.forward, s2))
    if np.isinf(lhs) and np.isinf(rhs):
        gap = 0.0
    elif np.isinf(lhs) or np.isinf(rhs):
        gap = float("inf")
    else:
        gap = abs(lhs - rhs)
    report = CheckReport(name=f"sufficiency[{getattr(D, 'name', 'D')}]",
                         samples_run=1, tol=tol)
    report.max_gap = gap
    if _relative_gap_violation(gap, rhs, tol):
        report.violations.append(
            {
                "forward": pair.forward.to_dict(),
                "recovery": pair.recovery.to_dict(),
                "s1": ss.state_to_dict(s1),
                "s2": ss.state_to_dict(s2),
                "lhs": lhs,
                "rhs": rhs,
                "gap": gap,
            }
        )
    return report


def build_locality_pair(s1: State, sigma: State, rho: State,
                        orth_tol: float = 1e-9) -> ChannelPair:
    """Channel pair moving the orthogonal remainder sigma to rho and
    back while fixing s1:

        Phi(s) = tr(p s) s1 + (1 - tr(p s)) rho
        Psi(s) = tr(p s) s1 + (1 - tr(p s)) sigma

    with p the support projection of s1.  Requires sigma and rho
    orthogonal to s1.
    """
    if not ss.orthogonal(s1, sigma, orth_tol) or not ss.orthogonal(s1, rho, orth_tol):
        raise NotOrthogonal("sigma and rho must be orthogonal to s1")
    if s1.shape.is_classical:
        p1 = ss.classical_probs(s1)
        supp = p1 > ss.DEFAULT_TOL.supp
        dim = len(p1)

        def matrix(target):
            m = np.zeros((dim, dim))
            for y in range(dim):
                m[:, y] = p1 if supp[y] else target
            return m

        return ChannelPair(
            forward=stochastic_channel(matrix(ss.classical_probs(rho))),
            recovery=stochastic_channel(matrix(ss.classical_probs(sigma))),
        )
    if len(s1.shape.block_dims) != 1:
        raise ShapeMismatch("locality pairs need classical or single-block states")
    return ChannelPair(
        forward=_measure_prepare(s1, rho),
        recovery=_measure_prepare(s1, sigma),
    )


def _measure_prepare(s1: State, off: State) -> AffineChannel:
    """Kraus form of s -> tr(p s) s1 + (1 - tr(p s)) off for the support
    projection p of s1."""
    d = s1.shape.block_dims[0]
    lam1, v1 = np.linalg.eigh(s1.blocks[0])
    lam0, v0 = np.linalg.eigh(off.blocks[0])
    supp = lam1 > ss.DEFAULT_TOL.supp
    ops = []
    for k in np.nonzero(supp)[0]:
        for i in np.nonzero(supp)[0]:
            ops.append(np.sqrt(lam1[k]) * np.outer(v1[:, k], v1[:, i].conj()))
    off_basis = np.nonzero(~supp)[0]
    for k in range(d):
        if lam0[k] <= ss.DEFAULT_TOL.supp:
            continue
        for j in off_basis:
            ops.append(np.sqrt(lam0[k]) * np.outer(v0[:, k], v1[:, j].conj()))
    return kraus_channel(ops)


def locality_check(D, dim: int, n_samples: int, seed: int = 0,
                   tol: float = 1e-7) -> CheckReport:
    """Sample orthogonal triples (s1, sigma, rho) and t in (0, 1) and
    compare the divergence to the two mixtures.

    Below dimension three every pair of states orthogonal to s1
    coincides, so the check is vacuous and reported as such.
    """
    report = CheckReport(name=f"locality[{getattr(D, 'name', 'D')}]",
                         samples_run=n_samples, tol=tol)
    if dim < 3:
        warnings.warn("locality is vacuous below dimension 3", DimensionTooSmall)
        report.vacuous = True
        report.samples_run = 0
        return report
    for i in range(n_samples):
        rng = rng_for_sample(seed, i)
        s1, sigma, rho, t = sample_orthogonal_triple(rng, dim)
        lhs = D(s1, ss.mix([s1, sigma], [t, 1.0 - t]))
        rhs = D(s1, ss.mix([s1, rho], [t, 1.0 - t]))
        if np.isinf(lhs) and np.isinf(rhs):
            continue
        gap = abs(lhs - rhs)
        if _relative_gap_violation(gap, rhs, tol):
            report.violations.append(
                {
                    "sample": i,
                    "s1": ss.state_to_dict(s1),
                    "sigma": ss.state_to_dict(sigma),
                    "rho": ss.state_to_dict(rho),
                    "t": t,
                    "lhs": lhs,
                    "rhs": rhs,
                    "gap": gap,
                }
            )
        report.max_gap = max(report.max_gap, gap)
    return report


def sample_orthogonal_triple(rng: np.random.Generator, dim: int):
    k = int(rng.integers(1, dim - 1))
    idx = rng.permutation(dim)
    head, tail = idx[:k], idx[k:]
    s1 = np.zeros(dim)
    s1[head] = rng.dirichlet(np.ones(k))
    sigma = np.zeros(dim)
    sigma[tail] = rng.dirichlet(np.ones(dim - k))
    rho = np.zeros(dim)
    rho[tail] = rng.dirichlet(np.ones(dim - k))
    t = float(rng.uniform(0.05, 0.95))
    return (
        ss.classical_state(s1),
        ss.classical_state(sigma),
        ss.classical_state(rho),
        t,
    )


def kl_proportionality_fit(D, dim: int, n_samples: int = 200, seed: int = 0,
                           pairs: Optional[Sequence] = None):
    """Least-squares constant c minimizing sum (D - c KL)^2 over sampled
    interior pairs, with the worst absolute misfit.

    Returns (c, residual).  A divergence proportional to information
    divergence fits with residual at the roundoff level.
    """
    if pairs is None:
        pairs = []
        for i in range(n_samples):
            rng = rng_for_sample(seed, i)
            pairs.append((ss.random_classical(dim, rng), ss.random_classical(dim, rng)))
    d_vals = np.array([D(p, q) for p, q in pairs])
    k_vals = np.array([kl(p, q) for p, q in pairs])
    if not np.all(np.isfinite(d_vals)) or not np.all(np.isfinite(k_vals)):
        raise DegenerateSample("divergence must be finite on sampled interior pairs")
    denom = float(np.sum(k_vals * k_vals))
    if denom < 1e-30:
        raise DegenerateSample("all sampled KL values vanish")
    c = float(np.sum(d_vals * k_vals) / denom)
    residual = float(np.max(np.abs(d_vals - c * k_vals)))
    return c, residual
