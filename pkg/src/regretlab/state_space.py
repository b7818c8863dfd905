"""States of finite-dimensional algebras and their spectral primitives.

A state space here is the set of density matrices of a direct sum of
complex matrix blocks.  Probability vectors are the special case where
every block has dimension one, and they share a single code path with
the matrix case.  All values are immutable after construction and all
operations are pure, so everything in this module is safe to share
between threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BadWeights, NumericalFailure, ShapeMismatch

__all__ = [
    "AlgebraShape",
    "State",
    "Observable",
    "Spectrum",
    "ToleranceSet",
    "ValidationReport",
    "DEFAULT_TOL",
    "classical_shape",
    "classical_state",
    "classical_observable",
    "classical_probs",
    "delta_state",
    "pure_state",
    "identity_observable",
    "validate_state",
    "inner",
    "spectrum",
    "entropy",
    "mix",
    "orthogonal",
    "random_classical",
    "random_state",
    "random_unitary",
    "conjugate",
    "state_to_dict",
    "state_from_dict",
    "observable_to_dict",
    "observable_from_dict",
]


@dataclass(frozen=True)
class ToleranceSet:
    """Numerical tolerances used by validation and support detection."""

    herm: float = 1e-9
    trace: float = 1e-9
    psd: float = 1e-10
    imag: float = 1e-9
    supp: float = 1e-9


DEFAULT_TOL = ToleranceSet()


@dataclass(frozen=True)
class AlgebraShape:
    """Ordered block dimensions of a direct sum of matrix algebras."""

    block_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.block_dims)
        if len(dims) == 0:
            raise ValueError("shape needs at least one block")
        if any(d < 1 for d in dims):
            raise ValueError("block dimensions must be >= 1")
        object.__setattr__(self, "block_dims", dims)

    @property
    def total_dim(self) -> int:
        return sum(self.block_dims)

    @property
    def is_classical(self) -> bool:
        return all(d == 1 for d in self.block_dims)


def _freeze_blocks(shape: AlgebraShape, blocks) -> tuple[np.ndarray, ...]:
    if len(blocks) != len(shape.block_dims):
        raise ShapeMismatch(
            f"expected {len(shape.block_dims)} blocks, got {len(blocks)}"
        )
    out = []
    for d, b in zip(shape.block_dims, blocks):
        arr = np.array(b, dtype=complex)
        if arr.shape != (d, d):
            raise ShapeMismatch(f"block of dim {d} has array shape {arr.shape}")
        arr.setflags(write=False)
        out.append(arr)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class State:
    """Block-diagonal density matrix: Hermitian, PSD, total trace one.

    Construction only checks array shapes; use :func:`validate_state`
    for the numerical invariants.
    """

    shape: AlgebraShape
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", _freeze_blocks(self.shape, self.blocks))


@dataclass(frozen=True, eq=False)
class Observable:
    """Block-diagonal self-adjoint operator (payoff vector classically)."""

    shape: AlgebraShape
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", _freeze_blocks(self.shape, self.blocks))


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of all blocks, sorted descending."""

    eigenvalues: tuple[float, ...]


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    violations: tuple[tuple[str, float], ...]


def classical_shape(n: int) -> AlgebraShape:
    return AlgebraShape((1,) * int(n))


def classical_state(probs) -> State:
    """Probability vector as a state with dimension-one blocks."""
    p = np.asarray(probs, dtype=float).ravel()
    shape = classical_shape(len(p))
    return State(shape, tuple(np.array([[x]], dtype=complex) for x in p))


def classical_observable(payoffs) -> Observable:
    a = np.asarray(payoffs, dtype=float).ravel()
    shape = classical_shape(len(a))
    return Observable(shape, tuple(np.array([[x]], dtype=complex) for x in a))


def classical_probs(s: State) -> np.ndarray:
    """Extract the probability vector of an all-blocks-dimension-one state."""
    if not s.shape.is_classical:
        raise ShapeMismatch("state is not classical")
    return np.array([b[0, 0].real for b in s.blocks])


def delta_state(n: int, i: int) -> State:
    p = np.zeros(n)
    p[i] = 1.0
    return classical_state(p)


def pure_state(vec, shape: AlgebraShape | None = None) -> State:
    """Rank-one projection of a unit vector on a single matrix block."""
    v = np.asarray(vec, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    block = np.outer(v, v.conj())
    if shape is None:
        shape = AlgebraShape((len(v),))
    return State(shape, (block,))


def identity_observable(shape: AlgebraShape) -> Observable:
    return Observable(shape, tuple(np.eye(d, dtype=complex) for d in shape.block_dims))


def _check_same_shape(a, b):
    if a.shape.block_dims != b.shape.block_dims:
        raise ShapeMismatch(f"{a.shape.block_dims} vs {b.shape.block_dims}")


def validate_state(s: State, tol: ToleranceSet = DEFAULT_TOL) -> ValidationReport:
    """Report every violated state invariant together with its magnitude."""
    violations = []
    herm = max(float(np.max(np.abs(b - b.conj().T))) for b in s.blocks)
    if herm > tol.herm:
        violations.append(("hermiticity", herm))
    eigs = np.concatenate([np.linalg.eigvalsh((b + b.conj().T) / 2) for b in s.blocks])
    neg = float(max(0.0, -eigs.min()))
    if neg > tol.psd:
        violations.append(("negativity", neg))
    trace_err = abs(sum(float(np.trace(b).real) for b in s.blocks) - 1.0)
    if trace_err > tol.trace:
        violations.append(("trace", trace_err))
    return ValidationReport(passed=not violations, violations=tuple(violations))


def inner(a: Observable, s: State, tol: ToleranceSet = DEFAULT_TOL) -> float:
    """Pairing sum_blocks tr(a_b s_b); the imaginary residual is checked
    against ``tol.imag`` and discarded."""
    _check_same_shape(a, s)
    val = sum(complex(np.trace(ab @ sb)) for ab, sb in zip(a.blocks, s.blocks))
    if abs(val.imag) > tol.imag:
        raise NumericalFailure(f"pairing has imaginary residual {val.imag:.3e}")
    return val.real


def spectrum(s: State) -> Spectrum:
    """Concatenated eigenvalues of all blocks, descending."""
    try:
        eigs = np.concatenate([np.linalg.eigvalsh(b) for b in s.blocks])
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from exc
    return Spectrum(tuple(sorted((float(x) for x in eigs), reverse=True)))


def entropy(s: State) -> float:
    """Entropy -sum lam ln lam of the spectrum, in nats, with 0 ln 0 = 0.

    Roundoff eigenvalues below zero are clamped before the log.
    """
    lam = np.array(spectrum(s).eigenvalues)
    pos = lam[lam > 0.0]
    return float(-np.sum(pos * np.log(pos)))


def mix(states: Sequence[State], weights) -> State:
    """Convex combination sum_i t_i s_i of equally shaped states."""
    w = np.asarray(weights, dtype=float).ravel()
    if len(states) == 0 or len(w) != len(states):
        raise BadWeights("need one weight per state")
    if np.any(w < -1e-12) or abs(w.sum() - 1.0) > 1e-9:
        raise BadWeights(f"weights sum to {w.sum()}, need a probability vector")
    first = states[0]
    for s in states[1:]:
        _check_same_shape(first, s)
    blocks = []
    for k, d in enumerate(first.shape.block_dims):
        acc = np.zeros((d, d), dtype=complex)
        for t, s in zip(w, states):
            acc += t * s.blocks[k]
        blocks.append(acc)
    return State(first.shape, tuple(blocks))


def orthogonal(s1: State, s2: State, tol: float = 1e-10) -> bool:
    """True iff s1 s2 and s2 s1 vanish blockwise (max-entry norm)."""
    _check_same_shape(s1, s2)
    for b1, b2 in zip(s1.blocks, s2.blocks):
        if np.max(np.abs(b1 @ b2)) > tol or np.max(np.abs(b2 @ b1)) > tol:
            return False
    return True


def support_projection(s: State, tol: ToleranceSet = DEFAULT_TOL) -> Observable:
    """Projection onto the span of eigenvectors with eigenvalue above
    ``tol.supp``."""
    blocks = []
    for b in s.blocks:
        lam, vec = np.linalg.eigh(b)
        keep = vec[:, lam > tol.supp]
        blocks.append(keep @ keep.conj().T)
    return Observable(s.shape, tuple(blocks))


# ---------------------------------------------------------------------------
# random sampling


def random_classical(n: int, rng: np.random.Generator) -> State:
    """Flat Dirichlet sample on the n-simplex."""
    return classical_state(rng.dirichlet(np.ones(n)))


def random_state(shape: AlgebraShape, rng: np.random.Generator) -> State:
    """Full-support random state: per block G G* with complex Gaussian G,
    normalized by the total trace."""
    raw = []
    for d in shape.block_dims:
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        raw.append(g @ g.conj().T)
    total = sum(float(np.trace(b).real) for b in raw)
    return State(shape, tuple(b / total for b in raw))


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-ish unitary via QR of a complex Gaussian with phase fix."""
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(g)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def conjugate(s: State, unitaries: Sequence[np.ndarray]) -> State:
    """Blockwise U s U* for one unitary per block."""
    blocks = [u @ b @ u.conj().T for u, b in zip(unitaries, s.blocks)]
    return State(s.shape, tuple(blocks))


# ---------------------------------------------------------------------------
# JSON schema
#
# Full form:      {"shape": [d1, ...], "blocks": [[[ [re, im], ... ]]]}
# Classical form: {"probs": [p1, ...]}
# Doubles survive the round trip exactly (json uses repr semantics).


def _matrix_to_json(m: np.ndarray):
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def _matrix_from_json(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def state_to_dict(s: State) -> dict:
    if s.shape.is_classical:
        return {"probs": [float(b[0, 0].real) for b in s.blocks]}
    return {
        "shape": list(s.shape.block_dims),
        "blocks": [_matrix_to_json(b) for b in s.blocks],
    }


def state_from_dict(d: dict) -> State:
    if "probs" in d:
        return classical_state(d["probs"])
    shape = AlgebraShape(tuple(d["shape"]))
    return State(shape, tuple(_matrix_from_json(b) for b in d["blocks"]))


def observable_to_dict(a: Observable) -> dict:
    if a.shape.is_classical:
        return {"payoffs": [float(b[0, 0].real) for b in a.blocks]}
    return {
        "shape": list(a.shape.block_dims),
        "blocks": [_matrix_to_json(b) for b in a.blocks],
    }


def observable_from_dict(d: dict) -> Observable:
    if "payoffs" in d:
        return classical_observable(d["payoffs"])
    shape = AlgebraShape(tuple(d["shape"]))
    return Observable(shape, tuple(_matrix_from_json(b) for b in d["blocks"]))


def load_state(path) -> State:
    with open(path) as fh:
        return state_from_dict(json.load(fh))
