"""Value functions over action sets and the regret they induce.

A finite set of observables defines the convex value function
F(s) = max_a <a, s>.  The regret of an action is the payoff shortfall
F(s) - <a, s>; the regret of a state s0 against the truth s1 is the
one-sided-derivative gap

    f(1) - f(0) - f'_+(0),   f(t) = F((1 - t) s0 + t s1),

which for a finite action set equals
F(s1) - F(s0) - max{<a, s1 - s0> : a optimal for s0}.  Smooth convex
generators produce the same quantity through their gradient, which is
the classical Bregman divergence.

Everything here is pure and deterministic; action sets and generators
are immutable after construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import state_space as ss
from .errors import (
    BoundaryState,
    NonUniqueOptimum,
    RequiresFiniteActions,
    ShapeMismatch,
)
from .state_space import Observable, State, inner, mix

__all__ = [
    "ActionSet",
    "SmoothGenerator",
    "ValueFunction",
    "value",
    "action_regret",
    "optimal_actions",
    "state_regret",
    "bregman",
    "bregman_identity_residual",
    "reconstruct_check",
    "prune_dominated",
    "neg_entropy_generator",
    "quadratic_generator",
    "action_set_from_payoffs",
    "two_action_interval_example",
    "gradient_fd_residual",
]


@dataclass(frozen=True, eq=False)
class ActionSet:
    """Finite collection of observables on a shared shape.

    Mixtures of the stored actions are implicitly feasible; they never
    change the value function, so only the extreme actions are kept.
    """

    actions: tuple[Observable, ...]

    def __post_init__(self):
        if len(self.actions) == 0:
            raise ValueError("action set must be non-empty")
        dims = self.actions[0].shape.block_dims
        for a in self.actions[1:]:
            if a.shape.block_dims != dims:
                raise ShapeMismatch("actions must share one shape")

    @property
    def shape(self):
        return self.actions[0].shape


@dataclass(frozen=True, eq=False)
class SmoothGenerator:
    """Differentiable convex function with an explicit gradient.

    ``grad`` returns an observable; on the trace-one manifold it is
    only determined up to multiples of the identity, which cancel in
    every pairing with a state difference.
    """

    eval: Callable[[State], float]
    grad: Callable[[State], Observable]
    name: str = ""


@dataclass(frozen=True, eq=False)
class ValueFunction:
    """Convex value function backed by an ActionSet or a SmoothGenerator."""

    source: ActionSet | SmoothGenerator

    @classmethod
    def from_actions(cls, actions: Sequence[Observable]) -> "ValueFunction":
        return cls(ActionSet(tuple(actions)))

    @classmethod
    def from_generator(cls, gen: SmoothGenerator) -> "ValueFunction":
        return cls(gen)

    @property
    def is_finite_set(self) -> bool:
        return isinstance(self.source, ActionSet)

    def __call__(self, s: State) -> float:
        return value(self, s)


def action_set_from_payoffs(payoff_vectors) -> ValueFunction:
    """Value function from classical payoff rows (one action per row)."""
    actions = tuple(ss.classical_observable(v) for v in payoff_vectors)
    return ValueFunction.from_actions(actions)


def value(F: ValueFunction, s: State) -> float:
    """F(s): exact max over stored actions, or generator evaluation."""
    if F.is_finite_set:
        return max(inner(a, s) for a in F.source.actions)
    return float(F.source.eval(s))


def _payoff_on_difference(a: Observable, s1: State, s0: State) -> float:
    return inner(a, s1) - inner(a, s0)


def _affine(s0: State, s1: State, t: float) -> State:
    """(1 - t) s0 + t s1 without simplex checks; t may leave [0, 1]."""
    blocks = tuple((1.0 - t) * b0 + t * b1 for b0, b1 in zip(s0.blocks, s1.blocks))
    return State(s0.shape, blocks)


def action_regret(F: ValueFunction, s: State, a: Observable) -> float:
    """F(s) - <a, s>.  Non-negative whenever a is feasible for F; a
    negative value flags an observable that exceeds F somewhere."""
    r = value(F, s) - inner(a, s)
    if r < -1e-9:
        warnings.warn(
            "negative action regret: observable is not dominated by the value function",
            stacklevel=2,
        )
    return r


def optimal_actions(F: ValueFunction, s: State, tol: float = 1e-9) -> tuple[Observable, ...]:
    """All stored actions within ``tol`` of the optimum at s.

    Ties are resolved by the tolerance band, never by ordering: state
    regret uses the whole optimal face.
    """
    if not F.is_finite_set:
        raise RequiresFiniteActions("optimal_actions needs a finite action set")
    pays = [inner(a, s) for a in F.source.actions]
    best = max(pays)
    return tuple(a for a, p in zip(F.source.actions, pays) if p >= best - tol)


def state_regret(F: ValueFunction, s1: State, s0: State, tol: float = 1e-9) -> float:
    """Regret of acting optimally for s0 when the truth is s1.

    Finite action sets maximize the directional payoff over the optimal
    face of s0 (the closure of the feasible set makes that max attained);
    generators use the gradient, falling back to a numerical one-sided
    derivative on boundary states.
    """
    if F.is_finite_set:
        face = optimal_actions(F, s0, tol)
        deriv = max(_payoff_on_difference(a, s1, s0) for a in face)
        return value(F, s1) - value(F, s0) - deriv
    gen: SmoothGenerator = F.source
    try:
        g = gen.grad(s0)
    except (BoundaryState, ValueError, FloatingPointError, np.linalg.LinAlgError):
        return _one_sided_regret(gen, s1, s0)
    return float(gen.eval(s1)) - float(gen.eval(s0)) - _payoff_on_difference(g, s1, s0)


def _one_sided_regret(gen: SmoothGenerator, s1: State, s0: State, h: float = 1e-6) -> float:
    """Eq.-style fallback: right derivative of f(t) = F((1-t)s0 + t s1)
    at t = 0 by Richardson-extrapolated forward differences."""

    def f(t: float) -> float:
        return float(gen.eval(_affine(s0, s1, t)))

    f0, f1 = f(0.0), f(1.0)
    if not np.isfinite(f0) or not np.isfinite(f1):
        return float("inf")
    d1 = (f(h) - f0) / h
    d2 = (f(2 * h) - f0) / (2 * h)
    deriv = 2 * d1 - d2
    if not np.isfinite(deriv) or deriv < -1e12:
        return float("inf")
    return f1 - f0 - deriv


def bregman(gen: SmoothGenerator, s1: State, s0: State) -> float:
    """F(s1) - F(s0) - <s1 - s0, grad F(s0)> for a smooth generator."""
    try:
        g = gen.grad(s0)
    except Exception as exc:
        raise BoundaryState(f"gradient undefined at s0: {exc}") from exc
    return float(gen.eval(s1)) - float(gen.eval(s0)) - _payoff_on_difference(g, s1, s0)


def bregman_identity_residual(D, states: Sequence[State], weights, s: State) -> float:
    """| sum t_i D(s_i, s) - sum t_i D(s_i, sbar) - D(sbar, s) | with
    sbar the weighted mixture.  Zero for every Bregman divergence; the
    gap measures how far D is from one.

    ``D`` is any callable pair-of-states -> real.
    """
    w = np.asarray(weights, dtype=float).ravel()
    sbar = mix(states, w)
    lhs = sum(t * D(si, s) for t, si in zip(w, states))
    mid = sum(t * D(si, sbar) for t, si in zip(w, states))
    return abs(lhs - mid - D(sbar, s))


def reconstruct_check(F: ValueFunction, D, s0: State, sample_states: Sequence[State],
                      tol: float = 1e-9) -> float:
    """Max residual |F(s1) - D(s1, s0) - <a, s1>| over the samples,
    where a is the unique optimal action at s0.

    For a generator-backed F the optimal action is the affine observable
    grad F(s0) + (F(s0) - <grad F(s0), s0>) I.
    """
    if F.is_finite_set:
        face = optimal_actions(F, s0, tol)
        if len(face) != 1:
            raise NonUniqueOptimum(f"{len(face)} optimal actions at s0")
        a = face[0]
    else:
        gen: SmoothGenerator = F.source
        g = gen.grad(s0)
        c = float(gen.eval(s0)) - inner(g, s0)
        eye = ss.identity_observable(s0.shape)
        a = Observable(
            s0.shape,
            tuple(gb + c * ib for gb, ib in zip(g.blocks, eye.blocks)),
        )
    return max(abs(value(F, s1) - D(s1, s0) - inner(a, s1)) for s1 in sample_states)


def prune_dominated(aset: ActionSet, tol: float = 1e-12) -> ActionSet:
    """Drop actions dominated by another stored action.

    a dominates b when a - b is positive semidefinite blockwise, i.e.
    <a, s> >= <b, s> on the whole state space.  Pruning never changes
    the value function and is opt-in.
    """

    def dominates(a: Observable, b: Observable) -> bool:
        for ab, bb in zip(a.blocks, b.blocks):
            d = ab - bb
            if np.linalg.eigvalsh((d + d.conj().T) / 2).min() < -tol:
                return False
        return True

    actions = list(aset.actions)
    keep = []
    for i, b in enumerate(actions):
        dominated = False
        for j, a in enumerate(actions):
            if i == j:
                continue
            if dominates(a, b) and not (j > i and dominates(b, a)):
                dominated = True
                break
        if not dominated:
            keep.append(b)
    return ActionSet(tuple(keep))


# ---------------------------------------------------------------------------
# stock generators


def neg_entropy_generator(supp_tol: float = 1e-12) -> SmoothGenerator:
    """F(s) = tr[s ln s]; its Bregman divergence is relative entropy."""

    def ev(s: State) -> float:
        return -ss.entropy(s)

    def gr(s: State) -> Observable:
        blocks = []
        for b in s.blocks:
            lam, vec = np.linalg.eigh(b)
            if lam.min() <= supp_tol:
                raise BoundaryState("log gradient needs full support")
            blocks.append(vec @ np.diag(np.log(lam) + 1.0) @ vec.conj().T)
        return Observable(s.shape, tuple(blocks))

    return SmoothGenerator(ev, gr, name="neg_entropy")


def quadratic_generator(scale: float = 1.0) -> SmoothGenerator:
    """F(s) = scale * tr[s^2]; its Bregman divergence is
    scale * squared Hilbert-Schmidt distance."""

    def ev(s: State) -> float:
        return scale * sum(float(np.trace(b @ b).real) for b in s.blocks)

    def gr(s: State) -> Observable:
        return Observable(s.shape, tuple(2.0 * scale * b for b in s.blocks))

    return SmoothGenerator(ev, gr, name=f"quadratic[{scale}]")


def gradient_fd_residual(gen: SmoothGenerator, s: State, directions: Sequence[State],
                         h: float = 1e-6) -> float:
    """Largest relative mismatch between the declared gradient and a
    central finite difference along segments s -> d."""
    g = gen.grad(s)
    worst = 0.0
    for d in directions:
        lin = _payoff_on_difference(g, d, s)
        fp = float(gen.eval(_affine(s, d, h)))
        fm = float(gen.eval(_affine(s, d, -h)))
        fd = (fp - fm) / (2.0 * h)
        worst = max(worst, abs(fd - lin) / max(1.0, abs(fd)))
    return worst


def two_action_interval_example() -> ValueFunction:
    """Built-in demo on the interval: payoffs 1 - 2s and 2s - 1.

    States are (1 - s, s); the value function |1 - 2s| is piecewise
    linear with a kink at s = 1/2, so its regret violates the Bregman
    identity.
    """
    return action_set_from_payoffs([[1.0, -1.0], [-1.0, 1.0]])
