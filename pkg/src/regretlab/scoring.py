"""Proper scoring rules and their regret functions.

Internally every rule is normalized to payoff orientation (higher is
better), matching the sign convention of the regret machinery; rules
declared loss-oriented are negated at the boundary.  A proper rule f
induces the convex value function F(P) = sum_x P(x) f(x, P), and the
regret of a forecast Q against the truth P is

    D(P, Q) = F(P) - sum_x P(x) f(x, Q),

which is the Bregman divergence of F whenever f is proper and smooth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import state_space as ss
from .divergence_zoo import Divergence
from .errors import InfiniteAtVertex, SupportError
from .regret_core import SmoothGenerator, ValueFunction
from .state_space import State
from .sufficiency_checks import CheckReport, locality_check, rng_for_sample

__all__ = [
    "ScoringRule",
    "brier",
    "brier_rule",
    "log_score",
    "log_score_rule",
    "local_rule",
    "expected_score",
    "value_from_rule",
    "scoring_regret",
    "rule_from_bregman",
    "properness_check",
    "local_rule_regret_is_local",
    "scoring_divergence",
    "linear_probability_rule",
]


@dataclass(frozen=True, eq=False)
class ScoringRule:
    """Score f(x, Q) of forecasting Q when x is observed."""

    name: str
    eval: Callable[[int, np.ndarray], float]
    orientation: str = "payoff"  # or "loss"

    def payoff(self, x: int, q) -> float:
        """Evaluation in the canonical payoff orientation."""
        v = self.eval(x, np.asarray(q, dtype=float))
        return -v if self.orientation == "loss" else v


def brier(x: int, q) -> float:
    """(1/n) sum_y (Q(y) - delta_x(y))^2, a loss in [0, 2/n]."""
    q = np.asarray(q, dtype=float)
    d = np.zeros_like(q)
    d[x] = 1.0
    return float(np.sum((q - d) ** 2) / len(q))


def log_score(x: int, q) -> float:
    """ln Q(x), payoff-oriented; undefined off the support."""
    q = np.asarray(q, dtype=float)
    if q[x] <= 0.0:
        raise SupportError("log score undefined at zero forecast probability")
    return float(math.log(q[x]))


brier_rule = ScoringRule("brier", brier, orientation="loss")
log_score_rule = ScoringRule("log", log_score, orientation="payoff")
linear_probability_rule = ScoringRule("linear", lambda x, q: float(q[x]), "payoff")


def local_rule(g: Callable[[float], float], name: str = "local") -> ScoringRule:
    """Rule whose score depends only on the probability of the observed
    outcome: f(x, Q) = g(Q(x))."""
    return ScoringRule(name, lambda x, q: float(g(float(q[x]))), "payoff")


def _probs(p) -> np.ndarray:
    if isinstance(p, State):
        return ss.classical_probs(p)
    return np.asarray(p, dtype=float).ravel()


def expected_score(rule: ScoringRule, p, q) -> float:
    """sum_x P(x) f(x, Q) in payoff orientation, skipping P-null outcomes."""
    P, Q = _probs(p), _probs(q)
    return float(sum(px * rule.payoff(x, Q) for x, px in enumerate(P) if px > 0.0))


def value_from_rule(rule: ScoringRule) -> ValueFunction:
    """Value function F(P) = sum P(x) f(x, P) of a (proper) rule.

    The gradient action at P is the payoff vector x -> f(x, P), so the
    result plugs directly into the regret machinery.
    """

    def ev(s: State) -> float:
        P = _probs(s)
        return float(sum(px * rule.payoff(x, P) for x, px in enumerate(P) if px > 0.0))

    def gr(s: State):
        P = _probs(s)
        return ss.classical_observable([rule.payoff(x, P) for x in range(len(P))])

    return ValueFunction.from_generator(SmoothGenerator(ev, gr, name=f"rule[{rule.name}]"))


def scoring_regret(rule: ScoringRule, p, q) -> float:
    """F(P) - sum_x P(x) f(x, Q); non-negative iff the rule is proper."""
    P, Q = _probs(p), _probs(q)
    F = float(sum(px * rule.payoff(x, P) for x, px in enumerate(P) if px > 0.0))
    return F - expected_score(rule, P, Q)


def scoring_divergence(rule: ScoringRule) -> Divergence:
    """The regret of a rule packaged for the check harness."""
    return Divergence(
        name=f"score[{rule.name}]",
        eval=lambda s1, s2: scoring_regret(rule, s1, s2),
        generator=None,
        differentiable=True,
    )


def rule_from_bregman(D, g=None, name: str = "from_divergence") -> ScoringRule:
    """Scoring rule f(x, Q) = g(x) - D(delta_x, Q) from a divergence.

    Shifting g by a constant changes scores but never the regret.
    Raises when the divergence is infinite at a vertex against an
    interior forecast, in which case no finite rule exists.
    """

    def ev(x: int, q: np.ndarray) -> float:
        d = D(ss.delta_state(len(q), x), ss.classical_state(q))
        if math.isinf(d):
            raise InfiniteAtVertex(f"divergence infinite at vertex {x}")
        off = 0.0 if g is None else float(g(x))
        return off - d

    return ScoringRule(name, ev, "payoff")


def properness_check(rule: ScoringRule, dim: int, n_samples: int = 200,
                     seed: int = 0, tol: float = 1e-9) -> CheckReport:
    """Verify E_P f(x, Q) <= E_P f(x, P) on sampled interior forecasts."""
    report = CheckReport(name=f"properness[{rule.name}]", samples_run=n_samples, tol=tol)
    for i in range(n_samples):
        rng = rng_for_sample(seed, i)
        P = rng.dirichlet(np.ones(dim))
        Q = rng.dirichlet(np.ones(dim))
        rhs = expected_score(rule, P, P)
        lhs = expected_score(rule, P, Q)
        gap = lhs - rhs
        if gap > tol * max(1.0, abs(rhs)):
            report.violations.append(
                {"sample": i, "p": P.tolist(), "q": Q.tolist(),
                 "score_at_q": lhs, "score_at_p": rhs, "gap": gap}
            )
        report.max_gap = max(report.max_gap, gap)
    return report


def local_rule_regret_is_local(g: Callable[[float], float], dim: int,
                               n_samples: int = 200, seed: int = 0,
                               tol: float = 1e-7, name: str = "local") -> CheckReport:
    """Properness first, then locality of the induced regret.

    An improper g short-circuits: the properness report is returned so
    the failure is attributed to the right stage.
    """
    rule = local_rule(g, name=name)
    proper = properness_check(rule, dim, n_samples=min(n_samples, 200), seed=seed)
    if not proper.passed:
        return proper
    return locality_check(scoring_divergence(rule), dim, n_samples, seed=seed, tol=tol)
