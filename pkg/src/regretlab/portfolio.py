"""Log-optimal constant-rebalanced portfolios and their regret.

A market is a k x m matrix of price relatives (assets x outcomes); a
portfolio b on the asset simplex earns <X_j, b> in outcome j and the
objective is the expected log payoff

    W(b, P) = sum_j P_j ln <X_j, b>.

b is optimal iff r_i(b) = sum_j P_j X_ij / <X_j, b> <= 1 for every
asset, with equality on the support of b.  The solver iterates the
multiplicative update b <- b r(b), which improves W monotonically for
this objective; stalls near a boundary face are resolved by snapping
small coordinates to zero and re-verifying the full optimality
condition, which is the acceptance test for every solution returned.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import state_space as ss
from .divergence_zoo import Divergence
from .errors import DomainError, Infeasible, NumericalFailure
from .state_space import State
from .sufficiency_checks import CheckReport, classical_monotonicity_sampler, monotonicity_check

__all__ = [
    "PriceRelativeMatrix",
    "doubling_rate",
    "kkt_residual",
    "log_optimal_portfolio",
    "portfolio_regret",
    "portfolio_divergence",
    "dominates",
    "two_asset_thresholds",
    "gambling_classifier",
    "monotone_regret_check",
    "two_asset_two_outcome_example",
]


@dataclass(frozen=True, eq=False)
class PriceRelativeMatrix:
    """Price relatives, one row per asset, one column per outcome."""

    X: np.ndarray

    def __post_init__(self):
        x = np.array(self.X, dtype=float)
        if x.ndim != 2:
            raise DomainError("price relatives must form a 2-d matrix")
        if np.any(x < 0.0):
            raise DomainError("price relatives must be non-negative")
        if np.any(x.max(axis=0) <= 0.0):
            raise DomainError("every outcome needs a positive payoff for some asset")
        if np.any(x.max(axis=1) <= 0.0):
            raise DomainError("an asset paying zero everywhere is not an asset")
        x.setflags(write=False)
        object.__setattr__(self, "X", x)

    @property
    def n_assets(self) -> int:
        return self.X.shape[0]

    @property
    def n_outcomes(self) -> int:
        return self.X.shape[1]


def _probs(p) -> np.ndarray:
    if isinstance(p, State):
        return ss.classical_probs(p)
    return np.asarray(p, dtype=float).ravel()


def _portfolio(b, k: int) -> np.ndarray:
    v = np.asarray(b, dtype=float).ravel()
    if v.shape != (k,):
        raise DomainError(f"portfolio must have {k} entries")
    if np.any(v < -1e-12) or abs(v.sum() - 1.0) > 1e-9:
        raise DomainError("portfolio must be a probability vector over assets")
    return np.maximum(v, 0.0)


def doubling_rate(market: PriceRelativeMatrix, b, p) -> float:
    """W(b, P); -inf when a probable outcome pays nothing."""
    P = _probs(p)
    bv = _portfolio(b, market.n_assets)
    pay = market.X.T @ bv
    supp = P > 0.0
    if np.any(pay[supp] <= 0.0):
        return -math.inf
    return float(np.dot(P[supp], np.log(pay[supp])))


def kkt_residual(market: PriceRelativeMatrix, p, b) -> float:
    """Distance from the optimality condition: the worst excess of
    r_i over one, plus the complementarity gap b_i |r_i - 1| on the
    support."""
    P = _probs(p)
    bv = _portfolio(b, market.n_assets)
    pay = market.X.T @ bv
    supp = P > 0.0
    if np.any(pay[supp] <= 0.0):
        return math.inf
    r = market.X[:, supp] @ (P[supp] / pay[supp])
    excess = float(np.max(np.maximum(r - 1.0, 0.0)))
    comp = float(np.max(bv * np.abs(r - 1.0)))
    return excess + comp


def log_optimal_portfolio(market: PriceRelativeMatrix, p, tol: float = 1e-9,
                          max_iter: int = 200_000, warm_start=None):
    """Maximize W(., P) over the asset simplex.

    Returns (b, W*).  The returned portfolio satisfies the optimality
    condition with residual at most ``tol``; otherwise the solver
    raises rather than returning a silently sloppy answer.
    """
    P = _probs(p)
    if abs(P.sum() - 1.0) > 1e-9 or np.any(P < -1e-12):
        raise DomainError("outcome distribution must be a probability vector")
    supp = P > 0.0
    if not np.any(supp):
        raise DomainError("outcome distribution has empty support")
    # zero-probability outcomes cannot affect W but can fake a -inf
    X = market.X[:, supp]
    Pq = P[supp]
    k = market.n_assets
    if warm_start is not None:
        b = np.maximum(_portfolio(warm_start, k), 1e-12)
        b = b / b.sum()
    else:
        b = np.full(k, 1.0 / k)
    best_w = _w(X, Pq, b)
    if not np.isfinite(best_w):
        b = np.full(k, 1.0 / k)
        best_w = _w(X, Pq, b)
    if not np.isfinite(best_w):
        raise Infeasible("no portfolio with finite growth rate")
    check_every = 32
    for it in range(max_iter):
        pay = X.T @ b
        r = X @ (Pq / pay)
        b_new = b * r
        b_new /= b_new.sum()
        w_new = _w(X, Pq, b_new)
        if w_new < best_w - 1e-15:
            # damped fallback; the plain update is monotone for this
            # objective so this is a numerical safety net only
            b_new = 0.5 * (b + b_new)
            b_new /= b_new.sum()
            w_new = _w(X, Pq, b_new)
        b = b_new
        best_w = max(best_w, w_new)
        if (it + 1) % check_every == 0 or it < 4:
            if _residual(X, Pq, b) <= tol:
                return b, _w(X, Pq, b)
            snapped = _snap_to_face(X, Pq, b, tol)
            if snapped is not None:
                return snapped, _w(X, Pq, snapped)
    if _residual(X, Pq, b) <= tol:
        return b, _w(X, Pq, b)
    raise NumericalFailure(
        f"portfolio solver stalled at residual {_residual(X, Pq, b):.3e}"
    )


def _w(X, P, b) -> float:
    pay = X.T @ b
    if np.any(pay <= 0.0):
        return -math.inf
    return float(P @ np.log(pay))


def _residual(X, P, b) -> float:
    pay = X.T @ b
    if np.any(pay <= 0.0):
        return math.inf
    r = X @ (P / pay)
    return float(np.max(np.maximum(r - 1.0, 0.0)) + np.max(b * np.abs(r - 1.0)))


def _snap_to_face(X, P, b, tol):
    """Try zeroing visibly decaying coordinates; accept only when the
    full optimality condition certifies the snapped portfolio."""
    for cut in (1e-12, 1e-9, 1e-6, 1e-3):
        small = b < cut
        if not small.any() or small.all():
            continue
        cand = np.where(small, 0.0, b)
        cand = cand / cand.sum()
        # a short burst of updates on the face polishes the kept part
        for _ in range(64):
            pay = X.T @ cand
            if np.any(pay <= 0.0):
                break
            cand = cand * (X @ (P / pay))
            cand /= cand.sum()
        if _residual(X, P, cand) <= tol:
            return cand
    return None


def portfolio_regret(market: PriceRelativeMatrix, p, q, tol: float = 1e-9) -> float:
    """Growth-rate loss of trading the Q-optimal portfolio under P.

    When the Q-optimal portfolio is not unique the whole optimal set
    shares its payoffs on the support of Q, so the regret takes the
    minimum over the set; with P-mass outside the support of Q this
    needs a second concave solve on the optimal face, and +inf (with a
    warning) when every Q-optimal portfolio goes broke under P.
    """
    P, Q = _probs(p), _probs(q)
    b_p, w_p = log_optimal_portfolio(market, P, tol=tol)
    b_q, _ = log_optimal_portfolio(market, Q, tol=tol)
    supp_q = Q > 0.0
    payoffs_q = market.X[:, supp_q].T @ b_q
    if np.all(supp_q[P > 0.0]):
        # payoffs on supp(Q) agree across all Q-optimal portfolios
        w_cross = float(P[P > 0.0] @ np.log(payoffs_q[_embed(P > 0.0, supp_q)]))
        return w_p - w_cross
    w_face = _best_on_q_face(market, P, Q, b_q, payoffs_q, tol)
    if w_face == -math.inf:
        warnings.warn("every Q-optimal portfolio has zero payoff on a P-positive outcome")
        return math.inf
    return w_p - w_face


def _embed(mask_sub, mask_sup):
    """Positions of mask_sub's True entries inside mask_sup's True ones."""
    idx = np.cumsum(mask_sup) - 1
    return idx[mask_sub]


def _best_on_q_face(market, P, Q, b_q, payoffs_q, tol):
    """max W(., P) over the Q-optimal set: portfolios with the same
    payoffs on supp(Q), support restricted to assets with active
    optimality, and simplex constraints."""
    from scipy.optimize import minimize

    X = market.X
    supp_q = Q > 0.0
    pay_full = X.T @ b_q
    r = X[:, supp_q] @ (Q[supp_q] / pay_full[supp_q])
    active = r >= 1.0 - 1e-7
    extra = (P > 0.0) & ~supp_q

    def neg_w(b):
        pay = X[:, extra].T @ b
        if np.any(pay <= 1e-300):
            return 1e6
        return -float(P[extra] @ np.log(pay))

    def neg_w_grad(b):
        pay = X[:, extra].T @ b
        if np.any(pay <= 1e-300):
            return np.zeros_like(b)
        return -(X[:, extra] @ (P[extra] / pay))

    cons = [
        {"type": "eq", "fun": lambda b: b.sum() - 1.0, "jac": lambda b: np.ones_like(b)},
        {
            "type": "eq",
            "fun": lambda b: X[:, supp_q].T @ b - payoffs_q,
            "jac": lambda b: X[:, supp_q].T,
        },
    ]
    bounds = [(0.0, 1.0) if a else (0.0, 0.0) for a in active]
    res = minimize(neg_w, b_q, jac=neg_w_grad, bounds=bounds, constraints=cons,
                   method="SLSQP", options={"maxiter": 500, "ftol": 1e-14})
    b_face = np.clip(res.x, 0.0, None)
    total = b_face.sum()
    if total <= 0.0:
        return -math.inf
    b_face /= total
    w = doubling_rate(market, b_face, P)
    w_direct = doubling_rate(market, b_q, P)
    return max(w, w_direct)


def portfolio_divergence(market: PriceRelativeMatrix, tol: float = 1e-9) -> Divergence:
    """Regret over the outcome simplex packaged for the check harness."""
    return Divergence(
        name="portfolio_regret",
        eval=lambda s1, s2: portfolio_regret(market, s1, s2, tol=tol),
        generator=None,
        differentiable=False,
    )


def dominates(market: PriceRelativeMatrix, b1, b2, strict: bool = False) -> bool:
    """Outcome-wise payoff comparison of two portfolios."""
    p1 = market.X.T @ _portfolio(b1, market.n_assets)
    p2 = market.X.T @ _portfolio(b2, market.n_assets)
    return bool(np.all(p1 > p2) if strict else np.all(p1 >= p2))


def _constraint_interval(a: float, b: float):
    """t-interval in [0, 1] where (1-t) a + t b <= 1, with inf handling
    for gambling assets (zero payoffs)."""
    if math.isinf(a) and math.isinf(b):
        return None
    if math.isinf(a):
        return (1.0, 1.0) if b <= 1.0 else None
    if math.isinf(b):
        return (0.0, 0.0) if a <= 1.0 else None
    if a <= 1.0 and b <= 1.0:
        return (0.0, 1.0)
    if a <= 1.0 < b:
        return (0.0, (1.0 - a) / (b - a))
    if b <= 1.0 < a:
        return ((a - 1.0) / (a - b), 1.0)
    return None


def two_asset_thresholds(x, y, j: int):
    """Closed interval of mixing parameters t for which everything goes
    into asset j, in a market with two outcome vectors x and y and
    outcome distribution (1 - t, t).

    Assets must be sorted by strictly decreasing payoff ratio x_i/y_i;
    ties mean one asset dominates the other and are pruned first.
    """
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    if xv.shape != yv.shape or xv.ndim != 1:
        raise DomainError("need two payoff vectors of equal length")
    with np.errstate(divide="ignore"):
        ratios = np.where(yv > 0.0, xv / np.where(yv > 0.0, yv, 1.0), math.inf)
    keep = []
    for i in range(len(xv)):
        if keep and math.isclose(ratios[i], ratios[keep[-1]], rel_tol=1e-12):
            # equal ratio: the larger payoff dominates
            if xv[i] > xv[keep[-1]]:
                keep[-1] = i
            continue
        keep.append(i)
    if any(ratios[a] <= ratios[b] for a, b in zip(keep, keep[1:])):
        raise DomainError("assets must be sorted by decreasing payoff ratio")
    if j not in keep:
        raise DomainError(f"asset {j} is dominated by an equal-ratio asset")
    pos = keep.index(j)
    lo, hi = 0.0, 1.0
    if pos + 1 < len(keep):
        nxt = keep[pos + 1]
        a = xv[nxt] / xv[j] if xv[j] > 0.0 else math.inf
        b = yv[nxt] / yv[j] if yv[j] > 0.0 else math.inf
        iv = _constraint_interval(a, b)
        if iv is None:
            raise DomainError("no feasible t for this asset")
        lo, hi = max(lo, iv[0]), min(hi, iv[1])
    if pos > 0:
        prv = keep[pos - 1]
        a = xv[prv] / xv[j] if xv[j] > 0.0 else math.inf
        b = yv[prv] / yv[j] if yv[j] > 0.0 else math.inf
        iv = _constraint_interval(a, b)
        if iv is None:
            raise DomainError("no feasible t for this asset")
        lo, hi = max(lo, iv[0]), min(hi, iv[1])
    return lo, hi


def gambling_classifier(market: PriceRelativeMatrix) -> dict:
    """Detect gambling structure: assets paying in exactly one outcome.

    When the gambling assets cover every outcome, the odds vector and
    its fairness class follow; a super-fair gamble admits a portfolio
    with a guaranteed payoff factor above one (a Dutch book), which is
    returned explicitly.
    """
    X = market.X
    k, m = X.shape
    gambling = [i for i in range(k) if np.count_nonzero(X[i] > 0.0) == 1]
    report = {
        "is_gambling": len(gambling) == k and k == m,
        "gambling_assets": gambling,
        "odds": None,
        "fairness": None,
        "dutch_book": None,
    }
    best_for_outcome = {}
    for i in gambling:
        j = int(np.nonzero(X[i] > 0.0)[0][0])
        if j not in best_for_outcome or X[i, j] > X[best_for_outcome[j], j]:
            best_for_outcome[j] = i
    if len(best_for_outcome) != m:
        return report
    odds = np.array([X[best_for_outcome[j], j] for j in range(m)])
    inv_sum = float(np.sum(1.0 / odds))
    report["odds"] = odds.tolist()
    if math.isclose(inv_sum, 1.0, rel_tol=1e-12, abs_tol=1e-12):
        report["fairness"] = "fair"
    elif inv_sum < 1.0:
        report["fairness"] = "super-fair"
        b = np.zeros(k)
        for j in range(m):
            b[best_for_outcome[j]] = (1.0 / odds[j]) / inv_sum
        report["dutch_book"] = {"portfolio": b.tolist(), "factor": 1.0 / inv_sum}
    else:
        report["fairness"] = "sub-fair"
    return report


def monotone_regret_check(market: PriceRelativeMatrix, n_samples: int = 100,
                          seed: int = 0, tol: float = 1e-6) -> CheckReport:
    """Data-processing check of the portfolio regret on the outcome
    simplex.  Flat regions of the growth optimum break strictness, and
    with it monotonicity, unless the market is orthogonal gambling."""
    sampler = classical_monotonicity_sampler(market.n_outcomes)
    return monotonicity_check(
        portfolio_divergence(market, tol=1e-9), sampler, n_samples,
        seed=seed, tol=tol, widen_rounds=0,
    )


def two_asset_two_outcome_example() -> PriceRelativeMatrix:
    """Built-in demo market: payoffs (2, 1/2) and (1/2, 2)."""
    return PriceRelativeMatrix(np.array([[2.0, 0.5], [0.5, 2.0]]))
