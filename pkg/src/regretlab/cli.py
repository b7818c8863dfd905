"""Single executable multiplexing every subsystem.

Exit codes: 0 success, 2 usage or input error, 3 a check found a
violation, 4 numerical failure.  All randomized commands take --seed
(default from REGRETLAB_SEED, then 0) and identical argv + seed gives
byte-identical output.  Output is JSON except `folio curve`, which
emits CSV rows for plotting.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import (
    coding,
    divergence_zoo as zoo,
    portfolio,
    regret_core,
    scoring,
    state_space as ss,
    statmech,
    sufficiency_checks as checks,
)
from .errors import NumericalFailure, RegretlabError, TooLarge

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VIOLATION = 3
EXIT_NUMERICAL = 4

# operation -> subcommand surface; the test suite asserts this table
# covers every public operation of every subsystem.
COMMAND_TABLE = {
    "state_space.validate_state": "div compute",
    "state_space.inner": "regret eval",
    "state_space.spectrum": "div compute --name qre",
    "state_space.entropy": "thermo exergy",
    "state_space.mix": "regret bregman-residual",
    "state_space.orthogonal": "check local",
    "regret_core.value": "regret eval",
    "regret_core.action_regret": "regret eval",
    "regret_core.optimal_actions": "regret state",
    "regret_core.state_regret": "regret state",
    "regret_core.bregman": "check fit --div kl",
    "regret_core.bregman_identity_residual": "regret bregman-residual",
    "regret_core.reconstruct_check": "regret example1",
    "divergence_zoo.kl": "div compute --name kl",
    "divergence_zoo.quantum_relative_entropy": "div compute --name qre",
    "divergence_zoo.itakura_saito": "div compute --name is",
    "divergence_zoo.is_translation": "div compute --name is",
    "divergence_zoo.separable_bregman": "div compute --name is",
    "sufficiency_checks.apply_channel": "check monotone",
    "sufficiency_checks.monotonicity_check": "check monotone",
    "sufficiency_checks.sufficiency_check": "check sufficient",
    "sufficiency_checks.build_locality_pair": "check sufficient",
    "sufficiency_checks.locality_check": "check local",
    "sufficiency_checks.kl_proportionality_fit": "check fit",
    "coding.kraft_sum": "code bounds",
    "coding.shannon_lengths": "code blockcode",
    "coding.huffman_lengths": "code huffman",
    "coding.expected_length": "code huffman",
    "coding.integer_value_function": "code bounds",
    "coding.shannon_bounds_check": "code bounds",
    "coding.block_code_lengths": "code blockcode",
    "scoring.brier": "score eval --rule brier",
    "scoring.log_score": "score eval --rule log",
    "scoring.value_from_rule": "score regret",
    "scoring.scoring_regret": "score regret",
    "scoring.rule_from_bregman": "score regret",
    "scoring.properness_check": "score proper",
    "scoring.local_rule_regret_is_local": "score proper --rule log",
    "statmech.hamiltonian": "thermo exergy",
    "statmech.partition_function": "thermo exergy",
    "statmech.gibbs_state": "thermo exergy",
    "statmech.internal_energy": "thermo exergy",
    "statmech.entropy_identity_residual": "thermo exergy",
    "statmech.exergy": "thermo exergy",
    "statmech.exergy_kl_residual": "thermo exergy",
    "portfolio.doubling_rate": "folio optimal",
    "portfolio.log_optimal_portfolio": "folio optimal",
    "portfolio.kkt_residual": "folio optimal",
    "portfolio.portfolio_regret": "folio regret",
    "portfolio.dominates": "folio optimal",
    "portfolio.two_asset_thresholds": "folio curve --example 5",
    "portfolio.gambling_classifier": "folio regret",
    "portfolio.monotone_regret_check": "check monotone",
    "cli.dispatch": "any",
    "cli.reproduce_all": "reproduce",
}


def _default_seed() -> int:
    return int(os.environ.get("REGRETLAB_SEED", "0"))


def _emit(payload) -> None:
    sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")


def _num(x):
    if x is None:
        return None
    x = float(x)
    if math.isinf(x) or math.isnan(x):
        return None
    return x


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _load_state(path) -> ss.State:
    return ss.state_from_dict(_load_json(path))


def _load_actions(path) -> regret_core.ValueFunction:
    d = _load_json(path)
    if "payoffs" in d:
        return regret_core.action_set_from_payoffs(d["payoffs"])
    actions = [ss.observable_from_dict(a) for a in d["actions"]]
    return regret_core.ValueFunction.from_actions(actions)


def _load_vector(path) -> np.ndarray:
    d = _load_json(path)
    if isinstance(d, dict):
        d = d.get("probs", d.get("values"))
    return np.asarray(d, dtype=float)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_regret(args) -> int:
    if args.action == "eval":
        F = _load_actions(args.actions)
        s = _load_state(args.state)
        _emit({"value": regret_core.value(F, s)})
        return EXIT_OK
    if args.action == "state":
        F = _load_actions(args.actions)
        s1, s0 = _load_state(args.s1), _load_state(args.s0)
        _emit({"regret": regret_core.state_regret(F, s1, s0)})
        return EXIT_OK
    if args.action == "bregman-residual":
        F = _load_actions(args.actions)
        mix_spec = _load_json(args.mix)
        states = [ss.state_from_dict(d) for d in mix_spec["states"]]
        weights = mix_spec["weights"]
        s = _load_state(args.s)

        def D(a, b):
            return regret_core.state_regret(F, a, b)

        _emit({"residual": regret_core.bregman_identity_residual(D, states, weights, s)})
        return EXIT_OK
    if args.action == "example1":
        F = regret_core.two_action_interval_example()

        def D(a, b):
            return regret_core.state_regret(F, a, b)

        states = [ss.classical_state([1.0, 0.0]), ss.classical_state([0.0, 1.0])]
        weights = [1.0 / 3.0, 2.0 / 3.0]
        half = ss.classical_state([0.5, 0.5])
        sbar = ss.mix(states, weights)
        sum_half = sum(w * D(s, half) for w, s in zip(weights, states))
        sum_sbar = sum(w * D(s, sbar) for w, s in zip(weights, states))
        _emit(
            {
                "sum_regret_at_center": sum_half,
                "sum_regret_at_mixture": sum_sbar,
                "identity_residual": regret_core.bregman_identity_residual(
                    D, states, weights, half
                ),
            }
        )
        return EXIT_OK
    raise AssertionError(args.action)


def _cmd_div(args) -> int:
    name = args.name
    if name == "is":
        a = _load_vector(args.a)
        b = _load_vector(args.b)
        if a.size == 1 and b.size == 1:
            v = zoo.itakura_saito(float(a), float(b))
        else:
            v = zoo.itakura_saito_vector(a, b)
        _emit({"value": _num(v), "infinite": bool(math.isinf(v))})
        return EXIT_OK
    D = zoo.get_divergence(name)
    s1, s2 = _load_state(args.a), _load_state(args.b)
    v = D(s1, s2)
    _emit({"value": _num(v), "infinite": bool(math.isinf(v))})
    return EXIT_OK


def _check_divergence(name: str):
    if name == "logscore":
        return scoring.scoring_divergence(scoring.log_score_rule)
    return zoo.get_divergence(name)


def _cmd_check(args) -> int:
    D = _check_divergence(args.div)
    if args.kind == "monotone":
        if args.div == "qre":
            sampler = checks.quantum_monotonicity_sampler(args.dim)
        else:
            sampler = checks.classical_monotonicity_sampler(args.dim)
        report = checks.monotonicity_check(D, sampler, args.samples, seed=args.seed)
        _emit(report.to_dict())
        return EXIT_OK if report.passed else EXIT_VIOLATION
    if args.kind == "local":
        report = checks.locality_check(D, args.dim, args.samples, seed=args.seed)
        _emit(report.to_dict())
        return EXIT_OK if report.passed else EXIT_VIOLATION
    if args.kind == "sufficient":
        worst = None
        for i in range(args.samples):
            rng = checks.rng_for_sample(args.seed, i)
            s1, sigma, rho, t = checks.sample_orthogonal_triple(rng, args.dim)
            pair = checks.build_locality_pair(s1, sigma, rho)
            mixed = ss.mix([s1, sigma], [t, 1.0 - t])
            report = checks.sufficiency_check(D, s1, mixed, pair)
            if worst is None or report.max_gap > worst.max_gap or not report.passed:
                worst = report
            if not report.passed:
                break
        worst.samples_run = args.samples
        _emit(worst.to_dict())
        return EXIT_OK if worst.passed else EXIT_VIOLATION
    if args.kind == "fit":
        c, residual = checks.kl_proportionality_fit(
            D, args.dim, n_samples=args.samples, seed=args.seed
        )
        _emit({"c": c, "residual": residual})
        return EXIT_OK
    raise AssertionError(args.kind)


def _cmd_code(args) -> int:
    probs = _load_vector(args.probs)
    if args.action == "huffman":
        clf = coding.huffman_lengths(probs)
        _emit(
            {
                "lengths": list(clf.lengths),
                "mean": coding.expected_length(clf.lengths, probs),
                "kraft": clf.kraft,
            }
        )
        return EXIT_OK
    if args.action == "bounds":
        h, lstar, upper = coding.shannon_bounds_check(probs, args.beta)
        _emit(
            {
                "entropy": h,
                "optimal_mean": lstar,
                "upper": upper,
                "holds": bool(h <= lstar + 1e-12 and lstar <= upper + 1e-12),
            }
        )
        return EXIT_OK
    if args.action == "blockcode":
        clf = coding.shannon_lengths(probs, args.beta)
        result = coding.block_code_lengths(clf, args.n, seed=args.seed)
        _emit(result)
        return EXIT_OK
    raise AssertionError(args.action)


def _cmd_score(args) -> int:
    rule = {"brier": scoring.brier_rule, "log": scoring.log_score_rule}[args.rule]
    if args.action == "proper":
        dim = len(_load_vector(args.p)) if args.p else 3
        report = scoring.properness_check(rule, dim, n_samples=args.samples, seed=args.seed)
        _emit(report.to_dict())
        return EXIT_OK if report.passed else EXIT_VIOLATION
    p = _load_vector(args.p)
    q = _load_vector(args.q)
    if args.action == "eval":
        _emit({"expected_score": scoring.expected_score(rule, p, q)})
        return EXIT_OK
    if args.action == "regret":
        _emit({"regret": scoring.scoring_regret(rule, p, q)})
        return EXIT_OK
    raise AssertionError(args.action)


def _cmd_thermo(args) -> int:
    fields = _load_vector(args.fields)
    sys_ = statmech.SpinSystem(mu=args.mu, fields=tuple(fields))
    k = statmech.BOLTZMANN_SI if args.k == "si" else 1.0
    params = statmech.ThermalParams(beta=args.beta, beta0=args.beta0, k=k)
    ex = statmech.exergy(sys_, params)
    d = zoo.kl(
        statmech.gibbs_state(sys_, params.beta),
        statmech.gibbs_state(sys_, params.beta0),
    )
    _emit(
        {
            "exergy": ex,
            "kl": d,
            "kT0": 1.0 / params.beta0,
            "residual": abs(ex - d / params.beta0),
            "T": _num(params.temperature(params.beta)),
            "T0": _num(params.temperature(params.beta0)),
        }
    )
    return EXIT_OK


def _load_market(args) -> portfolio.PriceRelativeMatrix:
    if getattr(args, "example", None) is not None:
        if args.example != 5:
            raise RegretlabError(f"unknown built-in market {args.example}")
        return portfolio.two_asset_two_outcome_example()
    d = _load_json(args.matrix)
    if isinstance(d, dict):
        d = d["matrix"]
    return portfolio.PriceRelativeMatrix(np.asarray(d, dtype=float))


def _cmd_folio(args) -> int:
    market = _load_market(args)
    if args.action == "optimal":
        p = _load_vector(args.p)
        b, w = portfolio.log_optimal_portfolio(market, p)
        _emit(
            {
                "portfolio": b.tolist(),
                "doubling_rate": w,
                "kkt_residual": portfolio.kkt_residual(market, p, b),
            }
        )
        return EXIT_OK
    if args.action == "regret":
        p = _load_vector(args.p)
        q = _load_vector(args.q)
        v = portfolio.portfolio_regret(market, p, q)
        _emit({"regret": _num(v), "infinite": bool(math.isinf(v))})
        return EXIT_OK
    if args.action == "curve":
        if market.n_outcomes != 2:
            raise RegretlabError("curves are drawn over two-outcome markets")
        steps = args.steps
        sys.stdout.write("t,G\n")
        warm = None
        for i in range(steps):
            t = i / (steps - 1) if steps > 1 else 0.0
            b, w = portfolio.log_optimal_portfolio(
                market, np.array([1.0 - t, t]), warm_start=warm
            )
            warm = b
            sys.stdout.write(f"{t!r},{w!r}\n")
        return EXIT_OK
    raise AssertionError(args.action)


# ---------------------------------------------------------------------------
# reproduction of the built-in worked examples


def reproduce_all() -> list[dict]:
    """Exact reference values of the built-in worked examples, checked
    against the library.  Returns one row per case."""
    rows = []

    def case(name, actual, expected, tol):
        rows.append(
            {
                "case": name,
                "actual": actual,
                "expected": expected,
                "tol": tol,
                "pass": bool(abs(actual - expected) <= tol),
            }
        )

    F = regret_core.two_action_interval_example()
    s0, s1 = ss.classical_state([1.0, 0.0]), ss.classical_state([0.0, 1.0])
    half = ss.classical_state([0.5, 0.5])
    sbar = ss.classical_state([1.0 / 3.0, 2.0 / 3.0])

    case("interval value at center", regret_core.value(F, half), 0.0, 1e-12)
    case(
        "interval action regret of losing action",
        regret_core.action_regret(F, s0, F.source.actions[1]),
        2.0,
        1e-12,
    )
    case(
        "interval optimal face size at 2/3",
        float(len(regret_core.optimal_actions(F, sbar))),
        1.0,
        0.0,
    )

    def D(a, b):
        return regret_core.state_regret(F, a, b)

    w = [1.0 / 3.0, 2.0 / 3.0]
    case("interval regret sum at mixture", w[0] * D(s0, sbar) + w[1] * D(s1, sbar),
         2.0 / 3.0, 1e-12)
    case("interval regret sum at center", w[0] * D(s0, half) + w[1] * D(s1, half),
         0.0, 1e-12)
    case(
        "interval identity residual",
        regret_core.bregman_identity_residual(D, [s0, s1], w, half),
        2.0 / 3.0,
        1e-12,
    )

    market = portfolio.two_asset_two_outcome_example()
    case(
        "market growth of first asset at t=0.2",
        portfolio.doubling_rate(market, [1.0, 0.0], [0.8, 0.2]),
        0.6 * math.log(2.0),
        1e-12,
    )
    _, w_star = portfolio.log_optimal_portfolio(market, [1.0, 0.0])
    case("market growth at t=0", w_star, math.log(2.0), 1e-12)
    lo, hi = portfolio.two_asset_thresholds([2.0, 0.5], [0.5, 2.0], 0)
    case("market upper threshold of asset 1", hi, 0.2, 1e-12)
    lo, hi = portfolio.two_asset_thresholds([2.0, 0.5], [0.5, 2.0], 1)
    case("market lower threshold of asset 2", lo, 0.8, 1e-12)
    b01, _ = portfolio.log_optimal_portfolio(market, [0.9, 0.1])
    case("market corner solution at t=0.1", float(b01[0]), 1.0, 1e-9)

    diag = portfolio.PriceRelativeMatrix(np.diag([3.0, 3.0, 3.0]))
    rng = np.random.default_rng(11)
    p, q = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
    case(
        "gambling regret equals divergence",
        portfolio.portfolio_regret(diag, p, q),
        zoo.kl(p, q),
        1e-9,
    )
    case(
        "fair gamble inverse odds",
        float(sum(1.0 / o for o in gambling_odds(diag))),
        1.0,
        1e-12,
    )

    sys_ = statmech.SpinSystem(mu=1.0, fields=(1.0,))
    params = statmech.ThermalParams(beta=2.0, beta0=1.0)
    case(
        "spin exergy equals scaled divergence",
        statmech.exergy(sys_, params),
        zoo.kl(
            statmech.gibbs_state(sys_, 2.0), statmech.gibbs_state(sys_, 1.0)
        ) / params.beta0,
        1e-12,
    )
    case(
        "spin entropy identity",
        statmech.entropy_identity_residual(sys_, 1.7),
        0.0,
        1e-10,
    )

    case("kraft sum of (1,2,2)", coding.kraft_sum([1, 2, 2], 2), 1.0, 1e-15)
    clf = coding.huffman_lengths([0.5, 0.25, 0.25])
    case("huffman mean on dyadic", coding.expected_length(clf.lengths, [0.5, 0.25, 0.25]),
         1.5, 1e-15)
    h, lstar, upper = coding.shannon_bounds_check([0.3, 0.3, 0.4], 2)
    case("shannon sandwich violation", max(0.0, h - lstar, lstar - upper), 0.0, 1e-12)

    case(
        "brier score of uniform forecast",
        scoring.brier(0, [0.5, 0.5]),
        0.25,
        1e-15,
    )
    case(
        "log-score regret equals divergence",
        scoring.scoring_regret(scoring.log_score_rule, [1.0, 0.0], [0.5, 0.5]),
        math.log(2.0),
        1e-12,
    )

    report = checks.monotonicity_check(
        zoo.KL, checks.classical_monotonicity_sampler(4), 50, seed=7
    )
    case("divergence data processing", float(len(report.violations)), 0.0, 0.0)
    report = checks.locality_check(zoo.KL, 2, 10, seed=7)
    case("locality vacuous on the interval", float(report.vacuous), 1.0, 0.0)
    return rows


def gambling_odds(market: portfolio.PriceRelativeMatrix):
    return portfolio.gambling_classifier(market)["odds"]


def _cmd_reproduce(args) -> int:
    rows = reproduce_all()
    width = max(len(r["case"]) for r in rows)
    for r in rows:
        status = "PASS" if r["pass"] else "FAIL"
        sys.stdout.write(
            f"{status}  {r['case']:<{width}}  actual={r['actual']!r} expected={r['expected']!r}\n"
        )
    n_fail = sum(not r["pass"] for r in rows)
    sys.stdout.write(f"{len(rows) - n_fail}/{len(rows)} reproduced\n")
    return EXIT_OK if n_fail == 0 else EXIT_VIOLATION


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="regretlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("regret", help="value functions and state regret")
    pr.add_argument("action", choices=["eval", "state", "bregman-residual", "example1"])
    pr.add_argument("--actions")
    pr.add_argument("--state")
    pr.add_argument("--s1")
    pr.add_argument("--s0")
    pr.add_argument("--mix")
    pr.add_argument("--s")
    pr.set_defaults(func=_cmd_regret)

    pd = sub.add_parser("div", help="closed-form divergences")
    pd.add_argument("action", choices=["compute"])
    pd.add_argument("--name", required=True,
                    choices=["kl", "qre", "is", "brier", "sqeuclidean"])
    pd.add_argument("--a", required=True)
    pd.add_argument("--b", required=True)
    pd.set_defaults(func=_cmd_div)

    pc = sub.add_parser("check", help="monotonicity / sufficiency / locality")
    pc.add_argument("kind", choices=["monotone", "sufficient", "local", "fit"])
    pc.add_argument("--div", required=True)
    pc.add_argument("--dim", type=int, default=3)
    pc.add_argument("--samples", type=int, default=200)
    pc.add_argument("--seed", type=int, default=None)
    pc.set_defaults(func=_cmd_check)

    pk = sub.add_parser("code", help="code lengths and Kraft machinery")
    pk.add_argument("action", choices=["huffman", "bounds", "blockcode"])
    pk.add_argument("--probs", required=True)
    pk.add_argument("--beta", type=int, default=2)
    pk.add_argument("--n", type=int, default=8)
    pk.add_argument("--seed", type=int, default=None)
    pk.set_defaults(func=_cmd_code)

    psc = sub.add_parser("score", help="scoring rules")
    psc.add_argument("action", choices=["eval", "regret", "proper"])
    psc.add_argument("--rule", required=True, choices=["brier", "log"])
    psc.add_argument("--p")
    psc.add_argument("--q")
    psc.add_argument("--samples", type=int, default=200)
    psc.add_argument("--seed", type=int, default=None)
    psc.set_defaults(func=_cmd_score)

    pt = sub.add_parser("thermo", help="spin systems and exergy")
    pt.add_argument("action", choices=["exergy"])
    pt.add_argument("--mu", type=float, default=1.0)
    pt.add_argument("--fields", required=True)
    pt.add_argument("--beta", type=float, required=True)
    pt.add_argument("--beta0", type=float, required=True)
    pt.add_argument("--k", choices=["natural", "si"], default="natural")
    pt.set_defaults(func=_cmd_thermo)

    pf = sub.add_parser("folio", help="log-optimal portfolios")
    pf.add_argument("action", choices=["optimal", "regret", "curve"])
    pf.add_argument("--matrix")
    pf.add_argument("--example", type=int)
    pf.add_argument("--p")
    pf.add_argument("--q")
    pf.add_argument("--steps", type=int, default=101)
    pf.set_defaults(func=_cmd_folio)

    pp = sub.add_parser("reproduce", help="re-run the built-in worked examples")
    pp.set_defaults(func=_cmd_reproduce)

    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None and hasattr(args, "seed"):
        args.seed = _default_seed()
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (NumericalFailure,) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    except (RegretlabError, TooLarge, KeyError, json.JSONDecodeError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(dispatch())
