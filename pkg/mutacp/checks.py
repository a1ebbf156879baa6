"""
Acceptance suites run by `mutacp check`.

Every suite returns a list of CheckOutcome. Statistical suites take their
trial count from the caller (or their own default) and their seed from the
pinned CHECK_SEED unless one is given.
"""
from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import stats

from mutacp import analysis, config, exactsolver, montecarlo
from mutacp.dynamics.configuration import Configuration, ProcessKind
from mutacp.dynamics.coupling import simulate_coupled
from mutacp.dynamics.engine import simulate
from mutacp.dynamics.trajectory import StopRule
from mutacp.graph import HomTree, Path, TwoSite, boundary_pairs, components

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckOutcome:
    """One named check; warn_only outcomes never fail a run."""
    name: str
    passed: bool
    detail: str
    warn_only: bool = False

    @property
    def status(self) -> str:
        if self.passed:
            return "PASS"
        return "WARN" if self.warn_only else "FAIL"


def _outcome(name: str, failures: list[str], ok_detail: str, warn_only: bool = False) -> CheckOutcome:
    if failures:
        shown = "; ".join(failures[:5]) + (f"; and {len(failures) - 5} more" if len(failures) > 5 else "")
        return CheckOutcome(name, False, shown, warn_only)
    return CheckOutcome(name, True, ok_detail, warn_only)


def _positive_root(a: float, b: float, c: float) -> float:
    return max(float(root.real) for root in np.roots([a, b, c]))


# ----------------------------------------------------------------------
# Arithmetic suites
# ----------------------------------------------------------------------

def check_thresholds(trials=None, seed=None, workers=1) -> list[CheckOutcome]:
    """Threshold formulas against an independent rational and quadratic-root evaluation for d = 2..10."""
    failures = []
    for d in range(2, 11):
        if abs(analysis.threshold_survive(d) - float(Fraction(1, d - 1))) > 1e-12:
            failures.append(f"threshold_survive({d})")
        for r in (0.25, 0.5, 1.0):
            if abs(analysis.threshold_die(d, r) - float(1 / (Fraction(d - 1) + 2 * Fraction(r)))) > 1e-12:
                failures.append(f"threshold_die({d}, {r})")
        left, right = analysis.window_transition(d)
        if abs(left - _positive_root(d * d - 1, d - 1, -2)) > 1e-12 or not left < right:
            failures.append(f"window_transition({d})")
        for r in (0.5, 1.0):
            independent = _positive_root(r * (d * d - 1), 2 * r * d - d - 1, -2)
            if abs(analysis.lambdabound(d, r) - independent) > 1e-12:
                failures.append(f"lambdabound({d}, {r})")
        if abs(analysis.lambdabound(d, 1.0) - left) > 1e-12:
            failures.append(f"lambdabound({d}, 1) differs from the window's left end")
        if (analysis.window_weak(d) is not None) != (d >= 6):
            failures.append(f"window_weak({d})")
    return [_outcome("thresholds", failures, "all threshold values match for d = 2..10")]


def check_gw(trials=None, seed=None, workers=1) -> list[CheckOutcome]:
    """Offspring means equal one at the thresholds and change sign exactly there on a 1e-3 lambda grid."""
    failures = []
    grid = np.round(np.arange(1, 3001) * 1e-3, 3)
    for d in range(2, 7):
        for r in (0.1, 0.3, 0.5, 0.7, 0.9):
            survive, die = 1 / (d - 1), 1 / (d - 1 + 2 * r)
            if abs(analysis.gw_mean_U(d, survive, r).value - 1) > 1e-12:
                failures.append(f"U mean at the survival threshold, d={d} r={r}")
            if abs(analysis.gw_mean_Z(d, die, r).value - 1) > 1e-12:
                failures.append(f"Z mean at the die-out threshold, d={d} r={r}")
            for lam in grid:
                if abs(lam - survive) > 1e-9 and analysis.gw_mean_U(d, lam, r).exceeds_one() != (lam > survive):
                    failures.append(f"U sign at d={d} r={r} lambda={lam}")
                if abs(lam - die) > 1e-9 and analysis.gw_mean_Z(d, lam, r).exceeds_one() != (lam > die):
                    failures.append(f"Z sign at d={d} r={r} lambda={lam}")
    return [_outcome("gw", failures, "offspring means cross one exactly at the thresholds")]


def check_drift(trials=None, seed=None, workers=1) -> list[CheckOutcome]:
    """Drift witnesses exist exactly above lambdabound and every witness has positive slack."""
    failures = []
    grid = np.round(np.arange(1, 4001) * 1e-3, 3)
    for d, r in ((2, 1.0), (2, 0.5)):
        bound = analysis.lambdabound(d, r)
        for lam in grid:
            witness = analysis.drift_feasible(d, lam, r)
            expected = lam > bound
            if (witness is not None) != expected and abs(lam - bound) > 1e-3:
                failures.append(f"feasibility at d={d} r={r} lambda={lam}")
            if witness is not None:
                slack = analysis.drift_coefficients(d, lam, r, *witness)
                if min(slack.type_slack, slack.component_floor_slack, slack.component_slack) <= 0:
                    failures.append(f"witness slack at d={d} r={r} lambda={lam}")
    return [_outcome("drift", failures, "witnesses appear exactly above the survival bound")]


def check_identities(trials=None, seed=None, workers=1) -> list[CheckOutcome]:
    """
    Structural identities on random and simulated occupied sets.

    Args:
        trials: Random sets per tree and simulated snapshots (default 1000).
        seed: Master seed of the random sets and the runs.
        workers: Unused; the suite runs in process.

    Returns:
        list[CheckOutcome]: The boundary-pair outcome and the quotient-tree outcome.
    """
    count = trials or 1000
    rng = np.random.default_rng(config.CHECK_SEED if seed is None else seed)
    failures = []
    for d in (2, 3):
        g = HomTree(d)
        for _ in range(count):
            occupied = set()
            for _ in range(int(rng.integers(1, 51))):
                v = g.root()
                for _ in range(int(rng.integers(0, 6))):
                    neighbours = g.neighbors(v)
                    v = neighbours[int(rng.integers(len(neighbours)))]
                occupied.add(v)
            pairs = boundary_pairs(g, occupied)
            expected = (d - 1) * len(occupied) + 2 * components(g, occupied)[0]
            if pairs != expected:
                failures.append(f"boundary pairs {pairs} != {expected} on d={d}")
    outcomes = [_outcome("identities.boundary", failures, f"{2 * count} random sets satisfy the boundary-pair identity")]

    failures = []
    g = HomTree(2)
    stop = StopRule(t_max=3.0, n_max=80)
    for i in range(count):
        final = simulate(g, ProcessKind.MUTATION, 1.5, 0.4, stop=stop, seed=montecarlo.trial_seed(seed, i), record=False).final
        _, labels = components(g, final.occupied)
        groups: dict[int, list] = {}
        for site, label in labels.items():
            groups.setdefault(label, []).append(site)
        for component in groups.values():
            result = analysis.quotient_identity_check(g, final, component)
            if not result.passed:
                failures.append(result.detail)
            bound = analysis.type_degree_bound(g, final, component, g.d)
            if not bound.passed:
                failures.append(bound.detail)
    outcomes.append(_outcome("identities.quotient", failures, f"{count} simulated snapshots satisfy the quotient-tree identities"))
    return outcomes


# ----------------------------------------------------------------------
# Exact suites
# ----------------------------------------------------------------------

def check_two_site(trials=None, seed=None, workers=1) -> list[CheckOutcome]:
    """
    The two-site survival values at lambda=1000, r=1/2, t=1 against the
    instantaneous-refill limit and its closed forms, with the strict ordering
    of the three starts.
    """
    closed =exactsolver.two_site_closed_forms(1.0)
    coarse = exactsolver.two_site_values(1e3, 1.0, 0.5)
    fine = exactsolver.two_site_values(1e4, 1.0, 0.5)
    limit = exactsolver.two_site_limit(1.0, 0.5)
    failures = []
    deviation = max(abs(coarse[name] - closed[name]) for name in closed)
    if deviation >= 0.01:
        failures.append(f"finite-lambda deviation {deviation:.3g}")
    order = coarse[exactsolver.PAIR_SAME] < coarse[exactsolver.SINGLE] < coarse[exactsolver.PAIR_SPLIT]
    if not order:
        failures.append("the three starts are not strictly ordered")
    if max(abs(limit[name] - closed[name]) for name in closed) > 1e-10:
        failures.append("the refill chain misses the closed forms")
    if not max(abs(fine[name] - closed[name]) for name in closed) < deviation:
        failures.append("raising lambda does not move the values toward the limit")
    return [_outcome("twosite", failures, f"max deviation {deviation:.3g} at lambda=1000")]


def check_domination(trials=None, seed=None, workers=1) -> list[CheckOutcome]:
    """Exact domination of the mutation process by the individual-death process on Path(3)."""
    failures, worst = [], math.inf
    for lam in (0.5, 1.0, 2.0):
        for r in (0.25, 0.5, 0.75):
            report = exactsolver.verify_domination(Path(3), lam, r, (0.5, 1.0, 2.0))
            worst = min(worst, report.worst_slack)
            if not report.passed:
                failures.append(f"lambda={lam} r={r}: {report.worst_case} slack {report.worst_slack:.3g}")
    return [_outcome("domination", failures, f"worst slack {worst:.3g}")]


def check_submodularity(trials=None, seed=None, workers=1) -> list[CheckOutcome]:
    """Exact submodularity of the basic contact process on Path(3) over every triple of sets."""
    failures, worst = [], math.inf
    for lam in (0.5, 1.0, 2.0):
        report = exactsolver.verify_submodularity(Path(3), lam, (0.5, 1.0, 2.0))
        worst = min(worst, report.worst_slack)
        if not report.passed:
            failures.append(f"lambda={lam}: {report.worst_case} slack {report.worst_slack:.3g}")
    return [_outcome("submodularity", failures, f"worst slack {worst:.3g}")]


# ----------------------------------------------------------------------
# Monte Carlo suites
# ----------------------------------------------------------------------

def check_coupling(trials=None, seed=None, workers=1) -> list[CheckOutcome]:
    """Coupled mutation and restricted runs at d=2, lambda=1, r=0.3 never leave the containment."""
    count = trials or 500
    stop = StopRule(t_max=20.0)
    violations = 0
    for i in range(count):
        result = simulate_coupled(2, 1.0, 0.3, stop=stop, seed=montecarlo.trial_seed(seed, i), record=False)
        violations += len(result.violations)
    failures = [f"{violations} containment violations"] if violations else []
    return [_outcome("coupling", failures, f"{count} coupled runs, no violations")]


def check_offspring(trials=None, seed=None, workers=1) -> list[CheckOutcome]:
    """
    Restricted offspring episodes at d=2, r=1/2.

    Args:
        trials: Episodes per point (default 10000).
        seed: Master seed.
        workers: Size of the process pool.

    Returns:
        list[CheckOutcome]: Mean within 5% of 0.8 at lambda=0.8, and above one
        at 99% confidence at lambda=1.25.
    """
    episodes = trials or 10_000
    low = montecarlo.estimate_offspring_mean(2, 0.8, 0.5, episodes, seed, workers)
    high = montecarlo.estimate_offspring_mean(2, 1.25, 0.5, episodes, seed, workers)
    z = float(stats.norm.ppf(0.99))
    outcomes = [_outcome(
        "offspring.subcritical",
        [] if abs(low.mean - 0.8) <= 0.05 * 0.8 else [f"mean {low.mean:.4g} is not within 5% of 0.8"],
        f"mean {low.mean:.4g} +- {low.se:.2g}",
    ), _outcome(
        "offspring.supercritical",
        [] if high.mean - z * high.se > 1 else [f"mean {high.mean:.4g} is not above 1 at 99%"],
        f"mean {high.mean:.4g} +- {high.se:.2g}",
    )]
    return outcomes


def check_phase(trials=None, seed=None, workers=1) -> list[CheckOutcome]:
    """Censored survival proxies at the well-separated points of the phase diagram on HomTree(2)."""
    count = trials or 2000
    g = HomTree(2)

    def proxy(lam, r, point):
        return montecarlo.estimate_survival(g, ProcessKind.MUTATION, lam, r, count, seed=seed, workers=workers, point=point).point

    survives = proxy(1.5, 0.3, 0)
    dies = proxy(0.4, 0.5, 1)
    small_r = proxy(0.8, 0.05, 2)
    large_r = proxy(0.8, 0.9, 3)
    return [
        _outcome("phase.survive", [] if survives >= 0.2 else [f"proxy {survives:.4g} < 0.2"], f"proxy {survives:.4g}"),
        _outcome("phase.die", [] if dies <= 0.02 else [f"proxy {dies:.4g} > 0.02"], f"proxy {dies:.4g}"),
        _outcome(
            "phase.window",
            [] if small_r <= 0.02 and large_r - small_r >= 0.05 else [f"proxy {small_r:.4g} at r=0.05, {large_r:.4g} at r=0.9"],
            f"proxy {small_r:.4g} at r=0.05, {large_r:.4g} at r=0.9",
        ),
    ]


def check_nonspatial(trials=None, seed=None, workers=1) -> list[CheckOutcome]:
    """The non-spatial model survives at lambda=2 and dies out at lambda=0.8."""
    count = trials or 2000
    high = montecarlo.estimate_survival(None, ProcessKind.NON_SPATIAL, 2.0, 0.5, count, seed=seed, workers=workers).point
    low = montecarlo.estimate_survival(None, ProcessKind.NON_SPATIAL, 0.8, 0.5, count, seed=seed, workers=workers, point=1).point
    failures = []
    if high < 0.3:
        failures.append(f"proxy {high:.4g} < 0.3 at lambda=2")
    if low > 0.02:
        failures.append(f"proxy {low:.4g} > 0.02 at lambda=0.8")
    return [_outcome("nonspatial", failures, f"proxy {high:.4g} at lambda=2, {low:.4g} at lambda=0.8")]


def check_weight(trials=None, seed=None, workers=1) -> list[CheckOutcome]:
    """Mean level-weighted size of the individual-death process stays under its exponential bound."""
    count = trials or 10_000
    points = montecarlo.estimate_weight_bound(4, 0.2, 0.5, (1.0, 2.0, 4.0), count, seed, workers)
    failures = [
        f"t={p.t}: mean {p.mean:.4g} > bound {p.bound:.4g} + 3 SE"
        for p in points if p.mean > p.bound + config.SE_MARGIN * p.se
    ]
    return [_outcome("weight", failures, ", ".join(f"t={p.t}: {p.mean:.4g} <= {p.bound:.4g}" for p in points))]


def check_crossengine(trials=None, seed=None, workers=1) -> list[CheckOutcome]:
    """Monte Carlo against the exact two-site law, and byte-identical fixed-seed sweeps."""
    count = trials or 100_000
    g = TwoSite()
    exact = exactsolver.prob_nonempty(
        exactsolver.build_generator(g, ProcessKind.MUTATION, 1.0, 0.5), exactsolver.LumpedState.of([[0]]), 1.0
    )
    estimate = montecarlo.estimate_hit(g, ProcessKind.MUTATION, 1.0, 0.5, Configuration.single(0), {0, 1}, 1.0, count, seed, workers=workers)
    failures = []
    if abs(estimate.point - exact) > config.SE_MARGIN * estimate.se:
        failures.append(f"Monte Carlo {estimate.point:.5g} vs exact {exact:.5g}")

    def sweep_bytes() -> str:
        buffer = io.StringIO()
        result = montecarlo.sweep(2, [0.6, 1.2], [0.2, 0.8], 20, StopRule(t_max=20.0, n_max=200), seed=seed, workers=workers)
        montecarlo.write_sweep_csv(result, buffer)
        return buffer.getvalue()

    if sweep_bytes() != sweep_bytes():
        failures.append("a fixed-seed sweep is not reproducible")
    return [_outcome("crossengine", failures, f"Monte Carlo {estimate.point:.5g} vs exact {exact:.5g}")]


def check_comparison(trials=None, seed=None, workers=1) -> list[CheckOutcome]:
    """
    Sampled comparison inequalities, anchored to the exact solver on Path(3).

    Args:
        trials: Runs per estimate (default 4000).
        seed: Master seed; the random sets are drawn from it too.
        workers: Size of the process pool.

    Returns:
        list[CheckOutcome]: Domination from A = C = {x}, the four-term
        submodularity combination for random A, B, C, and Monte Carlo against
        exact hitting probabilities.
    """
    count = trials or 4000
    rng = np.random.default_rng(seed)
    outcomes = []

    failures = []
    for g in (Path(3), HomTree(2)):
        x = g.root()
        result = montecarlo.compare_domination(g, 1.0, 0.5, Configuration.single(x), {x}, 1.0, count, seed, workers)
        if not result.holds:
            failures.append(f"{g.name}: mutation {result.lhs:.4g} above individual-death {result.rhs:.4g}")
    outcomes.append(_outcome("comparison.domination", failures, "mutation estimates stay within 3 pooled SE of domination"))

    failures = []
    path = Path(3)
    for _ in range(5):
        a, b, c = ({v for v in path.vertices() if rng.random() < 0.5} for _ in range(3))
        result = montecarlo.compare_submodularity(path, 1.0, a, b, c, 1.0, count, seed, workers)
        if not result.holds:
            failures.append(f"A={sorted(a)} B={sorted(b)} C={sorted(c)}: {result.lhs:.4g} > {result.rhs:.4g}")
    outcomes.append(_outcome("comparison.submodularity", failures, "five random triples within 4 pooled SE"))

    failures = []
    gen = exactsolver.build_generator(path, ProcessKind.MUTATION, 1.0, 0.5)
    for start, target in ((0, {2}), (1, {1}), (0, {0, 1, 2})):
        init = Configuration.single(start)
        exact = exactsolver.prob_intersect(gen, init, target, 1.0)
        estimate = montecarlo.estimate_hit(path, ProcessKind.MUTATION, 1.0, 0.5, init, target, 1.0, count, seed,
                                           workers=workers, stream=2)
        if abs(estimate.point - exact) > config.SE_MARGIN * math.sqrt(exact * (1 - exact) / count):
            failures.append(f"start {start} target {sorted(target)}: Monte Carlo {estimate.point:.4g} vs exact {exact:.4g}")
    outcomes.append(_outcome("comparison.exact", failures, "Monte Carlo within 3 SE of the exact law on Path(3)"))
    return outcomes


def check_supermartingale(trials=None, seed=None, workers=1) -> list[CheckOutcome]:
    """The exponential drift functional should not rise along the time grid; failures only warn."""
    count = trials or 10_000
    d, lam, r = 2, 0.9, 0.95
    alpha, beta = analysis.drift_feasible(d, lam, r)
    points = montecarlo.supermartingale_probe(d, lam, r, alpha, beta, 0.1, (0.0, 1.0, 2.0, 4.0, 8.0), count, seed, workers)
    failures = []
    for before, after in zip(points, points[1:]):
        margin = config.SE_MARGIN * math.hypot(before.raw_se, after.raw_se)
        if after.raw_mean > before.raw_mean + margin:
            failures.append(f"mean rises from {before.raw_mean:.4g} at t={before.t} to {after.raw_mean:.4g} at t={after.t}")
    return [_outcome("supermartingale", failures, ", ".join(f"t={p.t}: {p.raw_mean:.4g}" for p in points), warn_only=True)]


SUITES: dict[str, Callable[..., list[CheckOutcome]]] = {
    "thresholds": check_thresholds,
    "gw": check_gw,
    "remark10": check_two_site,
    "twosite": check_two_site,
    "domination": check_domination,
    "submodularity": check_submodularity,
    "coupling": check_coupling,
    "offspring": check_offspring,
    "phase": check_phase,
    "nonspatial": check_nonspatial,
    "weight": check_weight,
    "drift": check_drift,
    "identities": check_identities,
    "crossengine": check_crossengine,
    "comparison": check_comparison,
    "supermartingale": check_supermartingale,
}


def run_checks(names: list[str], trials: int | None = None, seed: int | None = None, workers: int = 1) -> list[CheckOutcome]:
    """
    Run the named suites and collect their outcomes.

    Args:
        names: Suite names; 'all' runs every suite once, aliases included only once.
        trials: Overrides each suite's default run count.
        seed: Master seed, CHECK_SEED when None.
        workers: Size of the process pool.

    Returns:
        list[CheckOutcome]: The outcomes in suite order.
    """
    if "all" in names:
        names = list(SUITES)
    seed = config.CHECK_SEED if seed is None else seed
    outcomes = []
    done = set()
    for name in names:
        if SUITES[name] in done:
            continue
        done.add(SUITES[name])
        logger.info("Running check suite %s.", name)
        outcomes.extend(SUITES[name](trials=trials, seed=seed, workers=workers))
    return outcomes
