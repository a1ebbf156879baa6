"""
Replication harness and the statistical estimators built on the aggregate engine.

Every trial gets its own seed from the stateless counter scheme
SeedSequence(master, spawn_key=index), so aggregates do not depend on the
number of workers or on the order in which trials finish.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Callable, Iterable, Sequence

import numpy as np
from scipy import stats

from mutacp import config
from mutacp.analysis import classify, drift_coefficients, gamma_rate, gw_mean_U
from mutacp.dynamics.configuration import Configuration, ProcessKind
from mutacp.dynamics.engine import SimulationEngine, default_init, simulate, validate_rates
from mutacp.dynamics.genealogy import extract_type_tree, weight
from mutacp.dynamics.trajectory import REASON_TIME, StopRule
from mutacp.exceptions import DomainError, ParameterError
from mutacp.graph import GraphSpec, HomTree, components

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = [
    "d", "lambda", "r", "trials", "survived", "extinct",
    "censored_time", "censored_pop", "point", "ci_low", "ci_high", "verdict",
]


# ----------------------------------------------------------------------
# Seeds, intervals and the worker pool
# ----------------------------------------------------------------------

def trial_seed(master: int | None, *index: int) -> np.random.SeedSequence:
    """The seed of trial `index` under a master seed."""
    if master is None:
        master = np.random.SeedSequence().entropy
    return np.random.SeedSequence(master, spawn_key=tuple(index))


def wilson_interval(successes: int, trials: int, confidence: float = config.CONFIDENCE) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ParameterError("A proportion needs at least one trial")
    if not 0 < confidence < 1:
        raise ParameterError(f"Confidence must lie in (0, 1), got {confidence}")
    z = float(stats.norm.ppf(1 - (1 - confidence) / 2))
    p = successes / trials
    denominator = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denominator
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denominator
    return max(0.0, centre - half), min(1.0, centre + half)


def run_trials(function: Callable, tasks: Sequence, workers: int = 1) -> list:
    """Apply function to every task, in a process pool when workers > 1; results keep task order."""
    if workers < 1:
        raise ParameterError(f"workers must be at least 1, got {workers}")
    if workers == 1 or len(tasks) < 2:
        return [function(task) for task in tasks]
    chunksize = max(1, len(tasks) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(function, tasks, chunksize=chunksize))


def _mean_and_se(values: Sequence[float]) -> tuple[float, float]:
    array = np.asarray(values, dtype=float)
    if array.size == 0:
        return math.nan, math.nan
    if array.size == 1:
        return float(array[0]), 0.0
    return float(array.mean()), float(array.std(ddof=1) / math.sqrt(array.size))


# ----------------------------------------------------------------------
# Survival
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SurvivalEstimate:
    """A censored survival proxy with its Wilson interval."""
    trials: int
    survived: int
    extinct: int
    censored_time: int
    censored_pop: int
    point: float
    ci_low: float
    ci_high: float
    confidence: float = config.CONFIDENCE

    @classmethod
    def from_counts(cls, extinct: int, censored_time: int, censored_pop: int, confidence: float) -> "SurvivalEstimate":
        survived = censored_time + censored_pop
        trials = survived + extinct
        low, high = wilson_interval(survived, trials, confidence)
        return cls(trials, survived, extinct, censored_time, censored_pop, survived / trials, low, high, confidence)


def _survival_trial(task) -> str:
    g, kind, lam, r, stop, seed = task
    trajectory = simulate(g, kind, lam, r, stop=stop, seed=seed, record=False)
    if trajectory.termination.extinct:
        return "extinct"
    # Population and type caps both count as cap censoring.
    return "time" if trajectory.termination.reason == REASON_TIME else "pop"


def estimate_survival(
    g: GraphSpec | None,
    kind: ProcessKind,
    lam: float,
    r: float,
    trials: int,
    stop: StopRule | None = None,
    seed: int | None = None,
    confidence: float = config.CONFIDENCE,
    workers: int = 1,
    point: int = 0,
) -> SurvivalEstimate:
    """
    Estimate the survival proxy from independent runs started at the root.

    Args:
        g: The graph (None for the non-spatial model).
        kind: The process variant.
        lam: Birth rate.
        r: Mutation probability.
        trials: Number of runs, at least 1.
        stop: Stopping rule; a run censored by it counts as survived.
        seed: Master seed.
        confidence: Level of the Wilson interval.
        workers: Size of the process pool.
        point: Grid index mixed into the trial seeds, so sweep points use disjoint streams.

    Returns:
        SurvivalEstimate: The counts, the point estimate and the interval.
    """
    if trials < 1:
        raise ParameterError(f"trials must be at least 1, got {trials}")
    validate_rates(lam, r)
    stop = stop or StopRule()
    tasks = [(g, kind, lam, r, stop, trial_seed(seed, point, i)) for i in range(trials)]
    outcomes = run_trials(_survival_trial, tasks, workers)
    estimate = SurvivalEstimate.from_counts(
        extinct=outcomes.count("extinct"),
        censored_time=outcomes.count("time"),
        censored_pop=outcomes.count("pop"),
        confidence=confidence,
    )
    logger.info("Survival of %s at lambda=%g r=%g: %d/%d.", kind.value, lam, r, estimate.survived, trials)
    return estimate


# ----------------------------------------------------------------------
# Fixed-time hitting probabilities
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class HitEstimate:
    """An estimate of P(A_t meets C) with its standard error and Wilson interval."""
    trials: int
    hits: int
    point: float
    se: float
    ci_low: float
    ci_high: float


def _hit_trial(task) -> bool:
    g, kind, lam, r, init, target, t, seed = task
    engine = SimulationEngine(g, kind, lam, r, init, seed=seed, record=False)
    engine.advance_to(t)
    return any(site in engine.config for site in target)


def estimate_hit(
    g: GraphSpec | None,
    kind: ProcessKind,
    lam: float,
    r: float,
    init: Configuration,
    target: Iterable,
    t: float,
    trials: int,
    seed: int | None = None,
    confidence: float = config.CONFIDENCE,
    workers: int = 1,
    stream: int = 0,
) -> HitEstimate:
    """
    Estimate the probability that the configuration at time t meets the target set.

    Args:
        g: The graph (None for the non-spatial model).
        kind: The process variant.
        lam: Birth rate.
        r: Mutation probability.
        init: The starting configuration; it may be empty.
        target: The sites C to look for at time t.
        t: The observation time.
        trials: Number of runs, at least 1.
        seed: Master seed.
        confidence: Level of the Wilson interval.
        workers: Size of the process pool.
        stream: Index mixed into the trial seeds. Estimates under the same
            master seed are independent exactly when their streams differ.

    Returns:
        HitEstimate: The hit count, the point estimate, its SE and the interval.
    """
    if trials < 1:
        raise ParameterError(f"trials must be at least 1, got {trials}")
    if t < 0:
        raise ParameterError(f"t must be nonnegative, got {t}")
    validate_rates(lam, r)
    target = frozenset(target)
    tasks = [(g, kind, lam, r, init, target, t, trial_seed(seed, stream, i)) for i in range(trials)]
    hits = sum(run_trials(_hit_trial, tasks, workers))
    point = hits / trials
    low, high = wilson_interval(hits, trials, confidence)
    return HitEstimate(trials, hits, point, math.sqrt(point * (1 - point) / trials), low, high)


def pooled_se(*estimates: HitEstimate) -> float:
    """Standard error of a signed sum of independent estimates, i.e. estimates drawn on distinct streams."""
    return math.sqrt(sum(estimate.se ** 2 for estimate in estimates))


@dataclass(frozen=True)
class Comparison:
    """A sampled inequality lhs <= rhs, allowed to fail by `margin` pooled standard errors."""
    lhs: float
    rhs: float
    se: float
    margin: float

    @property
    def slack(self) -> float:
        return self.rhs + self.margin * self.se - self.lhs

    @property
    def holds(self) -> bool:
        return self.slack >= 0


def _singletons(sites: Iterable) -> Configuration:
    return Configuration.from_blocks([[site] for site in sorted(sites, key=repr)])


def compare_domination(
    g: GraphSpec,
    lam: float,
    r: float,
    init: Configuration,
    target: Iterable,
    t: float,
    trials: int,
    seed: int | None = None,
    workers: int = 1,
) -> Comparison:
    """
    Compare P(A_t meets C) for the mutation process against the
    individual-death process started from the same occupied sites.

    The two estimates use distinct seed streams, so their pooled SE is the
    SE of the difference. The comparison allows SE_MARGIN pooled SEs.
    """
    mutation = estimate_hit(g, ProcessKind.MUTATION, lam, r, init, target, t, trials, seed, workers=workers, stream=0)
    primed = estimate_hit(g, ProcessKind.INDIVIDUAL_DEATH, lam, r, _singletons(init.occupied), target, t, trials, seed,
                          workers=workers, stream=1)
    logger.info("Domination at lambda=%g r=%g t=%g: %.4g vs %.4g.", lam, r, t, mutation.point, primed.point)
    return Comparison(mutation.point, primed.point, pooled_se(mutation, primed), config.SE_MARGIN)


def compare_submodularity(
    g: GraphSpec,
    lam: float,
    a: Iterable,
    b: Iterable,
    target: Iterable,
    t: float,
    trials: int,
    seed: int | None = None,
    workers: int = 1,
) -> Comparison:
    """
    Sample the four hitting probabilities of the basic contact process and
    compare est(A&B) + est(A|B) against est(A) + est(B).

    Args:
        g: A finite graph.
        lam: Birth rate.
        a: The first starting set.
        b: The second starting set.
        target: The sites C to look for at time t.
        t: The observation time.
        trials: Runs per starting set.
        seed: Master seed; each starting set gets its own stream.
        workers: Size of the process pool.

    Returns:
        Comparison: The two sides with POOLED_SE_MARGIN pooled SEs of allowance.
    """
    a, b = frozenset(a), frozenset(b)
    starts = (a & b, a | b, a, b)
    estimates = [
        estimate_hit(g, ProcessKind.INDIVIDUAL_DEATH, lam, 0.0, _singletons(start), target, t, trials, seed,
                     workers=workers, stream=index)
        for index, start in enumerate(starts)
    ]
    joint, union, first, second = (estimate.point for estimate in estimates)
    return Comparison(joint + union, first + second, pooled_se(*estimates), config.POOLED_SE_MARGIN)


# ----------------------------------------------------------------------
# Level-weighted size
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class WeightPoint:
    """Mean level-weighted size at time t next to the exponential bound."""
    t: float
    mean: float
    se: float
    bound: float


def _weight_trial(task) -> list[float]:
    d, lam, rho, t_grid, seed = task
    g = HomTree(d)
    engine = SimulationEngine(g, ProcessKind.INDIVIDUAL_DEATH, lam, 0.0, default_init(g), seed=seed, record=False)
    values = []
    for t in t_grid:
        engine.advance_to(t)
        values.append(weight(g, engine.config.occupied, rho))
    return values


def estimate_weight_bound(
    d: int,
    lam: float,
    rho: float,
    t_grid: Sequence[float],
    trials: int,
    seed: int | None = None,
    workers: int = 1,
) -> list[WeightPoint]:
    """
    Estimate the mean level-weighted size of the individual-death process on
    HomTree(d) and attach the bound exp((lambda*d*rho + lambda/rho - 1) t).
    """
    if not 0 < rho < 1:
        raise ParameterError(f"rho must lie in (0, 1), got {rho}")
    if lam < 0:
        raise ParameterError(f"lambda must be nonnegative, got {lam}")
    if trials < 1:
        raise ParameterError(f"trials must be at least 1, got {trials}")
    grid = sorted(t_grid)
    if any(t < 0 for t in grid):
        raise ParameterError("Observation times must be nonnegative")
    tasks = [(d, lam, rho, grid, trial_seed(seed, i)) for i in range(trials)]
    samples = np.asarray(run_trials(_weight_trial, tasks, workers), dtype=float)
    gamma = gamma_rate(d, lam, rho)
    points = []
    for column, t in enumerate(grid):
        mean, se = _mean_and_se(samples[:, column])
        points.append(WeightPoint(t, mean, se, math.exp(gamma * t)))
    return points


# ----------------------------------------------------------------------
# Offspring of the root type
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class OffspringEstimate:
    """Empirical mean offspring of type 1 in restricted episodes."""
    episodes: int
    mean: float
    se: float
    truncated: int = 0
    infinite_mean: bool = False


def offspring_stop_rule() -> StopRule:
    """Run an episode until type 1 is gone, with births above the depth cap suppressed."""
    return StopRule(t_max=math.inf, n_max=100 * config.N_MAX, focus_type=1, max_level=config.OFFSPRING_DEPTH_CAP)


def _offspring_trial(task) -> tuple[int, bool]:
    d, lam, r, seed = task
    trajectory = simulate(HomTree(d), ProcessKind.SINGLE_BIRTH_RESTRICTED, lam, r, stop=offspring_stop_rule(), seed=seed)
    tree = extract_type_tree(trajectory)
    truncated = 1 in trajectory.final.blocks
    return tree.out_degree(1), truncated


def estimate_offspring_mean(
    d: int,
    lam: float,
    r: float,
    episodes: int,
    seed: int | None = None,
    workers: int = 1,
) -> OffspringEstimate:
    """
    Estimate the mean number of types whose first member is born to type 1.

    The estimate is flagged when the closed-form mean is infinite, where a
    sample mean says little.
    """
    if episodes < 1:
        raise ParameterError(f"episodes must be at least 1, got {episodes}")
    validate_rates(lam, r)
    try:
        infinite = gw_mean_U(d, lam, r).infinite
    except DomainError:
        infinite = False
    if infinite:
        logger.warning("Offspring mean at d=%d lambda=%g r=%g is infinite; the estimate is not meaningful.", d, lam, r)
    tasks = [(d, lam, r, trial_seed(seed, i)) for i in range(episodes)]
    results = run_trials(_offspring_trial, tasks, workers)
    mean, se = _mean_and_se([count for count, _ in results])
    truncated = sum(1 for _, cut in results if cut)
    if truncated:
        logger.warning("%d of %d episodes hit the population cap before type 1 died.", truncated, episodes)
    return OffspringEstimate(episodes, mean, se, truncated, infinite)


# ----------------------------------------------------------------------
# Drift probe
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ProbePoint:
    """Means of exp(-c f(A_t)) at time t, raw and over surviving runs."""
    t: float
    raw_mean: float
    raw_se: float
    conditioned_mean: float
    conditioned_se: float
    survivors: int


def _probe_trial(task) -> list[tuple[float, bool]]:
    d, lam, r, alpha, beta, c, t_grid, seed = task
    g = HomTree(d)
    engine = SimulationEngine(g, ProcessKind.MUTATION, lam, r, default_init(g), seed=seed, record=False)
    frozen = False
    values = []
    for t in t_grid:
        if not frozen:
            frozen = engine.advance_to(t, cap=config.PROBE_N_MAX)
        occupied = engine.config.occupied
        count, _ = components(g, occupied)
        drift = alpha * engine.config.type_count + beta * count
        values.append((math.exp(-c * drift), bool(occupied)))
    return values


def supermartingale_probe(
    d: int,
    lam: float,
    r: float,
    alpha: float,
    beta: float,
    c: float,
    t_grid: Sequence[float],
    trials: int,
    seed: int | None = None,
    workers: int = 1,
) -> list[ProbePoint]:
    """
    Track the mean of exp(-c (alpha N(A_t) + beta C(A_t))) for the mutation
    process on HomTree(d) started from one pathogen.

    Extinct runs contribute exp(0) = 1. Runs reaching the probe population
    cap are frozen at that state.

    Raises:
        ParameterError: If (alpha, beta) violates the drift inequalities or c <= 0.
    """
    if not c > 0:
        raise ParameterError(f"c must be positive, got {c}")
    if not drift_coefficients(d, lam, r, alpha, beta).feasible:
        raise ParameterError(f"(alpha, beta) = ({alpha}, {beta}) is not a drift witness at d={d} lambda={lam} r={r}")
    if trials < 1:
        raise ParameterError(f"trials must be at least 1, got {trials}")
    grid = sorted(t_grid)
    tasks = [(d, lam, r, alpha, beta, c, grid, trial_seed(seed, i)) for i in range(trials)]
    samples = run_trials(_probe_trial, tasks, workers)
    points = []
    for column, t in enumerate(grid):
        values = [sample[column][0] for sample in samples]
        alive = [sample[column][0] for sample in samples if sample[column][1]]
        raw_mean, raw_se = _mean_and_se(values)
        conditioned_mean, conditioned_se = _mean_and_se(alive)
        points.append(ProbePoint(t, raw_mean, raw_se, conditioned_mean, conditioned_se, len(alive)))
    return points


# ----------------------------------------------------------------------
# Sweeps
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    """One grid point of a sweep."""
    d: int
    lam: float
    r: float
    estimate: SurvivalEstimate
    verdict: str

    def as_record(self) -> dict[str, Any]:
        e = self.estimate
        return {
            "d": self.d, "lambda": self.lam, "r": self.r, "trials": e.trials,
            "survived": e.survived, "extinct": e.extinct,
            "censored_time": e.censored_time, "censored_pop": e.censored_pop,
            "point": e.point, "ci_low": e.ci_low, "ci_high": e.ci_high,
            "verdict": self.verdict,
        }


@dataclass
class SweepResult:
    """The rows of a sweep and the effective configuration that produced them."""
    rows: list[SweepRow]
    settings: dict[str, Any] = field(default_factory=dict)


def sweep(
    d: int,
    lambdas: Sequence[float],
    rs: Sequence[float],
    trials: int,
    stop: StopRule | None = None,
    seed: int | None = None,
    confidence: float = config.CONFIDENCE,
    workers: int = 1,
    g: GraphSpec | None = None,
    kind: ProcessKind = ProcessKind.MUTATION,
) -> SweepResult:
    """
    Estimate the survival proxy on the grid lambdas x rs and attach the
    verdict of the known bounds to every point.
    """
    if not lambdas or not rs:
        raise ParameterError("A sweep needs at least one lambda and one r")
    stop = stop or StopRule()
    g = HomTree(d) if g is None and kind is not ProcessKind.NON_SPATIAL else g
    logger.debug("Running sweep over %d points.", len(lambdas) * len(rs))
    rows = []
    for index, (lam, r) in enumerate((lam, r) for lam in lambdas for r in rs):
        estimate = estimate_survival(g, kind, lam, r, trials, stop, seed, confidence, workers, point=index)
        rows.append(SweepRow(d, lam, r, estimate, classify(d, lam, r).verdict.value))
    settings = {
        "d": d, "graph": "nonspatial" if g is None else g.name, "kind": kind.value,
        "lambdas": ",".join(format(lam, config.CSV_FLOAT_FORMAT) for lam in lambdas),
        "rs": ",".join(format(r, config.CSV_FLOAT_FORMAT) for r in rs),
        "trials": trials, "tmax": stop.t_max, "nmax": stop.n_max,
        "seed": seed, "confidence": confidence,
    }
    return SweepResult(rows, settings)


def _format_field(value) -> str:
    if isinstance(value, float):
        return format(value, config.CSV_FLOAT_FORMAT)
    return str(value)


def write_sweep_csv(result: SweepResult, target: str | Path | IO[str]) -> None:
    """Write a sweep as CSV, preceded by the configuration as '# key=value' lines."""
    if isinstance(target, (str, Path)):
        with open(target, "w", encoding="utf-8", newline="") as stream:
            write_sweep_csv(result, stream)
        return
    for key, value in result.settings.items():
        target.write(f"# {key}={value}\n")
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in result.rows:
        record = row.as_record()
        writer.writerow([_format_field(record[column]) for column in SWEEP_COLUMNS])


def sweep_to_json(result: SweepResult) -> str:
    """Serialize a sweep with the CSV field names."""
    return json.dumps({"config": result.settings, "rows": [row.as_record() for row in result.rows]}, indent=2)
