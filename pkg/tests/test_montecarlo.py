import io
import json
import math

import numpy as np
import pytest

from mutacp import config
from mutacp.analysis import classify, drift_feasible
from mutacp.dynamics import Configuration, ProcessKind, StopRule, simulate
from mutacp.exactsolver import build_generator, prob_intersect
from mutacp.exceptions import ParameterError
from mutacp.graph import HomTree, Path, TwoSite
from mutacp.montecarlo import (
    SWEEP_COLUMNS,
    compare_domination,
    compare_submodularity,
    estimate_hit,
    estimate_offspring_mean,
    estimate_survival,
    estimate_weight_bound,
    offspring_stop_rule,
    pooled_se,
    supermartingale_probe,
    sweep,
    sweep_to_json,
    trial_seed,
    wilson_interval,
    write_sweep_csv,
)


def test_wilson_interval_examples():
    low, high = wilson_interval(5, 10)
    assert low < 0.5 < high
    assert wilson_interval(0, 100)[0] == pytest.approx(0.0, abs=1e-12)
    assert wilson_interval(100, 100)[1] == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ParameterError):
        wilson_interval(0, 0)
    with pytest.raises(ParameterError):
        wilson_interval(1, 2, confidence=1.0)


@pytest.mark.parametrize("p", [0.1, 0.5])
def test_wilson_interval_coverage(p):
    rng = np.random.default_rng(1)
    covered = 0
    for successes in rng.binomial(100, p, size=400):
        low, high = wilson_interval(int(successes), 100)
        covered += low <= p <= high
    assert covered / 400 >= 0.9


def test_trial_seeds_are_stateless():
    assert trial_seed(3, 0, 5).generate_state(4).tolist() == trial_seed(3, 0, 5).generate_state(4).tolist()
    assert trial_seed(3, 0, 5).generate_state(4).tolist() != trial_seed(3, 0, 6).generate_state(4).tolist()
    assert trial_seed(3, 0, 5).generate_state(4).tolist() != trial_seed(4, 0, 5).generate_state(4).tolist()


def test_single_type_dies_out():
    estimate = estimate_survival(HomTree(2), ProcessKind.MUTATION, 0.5, 0.0, trials=200, seed=1)
    assert estimate.survived <= 1
    assert estimate.trials == 200


def test_survival_counts_add_up():
    estimate = estimate_survival(HomTree(2), ProcessKind.MUTATION, 1.5, 0.5, trials=40,
                                 stop=StopRule(t_max=5.0, n_max=200), seed=2)
    assert estimate.survived == estimate.censored_time + estimate.censored_pop
    assert estimate.survived + estimate.extinct == estimate.trials
    assert estimate.ci_low <= estimate.point <= estimate.ci_high


def test_survival_does_not_depend_on_workers():
    arguments = (HomTree(2), ProcessKind.MUTATION, 1.0, 0.3)
    stop = StopRule(t_max=5.0, n_max=100)
    serial = estimate_survival(*arguments, trials=16, stop=stop, seed=5, workers=1)
    pooled = estimate_survival(*arguments, trials=16, stop=stop, seed=5, workers=2)
    assert serial == pooled


def test_shorter_horizon_censors_more():
    arguments = (HomTree(2), ProcessKind.MUTATION, 1.0, 0.3)
    short = estimate_survival(*arguments, trials=60, stop=StopRule(t_max=1.0, n_max=200), seed=8)
    long = estimate_survival(*arguments, trials=60, stop=StopRule(t_max=20.0, n_max=200), seed=8)
    assert short.survived >= long.survived


def test_smaller_population_cap_censors_more():
    arguments = (HomTree(2), ProcessKind.MUTATION, 1.0, 0.3)
    small = estimate_survival(*arguments, trials=60, stop=StopRule(t_max=20.0, n_max=20), seed=8)
    large = estimate_survival(*arguments, trials=60, stop=StopRule(t_max=20.0, n_max=200), seed=8)
    assert small.survived >= large.survived
    assert small.censored_pop >= large.censored_pop


def test_nonspatial_survival():
    estimate = estimate_survival(None, ProcessKind.NON_SPATIAL, 2.0, 0.5, trials=30,
                                 stop=StopRule(n_max=100), seed=3)
    assert estimate.trials == 30


def test_nonspatial_survives_above_one():
    estimate = estimate_survival(None, ProcessKind.NON_SPATIAL, 2.0, 0.5, trials=300,
                                 stop=StopRule(n_max=200), seed=3)
    assert estimate.point >= 0.3


def test_nonspatial_dies_below_one():
    estimate = estimate_survival(None, ProcessKind.NON_SPATIAL, 0.8, 0.5, trials=300, seed=3)
    assert estimate.point <= 0.02


def test_hit_at_time_zero():
    init = Configuration.single(0)
    estimate = estimate_hit(TwoSite(), ProcessKind.MUTATION, 1.0, 0.5, init, {0}, 0.0, trials=20, seed=1)
    assert estimate.point == 1.0
    assert estimate.se == 0.0
    missed = estimate_hit(TwoSite(), ProcessKind.MUTATION, 1.0, 0.5, init, {1}, 0.0, trials=20, seed=1)
    assert missed.point == 0.0


def test_hit_matches_single_site_decay():
    init = Configuration.single(0)
    estimate = estimate_hit(TwoSite(), ProcessKind.MUTATION, 1e-9, 0.5, init, {0, 1}, 1.0, trials=2000, seed=4)
    assert abs(estimate.point - math.exp(-1)) <= 4 * math.sqrt(math.exp(-1) * (1 - math.exp(-1)) / 2000)


def test_hit_from_an_empty_start_is_zero():
    estimate = estimate_hit(Path(3), ProcessKind.INDIVIDUAL_DEATH, 1.0, 0.0, Configuration(), {0, 1, 2}, 1.0, trials=10, seed=1)
    assert estimate.hits == 0


def test_hit_streams_are_reproducible():
    arguments = (Path(3), ProcessKind.MUTATION, 1.0, 0.5, Configuration.single(1), {1}, 1.0)
    assert estimate_hit(*arguments, trials=50, seed=2, stream=1) == estimate_hit(*arguments, trials=50, seed=2, stream=1)


@pytest.mark.parametrize("g", [Path(3), HomTree(2)])
def test_mutation_hits_less_than_individual_deaths(g):
    x = g.root()
    result = compare_domination(g, 1.0, 0.5, Configuration.single(x), {x}, 1.0, trials=2000, seed=6)
    assert result.margin == config.SE_MARGIN
    assert result.se > 0
    assert result.holds, (result.lhs, result.rhs, result.se)


@pytest.mark.parametrize("a, b, c", [({0}, {1, 2}, {1}), ({0, 1}, {1, 2}, {2}), ({1}, {1}, {0, 2})])
def test_four_term_submodularity(a, b, c):
    result = compare_submodularity(Path(3), 1.0, a, b, c, 1.0, trials=2000, seed=7)
    assert result.margin == config.POOLED_SE_MARGIN
    assert result.holds, (result.lhs, result.rhs, result.se)


def test_pooled_se_adds_variances():
    first = estimate_hit(TwoSite(), ProcessKind.MUTATION, 1.0, 0.5, Configuration.single(0), {1}, 1.0, trials=400, seed=1)
    second = estimate_hit(TwoSite(), ProcessKind.MUTATION, 1.0, 0.5, Configuration.single(0), {0}, 1.0, trials=400, seed=1, stream=1)
    assert pooled_se(first, second) == pytest.approx(math.hypot(first.se, second.se))


@pytest.mark.parametrize("start, target", [(0, {2}), (1, {1}), (0, {0, 1, 2})])
def test_hit_agrees_with_exact_law(start, target):
    path = Path(3)
    init = Configuration.single(start)
    exact = prob_intersect(build_generator(path, ProcessKind.MUTATION, 1.0, 0.5), init, target, 1.0)
    trials = 4000
    estimate = estimate_hit(path, ProcessKind.MUTATION, 1.0, 0.5, init, target, 1.0, trials=trials, seed=9)
    assert abs(estimate.point - exact) <= config.SE_MARGIN * math.sqrt(exact * (1 - exact) / trials)


def test_weight_bound_at_time_zero():
    points = estimate_weight_bound(2, 0.3, 0.5, [0.0], trials=10, seed=1)
    assert points[0].mean == 1.0
    assert points[0].bound == 1.0


def test_weight_without_births():
    points = estimate_weight_bound(2, 0.0, 0.5, [1.0], trials=2000, seed=2)
    expected = math.exp(-1)
    assert abs(points[0].mean - expected) <= 4 * math.sqrt(expected * (1 - expected) / 2000)
    assert points[0].bound == pytest.approx(math.exp(-1))


def test_weight_bound_rejects_bad_rho():
    with pytest.raises(ParameterError):
        estimate_weight_bound(2, 0.3, 1.0, [1.0], trials=5)


def test_offspring_mean_small_for_rare_births():
    estimate = estimate_offspring_mean(2, 0.01, 0.5, episodes=200, seed=1)
    assert estimate.mean < 0.05
    assert estimate.truncated == 0
    assert not estimate.infinite_mean


def test_offspring_episodes_stay_above_the_root():
    g = HomTree(2)
    trajectory = simulate(g, ProcessKind.SINGLE_BIRTH_RESTRICTED, 0.8, 0.5, stop=offspring_stop_rule(), seed=4)
    births = [event.site for event in trajectory.events if event.site is not None]
    assert all(1 <= g.level(site) <= config.OFFSPRING_DEPTH_CAP for site in births)
    assert 1 not in trajectory.final.blocks


@pytest.mark.slow
def test_offspring_mean_matches_closed_form():
    estimate = estimate_offspring_mean(2, 0.8, 0.5, episodes=10000, seed=1, workers=2)
    assert estimate.mean == pytest.approx(0.8, rel=0.05)


def test_probe_starts_at_exp_of_initial_drift():
    alpha, beta = drift_feasible(2, 0.9, 1.0)
    points = supermartingale_probe(2, 0.9, 1.0, alpha, beta, 0.5, [0.0, 1.0], trials=20, seed=3)
    assert points[0].raw_mean == pytest.approx(math.exp(-0.5 * (alpha + beta)))
    assert points[0].survivors == 20
    assert 0.0 < points[1].raw_mean <= 1.0


def test_probe_rejects_non_witness():
    with pytest.raises(ParameterError):
        supermartingale_probe(2, 0.9, 1.0, 1.0, 5.0, 0.5, [1.0], trials=5)
    with pytest.raises(ParameterError):
        supermartingale_probe(2, 0.9, 1.0, *drift_feasible(2, 0.9, 1.0), 0.0, [1.0], trials=5)


def small_sweep(seed=1):
    return sweep(2, [0.5, 1.0, 1.5], [0.1, 0.5, 0.9], trials=5, stop=StopRule(t_max=5.0, n_max=100), seed=seed)


def test_sweep_rows_and_verdicts():
    result = small_sweep()
    assert len(result.rows) == 9
    for row in result.rows:
        assert row.verdict == classify(2, row.lam, row.r).verdict.value
        assert row.estimate.trials == 5


def test_sweep_csv_is_reproducible():
    first, second = io.StringIO(), io.StringIO()
    write_sweep_csv(small_sweep(), first)
    write_sweep_csv(small_sweep(), second)
    assert first.getvalue() == second.getvalue()
    lines = [line for line in first.getvalue().splitlines() if not line.startswith("#")]
    assert lines[0] == ",".join(SWEEP_COLUMNS)
    assert len(lines) == 10
    assert "# seed=1" in first.getvalue()


def test_sweep_json_uses_csv_names():
    document = json.loads(sweep_to_json(small_sweep()))
    assert set(document["rows"][0]) == set(SWEEP_COLUMNS)
    assert document["config"]["trials"] == 5


def test_sweep_needs_a_grid():
    with pytest.raises(ParameterError):
        sweep(2, [], [0.5], trials=5)
