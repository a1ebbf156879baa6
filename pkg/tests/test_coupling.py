import pytest

from mutacp.dynamics import EventKind, StopRule, simulate_coupled
from mutacp.exceptions import ParameterError
from mutacp.graph import HomTree

SHORT = StopRule(t_max=10.0, n_max=400)


@pytest.mark.parametrize("seed", range(20))
def test_restricted_process_stays_inside(seed):
    result = simulate_coupled(2, 1.0, 0.3, stop=SHORT, seed=seed)
    assert result.ok, result.violations[:3]
    restricted = result.restricted.final.occupied
    mutation = result.mutation.final.occupied
    for site, type_id in restricted.items():
        assert site in mutation
        assert type_id > 0
        assert mutation[site] == type_id


@pytest.mark.slow
def test_no_violations_over_many_runs():
    for seed in range(500):
        assert simulate_coupled(2, 1.0, 0.3, stop=StopRule(t_max=20.0), seed=seed, record=False).ok


def test_restricted_sites_have_nonnegative_level():
    g = HomTree(3)
    result = simulate_coupled(3, 1.5, 0.5, stop=SHORT, seed=4)
    for event in result.restricted.events:
        if event.site is not None:
            assert g.level(event.site) >= 0


def test_same_seed_same_coupled_run():
    first = simulate_coupled(2, 1.2, 0.4, stop=SHORT, seed=9)
    second = simulate_coupled(2, 1.2, 0.4, stop=SHORT, seed=9)
    assert first.mutation.events == second.mutation.events
    assert first.restricted.events == second.restricted.events


def test_early_death_kills_both():
    found = 0
    for seed in range(30):
        result = simulate_coupled(2, 0.2, 0.5, stop=SHORT, seed=seed)
        first = result.mutation.events[0]
        if first.kind is EventKind.TYPE_DEATH:
            found += 1
            assert result.restricted.termination.extinct
            assert [event.kind for event in result.restricted.events] == [EventKind.TYPE_DEATH]
            assert result.restricted.termination.time == first.time
    assert found > 0


def test_restricted_dies_no_later():
    for seed in range(10):
        result = simulate_coupled(2, 0.8, 0.3, stop=SHORT, seed=seed)
        if result.mutation.termination.extinct:
            assert result.restricted.termination.extinct
            assert result.restricted.termination.time <= result.mutation.termination.time


def test_rate_errors():
    with pytest.raises(ParameterError):
        simulate_coupled(2, -1.0, 0.3)
    with pytest.raises(ParameterError):
        simulate_coupled(1, 1.0, 0.3)
