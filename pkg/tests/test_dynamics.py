import io

import numpy as np
import pytest

from mutacp.dynamics import (
    Configuration,
    EventKind,
    IndexedSet,
    ProcessKind,
    RandomnessSource,
    SimulationEngine,
    StopRule,
    default_init,
    extract_type_tree,
    read_trajectory,
    simulate,
    weight,
    write_trajectory,
)
from mutacp.dynamics.trajectory import REASON_FOCUS, REASON_TYPES
from mutacp.exceptions import ParameterError
from mutacp.graph import HomTree, Lattice, RootedTree, TwoSite

SMALL = StopRule(t_max=20.0, n_max=300)


def replay(trajectory):
    config = trajectory.initial.copy()
    for event in trajectory.events:
        if event.kind in (EventKind.BIRTH, EventKind.MUTATING_BIRTH):
            config.add(event.site, event.type_id)
        elif event.kind is EventKind.TYPE_DEATH:
            config.remove_block(event.type_id)
        else:
            config.remove_site(event.site)
        assert config.size == event.population
        assert config.type_count == event.type_count
    return config


def test_indexed_set():
    items = IndexedSet([3, 1, 2])
    items.discard(3)
    items.add(1)
    items.discard(7)
    assert sorted(items) == [1, 2]
    assert len(items) == 2
    assert 3 not in items
    assert {items[0], items[1]} == {1, 2}


def test_configuration_blocks():
    config = Configuration.from_blocks([[(), (1,)], [(2,)]])
    assert config.size == 3
    assert config.type_count == 2
    assert config.partition() == frozenset({frozenset({(), (1,)}), frozenset({(2,)})})
    assert config.new_type() == 3
    assert config.remove_block(1) == {(), (1,)}
    assert config.new_type() == 4
    config.check_invariants()
    with pytest.raises(ParameterError):
        Configuration.from_blocks([[()], [()]])
    with pytest.raises(ParameterError):
        Configuration.from_blocks([[]])


def test_process_kind_parse():
    assert ProcessKind.parse("Mutation") is ProcessKind.MUTATION
    assert ProcessKind.parse("individual") is ProcessKind.INDIVIDUAL_DEATH
    assert ProcessKind.parse("single_birth_restricted") is ProcessKind.SINGLE_BIRTH_RESTRICTED
    with pytest.raises(ParameterError):
        ProcessKind.parse("voter")


def test_no_mutation_ends_at_first_death():
    # With r = 0 there is one type, so the run ends with exactly one type death.
    for seed in range(10):
        trajectory = simulate(HomTree(2), ProcessKind.MUTATION, 0.5, 0.0, stop=StopRule(n_max=100000), seed=seed)
        kinds = [event.kind for event in trajectory.events]
        assert trajectory.termination.extinct
        assert kinds.count(EventKind.TYPE_DEATH) == 1
        assert kinds[-1] is EventKind.TYPE_DEATH
        assert EventKind.MUTATING_BIRTH not in kinds


def test_same_seed_same_trajectory():
    first = simulate(HomTree(2), ProcessKind.MUTATION, 1.5, 0.3, stop=SMALL, seed=7)
    second = simulate(HomTree(2), ProcessKind.MUTATION, 1.5, 0.3, stop=SMALL, seed=7)
    assert first.events == second.events
    assert first.termination == second.termination


def test_event_log_replays_to_final_state():
    for kind in (ProcessKind.MUTATION, ProcessKind.INDIVIDUAL_DEATH, ProcessKind.SINGLE_BIRTH_RESTRICTED):
        for seed in range(5):
            trajectory = simulate(HomTree(3), kind, 1.0, 0.3, stop=SMALL, seed=seed)
            assert replay(trajectory).occupied == trajectory.final.occupied


def test_event_times_increase():
    trajectory = simulate(HomTree(2), ProcessKind.MUTATION, 1.2, 0.4, stop=SMALL, seed=3)
    times = [event.time for event in trajectory.events]
    assert all(a < b for a, b in zip(times, times[1:]))
    assert trajectory.termination.time >= (times[-1] if times else 0.0)


def test_full_mutation_keeps_types_singletons():
    trajectory = simulate(HomTree(2), ProcessKind.MUTATION, 1.0, 1.0, stop=SMALL, seed=4)
    for event in trajectory.events:
        assert event.kind in (EventKind.MUTATING_BIRTH, EventKind.TYPE_DEATH)
        assert event.population == event.type_count


@pytest.mark.parametrize("kind", list(ProcessKind))
@pytest.mark.parametrize("graph", [HomTree(2), RootedTree(3), Lattice(2)])
def test_debug_checks_hold(kind, graph):
    for seed in range(3):
        simulate(graph, kind, 1.3, 0.4, stop=StopRule(t_max=10.0, n_max=150), seed=seed, debug=True)


def test_restricted_never_reuses_a_site():
    g = HomTree(2)
    for seed in range(10):
        trajectory = simulate(g, ProcessKind.SINGLE_BIRTH_RESTRICTED, 2.0, 0.5, stop=SMALL, seed=seed)
        born = [event.site for event in trajectory.events if event.kind is not EventKind.TYPE_DEATH]
        assert len(born) == len(set(born))
        assert () not in born
        assert all(g.level(site) >= 0 for site in born)


def test_restricted_level_cap():
    g = HomTree(2)
    stop = StopRule(t_max=20.0, n_max=300, max_level=2)
    trajectory = simulate(g, ProcessKind.SINGLE_BIRTH_RESTRICTED, 3.0, 0.2, stop=stop, seed=1)
    assert all(g.level(event.site) <= 2 for event in trajectory.events if event.site is not None)


def test_individual_deaths_remove_one_site():
    trajectory = simulate(HomTree(2), ProcessKind.INDIVIDUAL_DEATH, 1.0, 0.5, stop=SMALL, seed=2)
    population = 1
    for event in trajectory.events:
        assert event.kind is not EventKind.TYPE_DEATH
        step = -1 if event.kind is EventKind.INDIVIDUAL_DEATH else 1
        assert event.population == population + step
        population = event.population


def test_nonspatial_has_no_sites(tmp_path):
    trajectory = simulate(None, ProcessKind.NON_SPATIAL, 2.0, 0.5, stop=StopRule(n_max=200), seed=5)
    assert all(event.site is None for event in trajectory.events)
    path = tmp_path / "run.tsv"
    write_trajectory(trajectory, path)
    records, _ = read_trajectory(path)
    assert records
    assert {record.site for record in records} == {"-"}


def test_nonspatial_labels_must_be_integers():
    with pytest.raises(ParameterError):
        simulate(None, ProcessKind.NON_SPATIAL, 2.0, 0.5, init=Configuration.single("a"))
    with pytest.raises(ParameterError):
        simulate(None, ProcessKind.NON_SPATIAL, 2.0, 0.5, init=Configuration.single(-1))
    trajectory = simulate(None, ProcessKind.NON_SPATIAL, 2.0, 0.5, init=Configuration.from_blocks([[3, 7]]),
                          stop=StopRule(n_max=20), seed=1)
    assert trajectory.initial.size == 2


def test_type_cap_censors():
    trajectory = simulate(HomTree(2), ProcessKind.MUTATION, 2.0, 1.0, stop=StopRule(k_max=3), seed=8)
    if not trajectory.termination.extinct:
        assert trajectory.termination.reason == REASON_TYPES
        assert trajectory.final.next_type - 1 >= 3


def test_focus_type_stops_run():
    trajectory = simulate(RootedTree(2), ProcessKind.MUTATION, 1.0, 0.5, stop=StopRule(focus_type=1), seed=9)
    if not trajectory.termination.extinct:
        assert trajectory.termination.reason == REASON_FOCUS
        assert 1 not in trajectory.final.blocks
        assert not trajectory.survived


def test_parameter_errors():
    g = HomTree(2)
    with pytest.raises(ParameterError):
        simulate(g, ProcessKind.MUTATION, 0.0, 0.5)
    with pytest.raises(ParameterError):
        simulate(g, ProcessKind.MUTATION, 1.0, 1.5)
    with pytest.raises(ParameterError):
        simulate(g, ProcessKind.MUTATION, 1.0, 0.5, init=Configuration())
    with pytest.raises(ParameterError):
        StopRule(t_max=0.0)
    with pytest.raises(ParameterError):
        StopRule(n_max=0)


def test_finite_graph_run_is_valid():
    trajectory = simulate(TwoSite(), ProcessKind.MUTATION, 1.0, 0.5, seed=0)
    assert trajectory.termination.extinct
    assert all(event.site in (0, 1, None) for event in trajectory.events)


def test_advance_to():
    engine = SimulationEngine(HomTree(2), ProcessKind.MUTATION, 1.0, 0.3, default_init(HomTree(2)), seed=3)
    engine.advance_to(2.0)
    assert engine.time == 2.0
    frozen = engine.advance_to(50.0, cap=20)
    assert frozen == (engine.config.size >= 20)
    if not frozen:
        assert engine.time == 50.0
    with pytest.raises(ParameterError):
        engine.advance_to(1.0)


def test_trajectory_file_layout():
    trajectory = simulate(HomTree(2), ProcessKind.MUTATION, 1.5, 0.3, stop=SMALL, seed=7)
    stream = io.StringIO()
    write_trajectory(trajectory, stream)
    lines = stream.getvalue().splitlines()
    assert lines[0] == "# mutacp trajectory 1"
    assert lines[1] == "# kind=mutation graph=homtree:2 lambda=1.5 r=0.3 seed=7"
    assert lines[-1].startswith("# end ")
    stream.seek(0)
    records, termination = read_trajectory(stream)
    assert len(records) == len(trajectory.events)
    assert termination == trajectory.termination
    assert [record.time for record in records] == [event.time for event in trajectory.events]


def test_streams_do_not_depend_on_query_order():
    first = RandomnessSource(11, 1.5, 0.3)
    second = RandomnessSource(11, 1.5, 0.3)
    a = first.death_clock(1).arrival(3)
    b = first.birth_clock((), (1,)).arrival(2)
    assert second.birth_clock((), (1,)).arrival(2) == b
    assert second.death_clock(1).arrival(3) == a
    assert first.death_clock(2).arrival(1) != first.death_clock(1).arrival(1)


def test_stream_arrivals():
    source = RandomnessSource(np.random.SeedSequence(5, spawn_key=(1, 2)), 2.0, 0.0)
    clock = source.birth_clock((), (0,))
    times = [clock.arrival(i) for i in range(1, 30)]
    assert all(a < b for a, b in zip(times, times[1:]))
    index, time = clock.next_after(times[4])
    assert index == 6
    assert time == times[5]
    assert not any(source.mutation_mark((), (0,), i) for i in range(1, 50))
    assert RandomnessSource(1, 0.0, 0.5).birth_clock((), (1,)).arrival(1) == float("inf")
    with pytest.raises(ParameterError):
        RandomnessSource(1, 1.0, 2.0)


def test_type_tree_without_mutation():
    trajectory = simulate(HomTree(2), ProcessKind.MUTATION, 0.5, 0.0, stop=StopRule(n_max=100000), seed=1)
    tree = extract_type_tree(trajectory)
    assert len(tree) == 1
    assert tree.root == 1
    assert tree.out_degree(1) == 0


def test_type_tree_with_full_mutation():
    trajectory = simulate(HomTree(2), ProcessKind.MUTATION, 1.0, 1.0, stop=SMALL, seed=2)
    tree = extract_type_tree(trajectory)
    births = sum(1 for event in trajectory.events if event.kind is EventKind.MUTATING_BIRTH)
    assert len(tree) == births + 1
    assert sum(tree.out_degree(node) for node in tree.nodes()) == births
    for node in tree.nodes():
        ancestor = node
        while ancestor != tree.root:
            assert tree.parent[ancestor] < ancestor
            ancestor = tree.parent[ancestor]


def test_type_tree_needs_an_event_log():
    trajectory = simulate(HomTree(2), ProcessKind.MUTATION, 1.0, 1.0, stop=SMALL, seed=2, record=False)
    if trajectory.final.next_type > 2:
        with pytest.raises(ParameterError):
            extract_type_tree(trajectory)


def test_weight():
    g = HomTree(2)
    assert weight(g, {()}, 0.5) == 1.0
    assert weight(g, set(), 0.5) == 0.0
    assert weight(g, {(), (1,)}, 0.5) == pytest.approx(1.5)
    assert weight(g, {(0,)}, 0.5) == pytest.approx(2.0)
    with pytest.raises(ParameterError):
        weight(g, {()}, 1.0)
