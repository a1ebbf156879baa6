"""
The aggregate next-event engine used by every Monte Carlo estimator.

From a state A the total rate is Q(A) = deaths + lambda * (eligible boundary
pairs), with N(A) deaths for type-death kinds and |A| for IndividualDeath;
the non-spatial model uses N(A) + lambda * |A|. The engine draws an
exponential waiting time with rate Q(A), picks the event proportionally and
lets each birth mutate with probability r.
"""
from __future__ import annotations

import logging
import numbers

from mutacp.dynamics.configuration import Configuration, IndexedSet, ProcessKind
from mutacp.dynamics.randomness import make_rng
from mutacp.dynamics.trajectory import (
    CENSORED,
    EXTINCT,
    REASON_FOCUS,
    REASON_POPULATION,
    REASON_TIME,
    REASON_TYPES,
    Event,
    EventKind,
    StopRule,
    Termination,
    Trajectory,
)
from mutacp.exceptions import ParameterError
from mutacp.graph import TREE_FAMILIES, GraphSpec

logger = logging.getLogger(__name__)


def validate_rates(lam: float, r: float, allow_zero_lambda: bool = False) -> None:
    """Check lambda and r against the model's ranges."""
    if lam < 0 or (lam == 0 and not allow_zero_lambda):
        raise ParameterError(f"lambda must be positive, got {lam}")
    if not 0 <= r <= 1:
        raise ParameterError(f"r must lie in [0, 1], got {r}")


class SimulationEngine:
    """
    Exact continuous-time simulation of one run.

    The engine keeps the eligible boundary-pair count up to date on every
    birth and death, and picks births by rejection: a uniform occupied site
    and a uniform slot among max_degree neighbor slots, accepted when the slot
    holds an eligible vacant site. This is uniform over eligible pairs on any
    graph.
    """

    def __init__(
        self,
        g: GraphSpec | None,
        kind: ProcessKind,
        lam: float,
        r: float,
        init: Configuration,
        seed=None,
        stop: StopRule | None = None,
        record: bool = True,
        debug: bool = False,
    ):
        validate_rates(lam, r, allow_zero_lambda=True)
        if kind is not ProcessKind.NON_SPATIAL and g is None:
            raise ParameterError(f"{kind.value} runs need a graph")
        self.g = g
        self.kind = kind
        self.lam = lam
        self.r = r
        self.stop = stop or StopRule()
        self.record = record
        self.debug = debug
        self.seed = seed
        self.rng = make_rng(seed)
        self.time = 0.0
        self.config = init.copy()
        self.events: list[Event] = []
        self._spatial = kind is not ProcessKind.NON_SPATIAL
        self._restricted = kind is ProcessKind.SINGLE_BIRTH_RESTRICTED
        self._leveled = self._restricted and isinstance(g, TREE_FAMILIES)
        if self._spatial:
            for site in self.config.occupied:
                g.validate(site)
            self._max_degree = g.max_degree()
            self._next_individual = None
        else:
            for site in self.config.occupied:
                if not isinstance(site, numbers.Integral) or isinstance(site, bool) or site < 0:
                    raise ParameterError(f"Non-spatial individuals are labeled by nonnegative integers, got {site!r}")
            self._next_individual = max(self.config.occupied, default=-1) + 1
        self._sites = IndexedSet(self.config.occupied)
        self._types = IndexedSet(self.config.blocks)
        self._ever = set(self.config.occupied) if self._restricted else None
        self._boundary = self._count_boundary() if self._spatial else 0

    # ------------------------------------------------------------------
    # Rates
    # ------------------------------------------------------------------

    def eligible(self, w) -> bool:
        """Whether a birth onto w is allowed by the process rules (vacancy aside)."""
        if not self._restricted:
            return True
        if w in self._ever:
            return False
        if self._leveled:
            level = self.g.level(w)
            if level < 0:
                return False
            if self.stop.max_level is not None and level > self.stop.max_level:
                return False
        return True

    def _is_target(self, w) -> bool:
        return w not in self.config.occupied and self.eligible(w)

    def _count_boundary(self) -> int:
        return sum(1 for x in self.config.occupied for y in self.g.neighbors(x) if self._is_target(y))

    def death_rate(self) -> float:
        if self.kind.type_deaths:
            return float(self.config.type_count)
        return float(self.config.size)

    def birth_rate(self) -> float:
        if self._spatial:
            return self.lam * self._boundary
        return self.lam * self.config.size

    def total_rate(self) -> float:
        """The aggregate rate Q(A)."""
        return self.death_rate() + self.birth_rate()

    def enumerated_rate(self) -> float:
        """Q(A) summed event by event, independent of the incremental bookkeeping."""
        if not self._spatial:
            return self.death_rate() + self.lam * len(self.config.occupied)
        births = sum(
            self.lam for x in self.config.occupied for y in self.g.neighbors(x)
            if y not in self.config.occupied and self.eligible(y)
        )
        deaths = sum(1.0 for _ in self.config.blocks) if self.kind.type_deaths else sum(1.0 for _ in self.config.occupied)
        return deaths + births

    # ------------------------------------------------------------------
    # Transitions
    # ------------------------------------------------------------------

    def _occupy(self, site, type_id: int) -> None:
        if self._spatial:
            neighbours = self.g.neighbors(site)
            if self.eligible(site):
                self._boundary -= sum(1 for z in neighbours if z in self.config.occupied)
        self.config.add(site, type_id)
        self._sites.add(site)
        self._types.add(type_id)
        if self._restricted:
            self._ever.add(site)
        if self._spatial:
            self._boundary += sum(1 for z in neighbours if self._is_target(z))

    def _vacate(self, site) -> None:
        if self._spatial:
            neighbours = self.g.neighbors(site)
            self._boundary -= sum(1 for z in neighbours if self._is_target(z))
        type_id = self.config.remove_site(site)
        self._sites.discard(site)
        if type_id not in self.config.blocks:
            self._types.discard(type_id)
        if self._spatial and self.eligible(site):
            self._boundary += sum(1 for z in neighbours if z in self.config.occupied)

    def _pick_birth(self):
        if not self._spatial:
            parent = self._sites[int(self.rng.integers(len(self._sites)))]
            child = self._next_individual
            self._next_individual += 1
            return parent, child
        while True:
            x = self._sites[int(self.rng.integers(len(self._sites)))]
            slot = int(self.rng.integers(self._max_degree))
            neighbours = self.g.neighbors(x)
            if slot < len(neighbours) and self._is_target(neighbours[slot]):
                return x, neighbours[slot]

    def _fire(self) -> Event:
        total = self.total_rate()
        if self.rng.random() * total < self.death_rate():
            if self.kind.type_deaths:
                type_id = self._types[int(self.rng.integers(len(self._types)))]
                for site in sorted(self.config.blocks[type_id], key=repr):
                    self._vacate(site)
                event = Event(self.time, EventKind.TYPE_DEATH, None, type_id, self.config.size, self.config.type_count)
            else:
                site = self._sites[int(self.rng.integers(len(self._sites)))]
                type_id = self.config.type_of(site)
                self._vacate(site)
                event = Event(self.time, EventKind.INDIVIDUAL_DEATH, site, type_id, self.config.size, self.config.type_count)
        else:
            parent, child = self._pick_birth()
            parent_type = self.config.type_of(parent)
            mutated = bool(self.rng.random() < self.r)
            type_id = self.config.new_type() if mutated else parent_type
            self._occupy(child, type_id)
            event = Event(
                self.time,
                EventKind.MUTATING_BIRTH if mutated else EventKind.BIRTH,
                child if self._spatial else None,
                type_id,
                self.config.size,
                self.config.type_count,
                source=parent if self._spatial else None,
                parent_type=parent_type,
            )
        if self.debug:
            self._check_state()
        if self.record:
            self.events.append(event)
        return event

    def _check_state(self) -> None:
        self.config.check_invariants()
        expected = self.enumerated_rate()
        if abs(expected - self.total_rate()) > 1e-9 * max(1.0, expected):
            raise AssertionError(f"Aggregate rate {self.total_rate()} differs from enumerated rate {expected}")

    # ------------------------------------------------------------------
    # Driving the engine
    # ------------------------------------------------------------------

    def advance_to(self, t: float, cap: int | None = None) -> bool:
        """
        Run every event up to time t and stop at t.

        The pending waiting time is discarded at t; by memorylessness the run
        continues with the same law from the state at t.

        Args:
            t: The observation time, not before the current time.
            cap: Optional population at which to stop early.

        Returns:
            bool: True if the run stopped early at the population cap.
        """
        if t < self.time:
            raise ParameterError(f"Cannot advance backwards from {self.time} to {t}")
        while True:
            if cap is not None and self.config.size >= cap:
                return True
            total = self.total_rate()
            if total <= 0:
                self.time = t
                return False
            wait = float(self.rng.exponential(1.0 / total))
            if self.time + wait > t:
                self.time = t
                return False
            self.time += wait
            self._fire()

    def _stop_reason(self) -> str | None:
        if self.config.size >= self.stop.n_max:
            return REASON_POPULATION
        if self.stop.k_max is not None and self.config.next_type - 1 >= self.stop.k_max:
            return REASON_TYPES
        if self.stop.focus_type is not None and self.stop.focus_type not in self.config.blocks:
            return REASON_FOCUS
        return None

    def run(self) -> Termination:
        """Run until extinction or until the stopping rule censors the run."""
        while True:
            if self.config.is_empty():
                return Termination(EXTINCT, self.time)
            reason = self._stop_reason()
            if reason is not None:
                return Termination(CENSORED, self.time, reason)
            wait = float(self.rng.exponential(1.0 / self.total_rate()))
            if self.time + wait >= self.stop.t_max:
                self.time = self.stop.t_max
                return Termination(CENSORED, self.time, REASON_TIME)
            self.time += wait
            self._fire()


def default_init(g: GraphSpec | None) -> Configuration:
    """A single type-1 pathogen at the root x."""
    return Configuration.single(0 if g is None else g.root(), 1)


def simulate(
    g: GraphSpec | None,
    kind: ProcessKind,
    lam: float,
    r: float,
    init: Configuration | None = None,
    stop: StopRule | None = None,
    seed=None,
    record: bool = True,
    debug: bool = False,
) -> Trajectory:
    """
    Simulate one run of the given process.

    Args:
        g: The graph; ignored (and may be None) for the non-spatial model.
        kind: The process variant.
        lam: Birth rate per pathogen and neighbor, positive.
        r: Mutation probability in [0, 1].
        init: Initial configuration; defaults to one type-1 pathogen at the root.
        stop: Stopping rule; defaults to T_max = 200 and N_max = 5000.
        seed: Seed of the run; identical inputs and seed give identical trajectories.
        record: Whether to keep the event log.
        debug: Check the state invariants and the aggregate rate after every event.

    Returns:
        Trajectory: The event log, termination and final configuration.
    """
    validate_rates(lam, r)
    if kind is ProcessKind.NON_SPATIAL:
        g = None
    init = default_init(g) if init is None else init
    if init.is_empty():
        raise ParameterError("A survival run needs a nonempty initial configuration")
    engine = SimulationEngine(g, kind, lam, r, init, seed=seed, stop=stop, record=record, debug=debug)
    termination = engine.run()
    logger.debug("Run %s ended %s at t=%.6g after %d events.", kind.value, termination.status, termination.time, len(engine.events))
    return Trajectory(
        kind=kind,
        graph_name="nonspatial" if g is None else g.name,
        lam=lam,
        r=r,
        seed=seed,
        initial=init.copy(),
        events=engine.events,
        termination=termination,
        final=engine.config,
    )
