"""
The stream-faithful engine that drives the mutation process and the
single-birth restricted process on HomTree(d) from one RandomnessSource.

Type k dies at the arrivals of its death stream, the pathogen on v tries to
breed onto w at the arrivals of the (v, w) birth stream, and the i-th attempt
mutates when mark i of the (v, w) mark stream is one. A type born in both
processes at once gets the next positive label, a type born in only one of
them gets the next negative label.
"""
from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field

from mutacp.dynamics.configuration import Configuration, ProcessKind
from mutacp.dynamics.engine import validate_rates
from mutacp.dynamics.randomness import BIRTH_CLOCK, DEATH_CLOCK, RandomnessSource
from mutacp.dynamics.trajectory import (
    CENSORED,
    EXTINCT,
    REASON_POPULATION,
    REASON_TIME,
    REASON_TYPES,
    Event,
    EventKind,
    StopRule,
    Termination,
    Trajectory,
)
from mutacp.graph import HomTree, format_address

logger = logging.getLogger(__name__)

CONTAINMENT = "containment"
TYPE_CONTAINMENT = "type-containment"
NEGATIVE_TYPE = "negative-type"


@dataclass(frozen=True)
class Violation:
    """A failed containment check after the event at `time`."""
    time: float
    check: str
    detail: str


@dataclass
class CoupledResult:
    """The two coupled trajectories and every containment failure seen."""
    mutation: Trajectory
    restricted: Trajectory
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


class _Side:
    """The state of one of the two coupled processes."""

    def __init__(self, restricted: bool, root):
        self.restricted = restricted
        self.config = Configuration.single(root, 1)
        self.ever = {root}
        self.events: list[Event] = []
        self.termination: Termination | None = None


class CoupledEngine:
    """
    Event-by-event replay of the Poisson-stream construction.

    Clocks sit in a heap ordered by (time, key text). A birth clock is armed
    while its source site is occupied in either process; a death clock while
    its type is alive in either process. Stale entries are dropped when popped.
    """

    def __init__(self, d: int, lam: float, r: float, stop: StopRule, seed, record: bool = True):
        self.g = HomTree(d)
        self.stop = stop
        self.record = record
        self.source = RandomnessSource(seed, lam, r)
        root = self.g.root()
        self.first = _Side(False, root)
        self.second = _Side(True, root)
        self.time = 0.0
        self.next_positive = 2
        self.next_negative = 1
        self.violations: list[Violation] = []
        self._heap: list = []
        self._armed: dict = {}
        self._arm((DEATH_CLOCK, 1))
        self._arm_edges(root)

    # ------------------------------------------------------------------
    # Clock bookkeeping
    # ------------------------------------------------------------------

    def _stream(self, key):
        if key[0] == DEATH_CLOCK:
            return self.source.death_clock(key[1])
        return self.source.birth_clock(key[1], key[2])

    def _arm(self, key) -> None:
        if key in self._armed:
            return
        index, time = self._stream(key).next_after(self.time)
        self._armed[key] = index
        heapq.heappush(self._heap, (time, repr(key), key, index))

    def _arm_edges(self, v) -> None:
        for w in self.g.neighbors(v):
            self._arm((BIRTH_CLOCK, v, w))

    def _occupied_anywhere(self, v) -> bool:
        return v in self.first.config or v in self.second.config

    def _alive_anywhere(self, type_id: int) -> bool:
        return type_id in self.first.config.blocks or type_id in self.second.config.blocks

    # ------------------------------------------------------------------
    # Transitions
    # ------------------------------------------------------------------

    def _can_breed(self, side: _Side, v, w) -> bool:
        if v not in side.config or w in side.config:
            return False
        if side.restricted:
            if w in side.ever:
                return False
            level = self.g.level(w)
            if level < 0 or (self.stop.max_level is not None and level > self.stop.max_level):
                return False
        return True

    def _birth(self, v, w, index: int) -> None:
        breeders = [side for side in (self.first, self.second) if self._can_breed(side, v, w)]
        if not breeders:
            return
        mutated = self.source.mutation_mark(v, w, index)
        shared_label = None
        if mutated and len(breeders) == 2:
            shared_label = self.next_positive
            self.next_positive += 1
        for side in breeders:
            parent_type = side.config.type_of(v)
            if not mutated:
                type_id = parent_type
            elif shared_label is not None:
                type_id = shared_label
            else:
                type_id = -self.next_negative
                self.next_negative += 1
            side.config.add(w, type_id)
            side.ever.add(w)
            self._arm((DEATH_CLOCK, type_id))
            self._log(side, Event(
                self.time,
                EventKind.MUTATING_BIRTH if mutated else EventKind.BIRTH,
                w,
                type_id,
                side.config.size,
                side.config.type_count,
                source=v,
                parent_type=parent_type,
            ))
        self._arm_edges(w)

    def _death(self, type_id: int) -> None:
        for side in (self.first, self.second):
            if type_id in side.config.blocks:
                side.config.remove_block(type_id)
                self._log(side, Event(self.time, EventKind.TYPE_DEATH, None, type_id, side.config.size, side.config.type_count))

    def _log(self, side: _Side, event: Event) -> None:
        if self.record:
            side.events.append(event)

    def _check_containment(self) -> None:
        first, second = self.first.config, self.second.config
        for site, type_id in second.occupied.items():
            if type_id < 0:
                self.violations.append(Violation(self.time, NEGATIVE_TYPE, f"type {type_id} occupies {format_address(site)}"))
            if site not in first:
                self.violations.append(Violation(self.time, CONTAINMENT, f"{format_address(site)} is occupied only in the restricted process"))
            elif type_id > 0 and first.type_of(site) != type_id:
                self.violations.append(Violation(
                    self.time, TYPE_CONTAINMENT,
                    f"{format_address(site)} has type {type_id} in the restricted process and {first.type_of(site)} in the mutation process",
                ))

    # ------------------------------------------------------------------
    # Driving the engine
    # ------------------------------------------------------------------

    def _stop_reason(self) -> str | None:
        if self.first.config.size >= self.stop.n_max:
            return REASON_POPULATION
        if self.stop.k_max is not None and self.next_positive + self.next_negative - 2 >= self.stop.k_max:
            return REASON_TYPES
        return None

    def _close(self, status: str, reason: str | None = None) -> None:
        for side in (self.first, self.second):
            if side.termination is None:
                side.termination = Termination(status, self.time, reason)

    def run(self) -> None:
        while True:
            if self.second.termination is None and self.second.config.is_empty():
                self.second.termination = Termination(EXTINCT, self.time)
            if self.first.config.is_empty() and self.second.config.is_empty():
                self._close(EXTINCT)
                return
            reason = self._stop_reason()
            if reason is not None:
                self._close(CENSORED, reason)
                return
            time, _, key, index = heapq.heappop(self._heap)
            if self._armed.get(key) != index:
                continue
            del self._armed[key]
            if time >= self.stop.t_max:
                self.time = self.stop.t_max
                self._close(CENSORED, REASON_TIME)
                return
            self.time = time
            if key[0] == DEATH_CLOCK:
                if not self._alive_anywhere(key[1]):
                    continue
                self._death(key[1])
            else:
                _, v, w = key
                if not self._occupied_anywhere(v):
                    continue
                self._birth(v, w, index)
                if self._occupied_anywhere(v):
                    self._arm(key)
            self._check_containment()

    def trajectory(self, side: _Side, kind: ProcessKind, seed) -> Trajectory:
        return Trajectory(
            kind=kind,
            graph_name=self.g.name,
            lam=self.source.birth_rate,
            r=self.source.mutation_prob,
            seed=seed,
            initial=Configuration.single(self.g.root(), 1),
            events=side.events,
            termination=side.termination,
            final=side.config,
        )


def simulate_coupled(
    d: int,
    lam: float,
    r: float,
    stop: StopRule | None = None,
    seed=None,
    record: bool = True,
) -> CoupledResult:
    """
    Run the mutation process and the single-birth restricted process on
    HomTree(d) from shared Poisson streams and check the containments after
    every event.

    Args:
        d: Tree parameter, at least 2.
        lam: Birth rate, positive.
        r: Mutation probability in [0, 1].
        stop: Stopping rule applied to the mutation process.
        seed: Master seed of the RandomnessSource.
        record: Whether to keep the event logs.

    Returns:
        CoupledResult: Both trajectories and the violation report.
    """
    validate_rates(lam, r)
    stop = stop or StopRule()
    engine = CoupledEngine(d, lam, r, stop, seed, record=record)
    engine.run()
    if engine.violations:
        logger.warning("Coupled run with seed %s recorded %d containment violations.", seed, len(engine.violations))
    return CoupledResult(
        mutation=engine.trajectory(engine.first, ProcessKind.MUTATION, seed),
        restricted=engine.trajectory(engine.second, ProcessKind.SINGLE_BIRTH_RESTRICTED, seed),
        violations=engine.violations,
    )
