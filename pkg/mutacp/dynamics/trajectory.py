"""
Event logs, stopping rules and the line-delimited trajectory format.

A trajectory file is tab separated text:

    # mutacp trajectory 1
    # kind=mutation graph=homtree:2 lambda=1.5 r=0.3 seed=7
    # time	event	site	type	population	types
    0.1406...	B	/1	1	2	1
    ...
    # end extinct 3.0217... -

Event codes are B (birth of the parent's type), M (mutating birth),
D (death of a whole type) and I (death of one individual). Times carry 17
significant digits, sites use the slash-joined address form and '-' stands
for no site. The trailer gives the status, the time and the censoring reason.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import IO, Any

from mutacp import config
from mutacp.dynamics.configuration import Configuration, ProcessKind
from mutacp.exceptions import ParameterError
from mutacp.graph import format_address

FORMAT_HEADER = "# mutacp trajectory 1"
COLUMNS = "# time\tevent\tsite\ttype\tpopulation\ttypes"


class EventKind(Enum):
    """The event codes of the trajectory format."""
    BIRTH = "B"
    MUTATING_BIRTH = "M"
    TYPE_DEATH = "D"
    INDIVIDUAL_DEATH = "I"


@dataclass(frozen=True)
class Event:
    """One transition of a run with the post-event counts."""
    time: float
    kind: EventKind
    site: Any
    type_id: int
    population: int
    type_count: int
    source: Any = None
    parent_type: int | None = None

    @property
    def mutated(self) -> bool:
        return self.kind is EventKind.MUTATING_BIRTH


@dataclass(frozen=True)
class StopRule:
    """
    When a run stops.

    Attributes:
    - t_max: Time horizon; a run alive at t_max is censored as survived.
    - n_max: Population cap; a run reaching it is censored as survived.
    - k_max: Optional cap on the number of types ever created.
    - focus_type: Stop once this type has died.
    - max_level: Suppress births onto sites above this level (restricted runs only).
    """
    t_max: float = config.T_MAX
    n_max: int = config.N_MAX
    k_max: int | None = None
    focus_type: int | None = None
    max_level: int | None = None

    def __post_init__(self):
        if not self.t_max > 0:
            raise ParameterError(f"t_max must be positive, got {self.t_max}")
        if self.n_max < 1:
            raise ParameterError(f"n_max must be at least 1, got {self.n_max}")
        if self.k_max is not None and self.k_max < 1:
            raise ParameterError(f"k_max must be at least 1, got {self.k_max}")


EXTINCT = "extinct"
CENSORED = "censored"

REASON_TIME = "time"
REASON_POPULATION = "population"
REASON_TYPES = "types"
REASON_FOCUS = "focus"


@dataclass(frozen=True)
class Termination:
    """How a run ended: extinct at a time, or censored for a reason."""
    status: str
    time: float
    reason: str | None = None

    @property
    def extinct(self) -> bool:
        return self.status == EXTINCT


@dataclass
class Trajectory:
    """The event log of a run together with its parameters and final state."""
    kind: ProcessKind
    graph_name: str
    lam: float
    r: float
    seed: Any
    initial: Configuration
    events: list[Event] = field(default_factory=list)
    termination: Termination | None = None
    final: Configuration | None = None

    @property
    def survived(self) -> bool:
        """Whether the run counts toward the survival proxy."""
        return self.termination is not None and not self.termination.extinct and self.termination.reason != REASON_FOCUS


def _format_seed(seed) -> str:
    spawn_key = getattr(seed, "spawn_key", None)
    if spawn_key is not None:
        return f"{seed.entropy}:" + ",".join(str(part) for part in spawn_key)
    return repr(seed)


def _format_site(site, kind: ProcessKind) -> str:
    if kind is ProcessKind.NON_SPATIAL:
        return "-"
    return format_address(site)


def write_trajectory(trajectory: Trajectory, target: str | Path | IO[str]) -> None:
    """Write a trajectory in the documented line-delimited format."""
    if isinstance(target, (str, Path)):
        with open(target, "w", encoding="utf-8", newline="\n") as stream:
            write_trajectory(trajectory, stream)
        return
    target.write(FORMAT_HEADER + "\n")
    target.write(
        f"# kind={trajectory.kind.value} graph={trajectory.graph_name} "
        f"lambda={trajectory.lam!r} r={trajectory.r!r} seed={_format_seed(trajectory.seed)}\n"
    )
    target.write(COLUMNS + "\n")
    for event in trajectory.events:
        target.write(
            f"{event.time:.17g}\t{event.kind.value}\t{_format_site(event.site, trajectory.kind)}\t"
            f"{event.type_id}\t{event.population}\t{event.type_count}\n"
        )
    end = trajectory.termination
    if end is not None:
        target.write(f"# end {end.status} {end.time:.17g} {end.reason or '-'}\n")


@dataclass(frozen=True)
class TrajectoryRecord:
    """One parsed line of a trajectory file; the site stays in text form."""
    time: float
    event: EventKind
    site: str
    type_id: int
    population: int
    type_count: int


def read_trajectory(source: str | Path | IO[str]) -> tuple[list[TrajectoryRecord], Termination | None]:
    """Read the event records and the termination trailer of a trajectory file."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as stream:
            return read_trajectory(stream)
    records = []
    termination = None
    for line in source:
        line = line.rstrip("\n")
        if not line:
            continue
        if line.startswith("# end "):
            status, time, reason = line[len("# end "):].split(" ")
            termination = Termination(status, float(time), None if reason == "-" else reason)
            continue
        if line.startswith("#"):
            continue
        time, event, site, type_id, population, types = line.split("\t")
        records.append(TrajectoryRecord(float(time), EventKind(event), site, int(type_id), int(population), int(types)))
    return records, termination
