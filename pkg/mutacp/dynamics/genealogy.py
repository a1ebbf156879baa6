"""Type genealogy of a run and the level-weighted size of an occupied set."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from mutacp.dynamics.trajectory import EventKind, Trajectory
from mutacp.exceptions import ParameterError
from mutacp.graph import HomTree, RootedTree, SiteAddress


@dataclass
class TypeTree:
    """
    The tree whose nodes are types; a type is a child of the type of the
    individual that gave birth to its first member.

    Attributes:
    - roots: The types present initially, in increasing order.
    - parent: Map from every later type to its parent type.
    - birth_time: Map from every later type to the time it first appeared.
    - birth_site: Map from every later type to the site it first appeared on.
    """
    roots: list[int]
    parent: dict[int, int] = field(default_factory=dict)
    birth_time: dict[int, float] = field(default_factory=dict)
    birth_site: dict = field(default_factory=dict)

    @property
    def root(self) -> int:
        return self.roots[0]

    def nodes(self) -> list[int]:
        return self.roots + list(self.parent)

    def children(self, type_id: int) -> list[int]:
        return [child for child, parent in self.parent.items() if parent == type_id]

    def out_degree(self, type_id: int) -> int:
        """The offspring count X_k of a type."""
        return sum(1 for parent in self.parent.values() if parent == type_id)

    def __len__(self) -> int:
        return len(self.roots) + len(self.parent)


def extract_type_tree(trajectory: Trajectory) -> TypeTree:
    """
    Read the type genealogy off the mutating births of a recorded run.

    Raises:
        ParameterError: If the run was simulated without an event log.
    """
    roots = sorted(trajectory.initial.blocks)
    tree = TypeTree(roots=roots)
    seen = set(roots)
    for event in trajectory.events:
        if event.kind is not EventKind.MUTATING_BIRTH or event.type_id in seen:
            continue
        if event.parent_type is None:
            raise ParameterError("The trajectory carries no parentage for its mutating births")
        seen.add(event.type_id)
        tree.parent[event.type_id] = event.parent_type
        tree.birth_time[event.type_id] = event.time
        tree.birth_site[event.type_id] = event.site
    if not trajectory.events and trajectory.termination is not None and trajectory.final is not None:
        if trajectory.final.next_type > trajectory.initial.next_type:
            raise ParameterError("The trajectory was simulated without an event log")
    return tree


def weight(g: HomTree | RootedTree, occupied: Iterable[SiteAddress], rho: float) -> float:
    """Return the sum of rho ** level(x) over the occupied sites."""
    if not 0 < rho < 1:
        raise ParameterError(f"rho must lie in (0, 1), got {rho}")
    return sum(rho ** g.level(x) for x in occupied)
