"""Module holding the process state: occupied sites with their partition into types."""
from __future__ import annotations

from enum import Enum
from typing import Hashable, Iterable, Mapping

from mutacp.exceptions import ParameterError


class ProcessKind(Enum):
    """The process variants the engines can run."""
    MUTATION = "mutation"
    INDIVIDUAL_DEATH = "individual"
    SINGLE_BIRTH_RESTRICTED = "restricted"
    NON_SPATIAL = "nonspatial"

    @classmethod
    def parse(cls, text: str) -> "ProcessKind":
        """Look a kind up by its value or its name."""
        key = text.strip().lower()
        for kind in cls:
            if key in (kind.value, kind.name.lower()):
                return kind
        raise ParameterError(f"Unknown process kind {text!r}")

    @property
    def type_deaths(self) -> bool:
        """Whether a whole type dies at once (all kinds except IndividualDeath)."""
        return self is not ProcessKind.INDIVIDUAL_DEATH


class IndexedSet:
    """A set with O(1) insertion, removal and uniform sampling by index."""

    def __init__(self, items: Iterable[Hashable] = ()):
        self._items: list = []
        self._index: dict = {}
        for item in items:
            self.add(item)

    def add(self, item) -> None:
        """Append item unless it is already present."""
        if item not in self._index:
            self._index[item] = len(self._items)
            self._items.append(item)

    def discard(self, item) -> None:
        """
        Remove item if present by moving the last item into its slot.

        Args:
            item: The item to remove; absent items are ignored.
        """
        position = self._index.pop(item, None)
        if position is None:
            return
        last = self._items.pop()
        if position < len(self._items):
            self._items[position] = last
            self._index[last] = position

    def __getitem__(self, position: int):
        """The item at a position in 0..len-1; positions change on discard."""
        return self._items[position]

    def __contains__(self, item) -> bool:
        return item in self._index

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)


class Configuration:
    """
    The state A of the process: the occupied sites and their partition into types.

    Attributes:
    - occupied (dict): Map from site to the type living there.
    - blocks (dict): Map from type to the nonempty set of its sites.
    - next_type (int): Exceeds every type label ever assigned.
    """

    def __init__(self):
        self.occupied: dict = {}
        self.blocks: dict[int, set] = {}
        self.next_type = 1

    @classmethod
    def single(cls, site, type_id: int = 1) -> "Configuration":
        """A single pathogen of the given type at the given site."""
        config = cls()
        config.add(site, type_id)
        return config

    @classmethod
    def from_blocks(cls, blocks: Iterable[Iterable] | Mapping[int, Iterable]) -> "Configuration":
        """
        Build a configuration from an explicit partition.

        A sequence of site collections is labeled 1, 2, ... in order; a mapping
        keeps its own positive labels.
        """
        config = cls()
        items = blocks.items() if isinstance(blocks, Mapping) else enumerate(blocks, start=1)
        for type_id, sites in items:
            sites = list(sites)
            if not sites:
                raise ParameterError(f"Type {type_id} has no sites")
            for site in sites:
                if site in config.occupied:
                    raise ParameterError(f"Site {site!r} is listed in two types")
                config.add(site, type_id)
        return config

    def add(self, site, type_id: int) -> None:
        """Place a pathogen of type_id on a vacant site."""
        if site in self.occupied:
            raise ParameterError(f"Site {site!r} is already occupied")
        self.occupied[site] = type_id
        self.blocks.setdefault(type_id, set()).add(site)
        if type_id >= self.next_type:
            self.next_type = type_id + 1

    def new_type(self) -> int:
        """Reserve a type label that has never been used."""
        type_id = self.next_type
        self.next_type += 1
        return type_id

    def remove_site(self, site) -> int:
        """Vacate a site and return the type that lived there."""
        type_id = self.occupied.pop(site)
        block = self.blocks[type_id]
        block.discard(site)
        if not block:
            del self.blocks[type_id]
        return type_id

    def remove_block(self, type_id: int) -> set:
        """Kill every individual of a type and return the vacated sites."""
        block = self.blocks.pop(type_id)
        for site in block:
            del self.occupied[site]
        return block

    def type_of(self, site) -> int | None:
        return self.occupied.get(site)

    @property
    def size(self) -> int:
        """The number of occupied sites |A|."""
        return len(self.occupied)

    @property
    def type_count(self) -> int:
        """The number of types N(A)."""
        return len(self.blocks)

    def sites(self) -> set:
        return set(self.occupied)

    def partition(self) -> frozenset[frozenset]:
        """The partition of the occupied set with the labels forgotten."""
        return frozenset(frozenset(block) for block in self.blocks.values())

    def is_empty(self) -> bool:
        return not self.occupied

    def copy(self) -> "Configuration":
        clone = Configuration()
        clone.occupied = dict(self.occupied)
        clone.blocks = {type_id: set(block) for type_id, block in self.blocks.items()}
        clone.next_type = self.next_type
        return clone

    def check_invariants(self) -> None:
        """Raise AssertionError unless occupied and blocks are mutually inverse."""
        sizes = 0
        for type_id, block in self.blocks.items():
            if not block:
                raise AssertionError(f"Type {type_id} has an empty block")
            if type_id >= self.next_type:
                raise AssertionError(f"Type {type_id} is not below the type counter {self.next_type}")
            for site in block:
                if self.occupied.get(site) != type_id:
                    raise AssertionError(f"Site {site!r} is in block {type_id} but maps to {self.occupied.get(site)}")
            sizes += len(block)
        if sizes != len(self.occupied):
            raise AssertionError("Block sizes do not add up to the occupied count")

    def __contains__(self, site) -> bool:
        return site in self.occupied

    def __len__(self) -> int:
        return len(self.occupied)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.occupied == other.occupied and self.next_type == other.next_type

    def __repr__(self) -> str:
        return f"Configuration(blocks={self.blocks!r})"
