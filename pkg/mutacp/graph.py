"""
Vertex addressing and occupied-set statistics for the supported graph families.

Tree vertices are addressed by the sequence of edge labels on the path from the
root, so the infinite tree only materializes at the addresses a run visits.
The root of HomTree(d) has children labeled 0..d. Every other vertex has d
children labeled 1..d, except the vertices of the all-zero ray, whose children
are labeled 0..d-1; the ray through label 0 is therefore infinite and is the
end the level function points to.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path as FilePath
from typing import Iterable, Union

import networkx as nx

from mutacp.exceptions import AddressError, ParameterError, UnsupportedError

logger = logging.getLogger(__name__)

SiteAddress = Union[tuple[int, ...], int]


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ParameterError(message)


@dataclass(frozen=True)
class HomTree:
    """The homogeneous tree T_d, every vertex has d+1 neighbors."""
    d: int

    def __post_init__(self):
        _require(isinstance(self.d, int) and self.d >= 2, f"HomTree needs an integer d >= 2, got {self.d!r}")

    @property
    def name(self) -> str:
        """The text form accepted by parse_graph."""
        return f"homtree:{self.d}"

    def root(self) -> tuple[int, ...]:
        """The start vertex x, the empty address."""
        return ()

    def max_degree(self) -> int:
        """The number of neighbor slots of every vertex."""
        return self.d + 1

    def child_labels(self, v: tuple[int, ...]) -> range:
        """
        The labels of the children of v.

        Args:
            v: A vertex address.

        Returns:
            range: 0..d at the root, 0..d-1 on the all-zero ray, 1..d elsewhere.
        """
        if not v:
            return range(self.d + 1)
        if not any(v):
            return range(self.d)
        return range(1, self.d + 1)

    def validate(self, v) -> None:
        """
        Check that v is the address of a vertex.

        Args:
            v: The candidate address.

        Raises:
            AddressError: If v is not a tuple of labels or uses a label its parent lacks.
        """
        if not isinstance(v, tuple) or not all(isinstance(label, int) for label in v):
            raise AddressError(f"{v!r} is not a tree address")
        for depth, label in enumerate(v):
            if label not in self.child_labels(v[:depth]):
                raise AddressError(f"{v!r} is not a vertex of {self.name}")

    def neighbors(self, v: tuple[int, ...]) -> list[tuple[int, ...]]:
        """
        The d+1 neighbors of v.

        Args:
            v: A valid vertex address.

        Returns:
            list: The parent first (when v is not the root), then the children by label.
        """
        parent = [v[:-1]] if v else []
        return parent + [v + (label,) for label in self.child_labels(v)]

    def level(self, v: tuple[int, ...]) -> int:
        """
        The level of v: its length minus twice its run of leading zeros.

        Every vertex has exactly one neighbor one level lower.
        """
        zeros = 0
        for label in v:
            if label != 0:
                break
            zeros += 1
        return len(v) - 2 * zeros


@dataclass(frozen=True)
class RootedTree:
    """The rooted d-ary tree T_d^*: the root has d neighbors, all others d+1."""
    d: int

    def __post_init__(self):
        _require(isinstance(self.d, int) and self.d >= 2, f"RootedTree needs an integer d >= 2, got {self.d!r}")

    @property
    def name(self) -> str:
        """The text form accepted by parse_graph."""
        return f"rootedtree:{self.d}"

    def root(self) -> tuple[int, ...]:
        """The root, the empty address."""
        return ()

    def max_degree(self) -> int:
        return self.d + 1

    def validate(self, v) -> None:
        """Raise AddressError unless v is a tuple of labels in 1..d."""
        if not isinstance(v, tuple) or not all(isinstance(label, int) for label in v):
            raise AddressError(f"{v!r} is not a tree address")
        if any(not 1 <= label <= self.d for label in v):
            raise AddressError(f"{v!r} is not a vertex of {self.name}")

    def neighbors(self, v: tuple[int, ...]) -> list[tuple[int, ...]]:
        """The parent of v (unless v is the root) and its d children."""
        parent = [v[:-1]] if v else []
        return parent + [v + (label,) for label in range(1, self.d + 1)]

    def level(self, v: tuple[int, ...]) -> int:
        """The depth of v."""
        return len(v)


@dataclass(frozen=True)
class Lattice:
    """The integer lattice Z^dim, optionally cut to the box of half-width `box`."""
    dim: int
    box: int | None = None

    def __post_init__(self):
        _require(isinstance(self.dim, int) and self.dim >= 1, f"Lattice needs dim >= 1, got {self.dim!r}")
        _require(self.box is None or self.box >= 0, f"Lattice box must be nonnegative, got {self.box!r}")

    @property
    def name(self) -> str:
        return f"lattice:{self.dim}" + (f":{self.box}" if self.box is not None else "")

    def root(self) -> tuple[int, ...]:
        return (0,) * self.dim

    def max_degree(self) -> int:
        return 2 * self.dim

    def _inside(self, v: tuple[int, ...]) -> bool:
        return self.box is None or all(abs(c) <= self.box for c in v)

    def validate(self, v) -> None:
        """
        Check that v is a lattice point inside the box.

        Raises:
            AddressError: If v has the wrong dimension or lies outside the box.
        """
        if not isinstance(v, tuple) or len(v) != self.dim or not all(isinstance(c, int) for c in v):
            raise AddressError(f"{v!r} is not a {self.dim}-dimensional coordinate")
        if not self._inside(v):
            raise AddressError(f"{v!r} lies outside the box of {self.name}")

    def neighbors(self, v: tuple[int, ...]) -> list[tuple[int, ...]]:
        """
        The nearest neighbors of v, axis by axis, dropping those outside the box.

        Args:
            v: A lattice point.

        Returns:
            list: Up to 2*dim neighboring points.
        """
        result = []
        for axis in range(self.dim):
            for step in (-1, 1):
                u = v[:axis] + (v[axis] + step,) + v[axis + 1:]
                if self._inside(u):
                    result.append(u)
        return result

    def vertices(self) -> list[tuple[int, ...]]:
        """The points of the box in lexicographic order."""
        if self.box is None:
            raise UnsupportedError(f"{self.name} has infinitely many vertices")
        sites = [()]
        for _ in range(self.dim):
            sites = [s + (c,) for s in sites for c in range(-self.box, self.box + 1)]
        return sites


@dataclass(frozen=True)
class Explicit:
    """A finite graph given by neighbor lists over the vertices 0..n-1."""
    adjacency: tuple[tuple[int, ...], ...] = field()

    def __post_init__(self):
        adjacency = tuple(tuple(neighbours) for neighbours in self.adjacency)
        object.__setattr__(self, "adjacency", adjacency)
        size = len(adjacency)
        for v, neighbours in enumerate(adjacency):
            for u in neighbours:
                _require(isinstance(u, int) and 0 <= u < size, f"Vertex {v} lists unknown neighbor {u!r}")
                _require(u != v, f"Vertex {v} has a self-loop")
                _require(v in adjacency[u], f"Adjacency is not symmetric between {v} and {u}")
            _require(len(set(neighbours)) == len(neighbours), f"Vertex {v} lists a neighbor twice")

    @property
    def name(self) -> str:
        return f"explicit:{len(self.adjacency)}"

    def root(self) -> int:
        return 0

    def max_degree(self) -> int:
        return max((len(neighbours) for neighbours in self.adjacency), default=0)

    def validate(self, v) -> None:
        """Raise AddressError unless v is one of the integers 0..n-1."""
        if not isinstance(v, int) or isinstance(v, bool) or not 0 <= v < len(self.adjacency):
            raise AddressError(f"{v!r} is not a vertex of {self.name}")

    def neighbors(self, v: int) -> list[int]:
        """The neighbor list of v, in the order given."""
        return list(self.adjacency[v])

    def vertices(self) -> list[int]:
        return list(range(len(self.adjacency)))


@dataclass(frozen=True)
class Path:
    """The path on the vertices 0..n-1."""
    n: int

    def __post_init__(self):
        _require(isinstance(self.n, int) and self.n >= 2, f"Path needs n >= 2, got {self.n!r}")

    @property
    def name(self) -> str:
        return f"path:{self.n}"

    def root(self) -> int:
        return 0

    def max_degree(self) -> int:
        return 1 if self.n == 2 else 2

    def validate(self, v) -> None:
        """Raise AddressError unless v is one of the integers 0..n-1."""
        if not isinstance(v, int) or isinstance(v, bool) or not 0 <= v < self.n:
            raise AddressError(f"{v!r} is not a vertex of {self.name}")

    def neighbors(self, v: int) -> list[int]:
        """The vertices v-1 and v+1 that exist."""
        return [u for u in (v - 1, v + 1) if 0 <= u < self.n]

    def vertices(self) -> list[int]:
        return list(range(self.n))


@dataclass(frozen=True)
class TwoSite(Path):
    """The two-site graph {x, y}; x is vertex 0 and y is vertex 1."""
    n: int = 2

    def __post_init__(self):
        _require(self.n == 2, "TwoSite always has two vertices")

    @property
    def name(self) -> str:
        return "twosite"


GraphSpec = Union[HomTree, RootedTree, Lattice, Explicit, Path, TwoSite]

TREE_FAMILIES = (HomTree, RootedTree)


def neighbors(g: GraphSpec, v: SiteAddress) -> list[SiteAddress]:
    """Return all vertices adjacent to v, parent first and then children by label on trees."""
    g.validate(v)
    return g.neighbors(v)


def level(g: GraphSpec, v: SiteAddress) -> int:
    """Return the level of v: the horofunction toward the all-zero end on HomTree, depth on RootedTree.

    Raises:
        UnsupportedError: If g is not a tree family.
    """
    if not isinstance(g, TREE_FAMILIES):
        raise UnsupportedError(f"The level function is only defined on trees, not on {g.name}")
    g.validate(v)
    return g.level(v)


def root(g: GraphSpec) -> SiteAddress:
    """Return the distinguished start vertex x."""
    return g.root()


def vertices(g: GraphSpec) -> list[SiteAddress]:
    """Return the ordered vertex list of a finite graph."""
    if not hasattr(g, "vertices"):
        raise UnsupportedError(f"{g.name} has infinitely many vertices")
    return g.vertices()


def boundary_pairs(g: GraphSpec, occupied: Iterable[SiteAddress]) -> int:
    """Count the directed pairs (x, y) with x occupied, y vacant and x adjacent to y."""
    occupied = set(occupied)
    return sum(1 for x in occupied for y in g.neighbors(x) if y not in occupied)


def components(g: GraphSpec, occupied: Iterable[SiteAddress]) -> tuple[int, dict[SiteAddress, int]]:
    """
    Find the connected components of the subgraph induced by the occupied set.

    Args:
        g: The graph.
        occupied: A finite set of vertices.

    Returns:
        tuple: The number of components and a map from each occupied site to
            the index of its component. Components are numbered in the order of
            their smallest site.
    """
    occupied = set(occupied)
    labels: dict[SiteAddress, int] = {}
    count = 0
    for start in sorted(occupied):
        if start in labels:
            continue
        labels[start] = count
        queue = deque([start])
        while queue:
            x = queue.popleft()
            for y in g.neighbors(x):
                if y in occupied and y not in labels:
                    labels[y] = count
                    queue.append(y)
        count += 1
    return count, labels


def format_address(v: SiteAddress | None) -> str:
    """Render an address in slash-joined form; the tree root is '/', no site is '-'."""
    if v is None:
        return "-"
    if isinstance(v, int):
        return f"/{v}"
    return "/" + "/".join(str(label) for label in v)


def parse_address(text: str, g: GraphSpec | None = None) -> SiteAddress | None:
    """Parse the slash-joined form back into an address of the family of g."""
    text = text.strip()
    if text == "-":
        return None
    if not text.startswith("/"):
        raise AddressError(f"{text!r} is not a slash-joined address")
    parts = [part for part in text[1:].split("/") if part != ""]
    try:
        labels = tuple(int(part) for part in parts)
    except ValueError as error:
        raise AddressError(f"{text!r} contains a non-integer label") from error
    if g is not None and not isinstance(g, (HomTree, RootedTree, Lattice)):
        if len(labels) != 1:
            raise AddressError(f"{text!r} is not a vertex index")
        v = labels[0]
    else:
        v = labels
    if g is not None:
        g.validate(v)
    return v


def read_edge_list(path: str | FilePath) -> Explicit:
    """
    Read an explicit graph from a whitespace-separated edge list.

    One "u v" pair per line, vertices are nonnegative integers and lines
    starting with '#' are comments. The vertex set is 0..max label.

    Args:
        path: The edge list file.

    Returns:
        Explicit: The graph.
    """
    logger.debug("Reading edge list %s.", path)
    edges = nx.read_edgelist(path, nodetype=int, comments="#", create_using=nx.Graph)
    if nx.number_of_selfloops(edges):
        raise ParameterError(f"Edge list {path} contains a self-loop")
    if any(v < 0 for v in edges.nodes):
        raise ParameterError(f"Edge list {path} contains a negative vertex")
    size = max(edges.nodes, default=-1) + 1
    adjacency = tuple(
        tuple(sorted(edges.neighbors(v))) if v in edges else ()
        for v in range(size)
    )
    return Explicit(adjacency)


def parse_graph(text: str, d: int | None = None) -> GraphSpec:
    """
    Build a GraphSpec from its command-line form.

    Accepted forms are homtree, rootedtree (both using d), homtree:D,
    rootedtree:D, lattice:DIM[:BOX], twosite, path:N and file:PATH.
    """
    family, _, rest = text.strip().partition(":")
    family = family.lower()
    try:
        match family:
            case "homtree" | "rootedtree":
                degree = int(rest) if rest else d
                _require(degree is not None, f"Graph {text!r} needs d")
                return HomTree(degree) if family == "homtree" else RootedTree(degree)
            case "lattice":
                dim, _, box = rest.partition(":")
                return Lattice(int(dim) if dim else 1, int(box) if box else None)
            case "twosite":
                return TwoSite()
            case "path":
                return Path(int(rest))
            case "file":
                return read_edge_list(rest)
    except ValueError as error:
        if isinstance(error, ParameterError):
            raise
        raise ParameterError(f"Cannot parse graph {text!r}: {error}") from error
    raise ParameterError(f"Unknown graph family {text!r}")
