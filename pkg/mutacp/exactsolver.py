"""
Exact transient laws of the mutation and individual-death processes on tiny
finite graphs.

States are lumped over type labels: a state is the occupied set together with
its partition into type blocks. Rates only depend on the block structure, so
the lumped chain is itself Markov and the state count grows with Bell numbers
instead of with label assignments.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path as FilePath
from typing import IO, Iterable, Iterator, Sequence

import numpy as np
from scipy import sparse, stats
from scipy.linalg import expm

from mutacp import config
from mutacp.dynamics.configuration import Configuration, ProcessKind
from mutacp.dynamics.engine import validate_rates
from mutacp.exceptions import GraphTooLargeError, ParameterError
from mutacp.graph import GraphSpec, TwoSite, format_address, vertices

logger = logging.getLogger(__name__)

EXACT_KINDS = (ProcessKind.MUTATION, ProcessKind.INDIVIDUAL_DEATH)


@dataclass(frozen=True)
class LumpedState:
    """An occupied set with its partition into type blocks; labels are forgotten."""
    occupied: frozenset
    partition: frozenset

    @classmethod
    def of(cls, blocks: Iterable[Iterable]) -> "LumpedState":
        """Build a state from its blocks; empty blocks are rejected."""
        partition = frozenset(frozenset(block) for block in blocks)
        if any(not block for block in partition):
            raise ParameterError("Type blocks must be nonempty")
        occupied = frozenset().union(*partition) if partition else frozenset()
        if sum(len(block) for block in partition) != len(occupied):
            raise ParameterError("Type blocks must be disjoint")
        return cls(occupied, partition)

    @classmethod
    def singletons(cls, sites: Iterable) -> "LumpedState":
        """Every site in its own block."""
        return cls.of([site] for site in sites)

    @classmethod
    def from_configuration(cls, configuration: Configuration) -> "LumpedState":
        return cls(frozenset(configuration.occupied), configuration.partition())

    def blocks(self) -> list[frozenset]:
        return sorted(self.partition, key=lambda block: sorted(block))

    def sort_key(self) -> tuple:
        return len(self.occupied), sorted(self.occupied), sorted(sorted(block) for block in self.partition)

    def describe(self) -> str:
        if not self.occupied:
            return "{}"
        return "".join("{" + ",".join(format_address(v) for v in sorted(block)) + "}" for block in self.blocks())


def set_partitions(items: Sequence) -> Iterator[list[list]]:
    """All partitions of a sequence into nonempty blocks."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partition in set_partitions(rest):
        for position in range(len(partition)):
            yield partition[:position] + [[first] + partition[position]] + partition[position + 1:]
        yield [[first]] + partition


def _finite_vertices(g: GraphSpec, cap: int) -> list:
    sites = vertices(g)
    if len(sites) > cap:
        raise GraphTooLargeError(f"{g.name} has {len(sites)} vertices, the cap is {cap}")
    return sorted(sites)


def enumerate_states(g: GraphSpec) -> list[LumpedState]:
    """All lumped states of a finite graph, ordered by subset and then by partition."""
    sites = _finite_vertices(g, config.MAX_EXACT_VERTICES)
    states = []
    for size in range(len(sites) + 1):
        for subset in itertools.combinations(sites, size):
            states.extend(LumpedState.of(blocks) for blocks in set_partitions(list(subset)))
    states.sort(key=LumpedState.sort_key)
    return states


@dataclass
class GeneratorMatrix:
    """The rate matrix of a lumped chain with its state index."""
    g: GraphSpec
    kind: ProcessKind
    lam: float
    r: float
    states: list[LumpedState]
    matrix: sparse.csr_matrix
    index: dict[LumpedState, int] = field(init=False)

    def __post_init__(self):
        self.index = {state: i for i, state in enumerate(self.states)}

    def state_index(self, state: LumpedState | Configuration) -> int:
        if isinstance(state, Configuration):
            state = LumpedState.from_configuration(state)
        if state not in self.index:
            raise ParameterError(f"{state.describe()} is not a state of {self.g.name}")
        return self.index[state]

    @property
    def empty_index(self) -> int:
        return self.index[LumpedState(frozenset(), frozenset())]

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()


def _transitions(g: GraphSpec, kind: ProcessKind, lam: float, r: float, state: LumpedState) -> Iterator[tuple[LumpedState, float]]:
    if kind is ProcessKind.MUTATION:
        for block in state.partition:
            yield LumpedState(state.occupied - block, state.partition - {block}), 1.0
    else:
        for block in state.partition:
            for site in block:
                rest = state.partition - {block}
                if len(block) > 1:
                    rest = rest | {block - {site}}
                yield LumpedState(state.occupied - {site}, rest), 1.0
    for block in state.partition:
        for x in block:
            for y in g.neighbors(x):
                if y in state.occupied:
                    continue
                occupied = state.occupied | {y}
                if r > 0:
                    yield LumpedState(occupied, state.partition | {frozenset([y])}), lam * r
                if r < 1:
                    yield LumpedState(occupied, (state.partition - {block}) | {block | {y}}), lam * (1 - r)


def build_generator(g: GraphSpec, kind: ProcessKind, lam: float, r: float) -> GeneratorMatrix:
    """
    Assemble the generator of the lumped chain.

    Under MUTATION each block dies at rate 1; under INDIVIDUAL_DEATH each site
    does. Every pair of an occupied x and a vacant neighbor y adds lambda*r
    toward y as a new singleton block and lambda*(1-r) toward y joining the
    block of x.
    """
    if kind not in EXACT_KINDS:
        raise ParameterError(f"The exact solver handles mutation and individual runs, not {kind.value}")
    validate_rates(lam, r)
    states = enumerate_states(g)
    index = {state: i for i, state in enumerate(states)}
    logger.debug("Building %s generator on %s with %d states.", kind.value, g.name, len(states))
    rates: dict[tuple[int, int], float] = {}
    for i, state in enumerate(states):
        for target, rate in _transitions(g, kind, lam, r, state):
            j = index[target]
            rates[i, j] = rates.get((i, j), 0.0) + rate
            rates[i, i] = rates.get((i, i), 0.0) - rate
    rows, cols = zip(*rates) if rates else ((), ())
    matrix = sparse.csr_matrix((list(rates.values()), (rows, cols)), shape=(len(states), len(states)))
    return GeneratorMatrix(g, kind, lam, r, states, matrix)


def _uniformize(gen: GeneratorMatrix, start: np.ndarray, t: float) -> np.ndarray:
    """Push row distributions through exp(tQ) by uniformization."""
    if t < 0:
        raise ParameterError(f"t must be nonnegative, got {t}")
    q = float(np.max(np.abs(gen.matrix.diagonal()), initial=0.0))
    if t == 0 or q == 0:
        return start.copy()
    step = (sparse.identity(len(gen.states), format="csr") + gen.matrix / q).T.tocsr()
    mean = q * t
    depth = int(stats.poisson.isf(config.UNIFORMIZATION_TOLERANCE, mean)) + 1
    weights = stats.poisson.pmf(np.arange(depth + 1), mean)
    current = start.T.copy()
    result = weights[0] * current
    for k in range(1, depth + 1):
        current = step @ current
        result += weights[k] * current
    return result.T


def transient(gen: GeneratorMatrix, init: LumpedState | Configuration, t: float) -> np.ndarray:
    """The distribution over states at time t from init."""
    start = np.zeros((1, len(gen.states)))
    start[0, gen.state_index(init)] = 1.0
    return _uniformize(gen, start, t)[0]


def transient_all(gen: GeneratorMatrix, t: float) -> np.ndarray:
    """The transition matrix at time t; row i is the law from state i."""
    return _uniformize(gen, np.identity(len(gen.states)), t)


def prob_nonempty(gen: GeneratorMatrix, init: LumpedState | Configuration, t: float) -> float:
    """P(A_t is nonempty) from init."""
    return float(1.0 - transient(gen, init, t)[gen.empty_index])


def _hit_mask(gen: GeneratorMatrix, target: Iterable) -> np.ndarray:
    target = frozenset(target)
    unknown = target - set(vertices(gen.g))
    if unknown:
        raise ParameterError(f"{sorted(unknown)} are not vertices of {gen.g.name}")
    return np.array([bool(state.occupied & target) for state in gen.states], dtype=float)


def prob_intersect(gen: GeneratorMatrix, init: LumpedState | Configuration, target: Iterable, t: float) -> float:
    """P(A_t meets the target set) from init."""
    return float(transient(gen, init, t) @ _hit_mask(gen, target))


def occupied_law(gen: GeneratorMatrix, distribution: np.ndarray) -> dict[frozenset, float]:
    """Marginalize a distribution over states onto occupied sets."""
    law: dict[frozenset, float] = {}
    for state, p in zip(gen.states, distribution):
        law[state.occupied] = law.get(state.occupied, 0.0) + float(p)
    return law


def dump_generator(gen: GeneratorMatrix, target: str | FilePath | IO[str]) -> None:
    """Write the generator as 'row col rate' triplets, states listed in comments first."""
    if isinstance(target, (str, FilePath)):
        with open(target, "w", encoding="utf-8", newline="\n") as stream:
            dump_generator(gen, stream)
        return
    target.write(f"# {gen.kind.value} generator on {gen.g.name} lambda={gen.lam!r} r={gen.r!r}\n")
    for i, state in enumerate(gen.states):
        target.write(f"# state {i} {state.describe()}\n")
    triplets = gen.matrix.tocoo()
    for i, j, rate in sorted(zip(triplets.row, triplets.col, triplets.data)):
        target.write(f"{i} {j} {rate:.17g}\n")


# ----------------------------------------------------------------------
# Exhaustive comparisons
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class VerificationReport:
    """Outcome of an exhaustive inequality check; slack is right side minus left side."""
    name: str
    passed: bool
    checked: int
    worst_slack: float
    worst_case: str


def _subsets(sites: Sequence) -> list[frozenset]:
    return [frozenset(c) for size in range(len(sites) + 1) for c in itertools.combinations(sites, size)]


def verify_domination(g: GraphSpec, lam: float, r: float, t_list: Sequence[float]) -> VerificationReport:
    """
    Check P(A_t meets C) <= P(A'_t meets C) from every lumped state, for every
    target set C and every t, where A is the mutation process and A' the
    individual-death process from the same state.
    """
    sites = _finite_vertices(g, config.MAX_VERIFY_VERTICES)
    mutation = build_generator(g, ProcessKind.MUTATION, lam, r)
    primed = build_generator(g, ProcessKind.INDIVIDUAL_DEATH, lam, r)
    masks = [(target, _hit_mask(mutation, target)) for target in _subsets(sites)]
    worst, case, checked = math.inf, "", 0
    for t in t_list:
        upper = transient_all(primed, t)
        lower = transient_all(mutation, t)
        for i, state in enumerate(mutation.states):
            for target, mask in masks:
                slack = float(upper[i] @ mask - lower[i] @ mask)
                checked += 1
                if slack < worst:
                    worst, case = slack, f"t={t} A={state.describe()} C={sorted(target)}"
    passed = worst >= -config.COMPARISON_TOLERANCE
    logger.info("Domination check on %s: worst slack %.3g over %d cases.", g.name, worst, checked)
    return VerificationReport("domination", passed, checked, worst, case)


def verify_submodularity(g: GraphSpec, lam: float, t_list: Sequence[float]) -> VerificationReport:
    """
    Check the submodularity P^{A&B} + P^{A|B} <= P^A + P^B of
    P^S = P(A'_t meets C from S) for the basic contact process, over all
    subsets A, B, C and every t.
    """
    sites = _finite_vertices(g, config.MAX_VERIFY_VERTICES)
    gen = build_generator(g, ProcessKind.INDIVIDUAL_DEATH, lam, 1.0)
    subsets = _subsets(sites)
    masks = [(target, _hit_mask(gen, target)) for target in subsets]
    worst, case, checked = math.inf, "", 0
    for t in t_list:
        laws = transient_all(gen, t)
        rows = {s: laws[gen.state_index(LumpedState.singletons(s))] for s in subsets}
        for target, mask in masks:
            hit = {s: float(rows[s] @ mask) for s in subsets}
            for a, b in itertools.product(subsets, repeat=2):
                slack = hit[a] + hit[b] - hit[a & b] - hit[a | b]
                checked += 1
                if slack < worst:
                    worst, case = slack, f"t={t} A={sorted(a)} B={sorted(b)} C={sorted(target)}"
    passed = worst >= -config.COMPARISON_TOLERANCE
    logger.info("Submodularity check on %s: worst slack %.3g over %d cases.", g.name, worst, checked)
    return VerificationReport("submodularity", passed, checked, worst, case)


# ----------------------------------------------------------------------
# Two-site non-monotonicity
# ----------------------------------------------------------------------

PAIR_SAME = "pair_same"
SINGLE = "single"
PAIR_SPLIT = "pair_split"

TWO_SITE_STARTS = {
    PAIR_SAME: LumpedState.of([[0, 1]]),
    SINGLE: LumpedState.of([[0]]),
    PAIR_SPLIT: LumpedState.of([[0], [1]]),
}


def two_site_values(lam: float, t: float = 1.0, r: float = 0.5) -> dict[str, float]:
    """P(nonempty at t) for the mutation process on TwoSite from the three starts."""
    gen = build_generator(TwoSite(), ProcessKind.MUTATION, lam, r)
    return {name: prob_nonempty(gen, init, t) for name, init in TWO_SITE_STARTS.items()}


def two_site_limit(t: float = 1.0, r: float = 0.5) -> dict[str, float]:
    """
    The same values as lambda grows without bound.

    A vacant site is refilled at once, so only three states remain: empty,
    a pair of one type and a pair of two types. The one-type pair dies at
    rate 1; in the two-type pair either block dies at rate 1 and the refill
    joins the survivor's type with probability 1 - r.
    """
    if t < 0:
        raise ParameterError(f"t must be nonnegative, got {t}")
    if not 0 <= r <= 1:
        raise ParameterError(f"r must lie in [0, 1], got {r}")
    generator = np.array([
        [0.0, 0.0, 0.0],
        [1.0, -1.0, 0.0],
        [0.0, 2 * (1 - r), -2 * (1 - r)],
    ])
    law = expm(generator * t)
    alive = 1.0 - law[:, 0]
    return {
        PAIR_SAME: float(alive[1]),
        SINGLE: float((1 - r) * alive[1] + r * alive[2]),
        PAIR_SPLIT: float(alive[2]),
    }


def two_site_closed_forms(t: float = 1.0) -> dict[str, float]:
    """The limit values at r = 1/2."""
    return {
        PAIR_SAME: math.exp(-t),
        SINGLE: (1 + t / 2) * math.exp(-t),
        PAIR_SPLIT: (1 + t) * math.exp(-t),
    }
