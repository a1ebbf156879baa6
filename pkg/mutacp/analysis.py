"""
Closed-form thresholds, offspring means, drift feasibility and the structural
identities of occupied sets on trees. Everything here is plain arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import networkx as nx

from mutacp.dynamics.configuration import Configuration
from mutacp.exceptions import DomainError, ParameterError
from mutacp.graph import GraphSpec, SiteAddress


class Verdict(Enum):
    """What the known thresholds say about a parameter point."""
    DIES_OUT = "DiesOut"
    SURVIVES_ALL_R = "SurvivesAllR"
    SURVIVES_BY_DRIFT = "SurvivesByDrift"
    WEAK_SURVIVAL_WINDOW = "WeakSurvivalWindow"
    TRANSITION_IN_R = "TransitionInR"
    THEORY_UNKNOWN = "TheoryUnknown"


@dataclass(frozen=True)
class RegionVerdict:
    """A verdict together with the thresholds that fired."""
    verdict: Verdict
    witnesses: dict = field(default_factory=dict)

    def __str__(self) -> str:
        return self.verdict.value


@dataclass(frozen=True)
class ExtendedMean:
    """A nonnegative mean that may be infinite."""
    value: float
    infinite: bool = False

    @classmethod
    def inf(cls) -> "ExtendedMean":
        return cls(math.inf, True)

    def exceeds_one(self) -> bool:
        return self.infinite or self.value > 1


def _check_d(d: int) -> None:
    if not isinstance(d, int) or isinstance(d, bool) or d < 2:
        raise ParameterError(f"d must be an integer >= 2, got {d!r}")


def _check_r(r: float) -> None:
    if not 0 <= r <= 1:
        raise ParameterError(f"r must lie in [0, 1], got {r}")


def _check_lambda(lam: float) -> None:
    if not lam > 0:
        raise ParameterError(f"lambda must be positive, got {lam}")


def _check_open_r(r: float) -> None:
    _check_r(r)
    if r in (0, 1):
        raise DomainError(f"The offspring means need r strictly inside (0, 1), got {r}")


# ----------------------------------------------------------------------
# Thresholds
# ----------------------------------------------------------------------

def threshold_survive(d: int) -> float:
    """Above 1/(d-1) the pathogens survive for every r > 0."""
    _check_d(d)
    return 1 / (d - 1)


def threshold_die(d: int, r: float) -> float:
    """At or below 1/(d-1+2r) the pathogens die out."""
    _check_d(d)
    _check_r(r)
    return 1 / (d - 1 + 2 * r)


def window_transition(d: int) -> tuple[float, float]:
    """The lambda window in which survival switches on as r moves from 0 to 1."""
    _check_d(d)
    left = (1 - d + math.sqrt((d - 1) * (7 + 9 * d))) / (2 * (d * d - 1))
    return left, 1 / (d - 1)


def window_weak(d: int) -> tuple[float, float] | None:
    """The weak survival window (1/(d-1), 1/(2 sqrt d)), or None when it is empty."""
    _check_d(d)
    left, right = 1 / (d - 1), 1 / (2 * math.sqrt(d))
    return (left, right) if left < right else None


# Lower bounds on the strong survival threshold of the basic contact process.
WEAK_SURVIVAL_LOWER_BOUNDS = {4: 0.354, 5: 0.309}


def weak_survival_note(d: int) -> str | None:
    """A note for trees where the weak window is empty but known bounds place one."""
    _check_d(d)
    bound = WEAK_SURVIVAL_LOWER_BOUNDS.get(d)
    if bound is None or window_weak(d) is not None:
        return None
    return (
        f"strong survival of the basic contact process needs lambda > {bound}, "
        f"so weak survival holds for 1/(d-1) = {1 / (d - 1):.6g} < lambda < {bound}"
    )


def lambdabound(d: int, r: float) -> float:
    """
    The survival bound from the drift criterion.

    Returns math.inf when r = 0, where the bound diverges.
    """
    _check_d(d)
    _check_r(r)
    if r == 0:
        return math.inf
    root = math.sqrt((d + 1) ** 2 + 4 * r * (d + 1) * (d - 2) + 4 * d * d * r * r)
    return (d + 1 - 2 * r * d + root) / (2 * r * (d * d - 1))


# ----------------------------------------------------------------------
# Offspring means
# ----------------------------------------------------------------------

def gw_mean_U(d: int, lam: float, r: float) -> ExtendedMean:
    """Mean offspring of the type tree of the restricted process."""
    _check_d(d)
    _check_lambda(lam)
    _check_open_r(r)
    if r < (d - 1) / d and lam >= 1 / (d - 1 - d * r):
        return ExtendedMean.inf()
    if d * lam * (1 - r) / (lam + 1) >= 1:
        return ExtendedMean.inf()
    return ExtendedMean(d * lam * r / (1 - (d - 1) * lam + d * lam * r))


def gw_mean_Z(d: int, lam: float, r: float) -> ExtendedMean:
    """Mean number of new types born from one type in the mutation process."""
    _check_d(d)
    _check_lambda(lam)
    _check_open_r(r)
    if lam >= 1 / ((d - 1) * (1 - r)):
        return ExtendedMean.inf()
    return ExtendedMean((d + 1) * r * lam / (1 - (d - 1) * (1 - r) * lam))


def gamma_rate(d: int, lam: float, rho: float) -> float:
    """The exponential rate bounding the mean level-weighted size."""
    _check_d(d)
    if not 0 < rho < 1:
        raise ParameterError(f"rho must lie in (0, 1), got {rho}")
    return lam * d * rho + lam / rho - 1


# ----------------------------------------------------------------------
# Drift criterion
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class DriftCoefficients:
    """
    Slacks of the three coefficient inequalities of the drift functional
    alpha * N(A) + beta * C(A); each must be positive (the last nonnegative).
    """
    type_slack: float
    component_floor_slack: float
    component_slack: float

    @property
    def feasible(self) -> bool:
        return self.type_slack > 0 and self.component_floor_slack > 0 and self.component_slack >= 0


def drift_coefficients(d: int, lam: float, r: float, alpha: float, beta: float) -> DriftCoefficients:
    """Evaluate alpha*lambda*r > beta, beta > alpha*max(0, 1 - lambda*r*(d-1)) and 2*lambda*r*alpha >= beta*(2 + lambda*(d+1))."""
    return DriftCoefficients(
        type_slack=alpha * lam * r - beta,
        component_floor_slack=beta - alpha * max(0.0, 1 - lam * r * (d - 1)),
        component_slack=2 * lam * r * alpha - beta * (2 + lam * (d + 1)),
    )


def drift_feasible(d: int, lam: float, r: float) -> tuple[float, float] | None:
    """
    Find (alpha, beta) satisfying the drift inequalities.

    The system is homogeneous, so alpha is fixed to 1 and beta is taken at
    the midpoint of the feasible interval.

    Returns:
        tuple | None: The witness, or None when no witness exists.
    """
    _check_d(d)
    _check_lambda(lam)
    _check_r(r)
    if r == 0:
        return None
    lower = max(0.0, 1 - lam * r * (d - 1))
    upper = 2 * lam * r / (2 + lam * (d + 1))
    if not lower < upper:
        return None
    return 1.0, (lower + upper) / 2


# ----------------------------------------------------------------------
# Verdicts
# ----------------------------------------------------------------------

def classify(d: int, lam: float, r: float) -> RegionVerdict:
    """
    Place (d, lambda, r) in the phase structure given by the known bounds.

    Points none of the bounds decide are reported as TheoryUnknown.
    """
    _check_d(d)
    _check_lambda(lam)
    _check_r(r)
    if r == 0:
        return RegionVerdict(Verdict.DIES_OUT, {"r": 0.0})
    die = threshold_die(d, r)
    if lam <= die:
        return RegionVerdict(Verdict.DIES_OUT, {"threshold_die": die})
    survive = threshold_survive(d)
    if lam > survive:
        weak = window_weak(d)
        if weak is not None and lam < weak[1]:
            return RegionVerdict(Verdict.WEAK_SURVIVAL_WINDOW, {"threshold_survive": survive, "window_weak": weak})
        return RegionVerdict(Verdict.SURVIVES_ALL_R, {"threshold_survive": survive})
    witness = drift_feasible(d, lam, r)
    if witness is not None:
        return RegionVerdict(Verdict.SURVIVES_BY_DRIFT, {"lambdabound": lambdabound(d, r), "witness": witness})
    left, right = window_transition(d)
    witnesses = {"threshold_die": die, "lambdabound": lambdabound(d, r)}
    if left < lam <= right:
        witnesses["window_transition"] = (left, right)
    return RegionVerdict(Verdict.THEORY_UNKNOWN, witnesses)


def r_line_verdict(d: int, lam: float) -> RegionVerdict:
    """What the bounds say about the whole line of r values at a fixed lambda."""
    _check_d(d)
    _check_lambda(lam)
    if lam <= 1 / (d + 1):
        return RegionVerdict(Verdict.DIES_OUT, {"threshold_die": 1 / (d + 1)})
    left, right = window_transition(d)
    if lam > right:
        return RegionVerdict(Verdict.SURVIVES_ALL_R, {"threshold_survive": right})
    if lam > left:
        return RegionVerdict(Verdict.TRANSITION_IN_R, {"window_transition": (left, right)})
    return RegionVerdict(Verdict.THEORY_UNKNOWN, {"window_transition": (left, right)})


# ----------------------------------------------------------------------
# Structural identities
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    """Outcome of a structural check; applicable is False when the check does not apply."""
    passed: bool
    detail: str
    applicable: bool = True


def quotient_graph(g: GraphSpec, config: Configuration, component: Iterable[SiteAddress]) -> nx.Graph:
    """The graph on the types of a component, with an edge between types on adjacent sites."""
    sites = set(component)
    quotient = nx.Graph()
    for site in sites:
        type_id = config.type_of(site)
        quotient.add_node(type_id)
        for neighbour in g.neighbors(site):
            if neighbour in sites and config.type_of(neighbour) != type_id:
                quotient.add_edge(type_id, config.type_of(neighbour))
    return quotient


def quotient_identity_check(g: GraphSpec, config: Configuration, component: Iterable[SiteAddress]) -> CheckResult:
    """
    Check that the type-quotient of a component is a tree with sum(j_i - 1) = k - 2.

    j_i is the number of other types adjacent to type i inside the component
    and k the number of types in it.
    """
    quotient = quotient_graph(g, config, component)
    k = quotient.number_of_nodes()
    if k < 2:
        return CheckResult(True, f"component holds {k} type(s)", applicable=False)
    total = sum(degree - 1 for _, degree in quotient.degree())
    if not nx.is_tree(quotient):
        return CheckResult(False, f"type-quotient of {k} types is not a tree")
    if total != k - 2:
        return CheckResult(False, f"sum of (j_i - 1) is {total}, expected {k - 2}")
    return CheckResult(True, f"{k} types, sum of (j_i - 1) = {total}")


def type_degree_bound(g: GraphSpec, config: Configuration, component: Iterable[SiteAddress], d: int) -> CheckResult:
    """Check j_i <= (d-1)|A^i| + 2 for every type i of a component."""
    sites = set(component)
    quotient = quotient_graph(g, config, sites)
    sizes: dict[int, int] = {}
    for site in sites:
        sizes[config.type_of(site)] = sizes.get(config.type_of(site), 0) + 1
    for type_id, size in sizes.items():
        degree = quotient.degree(type_id)
        if degree > (d - 1) * size + 2:
            return CheckResult(False, f"type {type_id} touches {degree} types with {size} sites")
    return CheckResult(True, f"{len(sizes)} types within the degree bound")
