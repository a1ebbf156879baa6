import math
from fractions import Fraction

import numpy as np
import pytest

from mutacp.analysis import (
    Verdict,
    classify,
    drift_coefficients,
    drift_feasible,
    gamma_rate,
    gw_mean_U,
    gw_mean_Z,
    lambdabound,
    quotient_identity_check,
    r_line_verdict,
    threshold_die,
    threshold_survive,
    type_degree_bound,
    weak_survival_note,
    window_transition,
    window_weak,
)
from mutacp.dynamics import Configuration
from mutacp.exceptions import DomainError, ParameterError
from mutacp.graph import HomTree, Lattice


@pytest.mark.parametrize("d", range(2, 11))
def test_thresholds_match_rational_arithmetic(d):
    assert threshold_survive(d) == pytest.approx(float(Fraction(1, d - 1)), abs=1e-12)
    for r in (Fraction(1, 4), Fraction(1, 2), Fraction(1)):
        assert threshold_die(d, float(r)) == pytest.approx(float(1 / (d - 1 + 2 * r)), abs=1e-12)


def test_threshold_examples():
    assert threshold_survive(2) == 1.0
    assert threshold_survive(3) == 0.5
    assert threshold_die(2, 1) == pytest.approx(1 / 3)
    assert threshold_die(2, 0) == 1.0
    with pytest.raises(ParameterError):
        threshold_survive(1)
    with pytest.raises(ParameterError):
        threshold_die(2, 1.5)


def test_window_transition():
    left, right = window_transition(2)
    assert left == pytest.approx(2 / 3, abs=1e-12)
    assert right == 1.0
    assert window_transition(3)[0] == pytest.approx((math.sqrt(68) - 2) / 16, abs=1e-12)
    for d in range(2, 30):
        left, right = window_transition(d)
        assert left < right


@pytest.mark.parametrize("d", [50, 100, 200])
def test_window_transition_shrinks_like_inverse_square(d):
    left, right = window_transition(d)
    assert 0.5 < (right - left) * d * d < 0.8


def test_window_weak():
    assert window_weak(6) == pytest.approx((0.2, 1 / (2 * math.sqrt(6))))
    assert window_weak(6)[1] == pytest.approx(0.204124, abs=1e-6)
    assert window_weak(5) is None
    assert window_weak(2) is None
    assert all((window_weak(d) is not None) == (d >= 6) for d in range(2, 11))


def test_weak_survival_note():
    assert weak_survival_note(4) is not None
    assert "0.309" in weak_survival_note(5)
    assert weak_survival_note(6) is None
    assert weak_survival_note(2) is None


def test_lambdabound():
    assert lambdabound(2, 1) == pytest.approx(2 / 3, abs=1e-12)
    assert lambdabound(2, 0.5) == pytest.approx((1 + math.sqrt(13)) / 3, abs=1e-12)
    assert lambdabound(2, 0) == math.inf
    for d in range(2, 11):
        assert lambdabound(d, 1) == pytest.approx(window_transition(d)[0], abs=1e-12)


def test_gw_mean_U():
    assert gw_mean_U(2, 0.8, 0.5).value == pytest.approx(0.8)
    assert gw_mean_U(2, 1.25, 0.5).value == pytest.approx(1.25)
    assert gw_mean_U(3, 0.5, 0.3).value == pytest.approx(1.0)
    with pytest.raises(DomainError):
        gw_mean_U(2, 1.0, 0.0)
    with pytest.raises(DomainError):
        gw_mean_U(2, 1.0, 1.0)


def test_gw_mean_Z():
    assert gw_mean_Z(2, 0.5, 0.5).value == pytest.approx(1.0)
    assert gw_mean_Z(2, 0.4, 0.5).value == pytest.approx(0.75)
    assert gw_mean_Z(2, 2.0, 0.5).infinite
    assert not gw_mean_Z(2, 1.98, 0.5).infinite
    assert gw_mean_Z(2, 2.0, 0.5).exceeds_one()


@pytest.mark.parametrize("d", [2, 3, 5])
def test_gw_mean_U_crosses_one_at_survival_threshold(d):
    for lam in np.linspace(0.05, 2.0, 40):
        for r in (0.1, 0.5, 0.9):
            expected = lam > 1 / (d - 1)
            if abs(lam - 1 / (d - 1)) < 1e-9:
                continue
            assert gw_mean_U(d, float(lam), r).exceeds_one() == expected


def test_gamma_rate():
    assert gamma_rate(4, 0.2, 0.5) == pytest.approx(-0.2)
    assert gamma_rate(4, 0.25, 0.5) == pytest.approx(0.0)
    with pytest.raises(ParameterError):
        gamma_rate(4, 0.2, 1.0)


def test_drift_feasible_examples():
    assert drift_feasible(2, 0.7, 1) is not None
    assert drift_feasible(2, 0.6, 1) is None
    assert drift_feasible(3, 0.5, 1) is not None
    assert drift_feasible(2, 1.0, 0.0) is None


@pytest.mark.parametrize("r", [1.0, 0.5])
def test_drift_feasible_matches_lambdabound(r):
    bound = lambdabound(2, r)
    step = 1e-3
    for lam in np.arange(step, 3.0, step):
        witness = drift_feasible(2, float(lam), r)
        if abs(lam - bound) <= step:
            continue
        assert (witness is not None) == (lam > bound)
        if witness is not None:
            alpha, beta = witness
            coefficients = drift_coefficients(2, float(lam), r, alpha, beta)
            assert coefficients.type_slack > 0
            assert coefficients.component_floor_slack > 0
            assert coefficients.component_slack > 0


@pytest.mark.parametrize("d, lam, r, verdict", [
    (2, 1.5, 0.3, Verdict.SURVIVES_ALL_R),
    (2, 0.4, 0.5, Verdict.DIES_OUT),
    (2, 0.8, 0.05, Verdict.DIES_OUT),
    (2, 0.8, 0.3, Verdict.THEORY_UNKNOWN),
    (2, 1.0, 0.0, Verdict.DIES_OUT),
    (6, 0.202, 0.5, Verdict.WEAK_SURVIVAL_WINDOW),
    (2, 0.9, 1.0, Verdict.SURVIVES_BY_DRIFT),
])
def test_classify(d, lam, r, verdict):
    assert classify(d, lam, r).verdict is verdict


def test_classify_prints_its_value():
    assert str(classify(2, 1.5, 0.3)) == "SurvivesAllR"
    assert "window_transition" in classify(2, 0.8, 0.3).witnesses


@pytest.mark.parametrize("lam, verdict", [
    (0.8, Verdict.TRANSITION_IN_R),
    (0.3, Verdict.DIES_OUT),
    (1.5, Verdict.SURVIVES_ALL_R),
    (0.5, Verdict.THEORY_UNKNOWN),
])
def test_r_line_verdict(lam, verdict):
    assert r_line_verdict(2, lam).verdict is verdict


def test_quotient_identity_on_a_star():
    config = Configuration.from_blocks([[()], [(0,)], [(1,)], [(2,)]])
    result = quotient_identity_check(HomTree(2), config, config.sites())
    assert result.passed and result.applicable
    assert type_degree_bound(HomTree(2), config, config.sites(), 2).passed


def test_quotient_identity_on_adjacent_blocks():
    config = Configuration.from_blocks([[(), (1,)], [(1, 1), (1, 2)], [(2,)]])
    assert quotient_identity_check(HomTree(2), config, config.sites()).passed


def test_quotient_identity_single_type_does_not_apply():
    config = Configuration.from_blocks([[(), (1,)]])
    assert not quotient_identity_check(HomTree(2), config, config.sites()).applicable


def test_quotient_identity_fails_on_a_cycle():
    config = Configuration.from_blocks([[(0, 0)], [(1, 0)], [(1, 1)], [(0, 1)]])
    assert not quotient_identity_check(Lattice(2), config, config.sites()).passed


def test_type_degree_bound_can_fail():
    config = Configuration.from_blocks([[(0, 0)], [(1, 0)], [(-1, 0)], [(0, 1)], [(0, -1)]])
    assert not type_degree_bound(Lattice(2), config, config.sites(), 2).passed
