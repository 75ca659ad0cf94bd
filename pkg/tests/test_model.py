import warnings

import numpy as np
import pytest

from offloadsim.errors import DomainError
from offloadsim.model import (
    Action,
    NetworkModel,
    ProblemSpec,
    QuadraticPenalty,
    State,
    StepPenalty,
    TabulatedPenalty,
    admissible_actions,
    is_convex_on_grid,
    next_file_size,
    payment,
    penalty,
    slot_payment,
    transition_dist,
)
from offloadsim.sim import build_grid_mobility

from instances import grid_demo_model, random_general_instance


def simple_model(wifi=frozenset({2}), L=2, rate_cell=900.0, rate_wifi=200.0, price_cell=7.5e-4):
    rate = np.zeros((L, 3))
    price = np.zeros((L, 3))
    rate[:, Action.CELLULAR] = rate_cell
    price[:, Action.CELLULAR] = price_cell
    for l in wifi:
        rate[l - 1, Action.WIFI] = rate_wifi
    mobility = np.full((L, L), 1.0 / L)
    return NetworkModel(L, wifi, mobility, price, rate)


def test_admissible_actions_wifi_grid():
    model = grid_demo_model()
    assert admissible_actions(model, 4) == (Action.IDLE, Action.CELLULAR, Action.WIFI)
    assert admissible_actions(model, 1) == (Action.IDLE, Action.CELLULAR)


def test_admissible_actions_no_wifi_anywhere():
    model = simple_model(wifi=frozenset())
    assert admissible_actions(model, 1) == (Action.IDLE, Action.CELLULAR)


def test_admissible_actions_bad_location():
    model = simple_model()
    with pytest.raises(DomainError):
        admissible_actions(model, 0)
    with pytest.raises(DomainError):
        admissible_actions(model, 3)


def test_payment_min_clamp_and_price_conversion():
    # 100 Mbit left, 900 Mbit/slot, 6 $/Gbyte = 6/8000 $/Mbit
    model = simple_model(price_cell=6.0 / 8000.0)
    spec = ProblemSpec(200.0, 3, 1.0, QuadraticPenalty(1.0))
    got = payment(model, spec, State(100.0, 1), Action.CELLULAR)
    assert got == pytest.approx(0.075, rel=1e-12)


def test_payment_idle_and_empty_file_are_free():
    model = simple_model()
    spec = ProblemSpec(100.0, 3, 1.0, QuadraticPenalty(1.0))
    assert payment(model, spec, State(50.0, 1), Action.IDLE) == 0.0
    assert payment(model, spec, State(0.0, 1), Action.CELLULAR) == 0.0


def test_payment_rejects_inadmissible_action():
    model = simple_model()
    spec = ProblemSpec(100.0, 3, 1.0, QuadraticPenalty(1.0))
    with pytest.raises(DomainError):
        payment(model, spec, State(50.0, 1), Action.WIFI)


def test_slot_payment_ignores_remainder():
    model = simple_model(price_cell=0.001)
    assert slot_payment(model, 1, Action.CELLULAR) == pytest.approx(0.9)
    assert slot_payment(model, 1, Action.IDLE) == 0.0


def test_penalty_families():
    quad = ProblemSpec(20.0, 3, 1.0, QuadraticPenalty(1.0))
    assert penalty(quad, 10.0) == 100.0
    assert penalty(quad, 0.0) == 0.0
    step = ProblemSpec(20.0, 3, 10.0, StepPenalty(100000.0))
    assert penalty(step, 10.0) == 100000.0
    assert penalty(step, 0.0) == 0.0


def test_penalty_off_grid_rejected():
    spec = ProblemSpec(20.0, 3, 10.0, QuadraticPenalty(1.0))
    with pytest.raises(DomainError):
        penalty(spec, 5.0)


def test_penalty_non_decreasing_on_grid():
    rng = np.random.default_rng(3)
    for _ in range(20):
        _, spec = random_general_instance(rng)
        vals = [spec.penalty(k) for k in spec.grid_values]
        assert vals[0] == 0.0
        assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_tabulated_penalty_validation():
    with pytest.raises(DomainError):
        TabulatedPenalty((1.0, 2.0), 1.0)  # must start at zero
    with pytest.raises(DomainError):
        TabulatedPenalty((0.0, 2.0, 1.0), 1.0)  # must be non-decreasing
    pen = TabulatedPenalty((0.0, 1.0, 5.0), 1.0)
    assert pen(2.0) == 5.0
    with pytest.raises(DomainError):
        pen(3.0)


def test_convexity_scan():
    assert is_convex_on_grid(QuadraticPenalty(2.0), 1.0, 20.0)
    assert not is_convex_on_grid(StepPenalty(10.0), 1.0, 20.0)


def test_next_file_size_clamp_and_quantization():
    spec1 = ProblemSpec(20.0, 3, 1.0, QuadraticPenalty(1.0))
    assert next_file_size(spec1, 20.0, 35.0) == 0.0
    assert next_file_size(spec1, 20.0, 2.0) == 18.0
    spec10 = ProblemSpec(6000.0, 3, 10.0, QuadraticPenalty(1.0))
    assert next_file_size(spec10, 6000.0, 193.0) == 5810.0


def test_next_file_size_monotone():
    spec = ProblemSpec(30.0, 3, 1.0, QuadraticPenalty(1.0))
    rng = np.random.default_rng(11)
    for _ in range(200):
        k = float(rng.integers(0, 31))
        a, b = sorted(rng.uniform(0.0, 40.0, size=2))
        assert next_file_size(spec, k, b) <= next_file_size(spec, k, a)
        if k + 1 <= 30:
            assert next_file_size(spec, k + 1, a) >= next_file_size(spec, k, a)


def test_transition_dist_grid_probabilities():
    model = grid_demo_model()
    spec = ProblemSpec(20.0, 3, 1.0, QuadraticPenalty(1.0))
    interior = dict(
        ((s.l, s.k), p) for s, p in transition_dist(model, spec, State(5.0, 7), Action.IDLE)
    )
    assert interior[(7, 5.0)] == pytest.approx(0.6)
    for nb in (3, 6, 8, 11):
        assert interior[(nb, 5.0)] == pytest.approx(0.1)
    corner = dict(
        ((s.l, s.k), p) for s, p in transition_dist(model, spec, State(5.0, 1), Action.IDLE)
    )
    assert corner[(1, 5.0)] == pytest.approx(0.6)
    for nb in (2, 5):
        assert corner[(nb, 5.0)] == pytest.approx(0.2)


def test_transition_dist_single_location():
    rate = np.zeros((1, 3))
    price = np.zeros((1, 3))
    rate[0, Action.CELLULAR] = 1.0
    model = NetworkModel(1, frozenset(), np.array([[1.0]]), price, rate)
    spec = ProblemSpec(5.0, 3, 1.0, QuadraticPenalty(1.0))
    dist = transition_dist(model, spec, State(5.0, 1), Action.CELLULAR)
    assert dist == [(State(4.0, 1), 1.0)]


def test_transition_dist_masses_and_size_monotone():
    rng = np.random.default_rng(7)
    for _ in range(25):
        model, spec = random_general_instance(rng)
        l = int(rng.integers(1, model.num_locations + 1))
        k = float(rng.integers(0, spec.grid_points + 1)) * spec.grid_step
        for a in admissible_actions(model, l):
            dist = transition_dist(model, spec, State(k, l), a)
            assert sum(p for _, p in dist) == pytest.approx(1.0, abs=1e-9)
            assert all(s.k <= k for s, _ in dist)
            assert payment(model, spec, State(k, l), a) >= 0.0


def test_network_model_validation():
    L = 2
    good_rate = np.zeros((L, 3))
    good_price = np.zeros((L, 3))
    bad_rows = np.array([[0.5, 0.4], [0.5, 0.5]])
    with pytest.raises(DomainError, match="sums to"):
        NetworkModel(L, frozenset(), bad_rows, good_price, good_rate)
    bad_idle = good_price.copy()
    bad_idle[0, Action.IDLE] = 1.0
    with pytest.raises(DomainError, match="idle"):
        NetworkModel(L, frozenset(), np.eye(L), bad_idle, good_rate)
    with pytest.raises(DomainError, match="wifi location"):
        NetworkModel(L, frozenset({5}), np.eye(L), good_price, good_rate)
    with pytest.raises(DomainError, match="non-negative"):
        NetworkModel(L, frozenset(), np.eye(L), good_price, good_rate - 1.0)


def test_problem_spec_rounds_size_up_with_warning():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        spec = ProblemSpec(95.0, 3, 10.0, QuadraticPenalty(1.0))
    assert spec.file_size == 100.0
    assert any("rounded up" in str(w.message) for w in caught)


def test_problem_spec_exact_multiple_no_warning():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        spec = ProblemSpec(740.0, 3, 10.0, QuadraticPenalty(1.0))
    assert spec.file_size == 740.0
    assert not caught


def test_problem_spec_zero_size_allowed():
    spec = ProblemSpec(0.0, 3, 10.0, QuadraticPenalty(1.0))
    assert spec.grid_points == 0
    assert list(spec.grid_values) == [0.0]


def test_problem_spec_validation():
    with pytest.raises(DomainError):
        ProblemSpec(10.0, 0, 1.0, QuadraticPenalty(1.0))
    with pytest.raises(DomainError):
        ProblemSpec(10.0, 3, 0.0, QuadraticPenalty(1.0))
    with pytest.raises(DomainError):
        ProblemSpec(-1.0, 3, 1.0, QuadraticPenalty(1.0))


def test_mobility_row_tolerance():
    row = np.array([[0.6 + 5e-10, 0.4], [0.5, 0.5]])
    model = NetworkModel(2, frozenset(), row, np.zeros((2, 3)), np.zeros((2, 3)))
    assert model.num_locations == 2


def test_grid_mobility_edge_cell_share():
    P = build_grid_mobility(4, 4, 0.6)
    # cell 2 (0-based 1) is an edge cell with 3 neighbours
    assert P[1, 1] == pytest.approx(0.6)
    assert P[1, 0] == pytest.approx(0.4 / 3)
    assert np.allclose(P.sum(axis=1), 1.0)
