import numpy as np
import pytest

from offloadsim.config import ScenarioConfig
from offloadsim.dp import solve
from offloadsim.model import State
from offloadsim.oracle import expectimax
from offloadsim.properties import (
    check_cross_difference,
    check_increment_monotone,
    check_oracle,
    check_single_switch,
    check_threshold_monotone,
    check_value_monotone_in_size,
    check_value_monotone_in_time,
    check_wifi_preference,
    run_verification,
)
from offloadsim.threshold import solve_monotone

from instances import (
    monotone_view,
    random_flatcost_instance,
    random_general_instance,
    single_class_flatcost_instance,
)


def test_value_monotone_in_size_universal():
    rng = np.random.default_rng(31)
    for _ in range(15):
        model, spec = random_general_instance(rng)
        _, vt = solve(model, spec)
        assert check_value_monotone_in_size(vt).passed


def test_flatcost_value_and_preference_properties():
    rng = np.random.default_rng(32)
    for i in range(15):
        model, spec = random_flatcost_instance(rng, wifi_slower=(i % 3 != 0))
        pol, vt = solve(model, spec, flat_payment=True)
        assert check_value_monotone_in_size(vt).passed
        assert check_value_monotone_in_time(vt).passed
        assert check_wifi_preference(model, spec, pol, vt).passed
        assert check_single_switch(pol, model).passed


def test_threshold_monotone_property():
    rng = np.random.default_rng(33)
    for _ in range(10):
        model, spec = random_flatcost_instance(rng)
        tp, _ = solve_monotone(monotone_view(model, spec), spec)
        assert check_threshold_monotone(tp).passed


def test_cross_difference_on_uniform_coverage():
    rng = np.random.default_rng(34)
    for i in range(12):
        model, spec = single_class_flatcost_instance(rng, all_wifi=(i % 2 == 0))
        _, vt = solve(model, spec, flat_payment=True)
        assert check_cross_difference(model, spec, vt, rng, samples=2000).passed


def test_increment_monotone_on_uniform_coverage():
    rng = np.random.default_rng(35)
    for i in range(12):
        model, spec = single_class_flatcost_instance(rng, all_wifi=(i % 2 == 0))
        _, vt = solve(model, spec, flat_payment=True)
        assert check_increment_monotone(model, spec, vt).passed


def test_cross_difference_scope_needs_uniform_coverage():
    """The sign condition can genuinely reverse when coverage is mixed.

    The counterexample below is certified against the brute-force solver,
    so the reversal is a property of the optimal values themselves, not of
    the planner: with one covered and two uncovered locations, waiting
    gains extra value exactly where a future Wi-Fi visit can replace a
    paid slot, and that kink breaks the sign condition while leaving the
    single-switch shape of the decisions intact (see the flat-cost
    property test above).
    """
    rng = np.random.default_rng(12345)
    found = None
    for _ in range(600):
        model, spec = random_flatcost_instance(rng, wifi_slower=True, max_locations=4)
        if (
            spec.horizon > 5
            or spec.grid_points > 6
            or model.num_locations > 4
            or not model.wifi_locations
            or len(model.wifi_locations) == model.num_locations
        ):
            continue
        pol, vt = solve(model, spec, flat_payment=True)
        r = check_cross_difference(model, spec, vt, np.random.default_rng(1), samples=3000)
        if r.failed:
            found = (model, spec, pol, vt)
            break
    assert found is not None, "expected a mixed-coverage sign reversal in the sample"
    model, spec, pol, vt = found
    # certify the solved values with the independent brute-force solver
    for t in (1, 2):
        for l in range(1, model.num_locations + 1):
            for n in range(spec.grid_points + 1):
                res = expectimax(
                    model, spec, State(n * spec.grid_step, l), t, flat_payment=True
                )
                got = vt.value(t, n * spec.grid_step, l)
                assert got == pytest.approx(res.optimal_value, rel=1e-9)
    # the decision structure itself still holds
    assert check_single_switch(pol, model).passed


def test_check_oracle_small_instance():
    rng = np.random.default_rng(36)
    for _ in range(5):
        model, spec = random_general_instance(rng)
        assert check_oracle(model, spec).passed


def test_run_verification_all_pass_on_baseline():
    cfg = ScenarioConfig(grid_rows=2, grid_cols=2, file_mbytes=125.0, deadline_minutes=1.0, runs=1)
    results = run_verification(cfg)
    by_name = {r.name: r for r in results}
    assert set(by_name) == {"lemma1a", "lemma1b", "lemma2", "theorem2", "theorem3", "oracle"}
    assert all(r.passed for r in results), [(r.name, r.detail) for r in results]


def test_run_verification_skips_without_convexity():
    cfg = ScenarioConfig(
        grid_rows=2, grid_cols=2, file_mbytes=125.0, deadline_minutes=1.0, runs=1, penalty="step"
    )
    results = run_verification(cfg, ("lemma1b", "theorem2", "lemma1a"))
    by_name = {r.name: r for r in results}
    assert by_name["lemma1b"].status == "skip"
    assert by_name["theorem2"].status == "skip"
    assert by_name["lemma1a"].passed
