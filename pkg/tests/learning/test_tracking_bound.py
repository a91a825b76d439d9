from __future__ import annotations

import math

import numpy as np
import pytest

from graphlearn.learning.online import contraction_factor
from graphlearn.learning.tracking import TrackingCheckpoint, TrackingReport, certified_eta, tracking_bound
from graphlearn.models.config import LearnConfig
from graphlearn.models.graph import pair_count


def _checkpoint(time: int, online: float, batch: float, distance: float, bound: float) -> TrackingCheckpoint:
    return TrackingCheckpoint(
        time=time,
        online_objective=online,
        batch_objective=batch,
        distance=distance,
        bound=bound,
        simplified_bound=bound,
        eta=10.0,
    )


def test_static_optimum_decays_geometrically() -> None:
    bounds = tracking_bound([0.5] * 6, [0.0] * 6, 2.0)
    np.testing.assert_allclose(bounds.exact, [2.0 * 0.5**t for t in range(1, 7)])
    np.testing.assert_allclose(bounds.simplified, bounds.exact)
    assert not bounds.degenerate


def test_constant_drift_reaches_the_steady_state() -> None:
    factor, shift = 0.8, 0.3
    bounds = tracking_bound([factor] * 200, [shift] * 200, 0.0)
    np.testing.assert_allclose(bounds.simplified, np.full(200, shift / (1.0 - factor)))
    assert bounds.exact[-1] == pytest.approx(factor * shift / (1.0 - factor))
    assert np.all(bounds.exact <= bounds.simplified + 1e-12)


def test_recursion_matches_the_closed_form() -> None:
    rng = np.random.default_rng(3)
    factors = rng.uniform(0.3, 0.95, 40)
    shifts = rng.uniform(0.0, 0.2, 40)
    bounds = tracking_bound(factors, shifts, 1.5)
    products = np.cumprod(factors)
    for t in range(40):
        closed = products[t] * (1.5 + sum(shifts[k] / (products[k] / factors[k]) for k in range(t + 1)))
        assert bounds.exact[t] == pytest.approx(closed, rel=1e-10)


def test_inner_iterations_raise_the_factor_to_a_power() -> None:
    bounds = tracking_bound([0.5, 0.5], [0.0, 0.0], 1.0, inner_iters=[2, 3])
    np.testing.assert_allclose(bounds.exact, [0.25, 0.25 * 0.125])


def test_contraction_at_or_above_one_is_degenerate() -> None:
    bounds = tracking_bound([0.5, 1.0, 0.5], [0.1, 0.1, 0.1], 1.0)
    assert bounds.degenerate
    assert math.isinf(bounds.simplified[-1])
    with pytest.raises(ValueError):
        tracking_bound([0.5, 0.5], [0.1], 1.0)


@pytest.mark.filterwarnings("error")
def test_growing_factors_saturate_to_inf_without_overflow_warnings() -> None:
    contractions = [0.5] * 5 + [1.5] * 3000
    bounds = tracking_bound(contractions, [0.1] * len(contractions), 1.0, inner_iters=[10] * len(contractions))
    assert bounds.degenerate
    assert np.all(np.isfinite(bounds.simplified[:5]))
    assert np.all(np.isinf(bounds.simplified[5:]))
    assert math.isinf(bounds.exact[-1])


def test_contraction_factor_formula() -> None:
    assert contraction_factor(0.2, 1.0, 5.0) == pytest.approx(0.2)
    assert contraction_factor(0.1, 0.5, 30.0) == pytest.approx(2.0)
    assert contraction_factor(1.0 / 12.0, 1.0, 12.0) == pytest.approx(1.0 - 4.0 / 12.0)


def test_certified_eta_uses_the_smallest_degree() -> None:
    config = LearnConfig(alpha=1.0, beta=0.5)
    w_high = np.full(pair_count(4), 1.0)
    w_low = np.full(pair_count(4), 0.5)
    assert certified_eta(config, 4, w_high) == pytest.approx(2.0 + 6.0 / 9.0)
    assert certified_eta(config, 4, w_high, w_low) == pytest.approx(2.0 + 6.0 / 2.25)
    assert certified_eta(config, 4, w_high, floor_degree=1.0) == pytest.approx(2.0 + 6.0)


def test_checkpoint_gaps_and_violations() -> None:
    inside = _checkpoint(100, online=-9.5, batch=-10.0, distance=0.1, bound=0.2)
    assert inside.objective_gap == pytest.approx(0.5)
    assert inside.relative_gap == pytest.approx(0.05)
    assert inside.objective_bound_holds

    small = _checkpoint(200, online=0.2, batch=0.1, distance=0.3, bound=0.25)
    assert small.relative_gap == pytest.approx(0.1)

    report = TrackingReport(checkpoints=[inside, small])
    assert [cp.time for cp in report.violations()] == [200]
    assert report.objective_violations() == []
    far = _checkpoint(300, online=5.0, batch=0.0, distance=0.5, bound=1.0)
    assert [cp.time for cp in TrackingReport(checkpoints=[inside, far]).objective_violations()] == [300]
    rows = report.rows()
    assert rows[0]["objective_gap"] == pytest.approx(0.5)
    assert {"time", "distance", "bound", "objective_gap", "relative_gap"} <= set(rows[0])
