import math

import numpy as np
import pytest

from toda_toric.billiard import (
    BilliardState,
    advance_billiard,
    compare_toda_billiard,
    facet_normal,
    reflect,
    verlet_dt,
)
from toda_toric.dynamics import PhasePoint
from toda_toric.errors import CornerDegeneracyError
from toda_toric.experiments import corner_safe_initial_conditions


def test_normal_incidence():
    nu = facet_normal(3, 0)
    s, ev = advance_billiard(BilliardState(np.zeros(3), nu), 1.0)
    assert len(ev) == 1 and ev[0].facet == 0
    assert math.isclose(ev[0].time, 1 / math.sqrt(2), rel_tol=1e-14)
    assert np.allclose(ev[0].p_out, -nu, atol=1e-15)
    assert abs(np.linalg.norm(s.p) - 1) < 1e-15


def test_reflection_keeps_tangent_part():
    rng = np.random.default_rng(0)
    for _ in range(100):
        p = rng.normal(size=4)
        p -= p.mean()
        i = int(rng.integers(4))
        nu = facet_normal(4, i)
        r = reflect(p, i)
        tang = p - (p @ nu) * nu
        assert np.allclose(r - (r @ nu) * nu, tang, atol=1e-14)
        assert math.isclose(r @ nu, -(p @ nu), abs_tol=1e-14)
        assert abs(r.sum()) < 1e-14


def test_speed_conserved_over_many_bounces():
    rng = np.random.default_rng(1)
    q0 = np.array([0.1, -0.05, -0.05])
    p0 = rng.normal(size=3)
    p0 -= p0.mean()
    s, n_ev = BilliardState(q0, p0), 0
    speed = np.linalg.norm(p0)
    while n_ev < 10**4:
        s, ev = advance_billiard(s, 50.0)
        for e in ev:
            assert abs(np.linalg.norm(e.p_out) - np.linalg.norm(e.p_in)) < 1e-12 * speed
        n_ev += len(ev)
    assert abs(np.linalg.norm(s.p) - speed) < 1e-12 * speed


def test_time_reversible():
    rng = np.random.default_rng(2)
    q, p = corner_safe_initial_conditions(3, 20, 10.0, rng)
    for q0, p0 in zip(q, p):
        s, _ = advance_billiard(BilliardState(q0, p0), 10.0)
        back, _ = advance_billiard(BilliardState(s.q, -s.p), 10.0)
        assert np.abs(back.q - q0).max() < 1e-9
        assert np.abs(back.p + p0).max() < 1e-9


def test_corner_abort():
    # aim at the vertex where the facets q0 - q1 = 1 and q1 - q2 = 1 meet
    v = np.array([1.0, 0.0, -1.0])
    with pytest.raises(CornerDegeneracyError):
        advance_billiard(BilliardState(np.zeros(3), v), 2.0)


def test_outside_rejected():
    with pytest.raises(ValueError):
        BilliardState(np.array([1.0, -0.5, -0.5]), np.zeros(3))


def test_verlet_dt_policy():
    assert verlet_dt(20) == 1e-4
    assert verlet_dt(200) == 1 / 200**2


@pytest.fixture(scope="module")
def ladder():
    rng = np.random.default_rng(3)
    q, p = corner_safe_initial_conditions(3, 4, 5.0, rng)
    return compare_toda_billiard(PhasePoint(q, p), 5.0, [20, 40, 80])


def test_ladder_monotone(ladder):
    sup = np.array([r.sup_distance for r in ladder])
    assert np.all(np.diff(sup, axis=0) < 0)
    assert np.all(np.array([r.energy_drift for r in ladder]) < 1e-3)


def test_between_bounce_distance_at_c80(ladder):
    # free flight should match closely away from the reflections
    assert np.all(ladder[-1].between_bounce_distance < 0.05)
