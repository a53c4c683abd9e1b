"""Billiard flow in the closed simplex and comparison with the stiff Toda flows."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    PhasePoint,
    cyclic_differences,
    hamiltonian_Hc,
    integrate_qp_verlet,
)
from .errors import CornerDegeneracyError

FACET_TOL = 1e-12
CORNER_TOL = 1e-9


@dataclass(frozen=True)
class BilliardState:
    q: np.ndarray
    p: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if q.ndim != 1 or q.shape != p.shape or len(q) < 3:
            raise ValueError("q and p must be vectors of equal length n >= 3")
        if np.any(cyclic_differences(q) > 1.0 + FACET_TOL):
            raise ValueError("q lies outside the closed simplex")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)


@dataclass(frozen=True)
class BounceEvent:
    time: float
    facet: int
    p_in: np.ndarray
    p_out: np.ndarray


def facet_normal(n: int, i: int) -> np.ndarray:
    """Unit normal (e_i - e_{i+1}) / sqrt(2) of the facet q_i - q_{i+1} = 1."""
    nu = np.zeros(n)
    nu[i] += 1.0
    nu[(i + 1) % n] -= 1.0
    return nu / math.sqrt(2.0)


def reflect(p: np.ndarray, i: int) -> np.ndarray:
    nu = facet_normal(len(p), i)
    return p - 2.0 * float(p @ nu) * nu


def _next_hit(q, p, horizon=math.inf):
    """(time, facet) of the next facet crossing, or (inf, -1).

    Corners are only fatal when they are reached within ``horizon``.
    """
    d = cyclic_differences(q)
    v = cyclic_differences(p)
    times = np.full(len(q), np.inf)
    moving = v > 0
    times[moving] = np.maximum(1.0 - d[moving], 0.0) / v[moving]
    order = np.argsort(times)
    t0 = times[order[0]]
    if t0 <= horizon and abs(times[order[1]] - t0) <= CORNER_TOL:
        raise CornerDegeneracyError(
            f"facets {order[0]} and {order[1]} are hit within {CORNER_TOL:g} of each other")
    return t0, (int(order[0]) if math.isfinite(t0) else -1)


def advance_billiard(s: BilliardState, T: float) -> tuple[BilliardState, list[BounceEvent]]:
    """Exact event-driven propagation for time T >= 0."""
    if T < 0:
        raise ValueError("T must be nonnegative")
    if not np.any(s.p):
        return BilliardState(s.q, s.p, s.time + T), []
    q, p = s.q.copy(), s.p.copy()
    speed = float(np.linalg.norm(p))
    t, end = s.time, s.time + T
    events: list[BounceEvent] = []
    while True:
        dt, i = _next_hit(q, p, end - t)
        if t + dt > end:
            q = q + (end - t) * p
            return BilliardState(q, p, end), events
        q = q + dt * p
        t += dt
        p_new = reflect(p, i)
        # reflection is an isometry; stop rounding from accumulating over many bounces
        p_new *= speed / np.linalg.norm(p_new)
        events.append(BounceEvent(t, i, p, p_new))
        p = p_new


def billiard_positions(s: BilliardState, times) -> tuple[np.ndarray, list[BounceEvent]]:
    """q at each of the nondecreasing ``times`` (measured from s.time)."""
    times = np.asarray(times, dtype=float)
    out = np.empty((len(times), len(s.q)))
    events: list[BounceEvent] = []
    cur, t_prev = s, 0.0
    for k, t in enumerate(times):
        cur, ev = advance_billiard(cur, t - t_prev)
        events.extend(ev)
        out[k] = cur.q
        t_prev = t
    return out, events


def verlet_dt(c: float) -> float:
    return min(1e-4, 1.0 / c**2)


@dataclass(frozen=True)
class ComparisonRow:
    c: float
    dt: float
    sup_distance: float
    between_bounce_distance: float
    energy_drift: float


def compare_toda_billiard(x0: PhasePoint, T: float, c_ladder, grid: int = 1000,
                          window: float = 0.1, dt: float | None = None) -> list[ComparisonRow]:
    """Sup-distance between H_c trajectories and the billiard on a uniform time grid.

    ``x0`` may be batched (leading axis); metrics are then per trajectory
    arrays.  ``between_bounce_distance`` only uses grid times at least
    ``window`` away from every billiard event.
    """
    q0 = np.atleast_2d(x0.q)
    p0 = np.atleast_2d(x0.p)
    times = np.linspace(0.0, T, grid + 1)
    bq = np.empty((len(q0), grid + 1, q0.shape[1]))
    far = np.ones((len(q0), grid + 1), dtype=bool)
    for j in range(len(q0)):
        bq[j], ev = billiard_positions(BilliardState(q0[j], p0[j]), times)
        for e in ev:
            far[j] &= np.abs(times - e.time) >= window
    rows = []
    for c in c_ladder:
        h = verlet_dt(c) if dt is None else dt
        every = max(1, int(round(T / (grid * h))))
        h = T / (grid * every)
        traj = integrate_qp_verlet(PhasePoint(q0, p0), c, T, h, record_every=every)
        tq = np.swapaxes(traj.q, 0, 1)
        dist = np.linalg.norm(tq - bq, axis=-1)
        sup = dist.max(axis=1)
        between = np.where(far, dist, 0.0).max(axis=1)
        E = hamiltonian_Hc(traj.q, traj.p, c)
        drift = np.abs(E - E[0]).max(axis=0) / np.abs(E[0])
        squeeze = np.ndim(x0.q) == 1
        rows.append(ComparisonRow(
            float(c), h,
            float(sup[0]) if squeeze else sup,
            float(between[0]) if squeeze else between,
            float(drift[0]) if squeeze else drift))
    return rows
