"""Toda phase space, Flaschka coordinates, Hamiltonians and integrators.

Indices are cyclic mod n throughout.  Arrays may carry leading batch axes;
the particle index is always the last axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OffLeafError, SaturationError, StiffnessError
from .linalg import build_w_basis

EXP_MAX = 700.0
DT_MIN = 1e-12
FD_STEP = 1e-6


def _check_zero_sum(x: np.ndarray, name: str) -> None:
    scale = max(1.0, float(np.max(np.abs(x), initial=0.0)))
    if np.any(np.abs(x.sum(axis=-1)) > 1e-12 * scale * x.shape[-1]):
        raise ValueError(f"{name} must sum to zero")


@dataclass(frozen=True)
class PhasePoint:
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if q.shape != p.shape:
            raise ValueError("q and p must have the same shape")
        if q.shape[-1] < 3:
            raise ValueError("n must be at least 3")
        _check_zero_sum(q, "q")
        _check_zero_sum(p, "p")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.q.shape[-1]


@dataclass(frozen=True)
class FlaschkaPoint:
    b: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        a = np.asarray(self.a, dtype=float)
        if b.shape != a.shape:
            raise ValueError("b and a must have the same shape")
        if b.shape[-1] < 3:
            raise ValueError("n must be at least 3")
        if not np.all(a > 0):
            raise ValueError("all a_i must be strictly positive")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a", a)

    @property
    def n(self) -> int:
        return self.b.shape[-1]

    def leaf_alpha(self) -> float:
        """The alpha with prod(a) = alpha**n."""
        return float(np.exp(np.log(self.a).mean(axis=-1)))

    def on_leaf(self, alpha: float, tol: float = 1e-10) -> bool:
        casimir_b = abs(float(self.b.sum())) <= tol * max(1.0, float(np.abs(self.b).max()))
        log_prod = float(np.log(self.a).sum()) - self.n * math.log(alpha)
        return casimir_b and abs(math.expm1(log_prod)) <= tol


def cyclic_differences(q) -> np.ndarray:
    """d_i = q_i - q_{i+1} with q_{n+1} = q_1."""
    q = np.asarray(q, dtype=float)
    return q - np.roll(q, -1, axis=-1)


def hamiltonian_H(x: PhasePoint, alpha: float) -> float:
    d = cyclic_differences(x.q)
    if np.any(d > EXP_MAX):
        raise SaturationError("q_i - q_{i+1} exceeds the exponential range")
    return 0.5 * np.sum(x.p**2, axis=-1) + alpha**2 * np.sum(np.exp(d), axis=-1)


def hamiltonian_Hbar(f: FlaschkaPoint) -> float:
    return 0.5 * np.sum(f.b**2, axis=-1) + np.sum(f.a**2, axis=-1)


def potential_Uc(q, c: float):
    """U_c(q) = c^2 e^{-c} sum exp(c (q_i - q_{i+1})).

    Returns ``inf`` where any exponent passes the saturation threshold.
    """
    if c < 2:
        raise ValueError("c must be at least 2")
    expo = 2.0 * math.log(c) + c * (cyclic_differences(q) - 1.0)
    saturated = np.any(expo > EXP_MAX, axis=-1)
    vals = np.sum(np.exp(np.minimum(expo, EXP_MAX)), axis=-1)
    return np.where(saturated, np.inf, vals)


def hamiltonian_Hc(q, p, c: float):
    return 0.5 * np.sum(np.asarray(p) ** 2, axis=-1) + potential_Uc(q, c)


def grad_Uc(q, c: float) -> np.ndarray:
    expo = 3.0 * math.log(c) + c * (cyclic_differences(q) - 1.0)
    if np.any(expo > EXP_MAX):
        raise SaturationError("force overflow: q lies far outside the simplex")
    term = np.exp(expo)
    return term - np.roll(term, 1, axis=-1)


def flaschka(x: PhasePoint, alpha: float) -> FlaschkaPoint:
    expo = math.log(alpha) + 0.5 * cyclic_differences(x.q)
    if np.any(expo > EXP_MAX):
        raise SaturationError("Flaschka variable overflow")
    return FlaschkaPoint(x.p.copy(), np.exp(expo))


def flaschka_inverse(f: FlaschkaPoint, alpha: float) -> PhasePoint:
    if not f.on_leaf(alpha):
        raise OffLeafError("point is not on the leaf sum(b)=0, prod(a)=alpha^n")
    t = 2.0 * (np.log(f.a) - math.log(alpha))
    q = np.zeros(f.n)
    q[1:] = -np.cumsum(t[:-1])
    q -= q.mean()
    p = f.b - f.b.mean()
    return PhasePoint(q, p)


def toda_vector_field(f: FlaschkaPoint) -> tuple[np.ndarray, np.ndarray]:
    return _field(f.b, f.a)


def _field(b, a):
    a2 = a * a
    bdot = np.roll(a2, 1, axis=-1) - a2
    adot = 0.5 * a * (b - np.roll(b, -1, axis=-1))
    return bdot, adot


def _rk4(b, a, h):
    k1b, k1a = _field(b, a)
    k2b, k2a = _field(b + 0.5 * h * k1b, a + 0.5 * h * k1a)
    k3b, k3a = _field(b + 0.5 * h * k2b, a + 0.5 * h * k2a)
    k4b, k4a = _field(b + h * k3b, a + h * k3a)
    return (b + h / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b),
            a + h / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a))


def _safe_step(b, a, h):
    with np.errstate(over="ignore", invalid="ignore"):
        nb, na = _rk4(b, a, h)
    if np.all(na > 0) and np.all(np.isfinite(nb)):
        return nb, na
    half = 0.5 * h
    if half < DT_MIN:
        raise StiffnessError(f"RK4 step underflow below {DT_MIN:g}; a_i lost positivity")
    b, a = _safe_step(b, a, half)
    return _safe_step(b, a, half)


@dataclass(frozen=True)
class FlaschkaTrajectory:
    times: np.ndarray
    b: np.ndarray
    a: np.ndarray

    def __len__(self):
        return len(self.times)

    def __getitem__(self, k) -> FlaschkaPoint:
        return FlaschkaPoint(self.b[k], self.a[k])


def integrate_flaschka(f0: FlaschkaPoint, T: float, dt: float,
                       record_every: int = 1) -> FlaschkaTrajectory:
    """Fixed-step classical RK4 on the Flaschka equations.

    Batched input (leading axes on ``b`` and ``a``) is integrated in lockstep.
    """
    if dt <= 0 or T < 0:
        raise ValueError("need dt > 0 and T >= 0")
    nsteps = int(math.ceil(T / dt - 1e-9))
    b, a = f0.b.copy(), f0.a.copy()
    times, bs, as_ = [0.0], [b], [a]
    t = 0.0
    for k in range(1, nsteps + 1):
        h = min(dt, T - t)
        b, a = _safe_step(b, a, h)
        t = k * dt if k < nsteps else T
        if k % record_every == 0 or k == nsteps:
            times.append(t)
            bs.append(b)
            as_.append(a)
    return FlaschkaTrajectory(np.array(times), np.array(bs), np.array(as_))


@dataclass(frozen=True)
class PhaseTrajectory:
    times: np.ndarray
    q: np.ndarray
    p: np.ndarray

    def __len__(self):
        return len(self.times)

    def __getitem__(self, k) -> PhasePoint:
        return PhasePoint(self.q[k], self.p[k])


def integrate_qp_verlet(x0: PhasePoint, c: float, T: float, dt: float,
                        record_every: int = 1) -> PhaseTrajectory:
    """Stormer-Verlet (kick-drift-kick) for H_c = |p|^2/2 + U_c(q).

    A negative ``T`` integrates backwards in time.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    nsteps = int(round(abs(T) / dt))
    h = math.copysign(dt, T) if T != 0 else dt
    q, p = x0.q.copy(), x0.p.copy()
    force = -grad_Uc(q, c)
    times, qs, ps = [0.0], [q.copy()], [p.copy()]
    for k in range(1, nsteps + 1):
        p += 0.5 * h * force
        q += h * p
        force = -grad_Uc(q, c)
        p += 0.5 * h * force
        if k % record_every == 0 or k == nsteps:
            times.append(k * h)
            qs.append(q.copy())
            ps.append(p.copy())
    return PhaseTrajectory(np.array(times), np.array(qs), np.array(ps))


def coordinate_brackets(f: FlaschkaPoint, step: float = FD_STEP):
    """Canonical brackets of the functions b_i, a_j pulled back to V^{2n-2}.

    Uses {F, G} = sum dF/dp dG/dq - dF/dq dG/dp in Darboux coordinates with
    central differences.  Returns the n x n matrices ({b_i,b_j}, {b_i,a_j},
    {a_i,a_j}).
    """
    alpha = f.leaf_alpha()
    x = flaschka_inverse(f, alpha)
    chart = build_w_basis(f.n)
    z0 = chart.phase_to_chart(x.q, x.p)
    m = f.n - 1

    def coords(z):
        q, p = chart.chart_to_phase(z)
        g = flaschka(PhasePoint(project_q(q), project_q(p)), alpha)
        return np.concatenate([g.b, g.a])

    grads = np.empty((2 * f.n, 2 * m))
    for k in range(2 * m):
        e = np.zeros(2 * m)
        e[k] = step
        grads[:, k] = (coords(z0 + e) - coords(z0 - e)) / (2 * step)
    dq, dp = grads[:, :m], grads[:, m:]
    br = dp @ dq.T - dq @ dp.T
    n = f.n
    return br[:n, :n], br[:n, n:], br[n:, n:]


def project_q(x):
    return x - x.mean()


def expected_brackets(f: FlaschkaPoint):
    """Structure constants of the Flaschka bivector at ``f``."""
    n = f.n
    ba = np.zeros((n, n))
    for i in range(n):
        ba[i, i] += f.a[i] / 2
        ba[i, (i - 1) % n] -= f.a[(i - 1) % n] / 2
    return np.zeros((n, n)), ba, np.zeros((n, n))


def poisson_bracket_check(f: FlaschkaPoint) -> float:
    """Max deviation between finite-difference brackets and the bivector."""
    got = coordinate_brackets(f)
    want = expected_brackets(f)
    return max(float(np.max(np.abs(g - w))) for g, w in zip(got, want))
