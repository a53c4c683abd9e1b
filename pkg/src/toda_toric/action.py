"""Inverse spectral reconstruction, action variables and the scaled maps F_c, J_c."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cache

import numpy as np
from numpy.polynomial import Polynomial

from .dynamics import EXP_MAX, FlaschkaPoint, PhasePoint, cyclic_differences, flaschka
from .errors import IllConditionedError, QuadratureError, SaturationError
from .geometry import rho  # noqa: F401
from .linalg import build_w_basis, project_to_w, sym_eigenvalues, symplectic_matrix
from .spectral import (
    DirichletData,
    band_structure,
    dirichlet_data,
    lax_matrix,
)

MU_GAP_REJECT = 1e-10
GRAM_COND_MAX = 1e12
QUAD_RTOL = 1e-9
QUAD_START = 16
QUAD_MAX = 2**14
C_MAX = 200.0


def weights_from(dd: DirichletData, alpha: float) -> np.ndarray:
    """w_i = alpha^n e^{f_i} / prod_{j != i} |mu_i - mu_j|, evaluated in log form."""
    mu = dd.mu
    m = len(mu)
    n = m + 1
    if m > 1 and np.min(np.diff(mu)) < MU_GAP_REJECT:
        raise IllConditionedError("Dirichlet eigenvalues too close")
    logw = n * math.log(alpha) + dd.f
    for i in range(m):
        others = np.delete(mu, i)
        logw[i] -= np.sum(np.log(np.abs(mu[i] - others)))
    return np.exp(logw)


@dataclass(frozen=True)
class OrthoBasis:
    """P_2..P_n with deg P_k = k-2 and negative leading coefficients."""

    polys: tuple[Polynomial, ...]
    nodes: np.ndarray
    weights: np.ndarray

    def inner(self, p, q) -> float:
        return float(np.sum(p(self.nodes) * q(self.nodes) * self.weights))

    def gram(self) -> np.ndarray:
        V = np.array([P(self.nodes) for P in self.polys])
        return (V * self.weights) @ V.T


def ortho_polynomials(w, mu, generators=None) -> OrthoBasis:
    """Gram-Schmidt under <p, q> = sum p(mu_i) q(mu_i) w_i.

    ``generators`` defaults to the monomials 1, x, ..., x^{m-1}; any sequence
    whose k-th member has degree k gives the same basis.
    """
    w = np.asarray(w, dtype=float)
    mu = np.asarray(mu, dtype=float)
    m = len(mu)
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    if m > 1 and np.min(np.diff(np.sort(mu))) <= 0:
        raise ValueError("nodes must be distinct")
    if generators is None:
        generators = [Polynomial.basis(k) for k in range(m)]
    V = np.array([g(mu) for g in generators])
    G = (V * w) @ V.T
    if np.linalg.cond(G) > GRAM_COND_MAX:
        raise IllConditionedError("Gram matrix condition number above 1e12")

    def ip(p, q):
        return float(np.sum(p(mu) * q(mu) * w))

    basis: list[Polynomial] = []
    for g in generators:
        p = g
        for _ in range(2):
            for u in basis:
                p = p - ip(p, u) * u
        p = p / math.sqrt(ip(p, p))
        p = Polynomial(p.coef[: len(basis) + 1])
        if p.coef[-1] > 0:
            p = -p
        basis.append(p)
    return OrthoBasis(tuple(basis), mu, w)


def reconstruct_ba(dd: DirichletData, alpha: float) -> FlaschkaPoint:
    """Rebuild (b, a) on the leaf from Dirichlet data."""
    mu = dd.mu
    n = len(mu) + 1
    basis = ortho_polynomials(weights_from(dd, alpha), mu)
    vals = np.array([P(mu) for P in basis.polys])
    w = basis.weights
    b = np.empty(n)
    a = np.empty(n)
    for k in range(2, n + 1):
        Pk = vals[k - 2]
        b[k - 1] = np.sum(mu * Pk * Pk * w)
    b[0] = -np.sum(b[1:])
    a[0] = -1.0 / vals[0][0]
    for k in range(2, n):
        a[k - 1] = np.sum(mu * vals[k - 2] * vals[k - 1] * w)
    a[n - 1] = math.exp(n * math.log(alpha) - np.sum(np.log(a[: n - 1])))
    return FlaschkaPoint(b, a)


def phi_alpha_chart(x: PhasePoint, alpha: float) -> np.ndarray:
    """(f_1..f_{n-1}, mu_1..mu_{n-1}) of the Flaschka image of ``x``."""
    return dirichlet_data(flaschka(x, alpha)).as_vector()


@cache
def _gauss_legendre(N: int):
    x, w = np.polynomial.legendre.leggauss(N)
    theta = 0.5 * math.pi * x
    return np.sin(theta), np.cos(theta) * w * (0.5 * math.pi)


def _log_amp(mu, y, eps):
    """log((|g + eps| + sqrt(g (g + 2 eps))) / 2), floored at log(eps / 2).

    Equals acosh(|Delta| / 2) - log(alpha^{-n}) where eps = 2 alpha^n.
    """
    g = np.prod(mu[:, None] - y[None, :], axis=1)
    root = np.sqrt(np.maximum(g * (g + 2.0 * eps), 0.0))
    amp = np.maximum(0.5 * (np.abs(g + eps) + root), 0.5 * eps)
    return np.log(amp)


def _gap_log_integral(lo, hi, y, eps, scale_total):
    """Integral of the log amplitude over [lo, hi] with node doubling.

    Substitution mu = m + r sin(theta) removes the square-root edge behaviour.
    ``scale_total`` maps the raw integral into the quantity whose relative
    change is monitored.
    """
    m, r = 0.5 * (lo + hi), 0.5 * (hi - lo)
    prev = None
    N = QUAD_START
    while N <= QUAD_MAX:
        s, cw = _gauss_legendre(N)
        val = r * float(np.sum(cw * _log_amp(m + r * s, y, eps)))
        if prev is not None:
            total_new, total_old = scale_total(val), scale_total(prev)
            if abs(total_new - total_old) <= QUAD_RTOL * max(abs(total_new), 1e-300):
                return val
        prev = val
        N *= 2
    raise QuadratureError(
        f"action quadrature did not converge with {QUAD_MAX} nodes on gap [{lo!r}, {hi!r}]")


@dataclass(frozen=True)
class GapTerms:
    """Per-gap pieces of the action: I_i = 2 * (width * bulk + log_integral)."""

    width: np.ndarray
    bulk: float
    log_integral: np.ndarray

    @property
    def actions(self) -> np.ndarray:
        return 2.0 * (self.width * self.bulk + self.log_integral)


def gap_terms(y, *, log_alpha: float) -> GapTerms:
    y = np.sort(np.asarray(y, dtype=float))
    n = len(y)
    bands = band_structure(y, log_alpha=log_alpha)
    eps = 2.0 * math.exp(n * log_alpha)
    bulk = -n * log_alpha
    widths = bands.gap_widths.copy()
    logint = np.zeros(n - 1)
    for i, (lo, hi) in enumerate(bands.gaps):
        if hi - lo <= 0.0:
            widths[i] = 0.0
            continue
        width = hi - lo
        logint[i] = _gap_log_integral(lo, hi, y, eps, lambda v, w=width: w * bulk + v)
    return GapTerms(widths, bulk, logint)


def action_integrals(y, alpha: float) -> np.ndarray:
    """I_i = 2 * integral over the i-th gap of acosh(|Delta| / 2)."""
    _check_spectral_point(y)
    return gap_terms(y, log_alpha=math.log(alpha)).actions


def _check_spectral_point(y):
    y = np.asarray(y, dtype=float)
    if abs(y.sum()) > 1e-10 * max(1.0, float(np.abs(y).max())):
        raise ValueError("spectral point must sum to zero")


def scaled_log_alpha(c: float) -> float:
    """log of the coupling c e^{-c/2} used by the stiff family."""
    return math.log(c) - 0.5 * c


def _check_c(c):
    if c < 2:
        raise ValueError("c must be at least 2")
    if c > C_MAX:
        raise ValueError(f"c above {C_MAX:g} is not supported")


def scaled_lax_matrix(x: PhasePoint, c: float) -> np.ndarray:
    """L_c: b = p, a_i = c exp(c (q_i - q_{i+1} - 1) / 2)."""
    _check_c(c)
    expo = math.log(c) + 0.5 * c * (cyclic_differences(x.q) - 1.0)
    if np.any(expo > EXP_MAX):
        raise SaturationError("L_c entry overflow: q lies far outside the simplex")
    return lax_matrix(x.p, np.exp(expo))


def F_c(x: PhasePoint, c: float) -> np.ndarray:
    return sym_eigenvalues(scaled_lax_matrix(x, c))


def J_c_terms(y, c: float) -> GapTerms:
    """Gap terms at alpha = c e^{-c/2}; J_c = actions / c.

    bulk / (c/2) equals n - 2n log(c) / c.
    """
    _check_c(c)
    _check_spectral_point(y)
    return gap_terms(y, log_alpha=scaled_log_alpha(c))


def J_c(y, c: float) -> np.ndarray:
    return J_c_terms(y, c).actions / c


def h_c(mu, y, c: float) -> np.ndarray:
    """Correction integrand (2/c) log((|g + eps| + sqrt(g (g + 2 eps))) / 2)."""
    _check_c(c)
    y = np.asarray(y, dtype=float)
    eps = 2.0 * math.exp(len(y) * scaled_log_alpha(c))
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    return 2.0 / c * _log_amp(mu, y, eps)


def moment_image(x: PhasePoint, c: float) -> np.ndarray:
    """J_c(F_c(x)): the moment-map image of the stiff action-angle chart."""
    return J_c(project_to_w(F_c(x, c)), c)


def chart_jacobian(x: PhasePoint, alpha: float, step: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian of (mu, f) in Darboux coordinates of V^{2n-2}.

    mu comes first: it pairs with the position block of the chart.
    """
    chart = build_w_basis(x.n)
    z0 = chart.phase_to_chart(x.q, x.p)
    m = x.n - 1

    def fmu(z):
        q, p = chart.chart_to_phase(z)
        v = phi_alpha_chart(PhasePoint(project_to_w(q), project_to_w(p)), alpha)
        return np.concatenate([v[m:], v[:m]])

    M = np.empty((2 * m, 2 * m))
    for k in range(2 * m):
        e = np.zeros(2 * m)
        e[k] = step
        M[:, k] = (fmu(z0 + e) - fmu(z0 - e)) / (2 * step)
    return M


def symplectic_defect(x: PhasePoint, alpha: float, step: float = 1e-5) -> float:
    """||M^T J M - J||_F for the (mu, f) chart."""
    M = chart_jacobian(x, alpha, step)
    J = symplectic_matrix(x.n - 1)
    return float(np.linalg.norm(M.T @ J @ M - J))
