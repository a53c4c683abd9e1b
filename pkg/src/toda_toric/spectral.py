"""Lax matrices and discrete Floquet theory for the periodic Toda lattice."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import FlaschkaPoint
from .errors import NumericalAbort, SpectralDegeneracyError, UnattainableSpectrumError
from .linalg import sym_eigenvalues

RESCALE_AT = 1e150
MU_GAP_MIN = 1e-10
CLOSED_GAP = 1e-10
TANGENCY_RTOL = 1e-10
Q_CHECK_TOL = 1e-8


@dataclass(frozen=True)
class LaxPair:
    L: np.ndarray
    B: np.ndarray


def lax_matrix(b, a) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    a = np.asarray(a, dtype=float)
    n = len(b)
    L = np.diag(b)
    for i in range(n - 1):
        L[i, i + 1] = L[i + 1, i] = a[i]
    L[0, n - 1] = L[n - 1, 0] = a[n - 1]
    return L


def lax_matrices(f: FlaschkaPoint) -> LaxPair:
    n = f.n
    B = np.zeros((n, n))
    for i in range(n - 1):
        B[i, i + 1] = 0.5 * f.a[i]
        B[i + 1, i] = -0.5 * f.a[i]
    B[0, n - 1] = -0.5 * f.a[n - 1]
    B[n - 1, 0] = 0.5 * f.a[n - 1]
    return LaxPair(lax_matrix(f.b, f.a), B)


def toda_eigenvalues(f: FlaschkaPoint) -> np.ndarray:
    """The eigenvalue map: sorted spectrum of L."""
    return sym_eigenvalues(lax_matrix(f.b, f.a))


def q_matrix(f: FlaschkaPoint) -> np.ndarray:
    """Lax matrix of the doubled (period 2n) chain; its eigenvalues are the zeros of Delta^2 - 4."""
    return lax_matrix(np.tile(f.b, 2), np.tile(f.a, 2))


@dataclass(frozen=True)
class FundamentalSolutions:
    """y1(k, lam), y2(k, lam) for k = 0..K.

    The true value is ``y[k] * exp(log_scale[k])``; both solutions share the
    scale at each k.  With array ``lam`` the arrays have shape (K+1, m).
    Storage is extended precision where the platform has it: |y| grows like
    (lam/a)^k and the Wronskian cancels two such products.
    """

    y1: np.ndarray
    y2: np.ndarray
    log_scale: np.ndarray

    def value(self, which: int, k: int):
        y = self.y1 if which == 1 else self.y2
        return (y[k] * np.exp(self.log_scale[k])).astype(float)

    def log_abs(self, which: int, k: int):
        y = self.y1 if which == 1 else self.y2
        with np.errstate(divide="ignore"):
            return (np.log(np.abs(y[k])) + self.log_scale[k]).astype(float)

    def wronskian(self, k: int):
        """y1(k) y2(k+1) - y1(k+1) y2(k); equals 1 at k = n."""
        w = self.y1[k] * self.y2[k + 1] - self.y1[k + 1] * self.y2[k]
        with np.errstate(divide="ignore"):
            logw = np.log(np.abs(w)) + self.log_scale[k] + self.log_scale[k + 1]
        return (np.sign(w) * np.exp(logw)).astype(float)


def fundamental_solutions(f: FlaschkaPoint, lam, K: int | None = None) -> FundamentalSolutions:
    n = f.n
    K = n + 1 if K is None else K
    if K < n + 1:
        raise ValueError("K must be at least n+1")
    ext = np.longdouble
    lam = np.asarray(lam, dtype=ext)
    b, a = f.b.astype(ext), f.a.astype(ext)
    y1 = np.zeros((K + 1,) + lam.shape, dtype=ext)
    y2 = np.zeros_like(y1)
    scale = np.zeros_like(y1)
    y1[0], y2[1] = 1.0, 1.0
    cur_scale = np.zeros(lam.shape, dtype=ext)
    p1, c1 = y1[0].copy(), y1[1].copy()
    p2, c2 = y2[0].copy(), y2[1].copy()
    for k in range(1, K):
        bk = b[(k - 1) % n]
        ak = a[(k - 1) % n]
        akm1 = a[(k - 2) % n]
        n1 = ((lam - bk) * c1 - akm1 * p1) / ak
        n2 = ((lam - bk) * c2 - akm1 * p2) / ak
        big = np.maximum.reduce([np.abs(n1), np.abs(n2), np.abs(c1), np.abs(c2)])
        if np.any(big > RESCALE_AT):
            s = np.where(big > RESCALE_AT, big, ext(1.0))
            n1, n2, c1, c2 = n1 / s, n2 / s, c1 / s, c2 / s
            cur_scale = cur_scale + np.log(s)
            y1[k], y2[k], scale[k] = c1, c2, cur_scale
        p1, c1, p2, c2 = c1, n1, c2, n2
        y1[k + 1], y2[k + 1], scale[k + 1] = c1, c2, cur_scale
    return FundamentalSolutions(y1, y2, scale)


@dataclass(frozen=True)
class DirichletData:
    mu: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        f = np.asarray(self.f, dtype=float)
        if mu.shape != f.shape:
            raise ValueError("mu and f must have the same length")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "f", f)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.f, self.mu])


def dirichlet_eigenvalues(f: FlaschkaPoint) -> np.ndarray:
    L = lax_matrix(f.b, f.a)
    return sym_eigenvalues(L[1:, 1:])


def dirichlet_data(f: FlaschkaPoint) -> DirichletData:
    mu = dirichlet_eigenvalues(f)
    if np.any(np.diff(mu) <= MU_GAP_MIN):
        raise SpectralDegeneracyError("Dirichlet eigenvalues collide; resample the point")
    sol = fundamental_solutions(f, mu)
    return DirichletData(mu, sol.log_abs(2, f.n + 1))


def discriminant_recursion(f: FlaschkaPoint, lam):
    """Delta(lam) = y1(n, lam) + y2(n+1, lam)."""
    sol = fundamental_solutions(f, lam)
    n = f.n
    return sol.value(1, n) + sol.value(2, n + 1)


def discriminant_product(spectrum, lam, alpha: float | None = None, *, log_alpha: float | None = None):
    """Delta(lam) = alpha^{-n} prod(lam - lam_i^+) + 2, via log-magnitude and sign."""
    y = np.asarray(spectrum, dtype=float)
    n = len(y)
    la = _log_alpha(alpha, log_alpha)
    lam = np.asarray(lam, dtype=float)
    diffs = lam[..., None] - y
    sign = np.prod(np.sign(diffs), axis=-1)
    with np.errstate(divide="ignore"):
        logmag = np.sum(np.log(np.abs(diffs)), axis=-1) - n * la
    return sign * np.exp(logmag) + 2.0


def discriminant(source, lam, alpha: float | None = None):
    """Floquet discriminant from a FlaschkaPoint (recursion) or a spectrum (product form)."""
    if isinstance(source, FlaschkaPoint):
        return discriminant_recursion(source, lam)
    if alpha is None:
        raise ValueError("alpha is required when evaluating from a spectrum")
    return discriminant_product(source, lam, alpha)


def _log_alpha(alpha, log_alpha):
    if log_alpha is not None:
        return float(log_alpha)
    if alpha is None or alpha <= 0:
        raise ValueError("alpha must be positive")
    return math.log(alpha)


@dataclass(frozen=True)
class BandStructure:
    """Sorted zeros of Delta^2 - 4 and the n-1 gaps [lam_{2i}, lam_{2i+1}]."""

    edges: np.ndarray
    q_residual: float | None = None

    @property
    def gaps(self) -> np.ndarray:
        e = self.edges
        return np.stack([e[1:-1:2], e[2::2]], axis=1)

    @property
    def gap_widths(self) -> np.ndarray:
        g = self.gaps
        return g[:, 1] - g[:, 0]


def _g(y, lam):
    return math.prod(lam - yj for yj in y)


def _bisect(fun, lo, hi, flo):
    """Bisect a sign change of ``fun`` on [lo, hi] down to float resolution."""
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = fun(mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _critical_points(y):
    """Zeros of g' between consecutive zeros of g (repeated zeros included).

    Between distinct consecutive zeros the logarithmic derivative
    sum 1/(x - y_j) falls monotonically from +inf to -inf, so plain
    bisection on it finds the unique interior critical point.
    """
    y = [float(v) for v in y]

    def logderiv(x):
        return sum(1.0 / (x - yj) for yj in y)

    crit = []
    for lo, hi in zip(y[:-1], y[1:]):
        if hi <= lo:
            crit.append(lo)
            continue
        # endpoints are poles: start from the first interior floats
        a, b = np.nextafter(lo, hi), np.nextafter(hi, lo)
        if a >= b:
            crit.append(0.5 * (lo + hi))
            continue
        with np.errstate(over="ignore", divide="ignore"):
            crit.append(_bisect(logderiv, float(a), float(b), logderiv(a)))
    return crit


def band_edges(spectrum, alpha: float | None = None, *, log_alpha: float | None = None) -> np.ndarray:
    """All 2n zeros of Delta^2 - 4, sorted.

    Delta = 2 exactly at the spectrum; Delta = -2 where g = -4 alpha^n, with
    g(lam) = prod(lam - y_i).  Between consecutive critical points of g the
    function is monotone, so each such interval brackets at most one root;
    a lobe whose extremum touches -4 alpha^n within tolerance is a tangential
    (double) root, i.e. a closed gap.
    """
    y = np.sort(np.asarray(spectrum, dtype=float))
    n = len(y)
    la = _log_alpha(alpha, log_alpha)
    kappa = 4.0 * math.exp(n * la)
    tol = TANGENCY_RTOL * kappa

    def h(x):
        return _g(y, x) + kappa

    crit = _critical_points(y)
    reach = 1.0 + kappa ** (1.0 / n)
    pts = [float(y[0]) - reach] + crit + [float(y[-1]) + reach]
    vals = [h(x) for x in pts]
    tangent = [False] + [abs(v) <= tol for v in vals[1:-1]] + [False]
    roots: list[float] = []
    for x, t in zip(pts, tangent):
        if t:
            roots.extend([x, x])
    for k in range(len(pts) - 1):
        if tangent[k] or tangent[k + 1]:
            continue
        flo, fhi = vals[k], vals[k + 1]
        if (flo < 0) != (fhi < 0):
            roots.append(_bisect(h, pts[k], pts[k + 1], flo))
    if len(roots) != n:
        raise UnattainableSpectrumError(
            f"Delta = -2 has {len(roots)} real zeros instead of {n}: "
            "spectrum is not attained on this leaf")
    return np.sort(np.concatenate([y, roots]))


def band_structure(spectrum, alpha: float | None = None, flaschka: FlaschkaPoint | None = None,
                   *, log_alpha: float | None = None) -> BandStructure:
    y = np.asarray(spectrum, dtype=float)
    if abs(y.sum()) > 1e-10 * max(1.0, float(np.abs(y).max())):
        raise ValueError("spectrum must sum to zero")
    edges = band_edges(y, alpha, log_alpha=log_alpha)
    resid = None
    if flaschka is not None:
        q_eigs = sym_eigenvalues(q_matrix(flaschka))
        resid = float(np.max(np.abs(q_eigs - edges)))
        if resid > Q_CHECK_TOL * max(1.0, float(np.abs(edges).max())):
            raise NumericalAbort(f"band edges disagree with Q-matrix spectrum by {resid:.3e}")
    return BandStructure(edges, resid)


def is_regular(bands: BandStructure) -> bool:
    return bool(np.all(bands.gap_widths > CLOSED_GAP))
