"""Small dense linear algebra and the Darboux chart on the zero-sum subspace."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError

MAX_SWEEPS = 100
OFF_TOL = 1e-14


def sym_eigenvalues(M) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix, sorted ascending.

    Cyclic Jacobi rotations on a plain-Python copy of the matrix; for the
    sizes used here (m <= 64) this beats numpy call overhead and is
    bitwise deterministic.
    """
    A = [list(map(float, row)) for row in np.asarray(M, dtype=float)]
    m = len(A)
    if m == 0:
        return np.empty(0)
    if any(len(row) != m for row in A):
        raise ValueError("matrix must be square")
    if m > 64:
        raise ValueError("sym_eigenvalues supports m <= 64")
    for i in range(m):
        for j in range(i):
            if A[i][j] != A[j][i]:
                raise ValueError("matrix is not symmetric")

    norm = math.sqrt(sum(x * x for row in A for x in row))
    thresh = OFF_TOL * norm
    for _ in range(MAX_SWEEPS):
        off = math.sqrt(2.0 * sum(A[i][j] ** 2 for i in range(m) for j in range(i + 1, m)))
        if off <= thresh:
            return np.array(sorted(A[i][i] for i in range(m)))
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = A[p][q]
                if apq == 0.0:
                    continue
                theta = (A[q][q] - A[p][p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                A[p][p] -= t * apq
                A[q][q] += t * apq
                A[p][q] = A[q][p] = 0.0
                for r in range(m):
                    if r == p or r == q:
                        continue
                    arp = A[r][p]
                    arq = A[r][q]
                    A[r][p] = A[p][r] = c * arp - s * arq
                    A[r][q] = A[q][r] = s * arp + c * arq
    raise ConvergenceError(f"Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps (m={m})")


def project_to_w(v) -> np.ndarray:
    """Orthogonal projection onto the zero-sum hyperplane (last axis)."""
    v = np.asarray(v, dtype=float)
    return v - v.mean(axis=-1, keepdims=True)


def poly_eval_deriv(coeffs, lam: float) -> tuple[float, float]:
    """Horner evaluation of a polynomial and its derivative.

    ``coeffs`` are ordered from the highest degree down, as in ``np.polyval``.
    """
    value = 0.0
    deriv = 0.0
    for c in coeffs:
        deriv = deriv * lam + value
        value = value * lam + c
    return value, deriv


def symplectic_matrix(m: int) -> np.ndarray:
    """Standard form matrix [[0, I], [-I, 0]] of size 2m."""
    J = np.zeros((2 * m, 2 * m))
    J[:m, m:] = np.eye(m)
    J[m:, :m] = -np.eye(m)
    return J


@dataclass(frozen=True)
class DarbouxChart:
    """Orthonormal coordinates on W^{n-1}, used for both q and p blocks.

    ``basis`` has shape (n-1, n); its rows span the zero-sum hyperplane.
    """

    basis: np.ndarray

    @property
    def n(self) -> int:
        return self.basis.shape[1]

    def to_chart(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.basis.T

    def from_chart(self, u) -> np.ndarray:
        return np.asarray(u, dtype=float) @ self.basis

    def phase_to_chart(self, q, p) -> np.ndarray:
        return np.concatenate([self.to_chart(q), self.to_chart(p)], axis=-1)

    def chart_to_phase(self, z) -> tuple[np.ndarray, np.ndarray]:
        z = np.asarray(z, dtype=float)
        m = self.n - 1
        return self.from_chart(z[..., :m]), self.from_chart(z[..., m:])

    def embedding(self) -> np.ndarray:
        """The 2n x (2n-2) matrix sending chart coordinates into R^{2n}."""
        n, m = self.n, self.n - 1
        E = np.zeros((2 * n, 2 * m))
        E[:n, :m] = self.basis.T
        E[n:, m:] = self.basis.T
        return E


def build_w_basis(n: int) -> DarbouxChart:
    """Gram-Schmidt on e1-e2, e2-e3, ..., in that order."""
    if n < 3:
        raise ValueError("n must be at least 3")
    rows: list[np.ndarray] = []
    for i in range(n - 1):
        v = np.zeros(n)
        v[i], v[i + 1] = 1.0, -1.0
        for _ in range(2):
            for u in rows:
                v = v - (u @ v) * u
        rows.append(v / np.linalg.norm(v))
    return DarbouxChart(np.array(rows))
