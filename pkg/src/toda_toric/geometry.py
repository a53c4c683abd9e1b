"""Polytopes in the zero-sum hyperplane, toric bases, the rho correspondence and volumes.

Regions in W^{n-1} (families S, P, PE, PP) take ambient points of shape
(..., n).  Toric bases (families T, triangle, rectangle) take points of
shape (..., n-1) in the closed positive orthant.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import build_w_basis

W_FAMILIES = ("S", "P", "PE", "PP")
BASE_FAMILIES = ("T", "triangle", "rectangle")


@dataclass(frozen=True)
class HPolytope:
    """{x in W : normals @ x < offsets} (or <= when ``strict`` is False)."""

    normals: np.ndarray
    offsets: np.ndarray
    strict: bool = True

    @property
    def n(self) -> int:
        return self.normals.shape[1]

    def contains(self, x, slack: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        s = x @ self.normals.T - self.offsets
        if self.strict:
            return np.all(s < slack, axis=-1)
        return np.all(s <= slack, axis=-1)

    def vertices(self, tol: float = 1e-9) -> np.ndarray:
        """Brute-force vertex enumeration: n-1 active facets plus the zero-sum row."""
        n = self.n
        found: dict[tuple, np.ndarray] = {}
        ones = np.ones(n)
        for rows in itertools.combinations(range(len(self.offsets)), n - 1):
            A = np.vstack([self.normals[list(rows)], ones])
            if abs(np.linalg.det(A)) < 1e-12:
                continue
            v = np.linalg.solve(A, np.append(self.offsets[list(rows)], 0.0))
            if np.all(self.normals @ v <= self.offsets + tol):
                found.setdefault(tuple(np.round(v, 9)), v)
        return np.array([found[k] for k in sorted(found)])


def simplex_S(n: int) -> HPolytope:
    """x_i - x_{i+1} < 1 for all cyclic i."""
    if n < 3:
        raise ValueError("n must be at least 3")
    N = np.zeros((n, n))
    for i in range(n):
        N[i, i] += 1.0
        N[i, (i + 1) % n] -= 1.0
    return HPolytope(N, np.ones(n))


def voronoi_P(n: int) -> HPolytope:
    """x_i - x_j < 1 for all ordered pairs i != j, i.e. max - min < 1."""
    if n < 3:
        raise ValueError("n must be at least 3")
    rows = []
    for i, j in itertools.permutations(range(n), 2):
        r = np.zeros(n)
        r[i], r[j] = 1.0, -1.0
        rows.append(r)
    return HPolytope(np.array(rows), np.ones(len(rows)))


def simplex_S_vertices(n: int) -> np.ndarray:
    """Closed form: cyclic shifts of the vector with unit steps down, recentred."""
    base = project_mean(np.arange(n - 1, -1, -1, dtype=float))
    return np.array([np.roll(base, k) for k in range(n)])


def voronoi_P_vertices(n: int) -> np.ndarray:
    """Closed form: 1_S - |S|/n for every nonempty proper subset S."""
    out = []
    for k in range(1, n):
        for S in itertools.combinations(range(n), k):
            v = np.full(n, -k / n)
            v[list(S)] += 1.0
            out.append(v)
    return np.array(out)


def project_mean(v):
    v = np.asarray(v, dtype=float)
    return v - v.mean(axis=-1, keepdims=True)


def rho(v) -> np.ndarray:
    """n times the consecutive differences of the sorted entries."""
    v = np.sort(np.asarray(v, dtype=float), axis=-1)
    return v.shape[-1] * np.diff(v, axis=-1)


def canonical_preimage(r) -> np.ndarray:
    """The sorted zero-sum y with rho(y) = r.

    y_i = (1/n^2) sum_j j r_j - (1/n) sum_{j >= i} r_j.
    """
    r = np.asarray(r, dtype=float)
    m = r.shape[-1]
    n = m + 1
    j = np.arange(1, n)
    base = (r * j).sum(axis=-1, keepdims=True) / n**2
    tail = np.flip(np.cumsum(np.flip(r, axis=-1), axis=-1), axis=-1)
    tail = np.concatenate([tail, np.zeros(r.shape[:-1] + (1,))], axis=-1)
    return base - tail / n


@dataclass(frozen=True)
class Region:
    """A named region; ``scale`` dilates about the origin."""

    family: str
    n: int
    params: tuple = ()
    scale: float = 1.0
    _poly: HPolytope | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.family not in W_FAMILIES + BASE_FAMILIES:
            raise ValueError(f"unknown region family {self.family!r}")
        if self.n < 3:
            raise ValueError("n must be at least 3")
        if self.family in ("PE", "PP", "triangle", "rectangle"):
            if self.n != 3:
                raise ValueError(f"family {self.family} is defined for n = 3 only")
            if len(self.params) != 2 or min(self.params) <= 0:
                raise ValueError("need two positive parameters (a, b)")
        if self.family == "T" and (len(self.params) != 1 or self.params[0] <= 0):
            raise ValueError("T needs one positive parameter")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.family == "S":
            object.__setattr__(self, "_poly", simplex_S(self.n))
        elif self.family == "P":
            object.__setattr__(self, "_poly", voronoi_P(self.n))

    @property
    def in_w(self) -> bool:
        return self.family in W_FAMILIES

    @property
    def dim(self) -> int:
        return self.n - 1

    @property
    def polytope(self) -> HPolytope | None:
        return self._poly

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float) / self.scale
        f = self.family
        if f in ("S", "P"):
            return self._poly.contains(x)
        if f in ("PE", "PP"):
            a, b = self.params
            r = rho(x)
            s, t = r[..., 0] / (3 * a), r[..., 1] / (3 * b)
            if f == "PE":
                return s + t < 1.0
            return (s < 1.0) & (t < 1.0)
        pos = np.all(x >= 0, axis=-1)
        if f == "T":
            return pos & (x.sum(axis=-1) < self.params[0])
        a, b = self.params
        if f == "triangle":
            return pos & (x[..., 0] / a + x[..., 1] / b < 1.0)
        return pos & (x[..., 0] < a) & (x[..., 1] < b)

    def gauge(self, r) -> np.ndarray:
        """Minkowski gauge of a toric base: < 1 exactly on its nonnegative part."""
        if self.in_w:
            raise ValueError("gauge is defined for toric bases only")
        r = np.asarray(r, dtype=float) / self.scale
        if self.family == "T":
            return r.sum(axis=-1) / self.params[0]
        a, b = self.params
        if self.family == "triangle":
            return r[..., 0] / a + r[..., 1] / b
        return np.maximum(r[..., 0] / a, r[..., 1] / b)

    def vertices(self) -> np.ndarray:
        """Vertices (for PE/PP: of every cell in the orbit), scaled."""
        f = self.family
        if f == "S":
            v = simplex_S_vertices(self.n)
        elif f == "P":
            v = voronoi_P_vertices(self.n)
        elif f in ("PE", "PP"):
            v = np.concatenate(orbit_cells(f, *self.params))
        elif f == "T":
            v = np.vstack([np.zeros(self.dim), self.params[0] * np.eye(self.dim)])
        elif f == "triangle":
            a, b = self.params
            v = np.array([[0, 0], [a, 0], [0, b]], dtype=float)
        else:
            a, b = self.params
            v = np.array([[0, 0], [a, 0], [a, b], [0, b]], dtype=float)
        return self.scale * v

    def to_json(self) -> str:
        return json.dumps({"family": self.family, "n": self.n,
                           "params": list(self.params), "scale": self.scale})

    @classmethod
    def from_json(cls, s: str | dict) -> Region:
        d = json.loads(s) if isinstance(s, str) else s
        return cls(d["family"], int(d["n"]), tuple(d.get("params", ())), float(d.get("scale", 1.0)))


def region_S(n: int) -> Region:
    return Region("S", n)


def region_P(n: int) -> Region:
    return Region("P", n)


def region_PE(a: float, b: float) -> Region:
    return Region("PE", 3, (a, b))


def region_PP(a: float, b: float) -> Region:
    return Region("PP", 3, (a, b))


def toric_T(a: float, n: int) -> Region:
    return Region("T", n, (a,))


def toric_triangle(a: float, b: float) -> Region:
    return Region("triangle", 3, (a, b))


def toric_rectangle(a: float, b: float) -> Region:
    return Region("rectangle", 3, (a, b))


def scale_region(region: Region, s: float) -> Region:
    if s <= 0:
        raise ValueError("scale factor must be positive")
    return Region(region.family, region.n, region.params, region.scale * s)


def orbit_cells(family: str, a: float, b: float) -> list[np.ndarray]:
    """The six cells (triangles T[a,b] or parallelograms Q[a,b]) under S_3."""
    u = np.array([-2 * a, a, a]) / 3
    v = np.array([-b, -b, 2 * b]) / 3
    cell = [np.zeros(3), u, v] if family == "PE" else [np.zeros(3), u, u + v, v]
    cell = np.array(cell)
    return [cell[:, list(perm)] for perm in itertools.permutations(range(3))]


def rho_image(region: Region) -> Region:
    """The toric base rho(A) for the S_n-invariant families."""
    s = region.scale
    if region.family == "P":
        return toric_T(region.n * s, region.n)
    if region.family == "PE":
        a, b = region.params
        return toric_triangle(3 * a * s, 3 * b * s)
    if region.family == "PP":
        a, b = region.params
        return toric_rectangle(3 * a * s, 3 * b * s)
    raise ValueError(f"family {region.family} is not S_n-invariant")


def rho_image_contains(region: Region, r) -> np.ndarray:
    """r in rho(A) iff the canonical preimage of r lies in A (A S_n-invariant)."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be componentwise nonnegative")
    return region.contains(canonical_preimage(r))


def _chart_vertices(region: Region) -> np.ndarray:
    v = region.vertices()
    if region.in_w:
        return build_w_basis(region.n).to_chart(v)
    return v


def _shoelace(P: np.ndarray) -> float:
    c = P.mean(axis=0)
    order = np.argsort(np.arctan2(P[:, 1] - c[1], P[:, 0] - c[0]))
    P = P[order]
    x, y = P[:, 0], P[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def exact_volume_2d(region: Region) -> float:
    if region.n != 3:
        raise ValueError("exact2d is only available for n = 3")
    if region.family in ("PE", "PP"):
        chart = build_w_basis(3)
        s2 = region.scale**2
        return s2 * sum(_shoelace(chart.to_chart(c)) for c in orbit_cells(region.family, *region.params))
    return _shoelace(_chart_vertices(region))


def closed_form_volume(region: Region) -> float:
    """Volumes of the toric bases; T(a) in dimension m has a^m / m!."""
    f = region.family
    if f == "T":
        return region.params[0] ** region.dim / math.factorial(region.dim)
    if f == "triangle":
        return 0.5 * region.params[0] * region.params[1]
    if f == "rectangle":
        return region.params[0] * region.params[1]
    raise ValueError(f"no closed form for family {f}")


def bounding_box(region: Region) -> tuple[np.ndarray, np.ndarray]:
    v = _chart_vertices(region)
    return v.min(axis=0), v.max(axis=0)


def _lift(region: Region, u: np.ndarray) -> np.ndarray:
    if region.in_w:
        return build_w_basis(region.n).from_chart(u)
    return u


def montecarlo_volume(region: Region, samples: int, seed: int) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    lo, hi = bounding_box(region)
    box = float(np.prod(hi - lo))
    hits = 0
    done = 0
    chunk = 200_000
    while done < samples:
        k = min(chunk, samples - done)
        u = lo + (hi - lo) * rng.random((k, len(lo)))
        hits += int(np.count_nonzero(region.contains(_lift(region, u))))
        done += k
    p = hits / samples
    return box * p, box * math.sqrt(p * (1 - p) / samples)


def volume(region: Region, method: str = "exact2d", samples: int = 10**6,
           seed: int | None = None) -> tuple[float, float]:
    """(estimate, standard error); exact methods report zero error."""
    if method == "exact2d":
        if not region.in_w and region.dim == 2:
            return closed_form_volume(region), 0.0
        return exact_volume_2d(region), 0.0
    if method == "montecarlo":
        if seed is None:
            raise ValueError("Monte Carlo volume needs an explicit seed")
        return montecarlo_volume(region, samples, seed)
    raise ValueError(f"unknown volume method {method!r}")


def sample_uniform(region: Region, k: int, rng: np.random.Generator) -> np.ndarray:
    """k uniform points of the region by rejection from its bounding box."""
    lo, hi = bounding_box(region)
    out = []
    got = 0
    while got < k:
        u = lo + (hi - lo) * rng.random((max(2 * (k - got), 64), len(lo)))
        x = _lift(region, u)
        x = x[region.contains(x)]
        out.append(x)
        got += len(x)
    return np.concatenate(out)[:k]
