"""Verification experiments.

Every ``cmd_*`` takes a config dict and returns a report dict whose verdicts
are pure functions of the recorded metrics.  The ``check_*`` helpers back
the acceptance suite for properties that have no CLI command of their own.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import io
import math
import time
from pathlib import Path

import numpy as np
from numpy.polynomial import Polynomial

from . import __version__
from .action import (
    F_c,
    J_c,
    moment_image,
    reconstruct_ba,
    scaled_log_alpha,
    symplectic_defect,
)
from .billiard import BilliardState, advance_billiard, compare_toda_billiard
from .dynamics import (
    FlaschkaPoint,
    PhasePoint,
    cyclic_differences,
    flaschka,
    flaschka_inverse,
    hamiltonian_Hbar,
    hamiltonian_Hc,
    integrate_flaschka,
    integrate_qp_verlet,
    potential_Uc,
)
from .errors import CornerDegeneracyError, OffLeafError, SpectralDegeneracyError
from .geometry import (
    Region,
    closed_form_volume,
    rho,
    rho_image,
    sample_uniform,
    scale_region,
    volume,
)
from .spectral import (
    band_structure,
    dirichlet_data,
    discriminant_recursion,
    fundamental_solutions,
    toda_eigenvalues,
)

# ---------------------------------------------------------------- sampling


def random_phase_point(n: int, rng: np.random.Generator, q_scale: float = 0.5,
                       p_scale: float = 1.0) -> PhasePoint:
    q = rng.normal(scale=q_scale, size=n)
    p = rng.normal(scale=p_scale, size=n)
    return PhasePoint(q - q.mean(), p - p.mean())


def random_leaf_point(n: int, alpha: float, rng: np.random.Generator, **kw) -> FlaschkaPoint:
    return flaschka(random_phase_point(n, rng, **kw), alpha)


def facet_margin(q) -> np.ndarray:
    """Euclidean distance from q to the nearest facet of the simplex."""
    return (1.0 - cyclic_differences(q).max(axis=-1)) / math.sqrt(2.0)


def sample_with_margin(n: int, margin: float, k: int, rng: np.random.Generator) -> np.ndarray:
    S = Region("S", n)
    out = []
    while sum(len(o) for o in out) < k:
        q = sample_uniform(S, 4 * k, rng)
        out.append(q[facet_margin(q) >= margin])
    return np.concatenate(out)[:k]


# ---------------------------------------------------------------- report plumbing


def source_hash() -> str:
    h = hashlib.sha256()
    for path in sorted(Path(__file__).parent.glob("*.py")):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return h.hexdigest()[:16]


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def format_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{v:.16e}" if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


class Report:
    def __init__(self, name: str, config: dict):
        self.name = name
        self.config = copy.deepcopy(config)
        self.metrics: dict = {}
        self.verdicts: dict[str, bool] = {}
        self.tables: dict[str, str] = {}
        self._t0 = time.perf_counter()

    def verdict(self, name: str, value: bool) -> bool:
        self.verdicts[name] = bool(value)
        return bool(value)

    def table(self, name: str, header, rows):
        self.tables[name] = format_csv(list(header), rows)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def as_dict(self) -> dict:
        return _jsonable({
            "experiment": self.name,
            "config": self.config,
            "metrics": self.metrics,
            "verdicts": self.verdicts,
            "passed": self.passed,
            "version": f"{__version__}+{source_hash()}",
            "timing": {"wall_clock_s": round(time.perf_counter() - self._t0, 3)},
        })


def merged(defaults: dict, config: dict | None) -> dict:
    cfg = copy.deepcopy(defaults)
    for k, v in (config or {}).items():
        if k == "tolerances":
            cfg["tolerances"] = {**cfg.get("tolerances", {}), **v}
        else:
            cfg[k] = v
    return cfg


# ---------------------------------------------------------------- isospectral


ISOSPECTRAL = {
    "n": 4, "alpha": 1.0, "samples": 20, "T": 50.0, "dt": 1e-3, "record_every": 100,
    "tolerances": {"spectrum_drift": 1e-6, "sum_b_drift": 1e-9,
                   "prod_a_drift": 1e-8, "energy_drift": 1e-8},
}


def cmd_isospectral(config: dict | None = None) -> Report:
    """Spectrum, Casimir and energy drift along RK4 Toda trajectories."""
    cfg = merged(ISOSPECTRAL, config)
    rep = Report("isospectral", cfg)
    rng = np.random.default_rng(cfg["seed"])
    n, alpha = cfg["n"], cfg["alpha"]
    if cfg.get("equilibrium"):
        pts = [FlaschkaPoint(np.zeros(n), np.full(n, alpha))] * cfg["samples"]
    else:
        pts = [random_leaf_point(n, alpha, rng) for _ in range(cfg["samples"])]
    f0 = FlaschkaPoint(np.array([p.b for p in pts]), np.array([p.a for p in pts]))
    traj = integrate_flaschka(f0, cfg["T"], cfg["dt"], record_every=cfg["record_every"])
    rows = []
    for j, p in enumerate(pts):
        spec0 = toda_eigenvalues(p)
        E0 = hamiltonian_Hbar(p)
        logprod0 = np.log(p.a).sum()
        spec_d = sumb_d = prod_d = en_d = 0.0
        for k in range(len(traj)):
            f = FlaschkaPoint(traj.b[k, j], traj.a[k, j])
            spec_d = max(spec_d, float(np.abs(toda_eigenvalues(f) - spec0).max()))
            sumb_d = max(sumb_d, abs(float(f.b.sum() - p.b.sum())))
            prod_d = max(prod_d, abs(math.expm1(float(np.log(f.a).sum() - logprod0))))
            en_d = max(en_d, abs(hamiltonian_Hbar(f) - E0) / E0)
        rows.append((j, spec_d, sumb_d, prod_d, en_d))
    cols = ["case", "spectrum_drift", "sum_b_drift", "prod_a_drift", "energy_drift"]
    rep.table("drifts", cols, rows)
    tol = cfg["tolerances"]
    for i, name in enumerate(cols[1:], start=1):
        rep.metrics[name] = max(r[i] for r in rows)
        rep.verdict(name, rep.metrics[name] < tol[name])
    return rep


# ---------------------------------------------------------------- roundtrip


ROUNDTRIP = {
    "n_values": [3, 4, 5], "alpha": 1.0, "samples": 100, "min_mu_gap": 1e-3,
    "tolerances": {"relative_error": 1e-6, "equilibrium_error": 1e-12},
}


def roundtrip_error(f: FlaschkaPoint, alpha: float) -> float:
    g = reconstruct_ba(dirichlet_data(f), alpha)
    ref = max(float(np.abs(f.b).max()), float(np.abs(f.a).max()))
    return max(float(np.abs(g.b - f.b).max()), float(np.abs(g.a - f.a).max())) / ref


def cmd_roundtrip(config: dict | None = None) -> Report:
    """Flaschka point to Dirichlet data and back."""
    cfg = merged(ROUNDTRIP, config)
    rep = Report("roundtrip", cfg)
    rng = np.random.default_rng(cfg["seed"])
    alpha = cfg["alpha"]
    rows = []
    resampled = 0
    for n in cfg["n_values"]:
        got = 0
        while got < cfg["samples"]:
            f = random_leaf_point(n, alpha, rng)
            try:
                dd = dirichlet_data(f)
            except SpectralDegeneracyError:
                resampled += 1
                continue
            if np.min(np.diff(dd.mu)) < cfg["min_mu_gap"]:
                resampled += 1
                continue
            rows.append((n, got, roundtrip_error(f, alpha)))
            got += 1
    rep.table("roundtrip", ["n", "case", "relative_error"], rows)
    eq_errs = []
    for n in cfg["n_values"]:
        eq = FlaschkaPoint(np.zeros(n), np.full(n, alpha))
        eq_errs.append(roundtrip_error(eq, alpha))
    off_leaf_rejected = True
    try:
        flaschka_inverse(FlaschkaPoint(np.zeros(3), np.full(3, alpha * 1.1 ** (1 / 3))), alpha)
        off_leaf_rejected = False
    except OffLeafError:
        pass
    tol = cfg["tolerances"]
    rep.metrics.update({
        "relative_error": max(r[2] for r in rows),
        "equilibrium_error": max(eq_errs),
        "resampled": resampled,
        "off_leaf_rejected": off_leaf_rejected,
    })
    rep.verdict("relative_error", rep.metrics["relative_error"] < tol["relative_error"])
    rep.verdict("equilibrium_error", rep.metrics["equilibrium_error"] < tol["equilibrium_error"])
    rep.verdict("off_leaf_rejected", off_leaf_rejected)
    return rep


# ---------------------------------------------------------------- limits


LIMITS = {
    "y": [-1.0, 0.0, 1.0], "c_ladder": [10, 20, 40, 80], "band_edge_c": 40,
    "flim_samples": 1000, "flim_c": [10, 20, 40, 80], "margin": 0.25, "limit_samples": 100,
    "limit_c": 80, "limit_p": [-1.0, 0.0, 1.0],
    "tolerances": {"J_relative_error": 0.2, "band_edge_error": 1e-6,
                   "flim_relative": 1e-12, "F_limit_error": 1e-6},
}


def trace_identity_error(x: PhasePoint, c: float) -> float:
    lam = F_c(x, c)
    expo = 2 * math.log(c) + c * (cyclic_differences(x.q) - 1.0)
    rhs = float(np.sum(x.p**2) + 2 * np.sum(np.exp(expo)))
    return abs(float(np.sum(lam**2)) - rhs) / rhs


def cmd_limits(config: dict | None = None) -> Report:
    """Large-c ladders for J_c, band edges and F_c, plus the trace identity."""
    cfg = merged(LIMITS, config)
    rep = Report("limits", cfg)
    rng = np.random.default_rng(cfg["seed"])
    tol = cfg["tolerances"]
    y = np.array(cfg["y"], dtype=float)
    target = rho(y)
    rows = []
    errs = []
    for c in cfg["c_ladder"]:
        J = J_c(y, c)
        err = np.abs(J - target)
        errs.append(err)
        rows.append((float(c), *J, *err, float(np.max(err / target))))
    m = len(target)
    rep.table("J_ladder", ["c"] + [f"J_{i+1}" for i in range(m)] + [f"error_{i+1}" for i in range(m)]
              + ["relative_error"], rows)
    errs = np.array(errs)
    decreasing = bool(np.all(np.diff(errs, axis=0) < 0))
    rel_last = float(np.max(errs[-1] / target))
    rep.metrics.update({"J_errors": errs, "J_relative_error": rel_last, "J_decreasing": decreasing})
    rep.verdict("J_decreasing", decreasing)
    rep.verdict("J_relative_error", rel_last < tol["J_relative_error"])

    edge_rows = []
    edge_err_at = None
    for c in cfg["c_ladder"]:
        edges = band_structure(y, log_alpha=scaled_log_alpha(c)).edges
        e = float(np.max(np.abs(edges - np.repeat(np.sort(y), 2))))
        edge_rows.append((float(c), e))
        if c == cfg["band_edge_c"]:
            edge_err_at = e
    rep.table("band_edges", ["c", "band_edge_error"], edge_rows)
    rep.metrics["band_edge_error"] = edge_err_at
    rep.verdict("band_edge_error", edge_err_at is not None and edge_err_at < tol["band_edge_error"])

    n = len(y)
    S = Region("S", n)
    flim = 0.0
    flim_rows = []
    for k in range(cfg["flim_samples"]):
        q = sample_uniform(S, 1, rng)[0]
        p = rng.normal(size=n)
        x = PhasePoint(q, p - p.mean())
        c = cfg["flim_c"][k % len(cfg["flim_c"])]
        e = trace_identity_error(x, c)
        flim = max(flim, e)
        flim_rows.append((k, float(c), e))
    rep.table("trace_identity", ["case", "c", "flim_relative"], flim_rows)
    rep.metrics["flim_relative"] = flim
    rep.verdict("flim_relative", flim < tol["flim_relative"])

    qs = sample_with_margin(n, cfg["margin"], cfg["limit_samples"], rng)
    pbase = np.array(cfg["limit_p"], dtype=float)
    worst = 0.0
    for q in qs:
        p = rng.permutation(pbase)
        lam = F_c(PhasePoint(q, p), cfg["limit_c"])
        worst = max(worst, float(np.abs(lam - np.sort(p)).max()))
    rep.metrics["F_limit_error"] = worst
    rep.verdict("F_limit_error", worst < tol["F_limit_error"])
    return rep


# ---------------------------------------------------------------- embed


EMBED = {
    "n": 3, "c": 80, "epsilon": 0.25, "samples": 10000,
    "regions": [{"family": "P", "n": 3}, {"family": "PE", "n": 3, "params": [1, 2]},
                {"family": "PP", "n": 3, "params": [1, 2]}],
    "tolerances": {"inside_fraction": 1.0},
}


def embed_case(region: Region, c: float, epsilon: float, samples: int, rng) -> dict:
    n = region.n
    S = scale_region(Region("S", n), 1 - epsilon)
    A = scale_region(region, 1 - epsilon)
    target = rho_image(region)
    q = sample_uniform(S, samples, rng)
    p = sample_uniform(A, samples, rng)
    gauges = np.empty(samples)
    for k in range(samples):
        J = moment_image(PhasePoint(q[k], p[k]), c)
        gauges[k] = target.gauge(J) if np.all(J >= 0) else np.inf
    return {"region": region.to_json(), "target": target.to_json(),
            "inside_fraction": float(np.mean(gauges < 1.0)), "max_gauge": float(gauges.max())}


def cmd_embed(config: dict | None = None) -> Report:
    """Moment images of scaled Lagrangian products against rho(A)."""
    cfg = merged(EMBED, config)
    rep = Report("embed", cfg)
    rng = np.random.default_rng(cfg["seed"])
    rows = []
    for spec in cfg["regions"]:
        region = Region.from_json(spec)
        res = embed_case(region, cfg["c"], cfg["epsilon"], cfg["samples"], rng)
        key = f"{region.family}{list(region.params) if region.params else ''}".replace(" ", "")
        rep.metrics[key] = res
        rows.append((key, res["inside_fraction"], res["max_gauge"]))
        rep.verdict(f"inside_fraction[{key}]",
                    res["inside_fraction"] >= cfg["tolerances"]["inside_fraction"])
    rep.table("embed", ["region", "inside_fraction", "max_gauge"], rows)
    return rep


# ---------------------------------------------------------------- billiard


BILLIARD = {
    "n": 3, "T": 5.0, "c_ladder": [20, 40, 80], "samples": 10, "grid": 1000,
    "q_scale": 0.5, "speed": 1.0, "energy_c": 80, "energy_dt": 1e-5, "energy_T": 5.0,
    "tolerances": {"monotone_fraction": 0.9, "energy_drift": 1e-3},
}


def corner_safe_initial_conditions(n, k, T, rng, q_scale=0.5, speed=1.0):
    S = scale_region(Region("S", n), q_scale)
    out = []
    while len(out) < k:
        q = sample_uniform(S, 1, rng)[0]
        p = rng.normal(size=n)
        p -= p.mean()
        p *= speed / np.linalg.norm(p)
        try:
            advance_billiard(BilliardState(q, p), T)
        except CornerDegeneracyError:
            continue
        out.append((q, p))
    return np.array([o[0] for o in out]), np.array([o[1] for o in out])


def cmd_billiard(config: dict | None = None) -> Report:
    """Stiff Toda flows against the simplex billiard."""
    cfg = merged(BILLIARD, config)
    rep = Report("billiard", cfg)
    rng = np.random.default_rng(cfg["seed"])
    n, T = cfg["n"], cfg["T"]
    if "initial_conditions" in cfg:
        ic = cfg["initial_conditions"]
        q = np.array([c[0] for c in ic], dtype=float)
        p = np.array([c[1] for c in ic], dtype=float)
        for qi, pi in zip(q, p):
            advance_billiard(BilliardState(qi, pi), T)
    else:
        q, p = corner_safe_initial_conditions(n, cfg["samples"], T, rng, cfg["q_scale"], cfg["speed"])
    rows = compare_toda_billiard(PhasePoint(q, p), T, cfg["c_ladder"], grid=cfg["grid"])
    sup = np.array([r.sup_distance for r in rows])
    between = np.array([r.between_bounce_distance for r in rows])
    monotone = np.all(np.diff(sup, axis=0) < 0, axis=0)
    table = []
    for j in range(len(q)):
        for i, r in enumerate(rows):
            table.append((j, r.c, r.dt, sup[i, j], between[i, j], r.energy_drift[j]))
    rep.table("sup_distance", ["case", "c", "dt", "sup_distance", "between_bounce_distance",
                               "energy_drift"], table)

    x0 = PhasePoint(q[0], p[0])
    c, dt = cfg["energy_c"], cfg["energy_dt"]
    traj = integrate_qp_verlet(x0, c, cfg["energy_T"], dt, record_every=100)
    E = hamiltonian_Hc(traj.q, traj.p, c)
    drift = float(np.abs(E - E[0]).max() / abs(E[0]))
    tol = cfg["tolerances"]
    rep.metrics.update({
        "sup_distance": sup, "between_bounce_distance": between,
        "monotone": monotone, "monotone_fraction": float(np.mean(monotone)),
        "energy_drift": drift,
    })
    rep.verdict("monotone_fraction", rep.metrics["monotone_fraction"] >= tol["monotone_fraction"])
    rep.verdict("energy_drift", drift < tol["energy_drift"])
    return rep


# ---------------------------------------------------------------- volume


VOLUME = {
    "n_values": [3, 4], "samples": 10**6,
    "regions3": [{"family": "PE", "n": 3, "params": [1, 2]}, {"family": "PP", "n": 3, "params": [1, 2]}],
    "tolerances": {"exact_identity": 1e-12, "sigma": 3.0},
}


def volume_identity(region: Region, samples: int, seed: int) -> dict:
    """vol(rho(A)) against vol(S) * vol(A), both sides of the latter by Monte Carlo."""
    vs, ss = volume(Region("S", region.n), "montecarlo", samples, seed)
    va, sa = volume(region, "montecarlo", samples, seed + 1)
    target = closed_form_volume(rho_image(region))
    prod = vs * va
    sigma = math.hypot(ss * va, sa * vs)
    return {"vol_S": vs, "vol_A": va, "product": prod, "stderr": sigma,
            "target": target, "z": abs(prod - target) / sigma}


def cmd_volume(config: dict | None = None) -> Report:
    """Exact and Monte Carlo volume identities vol(rho(A)) = vol(S) vol(A)."""
    cfg = merged(VOLUME, config)
    rep = Report("volume", cfg)
    tol = cfg["tolerances"]
    vS = volume(Region("S", 3))[0]
    vP = volume(Region("P", 3))[0]
    vT = closed_form_volume(Region("T", 3, (3.0,)))
    exact = abs(vS * vP - vT)
    rep.metrics.update({"vol_S2": vS, "vol_P2": vP, "vol_T3": vT, "exact_identity": exact})
    rep.verdict("exact_identity", exact < tol["exact_identity"] and abs(vT - 4.5) < tol["exact_identity"])
    seed = cfg["seed"]
    rows = []
    cases = [Region("P", n) for n in cfg["n_values"]] + [Region.from_json(r) for r in cfg["regions3"]]
    for k, region in enumerate(cases):
        res = volume_identity(region, cfg["samples"], seed + 2 * k)
        key = f"{region.family}{region.n}" + (f"{list(region.params)}".replace(" ", "") if region.params else "")
        rep.metrics[key] = res
        rows.append((key, res["vol_S"], res["vol_A"], res["product"], res["stderr"], res["target"],
                     res["z"]))
        rep.verdict(f"identity[{key}]", res["z"] <= tol["sigma"])
    rep.table("volume_identity", ["region", "vol_S", "vol_A", "product", "stderr", "target", "z"], rows)
    return rep


COMMANDS = {
    "isospectral": cmd_isospectral,
    "roundtrip": cmd_roundtrip,
    "limits": cmd_limits,
    "embed": cmd_embed,
    "billiard": cmd_billiard,
    "volume": cmd_volume,
}

DEFAULTS = {
    "isospectral": ISOSPECTRAL, "roundtrip": ROUNDTRIP, "limits": LIMITS,
    "embed": EMBED, "billiard": BILLIARD, "volume": VOLUME,
}


# ---------------------------------------------------------------- acceptance helpers


def y1_polynomial(f: FlaschkaPoint, k: int) -> Polynomial:
    """y1(k, lambda) as an exact polynomial, built by the same recursion symbolically."""
    n = f.n
    lam = Polynomial([0.0, 1.0])
    prev, cur = Polynomial([1.0]), Polynomial([0.0])
    for j in range(1, k):
        bk, ak, akm1 = f.b[(j - 1) % n], f.a[(j - 1) % n], f.a[(j - 2) % n]
        prev, cur = cur, ((lam - bk) * cur - akm1 * prev) / ak
    return cur


def check_floquet(f: FlaschkaPoint, rng: np.random.Generator, n_lambda: int = 20) -> dict:
    """Wronskian, Dirichlet roots, |Delta(mu)| >= 2 and interlacing at one point."""
    n = f.n
    alpha = f.leaf_alpha()
    spec = toda_eigenvalues(f)
    dd = dirichlet_data(f)
    R = float(np.abs(spec).max()) + 1.0
    lam = rng.uniform(-R, R, n_lambda)
    sol = fundamental_solutions(f, lam)
    wr = float(np.abs(sol.wronskian(n) - 1.0).max())
    roots = np.sort(y1_polynomial(f, n + 1).roots().real)
    root_err = float(np.abs(roots - dd.mu).max())
    dmu = discriminant_recursion(f, dd.mu)
    delta_min = float(np.abs(dmu).min())
    bands = band_structure(spec, alpha, flaschka=f)
    gaps = bands.gaps
    inter = float(np.max(np.maximum(gaps[:, 0] - dd.mu, dd.mu - gaps[:, 1])))
    return {"wronskian": wr, "root_error": root_err, "delta_min": delta_min,
            "interlacing_violation": max(inter, 0.0)}


def check_symplectic(x: PhasePoint, alpha: float, step: float = 1e-5) -> float:
    return symplectic_defect(x, alpha, step)


def check_sublevel(n: int, samples: int, rng: np.random.Generator, c_max: float = 80.0) -> dict:
    """Pointwise monotonicity U_{c1} <= U_{c2} on {U_{c2} <= M}, and U_2 <= 4n on the simplex."""
    S = Region("S", n)
    q = sample_uniform(S, samples, rng)
    c2 = rng.uniform(2.0, c_max / 2, samples)
    c1 = c2 + rng.uniform(0.0, c_max / 2, samples)
    M = rng.uniform(4 * n, 40 * n, samples)
    u1 = np.array([potential_Uc(q[k], c1[k]) for k in range(samples)])
    u2 = np.array([potential_Uc(q[k], c2[k]) for k in range(samples)])
    in_level = u2 <= M
    bad = in_level & (u1 > u2 * (1 + 1e-12))
    worst = int(np.argmax(np.where(bad, u1 - u2, -np.inf))) if bad.any() else None
    u_base = potential_Uc(q, 2.0)
    return {
        "tuples": int(in_level.sum()),
        "violations": int(bad.sum()),
        "worst": None if worst is None else {"q": q[worst], "c1": c1[worst], "c2": c2[worst],
                                             "U_c1": u1[worst], "U_c2": u2[worst]},
        "U2_max": float(u_base.max()),
        "U2_bound": 4.0 * n,
    }
