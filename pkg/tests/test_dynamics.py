import math

import numpy as np
import pytest

from toda_toric.dynamics import (
    FlaschkaPoint,
    PhasePoint,
    coordinate_brackets,
    flaschka,
    flaschka_inverse,
    hamiltonian_H,
    hamiltonian_Hbar,
    hamiltonian_Hc,
    integrate_flaschka,
    integrate_qp_verlet,
    poisson_bracket_check,
    potential_Uc,
    toda_vector_field,
)
from toda_toric.errors import OffLeafError, SaturationError, StiffnessError
from toda_toric.experiments import random_leaf_point, random_phase_point
from toda_toric.spectral import lax_matrices


def test_phase_point_validation():
    with pytest.raises(ValueError):
        PhasePoint([1.0, 0.0, 0.0], [0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        PhasePoint([0.0, 0.0], [0.0, 0.0])
    with pytest.raises(ValueError):
        FlaschkaPoint([0.0, 0.0, 0.0], [1.0, 0.0, 1.0])


def test_hamiltonian_examples():
    z = np.zeros(3)
    assert hamiltonian_H(PhasePoint(z, z), 1.0) == 3.0
    assert hamiltonian_H(PhasePoint(z, np.array([1.0, -1.0, 0.0])), 1.0) == 4.0
    assert hamiltonian_Hbar(FlaschkaPoint(z, np.ones(3))) == 3.0
    assert hamiltonian_Hbar(FlaschkaPoint(np.array([1.0, -1.0, 0.0]), np.ones(3))) == 4.0


def test_energy_identity():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(3, 7))
        x = random_phase_point(n, rng)
        alpha = float(rng.uniform(0.1, 3))
        H = hamiltonian_H(x, alpha)
        assert abs(H - hamiltonian_Hbar(flaschka(x, alpha))) <= 1e-12 * H


def test_hamiltonian_overflow():
    q = np.array([400.0, -400.0, 0.0])
    with pytest.raises(SaturationError):
        hamiltonian_H(PhasePoint(q, np.zeros(3)), 1.0)


def test_potential_examples():
    assert math.isclose(potential_Uc(np.zeros(3), 2.0), 12 * math.exp(-2), rel_tol=1e-14)
    assert math.isclose(potential_Uc(np.zeros(3), 2.0), 1.6240233, rel_tol=1e-6)
    for n, c in [(4, 7.0), (5, 30.0)]:
        assert math.isclose(potential_Uc(np.zeros(n), c), n * c * c * math.exp(-c), rel_tol=1e-13)
    # q1 - q2 = 1: that term is exactly c^2
    c = 20.0
    q = np.array([0.5, -0.5, 0.0])
    others = c * c * (math.exp(c * (-0.5 - 1)) * 2)
    assert math.isclose(potential_Uc(q, c), c * c + others, rel_tol=1e-14)
    with pytest.raises(ValueError):
        potential_Uc(np.zeros(3), 1.5)


def test_potential_saturates():
    assert potential_Uc(np.array([20.0, -10.0, -10.0]), 50.0) == np.inf


def test_flaschka_examples():
    f = flaschka(PhasePoint(np.zeros(3), np.zeros(3)), 2.0)
    assert np.all(f.b == 0) and np.allclose(f.a, 2.0)
    rng = np.random.default_rng(1)
    for _ in range(1000):
        alpha = float(rng.uniform(0.1, 3))
        f = random_leaf_point(4, alpha, rng)
        assert abs(np.prod(f.a) / alpha**4 - 1) < 1e-12


def test_flaschka_inverse():
    x = flaschka_inverse(FlaschkaPoint(np.zeros(4), np.full(4, 0.7)), 0.7)
    assert np.allclose(x.q, 0) and np.allclose(x.p, 0)
    rng = np.random.default_rng(2)
    for _ in range(1000):
        n = int(rng.integers(3, 7))
        alpha = float(rng.uniform(0.1, 3))
        x = random_phase_point(n, rng)
        f = flaschka(x, alpha)
        y = flaschka_inverse(f, alpha)
        assert np.abs(y.q - x.q).max() < 1e-10 and np.abs(y.p - x.p).max() < 1e-12
        g = flaschka(y, alpha)
        assert np.abs(g.a / f.a - 1).max() < 1e-10


def test_flaschka_inverse_rejects_off_leaf():
    alpha = 0.8
    a = np.full(3, alpha) * 1.1 ** (1 / 3)
    with pytest.raises(OffLeafError):
        flaschka_inverse(FlaschkaPoint(np.zeros(3), a), alpha)


def test_vector_field():
    bd, ad = toda_vector_field(FlaschkaPoint(np.zeros(3), np.ones(3)))
    assert np.all(bd == 0) and np.all(ad == 0)
    rng = np.random.default_rng(3)
    for _ in range(1000):
        f = random_leaf_point(int(rng.integers(3, 7)), 1.0, rng)
        bd, ad = toda_vector_field(f)
        assert abs(bd.sum()) < 1e-12 * max(1, np.abs(f.a).max() ** 2)
        assert abs((ad / f.a).sum()) < 1e-12 * max(1, np.abs(f.b).max())


def test_vector_field_matches_commutator():
    rng = np.random.default_rng(4)
    for _ in range(500):
        n = int(rng.integers(3, 7))
        f = random_leaf_point(n, float(rng.uniform(0.3, 2)), rng)
        lp = lax_matrices(f)
        C = lp.L @ lp.B - lp.B @ lp.L
        bd, ad = toda_vector_field(f)
        Ldot = np.diag(bd)
        for i in range(n - 1):
            Ldot[i, i + 1] = Ldot[i + 1, i] = ad[i]
        Ldot[0, n - 1] = Ldot[n - 1, 0] = ad[n - 1]
        assert np.abs(C - Ldot).max() < 1e-12 * max(1.0, np.abs(lp.L).max() ** 2)


def test_rk4_equilibrium_fixed():
    f = FlaschkaPoint(np.zeros(4), np.ones(4))
    tr = integrate_flaschka(f, 5.0, 1e-2, record_every=100)
    assert np.all(tr.b == 0) and np.all(tr.a == 1)


def test_rk4_conservation_long_run():
    rng = np.random.default_rng(5)
    f0 = random_leaf_point(4, 1.0, rng)
    tr = integrate_flaschka(f0, 50.0, 1e-3, record_every=500)
    assert abs(tr.times[-1] - 50.0) < 1e-12
    assert np.abs(tr.b.sum(axis=1) - f0.b.sum()).max() < 1e-9
    assert np.abs(np.exp(np.log(tr.a).sum(axis=1) - np.log(f0.a).sum()) - 1).max() < 1e-8
    E = np.array([hamiltonian_Hbar(tr[k]) for k in range(len(tr))])
    assert np.abs(E / E[0] - 1).max() < 1e-8


def test_rk4_order():
    # global error of the a-variables at T=2 shrinks ~16x when dt halves
    rng = np.random.default_rng(6)
    f0 = random_leaf_point(4, 1.0, rng)
    ref = integrate_flaschka(f0, 2.0, 1e-3, record_every=10**6)
    errs = []
    for dt in (0.1, 0.05):
        tr = integrate_flaschka(f0, 2.0, dt, record_every=10**6)
        errs.append(np.abs(tr.a[-1] - ref.a[-1]).max())
    assert 10 < errs[0] / errs[1] < 24


def test_rk4_stiffness_abort():
    f = FlaschkaPoint(np.array([300.0, -300.0, 0.0]), np.array([1e-3, 1.0, 1e3]))
    with pytest.raises(StiffnessError):
        integrate_flaschka(f, 1.0, 0.5)


def test_rk4_rejects_bad_args():
    f = FlaschkaPoint(np.zeros(3), np.ones(3))
    with pytest.raises(ValueError):
        integrate_flaschka(f, 1.0, 0.0)
    with pytest.raises(ValueError):
        integrate_flaschka(f, -1.0, 0.1)


def test_verlet_minimum_stays_put():
    tr = integrate_qp_verlet(PhasePoint(np.zeros(3), np.zeros(3)), 20.0, 1.0, 1e-3)
    assert np.abs(tr.q).max() < 1e-14 and np.abs(tr.p).max() < 1e-14


def test_verlet_energy_benchmark():
    q = np.array([0.2, -0.1, -0.1])
    p = np.array([0.6, -0.8, 0.2])
    c = 80.0
    tr = integrate_qp_verlet(PhasePoint(q, p), c, 5.0, 1e-5, record_every=100)
    E = hamiltonian_Hc(tr.q, tr.p, c)
    assert np.abs(E / E[0] - 1).max() < 1e-3


def test_verlet_reversible():
    q = np.array([0.2, -0.1, -0.1])
    p = np.array([0.6, -0.8, 0.2])
    fwd = integrate_qp_verlet(PhasePoint(q, p), 40.0, 3.0, 1e-4, record_every=10**6)
    back = integrate_qp_verlet(fwd[-1], 40.0, -3.0, 1e-4, record_every=10**6)
    assert np.abs(back.q[-1] - q).max() < 1e-6 and np.abs(back.p[-1] - p).max() < 1e-6


def test_brackets():
    rng = np.random.default_rng(7)
    for n in (3, 4, 5):
        f = random_leaf_point(n, 1.0, rng)
        bb, ba, aa = coordinate_brackets(f)
        assert abs(bb[0, 1]) < 1e-6
        assert abs(ba[0, 0] / (f.a[0] / 2) - 1) < 1e-5
        assert abs(ba[0, 1]) < 1e-6
        assert abs(ba[0, n - 1] + f.a[n - 1] / 2) < 1e-6
        assert np.abs(aa).max() < 1e-6
        assert poisson_bracket_check(f) < 1e-5
