import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from elsim.dynamics import (ParameterError, PhysicalParams, coriolis, derive_o_params,
                            forward_dynamics, gravity, inertia, inertia_bounds,
                            inertia_eigenvalues, kinetic_energy)
from elsim.engine import energy_drift
from elsim.verify import reference_physical, suite_dynamics

# frozen on first computation; the closed-form eigen sweep agreed with a dense
# numpy eigvalsh sweep to 1e-16
KM_REF = 0.00321279695305188
KM_MAX_REF = 0.159487203046948


def test_lumped_constants_reference_arm(params):
    assert_allclose(params.o, [0.1027, 0.024, 0.012, 0.26, 0.06], atol=1e-15)


def test_zero_mass_rejected():
    with pytest.raises(ParameterError):
        PhysicalParams(m1=0.5, m2=0.0, l1=0.4, l2=0.3, lc1=0.2, lc2=0.15,
                       j1=0.0067, j2=0.003, g=9.8)


def test_positive_definiteness_boundary_rejected():
    # o1 = 2*o2 zeroes the first inertia entry at a folded elbow; unreachable
    # from positive physical constants, so exercised on a raw o-vector
    with pytest.raises(ParameterError):
        inertia_bounds(np.array([0.1, 0.05, 0.02, 0.1, 0.05]))


def test_inertia_reference_values(params):
    assert_allclose(inertia(params, [0.0, 0.0]),
                    [[0.1507, 0.036], [0.036, 0.012]], atol=1e-15)
    m = inertia(params, [0.3, math.pi / 2])
    assert m[0, 1] == pytest.approx(0.012, abs=1e-15)  # cos collapses to o3


def test_inertia_even_in_elbow_angle(params):
    for q2 in np.linspace(0, 10, 25):
        assert_allclose(inertia(params, [0.0, q2]), inertia(params, [1.2, -q2]),
                        atol=1e-15)


def test_coriolis_reference_values(params):
    assert_allclose(coriolis(params, [0.1, 0.0], [3.0, -2.0]), np.zeros((2, 2)),
                    atol=1e-15)
    assert_allclose(coriolis(params, [0.1, 0.7], [0.0, 0.0]), np.zeros((2, 2)),
                    atol=1e-15)
    assert_allclose(coriolis(params, [0.0, math.pi / 2], [1.0, 1.0]),
                    [[-0.024, -0.048], [0.024, 0.0]], atol=1e-15)


def test_coriolis_quadratic_in_velocity(params):
    rng = np.random.default_rng(7)
    for _ in range(100):
        q = rng.uniform(-np.pi, np.pi, 2)
        qd = rng.uniform(-2, 2, 2)
        a = rng.uniform(-3, 3)
        assert_allclose(coriolis(params, q, a * qd) @ (a * qd),
                        a**2 * (coriolis(params, q, qd) @ qd), atol=1e-12)


def test_gravity_reference_values(params):
    assert_allclose(gravity(params, [math.pi / 2, 0.0]), [0.0, 0.0], atol=1e-14)
    assert_allclose(gravity(params, [0.0, 0.0]), [3.136, 0.588], atol=1e-12)


def test_gravity_shoulder_antisymmetry(params):
    # first joint's own-weight term flips sign when mirrored about pi/2
    for q1 in np.linspace(-1, 1, 7):
        g_a = gravity(params, [q1, 0.4])
        g_b = gravity(params, [math.pi - q1, -0.4])
        assert g_a[1] == pytest.approx(-g_b[1], abs=1e-12)
        assert g_a[0] == pytest.approx(-g_b[0], abs=1e-12)


def test_forward_dynamics_equilibria(params):
    q = np.array([0.4, -1.1])
    assert_allclose(forward_dynamics(params, q, [0, 0], gravity(params, q)),
                    [0.0, 0.0], atol=1e-13)
    qd = np.array([1.3, -0.6])
    tau = coriolis(params, q, qd) @ qd + gravity(params, q)
    assert_allclose(forward_dynamics(params, q, qd, tau), [0.0, 0.0], atol=1e-12)


def test_forward_dynamics_matches_dense_solve(params):
    q = np.array([0.0, 0.0])
    tau = gravity(params, q) + np.array([1.0, 0.0])
    expected = np.linalg.solve(inertia(params, q), [1.0, 0.0])
    assert_allclose(forward_dynamics(params, q, [0, 0], tau), expected, atol=1e-12)


def test_inertia_bounds_frozen_regression(params):
    assert params.km == pytest.approx(KM_REF, rel=1e-9)
    assert params.kM == pytest.approx(KM_MAX_REF, rel=1e-9)
    lo, hi = inertia_eigenvalues(params, 0.0)
    assert params.km <= lo <= hi <= params.kM


def test_inertia_bounds_scale_with_mass():
    base = reference_physical()
    c = 2.7
    scaled = PhysicalParams(m1=c * base.m1, m2=c * base.m2, l1=base.l1, l2=base.l2,
                            lc1=base.lc1, lc2=base.lc2, j1=c * base.j1, j2=c * base.j2,
                            g=base.g)
    p0 = derive_o_params(base)
    p1 = derive_o_params(scaled)
    assert p1.km == pytest.approx(c * p0.km, rel=1e-9)
    assert p1.kM == pytest.approx(c * p0.kM, rel=1e-9)


def test_random_configuration_invariants():
    assert suite_dynamics(seed=0).ok


def test_energy_conserved_under_gravity_compensation(params):
    assert energy_drift(params, t_end=5.0, dt=1e-4) < 1e-6


def test_kinetic_energy_positive(params):
    rng = np.random.default_rng(3)
    for _ in range(50):
        q = rng.uniform(-np.pi, np.pi, 2)
        qd = rng.uniform(-3, 3, 2)
        ke = kinetic_energy(params, q, qd)
        assert ke >= 0.0
        assert ke == pytest.approx(0.5 * qd @ inertia(params, q) @ qd, rel=1e-12)
