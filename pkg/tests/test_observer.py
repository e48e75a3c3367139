import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from elsim.engine import fit_exponential_rate
from elsim.network import GainSet
from elsim.observer import (cascade_gain, error_eigenvalues, error_matrix, is_hurwitz,
                            observer_derivative)
from elsim.transform import delta, delta_bar, transformed_derivative
from elsim.verify import suite_observer


def test_zero_error_equilibrium(params, gains):
    # estimates equal to the true state reproduce the plant derivative exactly
    rng = np.random.default_rng(1)
    for _ in range(20):
        q = rng.uniform(-np.pi, np.pi, 2)
        x = rng.normal(size=2)
        z = rng.normal(size=2)
        u = rng.normal(size=2)
        xh_dot, zh_dot = observer_derivative(params, x, z, x, q, u, gains)
        xd, zd = transformed_derivative(params, q, z, u)
        assert_allclose(xh_dot, xd, atol=1e-14)
        assert_allclose(zh_dot, zd, atol=1e-14)


def test_correction_scales_with_gain(params, gains):
    x = np.zeros(2)
    xh_dot, zh_dot = observer_derivative(params, [1.0, 0.0], [0.0, 0.0], x,
                                         [0.0, 0.0], [0.0, 0.0], gains)
    assert xh_dot[0] == pytest.approx(-gains.ko1)
    assert zh_dot[0] == pytest.approx(-gains.ko2)
    assert xh_dot[1] == 0.0


def test_error_matrix_and_eigenvalues(gains):
    assert_allclose(error_matrix(gains), [[-3.0, 1.0], [-5.0, 0.0]])
    eigs = np.sort_complex(error_eigenvalues(gains))
    expected = np.sort_complex(np.array([-1.5 + 1j * math.sqrt(11) / 2,
                                         -1.5 - 1j * math.sqrt(11) / 2]))
    assert_allclose(eigs, expected, atol=1e-12)


def test_repeated_eigenvalue_case():
    g = GainSet(ko1=2.0, ko2=1.0, kc1=1, kc2=1, kc3=1, kappa=2.0)
    assert_allclose(np.sort(error_eigenvalues(g).real), [-1.0, -1.0], atol=1e-9)
    assert is_hurwitz(2.0, 1.0)


def test_zero_gain_not_hurwitz():
    assert not is_hurwitz(3.0, 0.0)
    assert not is_hurwitz(0.0, 5.0)


def test_cascade_gain(params):
    assert cascade_gain(params, 0.0, 0.0, 1.3) == 0.0
    assert cascade_gain(params, 2.0, -1.0, 0.0) == 0.0
    dbar, _ = delta_bar(params)
    rng = np.random.default_rng(4)
    for _ in range(200):
        zt1, z1, q2 = rng.normal(size=3) * 3
        h = cascade_gain(params, zt1, z1, q2)
        assert abs(h) <= dbar * (abs(zt1) + 2 * abs(z1)) + 1e-12
        assert h == pytest.approx(delta(params, q2) * (zt1 + 2 * z1), rel=1e-14)


def test_linear_error_dynamics_and_signature():
    assert suite_observer(seed=0).ok


def test_channel1_decay_rate_matches_eigenvalues(benchmark_log, gains):
    # the channel-1 error system is linear with eigenvalue real part -1.5;
    # the fitted decay of its norm may not beat that rate (0.05 margin)
    log = benchmark_log
    err = np.linalg.norm(
        np.stack([log.xhat[:, :, 0] - log.x[:, :, 0],
                  log.zhat[:, :, 0] - log.z[:, :, 0]], axis=-1), axis=-1)
    max_re = max(ev.real for ev in error_eigenvalues(gains))
    for i in range(log.q.shape[1]):
        rate = fit_exponential_rate(log.t, err[:, i])
        assert rate <= max_re + 0.05
