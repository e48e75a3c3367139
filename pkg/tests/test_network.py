import numpy as np
import pytest
from numpy.testing import assert_allclose

from elsim.network import (GainFeasibility, GainSet, SpanningTreeError, Topology,
                           TopologyError, gain_bounds, has_spanning_tree, laplacian,
                           pq_certificate)
from elsim.verify import suite_lemma2

LAMBDA_MIN_Q_REF = 0.0536886680611345
SIGMA_MAX_REF = 2.50848119918067


def test_topology_validation():
    with pytest.raises(TopologyError):
        Topology(adjacency=np.eye(2), leader_links=np.zeros(2))
    with pytest.raises(TopologyError):
        Topology(adjacency=np.array([[0, 2], [0, 0]]), leader_links=np.zeros(2))
    with pytest.raises(TopologyError):
        Topology(adjacency=np.zeros((2, 3)), leader_links=np.zeros(2))
    with pytest.raises(TopologyError):
        Topology(adjacency=np.zeros((2, 2)), leader_links=np.zeros(3))


def test_laplacian_examples(topology):
    assert_allclose(laplacian(Topology(adjacency=np.zeros((3, 3)),
                                       leader_links=np.zeros(3))), np.zeros((3, 3)))
    assert_allclose(laplacian(topology),
                    [[1, 0, -1, 0], [-1, 1, 0, 0], [0, 0, 1, -1], [0, -1, 0, 1]])
    two = Topology(adjacency=np.array([[0, 1], [1, 0]]), leader_links=np.zeros(2))
    assert_allclose(laplacian(two), [[1, -1], [-1, 1]])


def test_laplacian_rows_sum_to_zero(topology):
    assert_allclose(laplacian(topology).sum(axis=1), np.zeros(4), atol=0.0)


def test_spanning_tree_detection(topology):
    assert has_spanning_tree(topology)
    assert not has_spanning_tree(
        Topology(adjacency=topology.adjacency, leader_links=np.zeros(4)))
    star = Topology(adjacency=np.zeros((5, 5)), leader_links=np.ones(5))
    assert has_spanning_tree(star)


def test_certificate_scalar_case():
    top = Topology(adjacency=np.zeros((1, 1)), leader_links=np.ones(1))
    cert = pq_certificate(top)
    assert_allclose(cert.h, [1.0])
    assert_allclose(cert.p_diag, [1.0])
    assert_allclose(cert.q, [[2.0]])
    assert cert.lambda_min_q == pytest.approx(2.0)


def test_certificate_reference_topology(topology):
    cert = pq_certificate(topology)
    assert_allclose(cert.h, [4.0, 5.0, 7.0, 6.0], atol=1e-12)
    assert_allclose(cert.q, cert.q.T, atol=0.0)
    assert cert.lambda_max_p == pytest.approx(0.25, abs=1e-15)
    assert cert.lambda_min_q == pytest.approx(LAMBDA_MIN_Q_REF, rel=1e-9)
    assert cert.sigma_max_lb == pytest.approx(SIGMA_MAX_REF, rel=1e-9)


def test_certificate_rejects_disconnected():
    top = Topology(adjacency=np.array([[0, 1], [1, 0]]), leader_links=np.zeros(2))
    with pytest.raises(SpanningTreeError):
        pq_certificate(top)


def test_certificate_label_equivariance(topology):
    rng = np.random.default_rng(2)
    perm = rng.permutation(4)
    p = np.eye(4)[perm]
    permuted = Topology(adjacency=p @ topology.adjacency @ p.T,
                        leader_links=p @ topology.leader_links)
    cert = pq_certificate(topology)
    cert_p = pq_certificate(permuted)
    assert_allclose(cert_p.h, p @ cert.h, atol=1e-12)
    assert cert_p.lambda_min_q == pytest.approx(cert.lambda_min_q, rel=1e-12)


def test_gain_bounds_reference(topology, gains):
    feas = gain_bounds(pq_certificate(topology), gains)
    # kc1 = ko2 in the benchmark gains, so the mismatch term drops out:
    # bound = (3*k + k^2 + k^2/(2(k-1))) * lambda_max_p / lambda_min_q
    expected = (3 * 2 + 4 + 4 / 2) * 0.25 / LAMBDA_MIN_Q_REF
    assert feas.kc2_bound == pytest.approx(expected, rel=1e-9)
    assert not feas.kc2_ok  # 6 < 55.88: reported, not presumed
    assert feas.kc3_ok
    assert feas.alphas[1] > 0.0  # varpi sits just above its lower bound


def test_gain_bounds_strict_inequality(topology):
    gains = GainSet(ko1=3, ko2=5, kc1=5, kc2=100.0, kc3=1.0, kappa=2.0, zbar0=1.0)
    feas = gain_bounds(pq_certificate(topology), gains)
    assert feas.kc2_ok
    assert not feas.kc3_ok  # kc3 == zbar0 must fail


def test_gain_bound_homogeneous_in_p(topology, gains):
    cert = pq_certificate(topology)
    feas = gain_bounds(cert, gains)
    import dataclasses
    doubled = dataclasses.replace(cert, lambda_max_p=2 * cert.lambda_max_p)
    feas2 = gain_bounds(doubled, gains)
    assert feas2.kc2_bound == pytest.approx(2 * feas.kc2_bound, rel=1e-12)


def test_kappa_must_exceed_one():
    with pytest.raises(ValueError):
        GainSet(ko1=3, ko2=5, kc1=5, kc2=6, kc3=3, kappa=1.0, zbar0=1.0)


def test_random_topology_certificates():
    assert suite_lemma2(seed=0).ok
