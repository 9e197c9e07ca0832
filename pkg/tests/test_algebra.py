import numpy as np
import pytest

from geoflow.algebra import (ConfigurationError, KKData, NumericalError,
                             discrete_diamond, kk_metric, kk_metric_inverse,
                             modified_kk_data, so3_ad_star)
from geoflow.rigidbody import RotorParams, base_kk_data, gamma_for_gain


def random_data(rng, n=None, m=None):
    n = n or int(rng.integers(1, 6))
    m = m or int(rng.integers(1, 4))
    qn = rng.normal(size=(n, n))
    qm = rng.normal(size=(m, m))
    return KKData(qn @ qn.T + n * np.eye(n), qm @ qm.T + m * np.eye(m),
                  rng.normal(size=(m, n)))


def test_zero_connection_identity_blocks():
    data = KKData(np.eye(3), np.eye(2), np.zeros((2, 3)))
    assert np.allclose(kk_metric(data).blocks, np.eye(5))
    inv = kk_metric_inverse(data)
    assert np.allclose(inv.blocks, np.eye(5))


def test_rigid_body_metric_display():
    params = RotorParams()
    lam = params.lam
    blocks = kk_metric(base_kk_data(params)).blocks
    expected = np.diag([lam[0], lam[1], lam[2], params.i3])
    expected[2, 3] = expected[3, 2] = params.i3
    assert np.allclose(blocks, expected)


def test_rigid_body_inverse_display():
    params = RotorParams()
    lam = params.lam
    inv = kk_metric_inverse(base_kk_data(params)).blocks
    expected = np.diag([1 / lam[0], 1 / lam[1], 1 / params.I3,
                        1 / params.i3 + 1 / params.I3])
    expected[2, 3] = expected[3, 2] = -1 / params.I3
    assert np.allclose(inv, expected)


def test_inverse_against_dense_oracle():
    rng = np.random.default_rng(3)
    for _ in range(50):
        data = random_data(rng, n=3, m=2)
        dense = np.linalg.inv(kk_metric(data).blocks)
        assert np.abs(kk_metric_inverse(data).blocks - dense).max() < 1e-10


def test_metric_times_inverse_property():
    rng = np.random.default_rng(11)
    for _ in range(300):
        data = random_data(rng)
        n = data.n + data.m
        prod = kk_metric(data).blocks @ kk_metric_inverse(data).blocks
        assert np.abs(prod - np.eye(n)).max() < 1e-10


def test_dimension_mismatch():
    with pytest.raises(ConfigurationError):
        KKData(np.eye(3), np.eye(2), np.zeros((2, 4)))


def test_validate_rejects_indefinite():
    with pytest.raises(ConfigurationError):
        KKData(-np.eye(2), np.eye(1), np.zeros((1, 2))).validate()


def test_modified_gamma_zero_is_identity():
    rng = np.random.default_rng(5)
    data = random_data(rng, n=3, m=1)
    mod, c_map, t_map = modified_kk_data(data, 0.0)
    assert np.allclose(mod.base_metric, data.base_metric)
    assert np.allclose(mod.inertia, data.inertia)
    assert np.allclose(mod.connection, data.connection)
    assert np.allclose(c_map, 0.0)
    assert np.allclose(t_map, np.eye(1))


def test_modified_rigid_body_values():
    """Gain-k feedback via the resolvent form: the triple reproduces the
    modified inertia (1-k)^-1 I3, the momentum rescaling (i3 - k lam3)/i3,
    and the fiber inertia (1+gamma)^-1 i3."""
    params = RotorParams()
    k = 0.8
    gamma = gamma_for_gain(k, params)
    mod, c_map, t_map = modified_kk_data(base_kk_data(params), gamma)
    lam = params.lam
    assert np.allclose(np.diag(mod.base_metric), [lam[0], lam[1], params.I3 / (1 - k)])
    assert abs(t_map[0, 0] - (params.i3 - k * lam[2]) / params.i3) < 1e-12
    assert abs(mod.inertia[0, 0] - params.i3 / (1 + gamma)) < 1e-12
    # feedback map: C Pi = -k Pi3
    pi = np.array([0.3, -1.2, 2.4])
    assert abs((c_map @ pi)[0] - (-k * pi[2])) < 1e-12


def test_factorization_identity_random():
    """Inverse of the modified block metric equals the original inverse
    composed with [[1, 0], [-C, T]]."""
    rng = np.random.default_rng(17)
    for _ in range(100):
        data = random_data(rng, n=3, m=1)
        gamma = float(rng.uniform(-0.3, 0.3))
        mod, c_map, t_map = modified_kk_data(data, gamma)
        lhs = kk_metric_inverse(mod).blocks
        blk = np.block([[np.eye(3), np.zeros((3, 1))], [-c_map, t_map]])
        rhs = kk_metric_inverse(data).blocks @ blk
        assert np.abs(lhs - rhs).max() < 1e-10


def test_factorization_identity_rigid_sweep():
    data = base_kk_data(RotorParams())
    for gamma in np.linspace(-0.5, 0.5, 41):
        mod, c_map, t_map = modified_kk_data(data, gamma)
        lhs = kk_metric_inverse(mod).blocks
        blk = np.block([[np.eye(3), np.zeros((3, 1))], [-c_map, t_map]])
        rhs = kk_metric_inverse(data).blocks @ blk
        assert np.abs(lhs - rhs).max() < 1e-10


def test_modified_out_of_range():
    data = KKData(np.eye(2), np.eye(1), np.array([[1.0, 0.0]]))
    # R = 1 - gamma vanishes at gamma = 1
    with pytest.raises(NumericalError):
        modified_kk_data(data, 1.0)


def test_so3_ad_star():
    assert np.allclose(so3_ad_star(np.array([1.0, 1, 1]), np.array([1.0, 1, 1])), 0)
    out = so3_ad_star(np.array([1.0, 0, 0]), np.array([0.0, 1, 0]))
    assert np.allclose(out, [0, 0, -1])
    rng = np.random.default_rng(2)
    for _ in range(100):
        omega, pi = rng.normal(size=3), rng.normal(size=3)
        assert abs(so3_ad_star(omega, pi) @ pi) < 1e-12


def test_diamond_constant_field_vanishes():
    x = np.full((9, 8), 3.7)
    q = np.random.default_rng(0).normal(size=(9, 8))
    gx, gy = discrete_diamond(x, q, 0.1, 0.2)
    # one-sided stencils leave only round-off of the cancelling sum
    assert np.abs(gx).max() < 1e-13
    assert np.abs(gy).max() < 1e-13


def test_diamond_coordinate_gradient():
    dx, dy = 0.25, 0.4
    xs = np.arange(8) * dx
    ys = np.arange(9) * dy
    x2, y2 = np.meshgrid(xs, ys)
    gx, gy = discrete_diamond(x2, np.ones_like(x2), dx, dy)
    assert np.abs(gx - 1.0).max() < 1e-12
    assert np.abs(gy).max() < 1e-12


def test_diamond_bilinear_and_pairing():
    rng = np.random.default_rng(8)
    dx, dy = 0.3, 0.2
    x = rng.normal(size=(10, 12))
    q1, q2 = rng.normal(size=(10, 12)), rng.normal(size=(10, 12))
    g1 = discrete_diamond(x, q1, dx, dy)
    g2 = discrete_diamond(x, q2, dx, dy)
    g12 = discrete_diamond(x, 2.0 * q1 + q2, dx, dy)
    for a, b, c in zip(g12, g1, g2):
        assert np.abs(a - 2.0 * b - c).max() < 1e-12
    # pairing with a vector field equals the quadrature of q * (v . grad X)
    v1, v2 = rng.normal(size=(10, 12)), rng.normal(size=(10, 12))
    gx, gy = discrete_diamond(x, q1, dx, dy)
    lhs = (gx * v1 + gy * v2).sum() * dx * dy
    from geoflow.algebra import _centered_gradient

    rhs = (q1 * (v1 * _centered_gradient(x, dx, 1) + v2 * _centered_gradient(x, dy, 0))).sum() * dx * dy
    assert abs(lhs - rhs) < 1e-12
