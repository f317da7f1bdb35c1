import numpy as np
import pytest

from swirllab.errors import UnsupportedGridError
from swirllab.grid import (AxisBall, HalfPlaneGrid, bessel_collocation,
                           fd_weights, get_grid, radial_weights)


def test_nodes_positive_increasing(grid_base):
    r = grid_base.radial_nodes
    assert r[0] > 0
    assert np.all(np.diff(r) > 0)
    assert r[-1] < grid_base.r_max


def test_quadrature_weights_positive(grid_base):
    assert np.all(grid_base.quadrature_weights_r > 0)


@pytest.mark.parametrize("m", [0, 1, 2, 3])
def test_moment_exactness(grid_base, m):
    # int_0^R r^3 r^{2m} dr must be exact well below the 1e-8 contract
    r, w = grid_base.radial_nodes, grid_base.quadrature_weights_r
    exact = grid_base.r_max ** (4 + 2 * m) / (4 + 2 * m)
    assert abs(np.sum(w * r ** (2 * m)) - exact) / exact < 1e-12


def test_r3_volume_tight(grid_base):
    w = grid_base.quadrature_weights_r
    exact = grid_base.r_max**4 / 4
    assert abs(np.sum(w) - exact) / exact < 1e-10


def test_gaussian_radial_integral(grid_base):
    r, w = grid_base.radial_nodes, grid_base.quadrature_weights_r
    R = grid_base.r_max
    exact = 0.5 * (1 - np.exp(-(R**2)) * (R**2 + 1))
    assert abs(np.sum(w * np.exp(-(r**2))) - exact) < 1e-9


def test_weights_other_powers(grid_base):
    for q in (1, 2):
        w = grid_base.weights(q)
        exact = grid_base.r_max ** (q + 1) / (q + 1)
        assert abs(np.sum(w) - exact) / exact < 1e-10


def test_nz_power_of_two_required():
    with pytest.raises(ValueError):
        HalfPlaneGrid.build(64, 100, 2.0, 2.0)


def test_small_nr_rejected():
    with pytest.raises(UnsupportedGridError):
        HalfPlaneGrid.build(16, 64, 2.0, 2.0)


def test_grid_memoized():
    a = get_grid(64, 64, 2.0, 2.0)
    b = get_grid(64, 64, 2.0, 2.0)
    assert a is b


def test_ball_requires_positive_radius():
    with pytest.raises(ValueError):
        AxisBall(0.0, 0.0)
    with pytest.raises(ValueError):
        AxisBall(0.0, -1.0)


def test_bessel_collocation_matches_scipy():
    jz, band = bessel_collocation(8)
    assert jz.shape == (8,)
    assert band > jz[-1]
    # first J1 zero
    assert abs(jz[0] - 3.8317059702) < 1e-9


def test_fd_weights_differentiate_polynomials():
    xs = np.array([-2.0, -0.7, 0.0, 1.1, 2.3])
    w = fd_weights(0.3, xs, 1)
    for p in range(4):
        vals = xs**p
        deriv = p * 0.3 ** (p - 1) if p > 0 else 0.0
        assert abs(np.dot(w, vals) - deriv) < 1e-10


def test_radial_weights_standalone_positive():
    nodes, band = bessel_collocation(128)
    r = 5.0 * nodes / band
    w = radial_weights(r, 5.0, q=3, require_positive=True)
    assert np.all(w > 0)


def test_check_invariants_report(grid_small):
    rep = grid_small.check_invariants()
    assert rep["nodes_increasing"] and rep["weights_positive"]
    assert max(v for k, v in rep.items() if k.startswith("moment")) < 1e-8
