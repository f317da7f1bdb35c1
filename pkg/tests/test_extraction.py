import numpy as np
import pytest
from conftest import mesh
from hypothesis import given, settings
from hypothesis import strategies as st

from swirllab.errors import RegimeError, ResolutionError
from swirllab.extraction import (delta_sup, recenter, recenter_kappa,
                                 ring_capture_fraction, score, sup_scan)
from swirllab.fields import ScalarFieldRZ
from swirllab.fitting import bump_field
from swirllab.grid import AxisBall
from swirllab.lemmas import single_node_ring
from swirllab.packets import detect_packets


def test_score_zero(grid_base):
    g = ScalarFieldRZ(grid_base, np.zeros((grid_base.nr, grid_base.nz)))
    assert score(g, AxisBall(0.0, 1.0)) == 0.0


def test_score_constant_field(grid_base):
    # g constant on the ball: score = (4/15) g^2 lambda up to indicator error
    g = ScalarFieldRZ(grid_base, np.full((grid_base.nr, grid_base.nz), 1.7))
    lam = 1.0
    got = score(g, AxisBall(0.0, lam))
    assert got == pytest.approx((4.0 / 15.0) * 1.7**2 * lam, rel=0.02)


def test_score_resolution_floor(grid_base):
    g = ScalarFieldRZ(grid_base, np.ones((grid_base.nr, grid_base.nz)))
    with pytest.raises(ResolutionError):
        score(g, AxisBall(0.0, 2.0 * grid_base.dr_max))


def test_score_parabolic_rescaling(grid_base):
    # change of variables: with g_s(r, z) = s^2 g(sr, sz) the score at
    # scale lam/s equals s^3 times the score at lam (the r^3 dr dz measure
    # contributes s^-5, the amplitude s^4, and the normalization s^4)
    r, z = mesh(grid_base)
    sig = 0.4

    def g_at(s):
        return ScalarFieldRZ(
            grid_base, s**2 * np.exp(-((s * r) ** 2 + (s * z) ** 2) / (2 * sig**2)))

    lam, s = 1.2, 2.0
    base = score(g_at(1.0), AxisBall(0.0, lam))
    scaled = score(g_at(s), AxisBall(0.0, lam / s))
    assert scaled == pytest.approx(s**3 * base, rel=0.05)


def test_sup_scan_zero_field(grid_base):
    g = ScalarFieldRZ(grid_base, np.zeros((grid_base.nr, grid_base.nz)))
    scan = sup_scan(g, (0.3, 1.0))
    assert scan.q_star == 0.0


def test_sup_scan_locates_bump(grid_base):
    g = bump_field(grid_base, 0.0, 0.7, 0.3, 0.3)
    scan = sup_scan(g, (0.2, 1.5))
    assert abs(scan.z0_star - 0.7) <= scan.lambda_star / 2


def test_sup_scan_two_far_bumps(grid_base):
    one = bump_field(grid_base, 0.0, -2.0, 0.25, 0.25)
    two = ScalarFieldRZ(grid_base, one.values
                        + bump_field(grid_base, 0.0, 2.0, 0.25, 0.25).values)
    q1 = sup_scan(one, (0.2, 1.2)).q_star
    q2 = sup_scan(two, (0.2, 1.2)).q_star
    assert q2 == pytest.approx(q1, rel=0.01)


def test_sup_scan_translation_covariance(grid_base):
    g = bump_field(grid_base, 0.0, 0.0, 0.3, 0.3)
    scan0 = sup_scan(g, (0.2, 1.0))
    shift_cells = 32
    dz = shift_cells * grid_base.dz
    g2 = ScalarFieldRZ(grid_base, np.roll(g.values, shift_cells, axis=1))
    scan1 = sup_scan(g2, (0.2, 1.0))
    stride = scan1.z_stride_factor * scan1.lambda_star
    assert abs((scan1.z0_star - scan0.z0_star) - dz) <= stride + 1e-12


def test_sup_scan_empty_range(grid_base):
    g = ScalarFieldRZ(grid_base, np.ones((grid_base.nr, grid_base.nz)))
    with pytest.raises(ValueError):
        sup_scan(g, (1.0, 0.5))


def test_delta_zero(grid_base):
    g = ScalarFieldRZ(grid_base, np.zeros((grid_base.nr, grid_base.nz)))
    assert delta_sup(g, [1, 2]).delta == 0.0


def test_delta_agrees_with_score_at_dyadic_scale(grid_base):
    g = bump_field(grid_base, 0.0, 0.0, 0.3, 0.3)
    rep = delta_sup(g, [1, 2])
    direct = score(g, AxisBall(rep.argmax_z0, 2.0**-rep.argmax_k))
    assert rep.delta == pytest.approx(direct, rel=1e-12)
    assert rep.j_min == 1


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=0.1, max_value=8.0))
def test_delta_quadratic_homogeneity(c):
    grid = __import__("swirllab.grid", fromlist=["get_grid"]).get_grid(96, 128, 3.0, 3.0)
    g = bump_field(grid, 0.0, 0.0, 0.3, 0.3)
    base = delta_sup(g, [1, 2]).delta
    scaled = delta_sup(ScalarFieldRZ(grid, c * g.values), [1, 2]).delta
    assert scaled == pytest.approx(c**2 * base, rel=1e-9)


def test_ring_capture_regime_error(grid_base):
    ring = bump_field(grid_base, 2.0, 0.0, 0.1, 0.1)
    with pytest.raises(RegimeError):
        ring_capture_fraction(ring, 0.5, 2.0)


def test_ring_capture_cap_value(grid_base):
    ring, r0 = single_node_ring(grid_base, 2.5)
    lam = 0.1 * r0
    got = ring_capture_fraction(ring, lam, r0)
    theta = lam / r0
    closed = (theta - np.sin(theta) * np.cos(theta)) / np.pi
    assert got == pytest.approx(closed, rel=0.02)
    assert closed == pytest.approx(2.118e-4, rel=1e-3)


def test_ring_capture_cubic_decay(grid_base):
    ring, r0 = single_node_ring(grid_base, 2.5)
    hi = ring_capture_fraction(ring, 0.08 * r0, r0)
    lo = ring_capture_fraction(ring, 0.04 * r0, r0)
    assert hi / lo == pytest.approx(8.0, rel=0.05)


def test_ring_capture_bounded_by_closed_form(grid_base):
    # measured fraction <= 1.2 x cap formula across the regime
    ring, r0 = single_node_ring(grid_base, 2.5)
    for rho in np.geomspace(0.01, 0.1, 6):
        got = ring_capture_fraction(ring, rho * r0, r0)
        closed = (rho - np.sin(rho) * np.cos(rho)) / np.pi
        assert got <= 1.2 * closed


def test_recenter_kappa_arithmetic():
    assert recenter_kappa(0.5, 4.0) == pytest.approx(8e-4, abs=1e-19)
    assert recenter_kappa(1.0, 0.0) == 1.0


def test_recenter_certificate_on_offset_bump(grid_base):
    # coherent bump with r_n around 2 lambda_n, eta = 0.6, c0 = 2
    f = bump_field(grid_base, 0.12, 0.0, 0.22, 0.22)
    p = detect_packets(f, 0.9)[0]
    assert p.center_r <= 2.0 * p.lambda_n
    radius, kappa, achieved = recenter(p, 0.6, 2.0)
    assert radius == pytest.approx(3.0 * p.lambda_n)
    assert kappa == pytest.approx(0.6 * 3.0**-4)
    direct = score(f, AxisBall(p.center_z, radius))
    assert achieved == pytest.approx(direct, rel=1e-12)
    assert achieved >= kappa * p.lambda_n**-4 * p.mass * (1 - 1e-12)


def test_recenter_thin_ring_redirected(grid_base):
    ring = bump_field(grid_base, 2.4, 0.0, 0.08, 0.08)
    p = detect_packets(ring, 0.9)[0]
    assert p.center_r >= 10 * p.lambda_n
    with pytest.raises(RegimeError, match="ring_capture_fraction"):
        recenter(p, 0.4, 4.0)
