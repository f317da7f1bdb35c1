import numpy as np
import pytest
from conftest import mesh

from swirllab.errors import OutsideDomainError
from swirllab.fields import (ScalarFieldRZ, VelocityRZ, d_r_fd, d_z_fd,
                             integrate_mu5, lifted_l2_norm_sq,
                             orbit_cap_fraction, weighted_quantile)
from swirllab.grid import AxisBall
from swirllab.lemmas import mc_lifted_norm_sq


def test_integrate_zero_field(grid_base):
    f = ScalarFieldRZ(grid_base, np.zeros((grid_base.nr, grid_base.nz)))
    assert integrate_mu5(f) == 0.0
    assert integrate_mu5(f, AxisBall(0.0, 1.0)) == 0.0


def test_unit_ball_volume(grid_base):
    # node-indicator mass of f = 1 over the unit axis ball vs 4/15;
    # the sharp indicator at this resolution (~30 cells) is inside 2%
    ones = ScalarFieldRZ(grid_base, np.ones((grid_base.nr, grid_base.nz)))
    vol = integrate_mu5(ones, AxisBall(0.0, 1.0))
    assert abs(vol - 4.0 / 15.0) / (4.0 / 15.0) < 0.02


def test_unit_ball_volume_dense_oracle(grid_base):
    # independent dense 2D quadrature over the disk r^2 + z^2 <= 1
    ones = ScalarFieldRZ(grid_base, np.ones((grid_base.nr, grid_base.nz)))
    vol = integrate_mu5(ones, AxisBall(0.0, 1.0))
    zs = np.linspace(-1, 1, 4001)
    dense = np.trapezoid((1 - zs**2) ** 2 / 4.0, zs)
    assert abs(dense - 4.0 / 15.0) < 1e-8
    assert abs(vol - dense) / dense < 0.02


def test_whole_domain_gaussian(grid_base):
    r, z = mesh(grid_base)
    f = ScalarFieldRZ(grid_base, np.exp(-(r**2 + z**2)))
    # int e^{-z^2} dz * int e^{-r^2} r^3 dr = sqrt(pi) * 1/2, up to the
    # domain-truncation tail of order (R^2+1) e^{-R^2}
    assert abs(integrate_mu5(f) - np.sqrt(np.pi) / 2) < 5e-6


def test_lifted_norm_gaussian_closed_form(grid_base):
    r, z = mesh(grid_base)
    f = ScalarFieldRZ(grid_base, np.exp(-(r**2 + z**2) / 2))
    assert abs(lifted_l2_norm_sq(f) - np.pi**2.5) / np.pi**2.5 < 1e-4


def test_lifted_norm_definition_identity(grid_base, rng):
    vals = rng.standard_normal((grid_base.nr, grid_base.nz))
    f = ScalarFieldRZ(grid_base, vals)
    quad = integrate_mu5(ScalarFieldRZ(grid_base, vals**2))
    assert lifted_l2_norm_sq(f) == pytest.approx(2 * np.pi**2 * quad, rel=1e-14)


def test_lifted_norm_vs_5d_monte_carlo(grid_base):
    r, z = mesh(grid_base)
    sig = 0.5

    def prof(rr, zz):
        return np.exp(-((rr - 0.8) ** 2 + zz**2) / (2 * sig**2)) \
            + np.exp(-((rr + 0.8) ** 2 + zz**2) / (2 * sig**2))

    f = ScalarFieldRZ(grid_base, prof(r, z))
    quad = lifted_l2_norm_sq(f)
    est, sigma = mc_lifted_norm_sq(prof, box=3.0, n_samples=200_000, seed=5)
    assert abs(quad - est) < 3 * sigma


def test_ball_monotone_and_additive(grid_base, rng):
    r, z = mesh(grid_base)
    f = ScalarFieldRZ(grid_base, np.exp(-(r**2)) * (1 + 0.1 * np.cos(z)))
    vals = [integrate_mu5(f, AxisBall(0.0, lam)) for lam in (0.5, 1.0, 1.5, 2.0)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    # additivity over disjoint z-translates
    a = integrate_mu5(f, AxisBall(-2.0, 0.8))
    b = integrate_mu5(f, AxisBall(2.0, 0.8))
    two = ScalarFieldRZ(grid_base, f.values * 0 + f.values)
    assert integrate_mu5(two, AxisBall(-2.0, 0.8)) + integrate_mu5(
        two, AxisBall(2.0, 0.8)) == pytest.approx(a + b, rel=1e-14)


def test_ball_outside_domain_rejected(grid_base):
    f = ScalarFieldRZ(grid_base, np.ones((grid_base.nr, grid_base.nz)))
    with pytest.raises(OutsideDomainError):
        integrate_mu5(f, AxisBall(grid_base.l_z + 2.0, 0.5))


def test_gamma_axis_regularity_enforced(grid_base):
    r, z = mesh(grid_base)
    good = r**2 * np.exp(-(r**2 + z**2))
    ScalarFieldRZ(grid_base, good, role_tag="gamma")
    bad = np.exp(-(z**2)) * np.ones_like(r)  # constant in r near the axis
    with pytest.raises(ValueError):
        ScalarFieldRZ(grid_base, bad, role_tag="gamma")


def test_nonfinite_rejected(grid_small):
    vals = np.zeros((grid_small.nr, grid_small.nz))
    vals[3, 4] = np.nan
    with pytest.raises(ValueError):
        ScalarFieldRZ(grid_small, vals)


def test_values_immutable(grid_small):
    f = ScalarFieldRZ(grid_small, np.zeros((grid_small.nr, grid_small.nz)))
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0


def test_weighted_quantile():
    vals = np.array([1.0, 2.0, 3.0, 4.0])
    w = np.array([1.0, 1.0, 1.0, 97.0])
    assert weighted_quantile(vals, w, 0.5) == 4.0
    assert weighted_quantile(vals, w, 0.01) == 1.0


def test_orbit_cap_closed_form_value():
    # theta = 0.1: (theta - sin t cos t)/pi = 2.1177e-4
    frac = (0.1 - np.sin(0.1) * np.cos(0.1)) / np.pi
    assert frac == pytest.approx(2.1177e-4, rel=1e-3)
    # the cap fraction at matched geometry reproduces it: r = r0, dz = 0,
    # lam chosen so cos(theta0) matches theta0 = 0.1
    r0 = 2.0
    lam = r0 * np.sqrt(2 * (1 - np.cos(0.1)))
    got = orbit_cap_fraction(np.array([r0]), np.array([0.0]), r0, lam)
    assert got[0] == pytest.approx(frac, rel=1e-12)


def test_orbit_cap_axis_degenerates_to_indicator(grid_small):
    r = np.array([0.1, 0.2, 0.5])
    dz = np.array([0.0, 0.0, 0.0])
    frac = orbit_cap_fraction(r, dz, 0.0, 0.3)
    assert list(frac) == [1.0, 1.0, 0.0]


def test_fd_operators(grid_base):
    r, z = mesh(grid_base)
    even = np.exp(-(r**2)) * np.cos(np.pi * z / grid_base.l_z)
    d_even = -2 * r * np.exp(-(r**2)) * np.cos(np.pi * z / grid_base.l_z)
    got = d_r_fd(even, grid_base, parity=1)
    assert np.max(np.abs(got - d_even)) < 1e-6
    dz_exact = -np.pi / grid_base.l_z * np.exp(-(r**2)) \
        * np.sin(np.pi * z / grid_base.l_z)
    got_z = d_z_fd(even, grid_base)
    assert np.max(np.abs(got_z - dz_exact)) < 1e-8


def test_velocity_grid_mismatch(grid_small, grid_base):
    zeros_s = ScalarFieldRZ(grid_small, np.zeros((grid_small.nr, grid_small.nz)))
    zeros_b = ScalarFieldRZ(grid_base, np.zeros((grid_base.nr, grid_base.nz)))
    with pytest.raises(ValueError):
        VelocityRZ(zeros_s, zeros_s, zeros_b)
