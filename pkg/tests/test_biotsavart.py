import numpy as np
import pytest
from conftest import mesh

from swirllab.biotsavart import (LiftedVelocity, lift_and_project,
                                 lifted_velocity_from_g, shell_block,
                                 stream_solve, velocity_block_bound,
                                 velocity_from_phi)
from swirllab.fields import (ScalarFieldRZ, d_r_fd, d_z_fd,
                             integrate_mu5_values)
from swirllab.fitting import k_lattice, shell_concentrated_field
from swirllab.grid import bessel_collocation, get_grid
from swirllab.spectral import get_plan


def random_g(grid, rng, decay=0.5):
    r, z = mesh(grid)
    vals = np.zeros((grid.nr, grid.nz))
    for _ in range(4):
        r0, z0 = rng.uniform(0.0, 0.8), rng.uniform(-1.0, 1.0)
        s = rng.uniform(0.35, decay)
        a = rng.uniform(-1.0, 1.0)
        vals += a * (np.exp(-((r - r0) ** 2 + (z - z0) ** 2) / (2 * s**2))
                     + np.exp(-((r + r0) ** 2 + (z - z0) ** 2) / (2 * s**2)))
    return ScalarFieldRZ(grid, vals, role_tag="g")


def test_stream_zero(grid_small):
    g = ScalarFieldRZ(grid_small, np.zeros((grid_small.nr, grid_small.nz)))
    phi = stream_solve(g)
    assert np.all(phi.values == 0)


def test_stream_diagonal_mode():
    # pick the domain so a pure mode sits at |xi|^2 = 4 exactly
    jz, _ = bessel_collocation(96)
    grid = get_grid(96, 128, jz[10] / 2.0, 3.0)
    plan = get_plan(grid)
    C = np.zeros((grid.nr, grid.nz), complex)
    C[10, 0] = 1.0
    g = ScalarFieldRZ(grid, plan.scalar_synthesize(C))
    phi = stream_solve(g)
    assert np.max(np.abs(phi.values - g.values / 4.0)) < 1e-12


def test_stream_residual(grid_base, rng):
    g = random_g(grid_base, rng)
    phi = stream_solve(g)
    plan = get_plan(grid_base)
    lap = plan.scalar_synthesize(-plan.xi**2 * plan.scalar_analyze(phi.values))
    res = np.linalg.norm(lap + g.values) / np.linalg.norm(g.values)
    assert res < 1e-8


def test_velocity_zero_phi(grid_small):
    phi = ScalarFieldRZ(grid_small, np.zeros((grid_small.nr, grid_small.nz)))
    vel = velocity_from_phi(phi)
    assert np.all(vel.u_r.values == 0)
    assert np.all(vel.u_z.values == 0)


def test_vorticity_reconstruction_and_divergence(grid_base, rng):
    # omega_theta recomputed from (u_r, u_z) by the FD oracle equals r g,
    # and the 3D divergence residual stays below 1e-6, for 20 random fields
    r = grid_base.radial_nodes[:, None]
    worst_omega = worst_div = 0.0
    for seed in range(20):
        g = random_g(grid_base, np.random.default_rng(300 + seed))
        vel = velocity_from_phi(stream_solve(g))
        omega = (d_z_fd(vel.u_r.values, grid_base)
                 - d_r_fd(vel.u_z.values, grid_base, parity=1))
        worst_omega = max(worst_omega,
                          np.linalg.norm(omega - r * g.values)
                          / np.linalg.norm(r * g.values))
        worst_div = max(worst_div, vel.divergence_residual())
    assert worst_omega < 1e-6
    assert worst_div < 1e-6


def test_lift_zero(grid_small):
    zeros = ScalarFieldRZ(grid_small, np.zeros((grid_small.nr, grid_small.nz)))
    vel = velocity_from_phi(zeros)
    U = lift_and_project(vel)
    assert np.all(U.v_radial.values == 0)
    assert U.divfree_residual == 0.0


def test_leray_pre_and_post_residuals(grid_base, rng):
    g = random_g(grid_base, rng)
    vel = velocity_from_phi(stream_solve(g))
    U = lift_and_project(vel)
    # pre-projection residual oracle: || (2/r) u_r || / ||(u_r, u_z)||
    r = grid_base.radial_nodes[:, None]
    num = integrate_mu5_values((2.0 / r * vel.u_r.values) ** 2, grid_base)
    den = integrate_mu5_values(vel.u_r.values**2 + vel.u_z.values**2, grid_base)
    oracle = np.sqrt(num / den)
    # the oracle evaluates (2/r) u_r pointwise while the lift measures its
    # in-span projection; they agree to collocation accuracy
    assert U.pre_projection_residual == pytest.approx(oracle, rel=1e-3)
    assert U.pre_projection_residual > 0.01
    assert U.divfree_residual < 1e-6


def test_leray_idempotent_and_contractive(grid_base, rng):
    g = random_g(grid_base, rng)
    vel = velocity_from_phi(stream_solve(g))
    U1 = lift_and_project(vel)
    from swirllab.fields import VelocityRZ

    again = VelocityRZ(u_r=U1.v_radial, u_theta=vel.u_theta, u_z=U1.v_z)
    U2 = lift_and_project(again)
    diff = np.sqrt(integrate_mu5_values(
        (U2.v_radial.values - U1.v_radial.values) ** 2
        + (U2.v_z.values - U1.v_z.values) ** 2, grid_base))
    scale = np.sqrt(U1.norm_mu5_sq())
    assert diff < 1e-10 * scale
    naive = integrate_mu5_values(vel.u_r.values**2 + vel.u_z.values**2, grid_base)
    assert U1.norm_mu5_sq() <= naive * (1 + 1e-12)


def test_block_bound_zero_and_linearity(grid_base, partition):
    zeros = ScalarFieldRZ(grid_base, np.zeros((grid_base.nr, grid_base.nz)))
    U0 = LiftedVelocity(v_radial=zeros, v_z=zeros)
    lattice = k_lattice(grid_base, 2)
    assert np.all(velocity_block_bound(U0, 2, lattice, partition) == 0)
    f = shell_concentrated_field(grid_base, partition, 2)
    U = lifted_velocity_from_g(f)
    f2 = ScalarFieldRZ(grid_base, 2.0 * f.values, role_tag="g")
    U2 = lifted_velocity_from_g(f2)
    b1 = velocity_block_bound(U, 2, lattice, partition)
    b2 = velocity_block_bound(U2, 2, lattice, partition)
    assert np.allclose(b2, 2.0 * b1, rtol=1e-9, atol=1e-300)


def test_block_scaling_bounded_by_order_minus_one(grid_base, partition):
    # normalized block sups across one shell must not decay slower than
    # the 2^{-1/2} the order -1 bound allows (the realized lift is faster)
    from swirllab.extraction import delta_sup

    vals = {}
    for k in (1, 2):
        f = shell_concentrated_field(grid_base, partition, k, width=0.5 * 2.0**-k)
        d = delta_sup(f, [k]).delta
        U = lifted_velocity_from_g(f)
        vals[k] = float(np.max(shell_block(U, k, partition).magnitude())) / np.sqrt(d)
    assert vals[2] / vals[1] <= 2.0**-0.5 * 1.2


def test_block_lattice_decay(grid_base, partition):
    from swirllab.fields import ball_mask
    from swirllab.fitting import decay_exponent

    k = 3
    f = shell_concentrated_field(grid_base, partition, k)
    U = lifted_velocity_from_g(f)
    mag = shell_block(U, k, partition).magnitude()
    sups, dists = [], []
    for b in k_lattice(grid_base, k):
        m = ball_mask(grid_base, b)
        if m.any():
            sups.append(float(np.max(mag[m])))
            dists.append(abs(b.z0) * 2.0**k)
    assert decay_exponent(np.array(dists), np.array(sups)) >= 4.0
