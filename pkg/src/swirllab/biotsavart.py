"""Velocity reconstruction from the weighted vorticity and the lifted 5D field.

The meridional stream function is carried as phi with psi = r^2 phi, so

    u_r = -r d_z phi,      u_z = 2 phi + r d_r phi,

which is identically divergence free in 3D, and the weighted azimuthal
vorticity satisfies omega_theta / r = -Lap5 phi.  Reconstructing velocity
from g therefore reduces to the diagonal solve phi_hat = g_hat / |xi|^2
(there is no zero mode: the smallest radial frequency on the collocation
grid is strictly positive).

The naive lift of (u_r, u_z) to R^5 has divergence (2/r) u_r.  The lifted
field is defined as its 5D Leray projection, computed in closed form in
coefficient space, which is divergence free by construction and coincides
with the naive lift wherever u_r vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import ScalarFieldRZ, VelocityRZ, integrate_mu5_values
from .grid import AxisBall
from .spectral import DyadicPartition, get_plan, shell_projected_vector


@dataclass(frozen=True)
class LiftedVelocity:
    """Two-component equivariant 5D velocity: v_radial * x'/|x'| + v_z * e_z."""

    v_radial: ScalarFieldRZ
    v_z: ScalarFieldRZ
    divfree_residual: float = 0.0
    pre_projection_residual: float = field(default=0.0, repr=False)

    @property
    def grid(self):
        return self.v_radial.grid

    def magnitude(self) -> np.ndarray:
        return np.sqrt(self.v_radial.values**2 + self.v_z.values**2)

    def norm_mu5_sq(self) -> float:
        return integrate_mu5_values(self.v_radial.values**2 + self.v_z.values**2,
                                    self.grid)


def stream_solve(g: ScalarFieldRZ) -> ScalarFieldRZ:
    """Solve -Lap5 phi = g spectrally: phi_hat = g_hat / (rho^2 + zeta^2)."""
    plan = get_plan(g.grid)
    coeffs = plan.scalar_analyze(g.values) / plan.xi**2
    return ScalarFieldRZ(g.grid, plan.scalar_synthesize(coeffs), role_tag="phi")


def velocity_from_phi(phi: ScalarFieldRZ, gamma: ScalarFieldRZ | None = None) -> VelocityRZ:
    """Meridional velocity from the stream scalar, swirl from gamma when given."""
    plan = get_plan(phi.grid)
    r = phi.grid.radial_nodes[:, None]
    a = plan.scalar_analyze(phi.values)
    dphi_z = plan.scalar_synthesize(plan.dz_coeffs(a))
    dphi_r = plan.vector_synthesize(plan.dr_coeffs(a))
    u_r = -r * dphi_z
    u_z = 2.0 * phi.values + r * dphi_r
    if gamma is None:
        u_theta = np.zeros_like(u_r)
    else:
        u_theta = gamma.values / r
    return VelocityRZ(
        u_r=ScalarFieldRZ(phi.grid, u_r),
        u_theta=ScalarFieldRZ(phi.grid, u_theta),
        u_z=ScalarFieldRZ(phi.grid, u_z),
    )


def lift_and_project(vel: VelocityRZ) -> LiftedVelocity:
    """Leray-project the naive lift (v_radial, v_z) = (u_r, u_z) in R^5."""
    plan = get_plan(vel.grid)
    cv = plan.vector_analyze(vel.u_r.values)
    cz = plan.scalar_analyze(vel.u_z.values)
    scale = np.sqrt(integrate_mu5_values(vel.u_r.values**2 + vel.u_z.values**2,
                                         vel.grid))
    div = plan.div_radial_coeffs(cv) + plan.dz_coeffs(cz)
    pre = _div_norm(plan, div, scale)
    # remove grad q with Lap5 q = div:  q_hat = -div_hat / |xi|^2
    q = -div / plan.xi**2
    cv = cv + plan.rho[:, None] * q          # subtract d_r q = -rho q
    cz = cz - plan.dz_coeffs(q)
    post = _div_norm(plan, plan.div_radial_coeffs(cv) + plan.dz_coeffs(cz), scale)
    return LiftedVelocity(
        v_radial=ScalarFieldRZ(vel.grid, plan.vector_synthesize(cv)),
        v_z=ScalarFieldRZ(vel.grid, plan.scalar_synthesize(cz)),
        divfree_residual=post,
        pre_projection_residual=pre,
    )


def _div_norm(plan, div_coeffs, scale) -> float:
    n = np.sqrt(plan.norm_mu5_sq(div_coeffs))
    return float(n / scale) if scale > 0 else 0.0


def lifted_velocity_from_g(g: ScalarFieldRZ) -> LiftedVelocity:
    """Full chain g -> stream solve -> meridional velocity -> Leray lift."""
    return lift_and_project(velocity_from_phi(stream_solve(g)))


def shell_block(U: LiftedVelocity, k: int, partition: DyadicPartition) -> LiftedVelocity:
    """Dyadic block U_k = Delta_k U, componentwise in the matching lanes."""
    plan = get_plan(U.grid)
    vr, vz = shell_projected_vector(U.v_radial.values, U.v_z.values, k, partition, plan)
    return LiftedVelocity(
        v_radial=ScalarFieldRZ(U.grid, vr),
        v_z=ScalarFieldRZ(U.grid, vz),
        divfree_residual=U.divfree_residual,
    )


def velocity_block_bound(U: LiftedVelocity, k: int, lattice: list[AxisBall],
                         partition: DyadicPartition) -> np.ndarray:
    """sup-norm of the dyadic block U_k over each lattice ball.

    The caller compares the outputs with C1 sqrt(delta) 2^{-k/2} for a
    fitted C1; balls with no grid nodes report 0.
    """
    from .fields import ball_mask

    block = shell_block(U, k, partition)
    mag = block.magnitude()
    out = np.zeros(len(lattice))
    for i, ball in enumerate(lattice):
        mask = ball_mask(U.grid, ball)
        if mask.any():
            out[i] = float(np.max(mag[mask]))
    return out
