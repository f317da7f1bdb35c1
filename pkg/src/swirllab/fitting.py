"""Synthetic field generators, localized-bound measurements, constant fitting.

The scaling lemmas leave their constants existential; this module measures
them.  Calibration runs a few diffuse fields through every localized bound,
records the worst ratio, and freezes the constants (with a safety margin)
for the rest of the run.  Decay exponents of the lattice-localized operator
norms are fitted on log-log profiles produced by concentrated sources.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .biotsavart import LiftedVelocity, lifted_velocity_from_g, shell_block
from .extraction import delta_sup
from .fields import ScalarFieldRZ, ball_mask
from .grid import AxisBall, HalfPlaneGrid
from .packets import centered_window
from .spectral import DyadicPartition, get_plan

# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def bump_field(grid: HalfPlaneGrid, r0: float, z0: float, sigma_r: float,
               sigma_z: float, amplitude: float = 1.0,
               role_tag: str = "g") -> ScalarFieldRZ:
    """Even-in-r Gaussian bump: smooth SO(4)-radial data."""
    r = grid.radial_nodes[:, None]
    z = grid.z_nodes[None, :]
    vals = amplitude * (np.exp(-((r - r0) ** 2) / (2 * sigma_r**2))
                        + np.exp(-((r + r0) ** 2) / (2 * sigma_r**2))) \
        * np.exp(-((z - z0) ** 2) / (2 * sigma_z**2))
    return ScalarFieldRZ(grid, vals, role_tag=role_tag)


def random_band_field(grid: HalfPlaneGrid, partition: DyadicPartition,
                      ks, seed: int, amplitude: float = 1.0,
                      envelope=None) -> ScalarFieldRZ:
    """White noise filtered onto the given shells, optionally enveloped.

    The envelope is applied in physical space and the shell filter repeated
    once, so the output is band limited to the requested shells while
    carrying the envelope's spatial localization.
    """
    rng = np.random.default_rng(seed)
    plan = get_plan(grid)
    sym = np.zeros_like(plan.xi)
    for k in ks:
        partition.require_k(k)
        sym += partition.psi(k, plan.xi)
    noise = rng.standard_normal((grid.nr, grid.nz))
    vals = plan.scalar_synthesize(plan.scalar_analyze(noise) * sym)
    if envelope is not None:
        vals = vals * envelope
        vals = plan.scalar_synthesize(plan.scalar_analyze(vals) * sym)
    peak = np.max(np.abs(vals))
    if peak > 0:
        vals = vals * (amplitude / peak)
    return ScalarFieldRZ(grid, vals, role_tag="g")


def axis_tube_envelope(grid: HalfPlaneGrid, tube_width: float,
                       z_window: float) -> np.ndarray:
    r = grid.radial_nodes[:, None]
    z = grid.z_nodes[None, :]
    return np.exp(-((r / tube_width) ** 2)) * np.exp(-((z / z_window) ** 8))


def diffuse_field(grid: HalfPlaneGrid, partition: DyadicPartition, ks,
                  seed: int, tube_width: float, z_window: float,
                  target_delta: float | None = None) -> ScalarFieldRZ:
    """Equidistributed multi-shell noise in an axis tube.

    When target_delta is given the amplitude is rescaled so the measured
    diffuseness equals it exactly (delta is quadratic in the amplitude).
    """
    f = random_band_field(grid, partition, ks, seed,
                          envelope=axis_tube_envelope(grid, tube_width, z_window))
    if target_delta is not None:
        measured = delta_sup(f, ks).delta
        if measured <= 0:
            raise ValueError("generated field carries no mass on the range")
        f = ScalarFieldRZ(grid, f.values * np.sqrt(target_delta / measured),
                          role_tag="g")
    return f


def shell_concentrated_field(grid: HalfPlaneGrid, partition: DyadicPartition,
                             k: int, z0: float = 0.0,
                             width: float | None = None) -> ScalarFieldRZ:
    """A single-shell field concentrated near one axis ball."""
    lam = 2.0**-k
    if width is None:
        width = max(3.0 * grid.dr_max, lam / 2.0)
    bump = bump_field(grid, 0.0, z0, width, width)
    plan = get_plan(grid)
    vals = plan.scalar_synthesize(plan.scalar_analyze(bump.values)
                                  * partition.psi(k, plan.xi))
    return ScalarFieldRZ(grid, vals, role_tag="g")


def k_lattice(grid: HalfPlaneGrid, k: int, z_window: float | None = None) -> list[AxisBall]:
    """Axis balls of radius 2^-k on the z lattice i 2^-k, fully inside the domain."""
    lam = 2.0**-k
    span = (z_window if z_window is not None else grid.l_z) - lam
    n_side = int(np.floor(span / lam))
    return [AxisBall(i * lam, lam) for i in range(-n_side, n_side + 1)]


# ---------------------------------------------------------------------------
# localized-bound measurements
# ---------------------------------------------------------------------------


def ball_l2_norms(values: np.ndarray, grid: HalfPlaneGrid,
                  balls: list[AxisBall]) -> np.ndarray:
    w2d = grid.quadrature_weights_r[:, None] * grid.dz
    out = np.zeros(len(balls))
    sq = values**2 * w2d
    for i, b in enumerate(balls):
        out[i] = np.sqrt(np.sum(sq[ball_mask(grid, b)]))
    return out


def ball_sup_norms(values: np.ndarray, grid: HalfPlaneGrid,
                   balls: list[AxisBall]) -> np.ndarray:
    out = np.zeros(len(balls))
    mag = np.abs(values)
    for i, b in enumerate(balls):
        mask = ball_mask(grid, b)
        if mask.any():
            out[i] = np.max(mag[mask])
    return out


def lsq_constant(lhs: np.ndarray, rhs: np.ndarray) -> float:
    """Least-squares fit of C in lhs ~ C * rhs over all samples."""
    lhs = np.asarray(lhs, float)
    rhs = np.asarray(rhs, float)
    denom = float(np.sum(rhs**2))
    if denom <= 0:
        raise ValueError("predictor side is identically zero")
    return float(np.sum(lhs * rhs) / denom)


def local_mass_constant(g: ScalarFieldRZ, partition: DyadicPartition, ks,
                        delta: float | None = None) -> tuple[float, float]:
    """C0 in ||1_B Delta_k g|| <= C0 sqrt(delta) 2^{-2k} over lattice balls.

    Returns (least-squares fit on the per-ball ratios, enclosing max ratio);
    the ratio form weights every (k, ball) sample equally.
    """
    from .spectral import shell_project

    if delta is None:
        delta = delta_sup(g, ks).delta
    ratios = []
    for k in ks:
        shell = shell_project(g, k, partition)
        norms = ball_l2_norms(shell.values, g.grid, k_lattice(g.grid, k))
        ratios.append(norms / (np.sqrt(delta) * 4.0**-k))
    ratios = np.concatenate(ratios)
    return float(np.mean(ratios)), float(np.max(ratios))


def velocity_block_constant(g: ScalarFieldRZ, U: LiftedVelocity,
                            partition: DyadicPartition, ks,
                            delta: float | None = None) -> tuple[float, float]:
    """C1 in ||1_B U_k||_inf <= C1 sqrt(delta) 2^{-k/2}.

    Returns (least-squares fit on the per-ball ratios, enclosing max ratio).
    """
    if delta is None:
        delta = delta_sup(g, ks).delta
    ratios = []
    for k in ks:
        block = shell_block(U, k, partition)
        sups = ball_sup_norms(block.magnitude(), g.grid, k_lattice(g.grid, k))
        ratios.append(sups / (np.sqrt(delta) * 2.0 ** (-k / 2.0)))
    ratios = np.concatenate(ratios)
    return float(np.mean(ratios)), float(np.max(ratios))


def projector_product_profile(U_j: LiftedVelocity, g_tilde: ScalarFieldRZ,
                              k: int, partition: DyadicPartition,
                              balls: list[AxisBall], near: int = 2):
    """Left and right sides of the localized projector-on-product bound.

    lhs_i = ||1_{B_i} Delta_k(U_j Gt_j)||, rhs_i = max over lattice balls m
    within `near` of i of ||1_{B_m^*} U_j||_inf ||1_{B_m^*} Gt_j||.
    """
    from .spectral import shell_projected_vector

    grid = g_tilde.grid
    plan = get_plan(grid)
    pr, pz = shell_projected_vector(U_j.v_radial.values * g_tilde.values,
                                    U_j.v_z.values * g_tilde.values,
                                    k, partition, plan)
    prod_norms = np.sqrt(ball_l2_norms(pr, grid, balls) ** 2
                         + ball_l2_norms(pz, grid, balls) ** 2)
    star = [AxisBall(b.z0, 3 * b.lam) for b in balls]
    u_sup = ball_sup_norms(U_j.magnitude(), grid, star)
    g_l2 = ball_l2_norms(g_tilde.values, grid, star)
    rhs = np.zeros(len(balls))
    for i in range(len(balls)):
        lo, hi = max(0, i - near), min(len(balls), i + near + 1)
        rhs[i] = np.max(u_sup[lo:hi] * g_l2[lo:hi])
    return prod_norms, rhs


def transport_product_profile(a: LiftedVelocity, b: ScalarFieldRZ, k: int,
                              partition: DyadicPartition,
                              balls: list[AxisBall], near: int = 2):
    """Localized LH/HL control: ||1_B Delta_k(a . grad5 b)|| vs sup x grad."""
    grid = b.grid
    plan = get_plan(grid)
    cb = plan.scalar_analyze(b.values)
    br = plan.vector_synthesize(plan.dr_coeffs(cb))
    bz = plan.scalar_synthesize(plan.dz_coeffs(cb))
    transport = a.v_radial.values * br + a.v_z.values * bz
    tk = plan.scalar_synthesize(plan.scalar_analyze(transport)
                                * partition.psi(k, plan.xi))
    lhs = ball_l2_norms(tk, grid, balls)
    star = [AxisBall(b0.z0, 3 * b0.lam) for b0 in balls]
    a_sup = ball_sup_norms(a.magnitude(), grid, star)
    grad_l2 = np.sqrt(ball_l2_norms(br, grid, star) ** 2
                      + ball_l2_norms(bz, grid, star) ** 2)
    rhs = np.zeros(len(balls))
    for i in range(len(balls)):
        lo, hi = max(0, i - near), min(len(balls), i + near + 1)
        rhs[i] = np.max(a_sup[lo:hi] * grad_l2[lo:hi])
    return lhs, rhs


def decay_exponent(dists: np.ndarray, vals: np.ndarray,
                   floor_ratio: float = 1e-9) -> float:
    """Log-log slope of vals against 1 + dist on the decaying window."""
    dists = np.asarray(dists, float)
    vals = np.asarray(vals, float)
    peak = np.max(vals)
    keep = (vals > floor_ratio * peak) & (dists >= 1)
    if np.count_nonzero(keep) < 3:
        raise ValueError("not enough decaying samples for an exponent fit")
    x = np.log1p(dists[keep])
    y = np.log(vals[keep])
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope)


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------


@dataclass
class FittedConstants:
    c_local_mass: float
    c_velocity_block: float
    c_projector_product: float
    c_transport_product: float
    c_audit: float
    seed: int
    n_fields: int

    def to_json(self) -> dict:
        return asdict(self)


def product_profiles_all_shells(g: ScalarFieldRZ, U: LiftedVelocity,
                                partition: DyadicPartition, ks,
                                z_window: float | None = None):
    """Aggregated (lhs, rhs) samples of both localized product bounds."""
    from .spectral import shell_project

    grid = g.grid
    proj_l, proj_r, tr_l, tr_r = [], [], [], []
    for k in ks:
        balls = k_lattice(grid, k, z_window)
        U_k = shell_block(U, k, partition)
        gt_vals = sum(shell_project(g, m, partition).values
                      for m in (k - 1, k, k + 1) if m in partition.ks)
        gt = ScalarFieldRZ(grid, gt_vals)
        l1, r1 = projector_product_profile(U_k, gt, k, partition, balls)
        proj_l.append(l1)
        proj_r.append(r1)
        l2, r2 = transport_product_profile(U_k, g, k, partition, balls)
        tr_l.append(l2)
        tr_r.append(r2)
    return (np.concatenate(proj_l), np.concatenate(proj_r),
            np.concatenate(tr_l), np.concatenate(tr_r))


def calibrate_constants(grid: HalfPlaneGrid, partition: DyadicPartition, ks,
                        seed: int = 1234, n_fields: int = 3,
                        n0: int = 8, margin: float = 1.5,
                        audit_margin: float = 3.0) -> FittedConstants:
    """Freeze run constants from diffuse calibration fields.

    Scaling constants are least-squares fits (worst field taken, times a
    margin); c_audit solves the audited inequality for the smallest
    admissible constant on each calibration field and keeps the worst with
    a larger margin, since the interaction total is cancellation dominated.
    """
    from .paraproduct import decompose_nonlinearity, psi_factors

    ks = sorted(ks)
    tube = 1.2 * 2.0 ** -min(ks)
    zwin = grid.l_z / 2.0
    c0s, c1s, cps, cts, cas = [], [], [], [], []
    for n in range(n_fields):
        g = diffuse_field(grid, partition, ks, seed + 17 * n, tube, zwin)
        rep = delta_sup(g, ks)
        U = lifted_velocity_from_g(g)
        c0s.append(local_mass_constant(g, partition, ks, rep.delta)[1])
        c1s.append(velocity_block_constant(g, U, partition, ks, rep.delta)[1])
        pl, pr_, tl, tr_ = product_profiles_all_shells(g, U, partition, ks,
                                                       zwin + 0.5)
        cps.append(lsq_constant(pl, pr_))
        cts.append(lsq_constant(tl, tr_))
        cover = {k: centered_window(0.0, k, n0) for k in ks}
        pr = decompose_nonlinearity(g, U, ks, cover, partition,
                                    fitted_c=1.0, n0=n0, delta_report=rep)
        psi1, _, _ = psi_factors(rep.delta, rep.j_min, n0, 1.0)
        denom = psi1 * pr.D_crit + pr.R_low
        cas.append(abs(pr.N_total) / denom if denom > 0 else 0.0)
    return FittedConstants(
        c_local_mass=margin * max(c0s),
        c_velocity_block=margin * max(c1s),
        c_projector_product=margin * max(cps),
        c_transport_product=margin * max(cts),
        c_audit=audit_margin * max(max(cas), 1e-6),
        seed=seed, n_fields=n_fields,
    )
