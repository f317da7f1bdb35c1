"""Desk-scale axisymmetric evolution in circulation / weighted-vorticity form.

State variables are Gamma = r u_theta and g = omega_theta / r with unit
viscosity.  The swirl is carried internally as u_theta = Gamma / r, whose
linear operator d_rr + d_r/r - 1/r^2 + d_zz is diagonal in the plain J1
collocation lane, while g diffuses under the five-dimensional Laplacian,
diagonal in the scalar lane.  Time stepping is an integrating-factor Heun
scheme: diffusion is integrated exactly, advection and the swirl source
r^{-4} d_z(Gamma^2) = r^{-2} d_z(u_theta^2) go through explicit RK2.

Boundary conditions: both variables regular at the axis (Gamma ~ r^2),
Dirichlet at r_max, periodic in z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .biotsavart import stream_solve, velocity_from_phi
from .errors import NumericFault
from .fields import ScalarFieldRZ, VelocityRZ, integrate_mu5_values
from .grid import HalfPlaneGrid, get_grid
from .spectral import get_plan

CFL_LIMIT = 0.5


@dataclass(frozen=True)
class FlowState:
    gamma: ScalarFieldRZ
    g: ScalarFieldRZ
    time: float
    nu: float = 1.0
    energy: float = 0.0
    dissipation: float = 0.0
    gamma_max: float = 0.0

    @property
    def grid(self):
        return self.g.grid


def make_state(gamma: ScalarFieldRZ, g: ScalarFieldRZ, time: float = 0.0) -> FlowState:
    state = FlowState(gamma=gamma, g=g, time=time)
    energy, dissipation = diagnostics(state)
    return replace(state, energy=energy, dissipation=dissipation,
                   gamma_max=float(np.max(np.abs(gamma.values))))


def velocity(state: FlowState) -> VelocityRZ:
    return velocity_from_phi(stream_solve(state.g), gamma=state.gamma)


def diagnostics(state: FlowState) -> tuple[float, float]:
    """Kinetic energy and enstrophy-based dissipation rate (3D measures)."""
    grid = state.grid
    vel = velocity(state)
    plan = get_plan(grid)
    w1 = grid.weights(1)[:, None] * grid.dz
    energy = float(np.pi * np.sum(
        (vel.u_r.values**2 + vel.u_theta.values**2 + vel.u_z.values**2) * w1))
    r = grid.radial_nodes[:, None]
    cu = plan.swirl_analyze(vel.u_theta.values)
    om_r = -plan.swirl_synthesize(plan.dz_coeffs(cu))
    om_z = plan.swirl_dr(cu) + vel.u_theta.values / r
    om_t = r * state.g.values
    dissipation = float(2.0 * np.pi * state.nu * np.sum(
        (om_r**2 + om_t**2 + om_z**2) * w1))
    return energy, dissipation


def _rhs(grid: HalfPlaneGrid, a_sw: np.ndarray, c_g: np.ndarray):
    """Nonlinear tendencies in lane-coefficient space.

    a_sw: swirl-lane coefficients of u_theta; c_g: scalar-lane coefficients
    of g.  Returns (da, dc, max_speed).
    """
    plan = get_plan(grid)
    r = grid.radial_nodes[:, None]
    u_theta = plan.swirl_synthesize(a_sw)
    g_vals = plan.scalar_synthesize(c_g)
    phi = c_g / plan.xi**2
    dphi_z = plan.scalar_synthesize(plan.dz_coeffs(phi))
    dphi_r = plan.vector_synthesize(plan.dr_coeffs(phi))
    u_r = -r * dphi_z
    u_z = 2.0 * plan.scalar_synthesize(phi) + r * dphi_r
    du_t_r = plan.swirl_dr(a_sw)
    du_t_z = plan.swirl_synthesize(plan.dz_coeffs(a_sw))
    dg_r = plan.vector_synthesize(plan.dr_coeffs(c_g))
    dg_z = plan.scalar_synthesize(plan.dz_coeffs(c_g))
    n_theta = -(u_r * du_t_r + u_z * du_t_z + u_r * u_theta / r)
    swirl_sq = plan.scalar_analyze(u_theta**2)
    source = plan.scalar_synthesize(plan.dz_coeffs(swirl_sq)) / r**2
    n_g = -(u_r * dg_r + u_z * dg_z) + source
    speed = float(np.max(np.sqrt(u_r**2 + u_theta**2 + u_z**2)))
    return plan.swirl_analyze(n_theta), plan.scalar_analyze(n_g), speed


def step(state: FlowState, dt: float) -> FlowState:
    """One integrating-factor Heun step.

    Precondition: advective CFL max|u| dt <= 0.5 min cell; diffusion is
    exact so it imposes no constraint.
    """
    grid = state.grid
    plan = get_plan(grid)
    r = grid.radial_nodes[:, None]
    a = plan.swirl_analyze(state.gamma.values / r)
    c = plan.scalar_analyze(state.g.values)
    na, nc, speed = _rhs(grid, a, c)
    if speed * dt > CFL_LIMIT * grid.min_cell * (1.0 + 1e-9):
        raise NumericFault(
            f"CFL violation: max|u| dt = {speed * dt:.3g} > "
            f"{CFL_LIMIT} * min cell = {CFL_LIMIT * grid.min_cell:.3g}")
    efac = np.exp(-plan.xi**2 * state.nu * dt)
    a1 = efac * (a + dt * na)
    c1 = efac * (c + dt * nc)
    na1, nc1, _ = _rhs(grid, a1, c1)
    a_new = efac * a + 0.5 * dt * (efac * na + na1)
    c_new = efac * c + 0.5 * dt * (efac * nc + nc1)
    gamma_vals = r * plan.swirl_synthesize(a_new)
    g_vals = plan.scalar_synthesize(c_new)
    if not (np.all(np.isfinite(gamma_vals)) and np.all(np.isfinite(g_vals))):
        raise NumericFault(f"non-finite state at t = {state.time + dt:.6g}")
    out = FlowState(
        gamma=ScalarFieldRZ(grid, gamma_vals, role_tag="gamma"),
        g=ScalarFieldRZ(grid, g_vals, role_tag="g"),
        time=state.time + dt, nu=state.nu)
    energy, dissipation = diagnostics(out)
    return replace(out, energy=energy, dissipation=dissipation,
                   gamma_max=float(np.max(np.abs(gamma_vals))))


# ---------------------------------------------------------------------------
# initial data library
# ---------------------------------------------------------------------------


def initial_data(recipe: str, grid: HalfPlaneGrid, seed: int = 0,
                 **kw) -> tuple[ScalarFieldRZ, ScalarFieldRZ]:
    r = grid.radial_nodes[:, None]
    z = grid.z_nodes[None, :]
    amp = kw.get("amplitude", 1.0)
    if recipe == "gaussian":
        sigma = kw.get("sigma", 0.2 * grid.r_max)
        env = np.exp(-(r**2 + z**2) / (2 * sigma**2))
        gamma = amp * r**2 * env
        g = 0.5 * amp * env
    elif recipe == "rings":
        rc = kw.get("ring_radius", 0.35 * grid.r_max)
        zs = kw.get("separation", 0.3 * grid.l_z)
        sigma = kw.get("sigma", 0.12 * grid.r_max)
        lobe = lambda rr, zz: np.exp(-((r - rr) ** 2 + (z - zz) ** 2) / (2 * sigma**2)) \
            + np.exp(-((r + rr) ** 2 + (z - zz) ** 2) / (2 * sigma**2))
        g = amp * (lobe(rc, -zs) - lobe(rc, zs))
        gamma = np.zeros_like(g)
    elif recipe == "diffuse":
        from .fitting import diffuse_field
        from .spectral import DyadicPartition

        shells = int(kw.get("shells", 4))
        k_min = int(kw.get("k_min", 1))
        part = DyadicPartition(k_min - 1, k_min + shells)
        ks = range(k_min, k_min + shells)
        f = diffuse_field(grid, part, ks, seed,
                          tube_width=kw.get("tube_width", 1.5 * 2.0**-k_min),
                          z_window=grid.l_z / 2.0)
        g = amp * f.values / max(np.max(np.abs(f.values)), 1e-300)
        gamma = np.zeros_like(g)
    elif recipe == "thinring":
        ratio = kw.get("ratio", 0.05)
        rc = kw.get("ring_radius", 0.6 * grid.r_max)
        width = max(ratio * rc, 2.5 * grid.dr_max, 2.5 * grid.dz)
        g = amp * np.exp(-((r - rc) ** 2 + z**2) / (2 * width**2))
        gamma = np.zeros_like(g)
    else:
        raise ValueError(f"unknown initial-data recipe {recipe!r}")
    return (ScalarFieldRZ(grid, gamma, role_tag="gamma"),
            ScalarFieldRZ(grid, g, role_tag="g"))


# ---------------------------------------------------------------------------
# run driver
# ---------------------------------------------------------------------------


@dataclass
class SolverConfig:
    nr: int = 96
    nz: int = 128
    r_max: float = 4.0
    l_z: float = 4.0
    dt: float = 1e-3
    t_end: float = 0.05
    snapshot_every: int = 10
    initial: str = "gaussian"
    seed: int = 0
    amplitude: float = 1.0
    ratio: float = 0.05
    shells: int = 4

    _KEY_ALIASES = {"R_max": "r_max", "L_z": "l_z", "T_end": "t_end"}

    @classmethod
    def from_text(cls, text: str) -> "SolverConfig":
        """Parse a key = value config; '#' starts a comment."""
        kw = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = cls._KEY_ALIASES.get(key, key)
            if key not in cls.__dataclass_fields__:
                raise ValueError(f"config line {lineno}: unknown key {key!r}")
            typ = cls.__dataclass_fields__[key].type
            if typ == "int":
                kw[key] = int(val)
            elif typ == "float":
                kw[key] = float(val)
            else:
                kw[key] = val
        return cls(**kw)


@dataclass
class RunResult:
    snapshots: list[FlowState]
    log: list[dict]
    error: str | None = None


def run(config: SolverConfig, on_snapshot=None) -> RunResult:
    """Evolve from the configured initial data, collecting snapshots.

    on_snapshot(state) is invoked at every recorded snapshot; a NumericFault
    mid-run truncates the series and is recorded in the result, not raised.
    """
    grid = get_grid(config.nr, config.nz, config.r_max, config.l_z)
    gamma, g = initial_data(config.initial, grid, seed=config.seed,
                            amplitude=config.amplitude, ratio=config.ratio,
                            shells=config.shells)
    state = make_state(gamma, g)
    snapshots = [state]
    log = [_log_entry(state)]
    if on_snapshot:
        on_snapshot(state)
    n_steps = int(math.ceil(config.t_end / config.dt - 1e-12)) if config.t_end > 0 else 0
    error = None
    for n in range(1, n_steps + 1):
        try:
            state = step(state, config.dt)
        except NumericFault as exc:
            error = str(exc)
            break
        if n % config.snapshot_every == 0 or n == n_steps:
            snapshots.append(state)
            log.append(_log_entry(state))
            if on_snapshot:
                on_snapshot(state)
    return RunResult(snapshots=snapshots, log=log, error=error)


def _log_entry(state: FlowState) -> dict:
    return {"time": state.time, "energy": state.energy,
            "dissipation": state.dissipation, "gamma_max": state.gamma_max,
            "g_mass": integrate_mu5_values(state.g.values**2, state.grid)}
