import numpy as np
import pytest

from swirllab.errors import NumericFault
from swirllab.fields import ScalarFieldRZ
from swirllab.grid import get_grid
from swirllab.solver import SolverConfig, initial_data, make_state, run, step
from swirllab.spectral import get_plan


@pytest.fixture(scope="module")
def solver_grid():
    return get_grid(96, 128, 3.0, 3.0)


def low_mode_state(grid, amplitude=1e-5):
    plan = get_plan(grid)
    C = np.zeros((grid.nr, grid.nz), complex)
    C[2, 3] = amplitude
    C[2, -3] = amplitude
    vals = plan.scalar_synthesize(C)
    gamma = ScalarFieldRZ(grid, np.zeros_like(vals), role_tag="gamma")
    return make_state(gamma, ScalarFieldRZ(grid, vals, role_tag="g")), plan.xi[2, 3] ** 2


def test_zero_state_stays_zero(solver_grid):
    zeros = np.zeros((solver_grid.nr, solver_grid.nz))
    st = make_state(ScalarFieldRZ(solver_grid, zeros, role_tag="gamma"),
                    ScalarFieldRZ(solver_grid, zeros, role_tag="g"))
    out = step(st, 1e-3)
    assert np.all(out.g.values == 0)
    assert np.all(out.gamma.values == 0)


def test_heat_kernel_decay(solver_grid):
    st, xi2 = low_mode_state(solver_grid)
    base = st.g.values.copy()
    for _ in range(10):
        st = step(st, 1e-4)
    exact = base * np.exp(-xi2 * st.time)
    err = np.max(np.abs(st.g.values - exact)) / np.max(np.abs(exact))
    assert err < 1e-4


def test_diagnostics_monotone(solver_grid):
    cfg = SolverConfig(nr=96, nz=128, r_max=3.0, l_z=3.0, dt=2e-4, t_end=0.02,
                       snapshot_every=10, initial="gaussian", amplitude=2.0)
    result = run(cfg)
    assert result.error is None
    energies = [s["energy"] for s in result.log]
    gmax = [s["gamma_max"] for s in result.log]
    assert max(np.diff(energies)) <= 1e-9
    assert max(np.diff(gmax)) <= 1e-6


def test_divergence_residual_at_snapshots(solver_grid):
    from swirllab.solver import velocity

    cfg = SolverConfig(nr=96, nz=128, r_max=3.0, l_z=3.0, dt=2e-4, t_end=4e-3,
                       snapshot_every=5, initial="rings")
    result = run(cfg)
    for st in result.snapshots:
        assert velocity(st).divergence_residual() < 1e-6


def test_vorticity_consistency_at_snapshots(solver_grid):
    from swirllab.fields import d_r_fd, d_z_fd
    from swirllab.solver import velocity

    cfg = SolverConfig(nr=96, nz=128, r_max=3.0, l_z=3.0, dt=2e-4, t_end=4e-3,
                       snapshot_every=10, initial="gaussian", amplitude=2.0)
    result = run(cfg)
    for st in result.snapshots:
        vel = velocity(st)
        grid = st.grid
        omega = (d_z_fd(vel.u_r.values, grid)
                 - d_r_fd(vel.u_z.values, grid, parity=1))
        target = grid.radial_nodes[:, None] * st.g.values
        assert np.linalg.norm(omega - target) / np.linalg.norm(target) < 1e-5


def test_cfl_violation_raises(solver_grid):
    gamma, g = initial_data("gaussian", solver_grid, amplitude=5.0)
    st = make_state(gamma, g)
    with pytest.raises(NumericFault, match="CFL"):
        step(st, 1.0)


def test_time_step_order(solver_grid):
    # halving dt should shrink the T-end difference at better than first order
    gamma, g = initial_data("rings", solver_grid, amplitude=1.5)

    def final(dt, t_end=4e-3):
        st = make_state(gamma, g)
        n = int(round(t_end / dt))
        for _ in range(n):
            st = step(st, dt)
        return st.g.values

    ref = final(5e-5)
    err1 = np.linalg.norm(final(4e-4) - ref)
    err2 = np.linalg.norm(final(2e-4) - ref)
    order = np.log2(err1 / err2)
    assert order >= 1.7


def test_t_end_zero_initial_snapshot_only():
    cfg = SolverConfig(nr=96, nz=128, r_max=3.0, l_z=3.0, t_end=0.0)
    result = run(cfg)
    assert len(result.snapshots) == 1
    assert result.snapshots[0].time == 0.0


def test_initial_data_recipes(solver_grid):
    for recipe in ("gaussian", "rings", "diffuse", "thinring"):
        gamma, g = initial_data(recipe, solver_grid, seed=3)
        assert gamma.role_tag == "gamma"
        assert np.all(np.isfinite(g.values))
    with pytest.raises(ValueError):
        initial_data("vortexsheet", solver_grid)


def test_config_parsing():
    text = """
    # comment
    nr = 96
    nz = 128
    dt = 1e-3
    initial = rings
    """
    cfg = SolverConfig.from_text(text)
    assert cfg.nr == 96 and cfg.initial == "rings" and cfg.dt == 1e-3
    # documented key spellings are accepted alongside the field names
    alias = SolverConfig.from_text("R_max = 5.0\nL_z = 2.0\nT_end = 0.5")
    assert alias.r_max == 5.0 and alias.l_z == 2.0 and alias.t_end == 0.5
    with pytest.raises(ValueError):
        SolverConfig.from_text("unknown_key = 3")
    with pytest.raises(ValueError):
        SolverConfig.from_text("just a line")
