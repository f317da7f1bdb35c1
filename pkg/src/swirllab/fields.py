"""Scalar and velocity fields on the half-plane grid, and lifted-measure integrals.

The lifted measure is d(mu5) = r^3 dr dz; integrate_mu5 returns plain
weighted sums without the 2 pi^2 sphere factor, while lifted_l2_norm_sq
includes it so that it equals the squared L2 norm of the SO(4)-radial lift
on R^5.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import OutsideDomainError
from .grid import AxisBall, HalfPlaneGrid, fd_weights

SPHERE3_AREA = 2.0 * np.pi**2  # surface measure of the unit 3-sphere

ROLE_TAGS = ("gamma", "g", "phi", "shell", "generic")


@dataclass(frozen=True)
class ScalarFieldRZ:
    """An SO(4)-radial scalar sampled on a half-plane grid.

    role_tag 'gamma' marks the swirl circulation r * u_theta, which must
    vanish like r^2 at the axis; construction rejects grossly irregular
    axis behaviour for that role.
    """

    grid: HalfPlaneGrid
    values: np.ndarray = field(repr=False)
    role_tag: str = "generic"

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=float)
        if vals.shape != (self.grid.nr, self.grid.nz):
            raise ValueError(f"values shape {vals.shape} != grid ({self.grid.nr}, {self.grid.nz})")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        if self.role_tag not in ROLE_TAGS:
            raise ValueError(f"unknown role_tag {self.role_tag!r}")
        if self.role_tag == "gamma":
            _check_gamma_axis(self.grid, vals)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def with_values(self, values, role_tag=None):
        return replace(self, values=values, role_tag=role_tag or self.role_tag)

    def axis_values(self) -> np.ndarray:
        """Extrapolated values at r = 0 per role parity.

        gamma and vector-type fields vanish at the axis; even fields use a
        quadratic fit a + b r^2 through the two innermost node rings.
        """
        if self.role_tag == "gamma":
            return np.zeros(self.grid.nz)
        r = self.grid.radial_nodes
        f1, f2 = self.values[0], self.values[1]
        return (f1 * r[1] ** 2 - f2 * r[0] ** 2) / (r[1] ** 2 - r[0] ** 2)


def _check_gamma_axis(grid, vals):
    r = grid.radial_nodes
    scale = np.max(np.abs(vals))
    if scale == 0.0:
        return
    # Gamma ~ r^2: the quadratic-normalized magnitude |Gamma|/r^2 must not
    # blow up toward the axis; only gross violations are rejected.
    q_inner = np.max(np.abs(vals[0])) / r[0] ** 2
    q_ref = np.max(np.abs(vals[2])) / r[2] ** 2 + 1e-9 * scale / r[2] ** 2
    if q_inner > 5.0 * q_ref:
        raise ValueError("gamma field does not vanish like r^2 at the axis")


@dataclass(frozen=True)
class VelocityRZ:
    """Axisymmetric velocity components on a shared grid."""

    u_r: ScalarFieldRZ
    u_theta: ScalarFieldRZ
    u_z: ScalarFieldRZ

    def __post_init__(self):
        if not (self.u_r.grid == self.u_theta.grid == self.u_z.grid):
            raise ValueError("velocity components must share a grid")

    @property
    def grid(self):
        return self.u_r.grid

    def divergence_residual(self) -> float:
        """Relative L2(mu5) residual of (1/r) d_r(r u_r) + d_z u_z.

        Uses the finite-difference oracle, independent of the spectral path.
        """
        g = self.grid
        div = (d_r_fd(self.u_r.values, g, parity=-1)
               + self.u_r.values / g.radial_nodes[:, None]
               + d_z_fd(self.u_z.values, g))
        scale = np.sqrt(integrate_mu5_values(self.u_r.values**2 + self.u_z.values**2, g))
        if scale == 0.0:
            return 0.0
        return float(np.sqrt(integrate_mu5_values(div**2, g)) / scale)


# ---------------------------------------------------------------------------
# lifted-measure integrals
# ---------------------------------------------------------------------------


def ball_mask(grid: HalfPlaneGrid, ball: AxisBall) -> np.ndarray:
    """Node-indicator mask of an axis ball.  z is treated as unwrapped.

    Raises OutsideDomainError when the ball's z interval misses the domain
    entirely (a mis-centered scan should fail loudly, not integrate zero).
    """
    if ball.z0 + ball.lam < -grid.l_z or ball.z0 - ball.lam > grid.l_z:
        raise OutsideDomainError(
            f"ball (z0={ball.z0}, lam={ball.lam}) lies outside |z| <= {grid.l_z}")
    dznodes = grid.z_nodes - ball.z0
    return (grid.radial_nodes[:, None] ** 2 + dznodes[None, :] ** 2) <= ball.lam**2


def integrate_mu5_values(values: np.ndarray, grid: HalfPlaneGrid,
                         region: AxisBall | None = None) -> float:
    w = grid.quadrature_weights_r[:, None] * grid.dz
    if region is None:
        return float(np.sum(values * w))
    mask = ball_mask(grid, region)
    return float(np.sum(values[mask] * np.broadcast_to(w, values.shape)[mask]))


def integrate_mu5(f: ScalarFieldRZ, region: AxisBall | None = None) -> float:
    """Integral of f against r^3 dr dz over the whole domain or an axis ball."""
    return integrate_mu5_values(f.values, f.grid, region)


def lifted_l2_norm_sq(f: ScalarFieldRZ) -> float:
    """Squared L2(R^5) norm of the SO(4)-radial lift: 2 pi^2 int |f|^2 dmu5."""
    return SPHERE3_AREA * integrate_mu5_values(f.values**2, f.grid)


def mu5_norm_sq(values: np.ndarray, grid: HalfPlaneGrid) -> float:
    return integrate_mu5_values(np.abs(values) ** 2, grid)


def weighted_quantile(values: np.ndarray, weights: np.ndarray, q: float) -> float:
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(weights[order])
    if cum[-1] <= 0:
        return 0.0
    cut = np.searchsorted(cum / cum[-1], q, side="left")
    return float(values[order[min(cut, len(order) - 1)]])


# ---------------------------------------------------------------------------
# orbit-cap geometry: mass captured by one 5D ball centered on an SO(4) orbit
# ---------------------------------------------------------------------------


def orbit_cap_fraction(r: np.ndarray, dz: np.ndarray, r0: float, lam: float) -> np.ndarray:
    """Fraction of the S^3 orbit through (r, z) inside B_lam^{5D}(X0).

    X0 sits at radius r0 on its own orbit; dz is z - z0.  For a point at
    radius r the 5D distance to X0 at orbit angle theta satisfies
    |X - X0|^2 = r^2 + r0^2 - 2 r r0 cos(theta) + dz^2, so the admissible
    angles form a cap whose normalized S^3 measure is
    (theta0 - sin(theta0) cos(theta0)) / pi.
    """
    r = np.asarray(r, float)
    dz = np.asarray(dz, float)
    if r0 <= 0.0:
        return ((r**2 + dz**2) <= lam**2).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (r**2 + r0**2 + dz**2 - lam**2) / (2.0 * r * r0)
    theta0 = np.arccos(np.clip(c, -1.0, 1.0))
    return (theta0 - np.sin(theta0) * np.cos(theta0)) / np.pi


def captured_mass(density: np.ndarray, grid: HalfPlaneGrid,
                  center: tuple[float, float], lam: float,
                  cells: tuple[np.ndarray, np.ndarray] | None = None) -> float:
    """mu5-mass of `density` inside one 5D ball centered on the orbit of center.

    `density` is already the nonnegative integrand (e.g. |G|^2).  When
    `cells` is given only those nodes contribute (packet-restricted mass).
    """
    r0, z0 = center
    w = grid.quadrature_weights_r[:, None] * grid.dz
    if cells is None:
        frac = orbit_cap_fraction(grid.radial_nodes[:, None],
                                  grid.z_nodes[None, :] - z0, r0, lam)
        return float(np.sum(density * w * frac))
    ii, jj = cells
    frac = orbit_cap_fraction(grid.radial_nodes[ii], grid.z_nodes[jj] - z0, r0, lam)
    return float(np.sum(density[ii, jj] * grid.quadrature_weights_r[ii] * grid.dz * frac))


# ---------------------------------------------------------------------------
# finite-difference oracle operators (independent of the spectral module)
# ---------------------------------------------------------------------------

_FD_CACHE: dict[tuple, np.ndarray] = {}
_DZ_STENCIL = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0


def _radial_fd_matrix(grid: HalfPlaneGrid, parity: int) -> np.ndarray:
    """Dense d/dr matrix, order 6, with parity extension across the axis.

    parity +1: f(-r) = f(r) (even scalars); parity -1: f(-r) = -f(r)
    (vector-radial components and u_theta).
    """
    key = (grid.key, parity)
    if key in _FD_CACHE:
        return _FD_CACHE[key]
    r = grid.radial_nodes
    n = grid.nr
    half = 3
    ext = np.concatenate([-r[half - 1 :: -1], r])  # mirrored nodes then real ones
    mat = np.zeros((n, n))
    for i in range(n):
        ei = i + half
        lo = min(max(ei - half, 0), len(ext) - 7)
        sl = slice(lo, lo + 7)
        wts = fd_weights(ext[ei], ext[sl], 1)
        for off, wv in zip(range(lo, lo + 7), wts):
            src = off - half
            if src >= 0:
                mat[i, src] += wv
            else:
                mat[i, -src - 1] += parity * wv
    mat.setflags(write=False)
    _FD_CACHE[key] = mat
    return mat


def d_r_fd(values: np.ndarray, grid: HalfPlaneGrid, parity: int = 1) -> np.ndarray:
    return _radial_fd_matrix(grid, parity) @ values


def d_z_fd(values: np.ndarray, grid: HalfPlaneGrid) -> np.ndarray:
    out = np.zeros_like(values)
    for off, c in zip(range(-3, 4), _DZ_STENCIL):
        if c != 0.0:
            out += c * np.roll(values, -off, axis=1)
    return out / grid.dz
