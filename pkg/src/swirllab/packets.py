"""Packet detection, geometry, six-branch classification, and window covers.

A packet is a connected super-level region of |g|^2 above a mu5-weighted
quantile threshold.  Connectivity is 4-neighbor with periodic wrap in z.
Detected packets carry the descriptors the classifier needs: mass, weighted
center, scale (half diameter), directional thicknesses, and the best
one-ball captured fraction.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import ndimage

from .errors import RegimeError
from .extraction import ScoreScan, score, sup_scan
from .fields import ScalarFieldRZ, weighted_quantile
from .grid import AxisBall, HalfPlaneGrid

BRANCHES = ("fragmentation", "slab_collapse", "displaced_only",
            "thin_ring", "admissible_proximal", "residual_nonconcentration")

_STRUCTURE = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_MAX_COHERENCE_CANDIDATES = 400


@dataclass(frozen=True)
class Packet:
    """Connected super-level region with measured geometric descriptors."""

    grid: HalfPlaneGrid
    field: ScalarFieldRZ = dc_field(repr=False)
    cells: tuple[np.ndarray, np.ndarray] = dc_field(repr=False)
    center_r: float
    center_z: float
    lambda_n: float
    mass: float
    thickness_r: float
    thickness_z: float
    eta_measured: float
    best_center: tuple[float, float] | None

    @property
    def n_cells(self) -> int:
        return len(self.cells[0])


def detect_packets(g: ScalarFieldRZ, threshold_quantile: float = 0.9,
                   min_cells: int = 4) -> list[Packet]:
    """Connected components of the super-level set of |g|^2.

    The threshold is the given quantile of the field values under the mass
    distribution |g|^2 dmu5, so the super-level set carries the top
    (1 - quantile) fraction of the mass regardless of amplitude or domain
    size.
    """
    grid = g.grid
    dens = g.values**2
    if not np.any(dens > 0):
        return []
    w2d = np.broadcast_to(grid.quadrature_weights_r[:, None] * grid.dz, dens.shape)
    thr = weighted_quantile(dens.ravel(),
                            np.ascontiguousarray(dens * w2d).ravel(),
                            threshold_quantile)
    mask = dens >= max(thr, 0.0)
    mask &= dens > 0
    labels, n = ndimage.label(mask, structure=_STRUCTURE)
    labels = _merge_periodic(labels, mask)
    packets = []
    for lab in np.unique(labels):
        if lab == 0:
            continue
        ii, jj = np.nonzero(labels == lab)
        if len(ii) < min_cells:
            continue
        packets.append(_describe(g, (ii, jj), dens, w2d))
    packets.sort(key=lambda p: (-p.mass, p.center_z, p.center_r))
    return packets


def _merge_periodic(labels, mask):
    """Union labels that touch across the z seam."""
    left, right = mask[:, 0], mask[:, -1]
    pairs = {(labels[i, -1], labels[i, 0]) for i in np.nonzero(left & right)[0]}
    out = labels.copy()
    for a, b in pairs:
        if a != b:
            out[out == max(a, b)] = min(a, b)
    return out


def _unwrap_z(grid, jj, z_ref):
    """z coordinates of cells measured as offsets in (-l_z, l_z] from z_ref."""
    z = grid.z_nodes[jj]
    return z_ref + (z - z_ref + grid.l_z) % (2.0 * grid.l_z) - grid.l_z


def _describe(g, cells, dens, w2d) -> Packet:
    grid = g.grid
    ii, jj = cells
    cw = dens[ii, jj] * w2d[ii, jj]
    mass = float(np.sum(cw))
    r = grid.radial_nodes[ii]
    seed = int(np.argmax(cw))
    z = _unwrap_z(grid, jj, float(grid.z_nodes[jj[seed]]))
    center_r = float(np.sum(cw * r) / mass)
    center_z = float(np.sum(cw * z) / mass)
    center_z = (center_z + grid.l_z) % (2.0 * grid.l_z) - grid.l_z
    lam = 0.5 * _diameter(r, z)
    lam = max(lam, 0.5 * grid.min_cell)
    th_r, th_z = _thicknesses(grid, ii, jj)
    frac, best = _one_ball_capture(g, cells, lam, mass)
    return Packet(grid=grid, field=g, cells=(ii, jj), center_r=center_r,
                  center_z=center_z, lambda_n=lam, mass=mass,
                  thickness_r=th_r, thickness_z=th_z,
                  eta_measured=frac, best_center=best)


def _diameter(r, z) -> float:
    pts = np.column_stack([r, z])
    if len(pts) > 300:
        try:
            from scipy.spatial import ConvexHull

            pts = pts[ConvexHull(pts).vertices]
        except Exception:
            keep = np.linspace(0, len(pts) - 1, 300).astype(int)
            pts = pts[keep]
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt(np.max(np.sum(diff**2, axis=-1))))


def _thicknesses(grid, ii, jj):
    """Max cross-sectional extents: a slab is thin in one direction everywhere."""
    r = grid.radial_nodes
    dr_local = np.diff(r, prepend=0.0)
    th_r = 0.0
    for j in np.unique(jj):
        sel = ii[jj == j]
        th_r = max(th_r, r[sel.max()] - r[sel.min()] + dr_local[sel.max()])
    th_z = 0.0
    for i in np.unique(ii):
        zs = np.sort(_unwrap_z(grid, jj[ii == i], float(grid.z_nodes[jj[ii == i][0]])))
        th_z = max(th_z, zs[-1] - zs[0] + grid.dz)
    return float(th_r), float(th_z)


def _candidate_centers(g, cells):
    """Strongest packet cells: the mass modes where a core ball would sit.

    The center of a capture ball lies on the SO(4) orbit of its (r, z)
    point and the captured fraction depends only on that point, so cells
    enumerate the candidates.  The centroid is deliberately excluded: for a
    multi-core packet it sits between the cores, where a half-diameter ball
    would trivially swallow everything.
    """
    ii, jj = cells
    cw = g.values[ii, jj] ** 2
    order = np.argsort(-cw, kind="stable")[:_MAX_COHERENCE_CANDIDATES]
    return g.grid.radial_nodes[ii[order]], g.grid.z_nodes[jj[order]]


def _one_ball_capture(g, cells, lam, mass):
    """Best one-core captured fraction at the packet's own scale.

    The capture region is the SO(4)-invariant hull of a 5D ball centered on
    the candidate's orbit, i.e. all cells within meridional distance lam of
    the center with their full orbits.  For axis-proximal centers this is
    exactly the 5D ball; for distal centers it is the equivariant one-core
    region, so a thin ring still reads as one-core rather than orbit-spread.
    """
    grid = g.grid
    ii, jj = cells
    cw = g.values[ii, jj] ** 2 * grid.quadrature_weights_r[ii] * grid.dz
    r, z = grid.radial_nodes[ii], grid.z_nodes[jj]
    cand_r, cand_z = _candidate_centers(g, cells)
    best_frac, best_center = -1.0, (float(cand_r[0]), float(cand_z[0]))
    for r0, z0 in zip(cand_r, cand_z):
        inside = (r - r0) ** 2 + (z - z0) ** 2 <= lam**2
        frac = float(np.sum(cw[inside])) / mass
        if frac > best_frac + 1e-15:
            best_frac, best_center = frac, (float(r0), float(z0))
    return min(max(best_frac, 0.0), 1.0), best_center


def one_core_fraction(g: ScalarFieldRZ, cells, lam: float, mass: float,
                      center: tuple[float, float]) -> float:
    """Captured fraction of the packet mass for one prescribed core center."""
    grid = g.grid
    ii, jj = cells
    cw = g.values[ii, jj] ** 2 * grid.quadrature_weights_r[ii] * grid.dz
    r, z = grid.radial_nodes[ii], grid.z_nodes[jj]
    inside = (r - center[0]) ** 2 + (z - center[1]) ** 2 <= lam**2
    return float(np.sum(cw[inside])) / mass


def coherence_test(p: Packet, g: ScalarFieldRZ, eta: float):
    """One-ball concentration dichotomy: coherent at level eta, or fragmented."""
    frac, best = _one_ball_capture(g, p.cells, p.lambda_n, p.mass)
    return frac >= eta, best


@dataclass
class ClassifyParams:
    eta: float = 0.4
    c0: float = 4.0
    aspect_max: float = 20.0
    k: int = 2
    deficit_ratio: float = 0.5
    scan: ScoreScan | None = None


def classify(p: Packet, g: ScalarFieldRZ, params: ClassifyParams) -> str:
    """Assign exactly one branch label; the checks run in a fixed order.

    The fragmentation gate is the one-core capture fraction carried by the
    packet, so distal rings are not swallowed by it and can reach the
    thin-ring branch.
    """
    lam = p.lambda_n
    if p.eta_measured < params.eta:
        return "fragmentation"
    aspect = max(p.thickness_z / p.thickness_r, p.thickness_r / p.thickness_z)
    if aspect > params.aspect_max:
        return "slab_collapse"
    if _displaced(p, g, params):
        return "displaced_only"
    if p.center_r >= 10.0 * lam:
        return "thin_ring"
    scale = 2.0**-params.k
    if (p.center_r <= params.c0 * lam
            and p.thickness_r >= scale and p.thickness_z >= scale):
        return "admissible_proximal"
    return "residual_nonconcentration"


def _displaced(p, g, params) -> bool:
    scan = params.scan
    if scan is None:
        lam_lo = 4.5 * g.grid.dr_max
        lam_hi = min(g.grid.l_z / 2.0, g.grid.r_max / 2.0)
        if lam_hi <= lam_lo:
            return False
        scan = sup_scan(g, (lam_lo, lam_hi))
    radius = (params.c0 + 1.0) * p.lambda_n
    if abs(p.center_z - scan.z0_star) <= radius:
        return False
    try:
        own = score(g, AxisBall(p.center_z, radius))
    except Exception:
        return False
    return own < params.deficit_ratio * scan.q_star


@dataclass(frozen=True)
class WindowCover:
    """Lattice-ball cover of a proximal packet at one dyadic level.

    balls are B_i = B_{2^-k}(i 2^-k); the starred families are the 3x and 5x
    enlargements.  Any point lies in at most 3 / 7 / 11 members of the
    three families because consecutive centers are spaced by one radius.
    """

    k: int
    indices: tuple[int, ...]
    balls: tuple[AxisBall, ...]
    balls_star: tuple[AxisBall, ...]
    balls_star2: tuple[AxisBall, ...]

    def overlap_counts(self, r: np.ndarray, z: np.ndarray):
        def count(balls):
            c = np.zeros(np.broadcast(r, z).shape, dtype=int)
            for b in balls:
                c += (r**2 + (z - b.z0) ** 2) <= b.lam**2
            return c

        return count(self.balls), count(self.balls_star), count(self.balls_star2)


def window_cover(p: Packet, k: int, n0: int = 8,
                 proximal_factor: float = 1.5) -> WindowCover:
    """Minimal set of lattice balls at level k covering the packet.

    Cells with r < 2^-k must land in the base family; the fringe up to
    proximal_factor * 2^-k may rely on the 3x enlargements.
    """
    grid = p.grid
    lam = 2.0**-k
    ii, jj = p.cells
    r = grid.radial_nodes[ii]
    if np.max(r) > proximal_factor * lam:
        raise RegimeError(
            f"packet reaches r = {np.max(r):.4g} > {proximal_factor} * 2^-{k}; "
            "not axis-proximal at this level")
    z = _unwrap_z(grid, jj, p.center_z)
    core = r < lam
    if not np.any(core):
        raise RegimeError("no packet cell is strictly inside the ball radius")
    half = np.sqrt(lam**2 - r[core] ** 2)
    lo = np.ceil((z[core] - half) / lam - 1e-12).astype(int)
    hi = np.floor((z[core] + half) / lam + 1e-12).astype(int)
    if np.any(lo > hi):
        raise RegimeError("a packet cell admits no covering lattice ball")
    chosen = _stab_intervals(lo, hi)
    if len(chosen) > n0:
        raise RegimeError(f"cover needs {len(chosen)} > N0 = {n0} balls")
    balls = tuple(AxisBall(i * lam, lam) for i in chosen)
    star = tuple(AxisBall(i * lam, 3.0 * lam) for i in chosen)
    star2 = tuple(AxisBall(i * lam, 5.0 * lam) for i in chosen)
    fringe = ~core
    if np.any(fringe):
        ok = np.zeros(fringe.sum(), dtype=bool)
        for b in star:
            ok |= (r[fringe] ** 2 + (z[fringe] - b.z0) ** 2) <= b.lam**2
        if not np.all(ok):
            raise RegimeError("fringe cells escape even the enlarged cover")
    return WindowCover(k=k, indices=tuple(chosen), balls=balls,
                       balls_star=star, balls_star2=star2)


def _stab_intervals(lo, hi):
    """Greedy minimal stabbing set of integer intervals [lo_c, hi_c].

    Scanning intervals by increasing right end, an interval is already
    stabbed iff its left end is <= the last chosen point; otherwise its own
    right end is the optimal new point.
    """
    order = np.argsort(hi, kind="stable")
    chosen: list[int] = []
    for c in order:
        if chosen and lo[c] <= chosen[-1]:
            continue
        chosen.append(int(hi[c]))
    return chosen


def centered_window(z_center: float, k: int, n0: int = 8) -> list[AxisBall]:
    """Fixed-size lattice window around a center: the monitor's cover."""
    lam = 2.0**-k
    i0 = int(np.round(z_center / lam))
    half = max((n0 - 1) // 2, 0)
    return [AxisBall(i * lam, lam) for i in range(i0 - half, i0 - half + n0)]
