"""Extraction scores, the sup scan, the diffuseness parameter, and recentering.

The axis-centered score of a field g at scale lambda and center z0 is

    Q_lambda(z0) = lambda^{-4} int_{B_lambda^axis(z0)} |g|^2 dmu5.

The sup scan walks a geometric net of scales (ratio 2^{1/4}) and a z lattice
of stride lambda/4; a bump at any scale and center is captured by this net
within a modest factor, and the net resolution is reported alongside the
maximum so callers can judge it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RegimeError, ResolutionError
from .fields import ScalarFieldRZ, captured_mass, integrate_mu5_values
from .grid import AxisBall, HalfPlaneGrid

NET_RATIO = 2.0**0.25
Z_STRIDE_FACTOR = 0.25
MIN_SCALE_CELLS = 4.0


def _require_resolvable(grid: HalfPlaneGrid, lam: float) -> None:
    if lam < MIN_SCALE_CELLS * grid.dr_max:
        raise ResolutionError(
            f"scale {lam:.4g} is below {MIN_SCALE_CELLS} radial spacings "
            f"({MIN_SCALE_CELLS * grid.dr_max:.4g})")


def score(g: ScalarFieldRZ, ball: AxisBall) -> float:
    """Q_lambda(z0) = lambda^{-4} * mu5-mass of |g|^2 in the ball."""
    _require_resolvable(g.grid, ball.lam)
    return ball.lam**-4 * integrate_mu5_values(g.values**2, g.grid, ball)


class _BallScanner:
    """Windowed cumulative sums: score many centers at one scale in O(nr log nz)."""

    def __init__(self, g: ScalarFieldRZ):
        self.grid = g.grid
        dens = g.values**2 * (g.grid.quadrature_weights_r[:, None] * g.grid.dz)
        self.cum = np.concatenate(
            [np.zeros((g.grid.nr, 1)), np.cumsum(dens, axis=1)], axis=1)

    def masses(self, lam: float, centers: np.ndarray) -> np.ndarray:
        grid = self.grid
        out = np.zeros(len(centers))
        rows = np.nonzero(grid.radial_nodes <= lam)[0]
        z = grid.z_nodes
        for i in rows:
            h = np.sqrt(max(lam**2 - grid.radial_nodes[i] ** 2, 0.0))
            lo = np.searchsorted(z, centers - h, side="left")
            hi = np.searchsorted(z, centers + h, side="right")
            out += self.cum[i, hi] - self.cum[i, lo]
        return out


@dataclass
class ScoreScan:
    """Dense score scan over a geometric scale net and per-scale z lattices."""

    lambdas: np.ndarray
    centers: list[np.ndarray]
    scores: list[np.ndarray]
    q_star: float
    lambda_star: float
    z0_star: float
    net_ratio: float = NET_RATIO
    z_stride_factor: float = Z_STRIDE_FACTOR

    def matrix(self) -> np.ndarray:
        width = max(len(c) for c in self.centers)
        out = np.full((len(self.lambdas), width), np.nan)
        for i, row in enumerate(self.scores):
            out[i, : len(row)] = row
        return out

    def csv_rows(self):
        for lam, cs, qs in zip(self.lambdas, self.centers, self.scores):
            for z0, q in zip(cs, qs):
                yield (lam, z0, q)


def sup_scan(g: ScalarFieldRZ, lambda_range: tuple[float, float],
             z_stride: float = Z_STRIDE_FACTOR) -> ScoreScan:
    """Scan Q over the net; argmax ties break toward smaller lambda, then z0."""
    lam_lo, lam_hi = lambda_range
    if not (0 < lam_lo <= lam_hi):
        raise ValueError("empty or invalid lambda range")
    _require_resolvable(g.grid, lam_lo)
    n_lam = int(np.floor(np.log(lam_hi / lam_lo) / np.log(NET_RATIO))) + 1
    lambdas = lam_lo * NET_RATIO ** np.arange(n_lam)
    scanner = _BallScanner(g)
    l_z = g.grid.l_z
    centers, scores = [], []
    best = (-np.inf, 0.0, 0.0)
    for lam in lambdas:
        stride = z_stride * lam
        span = l_z - lam
        if span < 0:
            centers.append(np.zeros(0))
            scores.append(np.zeros(0))
            continue
        n_side = int(np.floor(span / stride))
        cs = stride * np.arange(-n_side, n_side + 1)
        qs = lam**-4 * scanner.masses(lam, cs)
        centers.append(cs)
        scores.append(qs)
        if qs.size:
            j = int(np.argmax(qs))
            if qs[j] > best[0]:
                best = (float(qs[j]), float(lam), float(cs[j]))
    if not np.isfinite(best[0]):
        raise ValueError("lambda range produced no admissible balls")
    return ScoreScan(lambdas=lambdas, centers=centers, scores=scores,
                     q_star=max(best[0], 0.0), lambda_star=best[1], z0_star=best[2])


@dataclass
class DeltaReport:
    """Diffuseness over a dyadic singular range: sup of 2^{4k} ball masses."""

    k_range: list[int]
    delta: float
    j_min: int
    argmax_k: int
    argmax_z0: float


def delta_sup(g: ScalarFieldRZ, k_range) -> DeltaReport:
    ks = sorted(k_range)
    if not ks:
        raise ValueError("empty k range")
    scanner = _BallScanner(g)
    best = (-np.inf, ks[0], 0.0)
    for k in ks:
        lam = 2.0**-k
        _require_resolvable(g.grid, lam)
        span = g.grid.l_z - lam
        n_side = int(np.floor(span / lam))
        cs = lam * np.arange(-n_side, n_side + 1)
        masses = scanner.masses(lam, cs)
        j = int(np.argmax(masses))
        val = 2.0 ** (4 * k) * masses[j]
        if val > best[0]:
            best = (float(val), k, float(cs[j]))
    return DeltaReport(k_range=ks, delta=max(best[0], 0.0), j_min=min(ks),
                       argmax_k=best[1], argmax_z0=best[2])


def ring_capture_fraction(s: ScalarFieldRZ, lam: float, r_center: float,
                          z_center: float | None = None) -> float:
    """Fraction of the mass of |s|^2 captured by one 5D ball on the ring orbit.

    Valid in the thin-ring regime r_center >= 10 lam, where the captured
    fraction is controlled by the S^3 cap of angular half-width ~ lam/r.
    """
    if r_center < 10.0 * lam:
        raise RegimeError(
            f"ring capture requires r_center >= 10 lam (got {r_center} < {10 * lam})")
    dens = s.values**2
    total = integrate_mu5_values(dens, s.grid)
    if total <= 0.0:
        raise ValueError("field has no mass")
    if z_center is None:
        w = s.grid.quadrature_weights_r[:, None] * s.grid.dz
        z_center = float(np.sum(dens * w * s.grid.z_nodes[None, :]) / total)
    captured = captured_mass(dens, s.grid, (r_center, z_center), lam)
    return captured / total


def recenter_kappa(eta: float, c0: float) -> float:
    """Recentered score retention factor kappa_rec = eta (c0+1)^{-4}."""
    return eta * (c0 + 1.0) ** -4


def recenter(packet, eta: float, c0: float) -> tuple[float, float, float]:
    """Move a coherent packet onto an axis ball and certify its score.

    Returns (R, kappa_rec, achieved_score) with R = (c0+1) lambda_n and
    kappa_rec = eta (c0+1)^{-4}.  The achieved axis score at radius R around
    the packet's z center satisfies

        achieved >= kappa_rec * lambda_n^{-4} * M_n

    whenever some qualifying core center (meridional distance <= c0 lambda_n
    from the axis point (0, z_n)) captures at least an eta fraction of the
    packet mass at scale lambda_n: every captured cell then sits within
    meridional distance (c0+1) lambda_n of (0, z_n), and the axis ball of
    radius R contains such cells with their full orbits, so the inequality
    holds cell by cell.
    """
    from .packets import one_core_fraction

    lam = packet.lambda_n
    if packet.center_r >= 10.0 * lam:
        raise RegimeError("thin-ring regime (r_n >= 10 lambda_n); "
                          "use ring_capture_fraction instead")
    if packet.center_r > c0 * lam:
        raise RegimeError(f"packet center radius {packet.center_r:.4g} exceeds "
                          f"c0 * lambda_n = {c0 * lam:.4g}")
    g = packet.field
    candidates = [(packet.center_r, packet.center_z)]
    if packet.best_center is not None:
        r0, z0 = packet.best_center
        if np.hypot(r0, z0 - packet.center_z) <= c0 * lam:
            candidates.append((float(r0), float(z0)))
    eta_used = max(one_core_fraction(g, packet.cells, lam, packet.mass, c)
                   for c in candidates)
    if eta_used < eta:
        raise RegimeError(
            f"packet is not eta-coherent at any qualifying center "
            f"(best fraction {eta_used:.3f} < eta = {eta})")
    radius = (c0 + 1.0) * lam
    kappa_rec = recenter_kappa(eta, c0)
    achieved = score(g, AxisBall(packet.center_z, radius))
    floor = kappa_rec * lam**-4 * packet.mass
    if achieved < floor * (1.0 - 1e-12):
        raise AssertionError(
            f"recentering certificate violated: {achieved:.6g} < {floor:.6g}")
    return radius, kappa_rec, achieved
