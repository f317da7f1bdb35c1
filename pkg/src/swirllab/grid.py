"""Half-plane grids with Bessel-zero radial collocation.

Radial nodes are the first nr positive zeros of J1 scaled to (0, r_max],

    r_i = r_max * j_i / j_{nr+1},

so the order-1 collocation transforms built in spectral.py are exactly
invertible and diagonalize the five-dimensional radial Laplacian.  There is
deliberately no node at r = 0; axis values are recovered by parity
extension.

Quadrature weights for integrals of the form

    int_0^{r_max} f(r) r^q dr            (q = 3 gives the lifted measure)

come from integrating piecewise degree-7 Lagrange interpolants exactly
against r^q dr, which makes every polynomial moment f = r^{2m}, m <= 3,
exact to machine precision.  The raw interpolatory weights can turn
slightly negative in the extrapolation zone past the outermost node; a
null-space correction supported on the tail restores positivity without
touching polynomial exactness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import null_space
from scipy.special import jn_zeros

from .errors import UnsupportedGridError

_MIN_NR = 32


def bessel_collocation(nr: int) -> tuple[np.ndarray, float]:
    """First nr positive zeros of J1 plus the (nr+1)-th zero used as band edge."""
    zeros = jn_zeros(1, nr + 1)
    return zeros[:nr], float(zeros[nr])


def _interpolatory_weights(nodes, r_max, q, degree):
    n = len(nodes)
    w = np.zeros(n)
    seg = np.empty(n + 1)
    seg[0] = 0.0
    seg[1:-1] = 0.5 * (nodes[:-1] + nodes[1:])
    seg[-1] = r_max
    gx, gw = leggauss(12)
    for s in range(n):
        a, b = seg[s], seg[s + 1]
        lo = min(max(s - degree // 2, 0), n - 1 - degree)
        idx = np.arange(lo, lo + degree + 1)
        xs = nodes[idx]
        t = 0.5 * (b - a) * gx + 0.5 * (a + b)
        tw = 0.5 * (b - a) * gw * t**q
        for jj in range(degree + 1):
            lag = np.ones_like(t)
            for kk in range(degree + 1):
                if kk != jj:
                    lag *= (t - xs[kk]) / (xs[jj] - xs[kk])
            w[idx[jj]] += np.sum(tw * lag)
    return w


def _repair_tail(w, nodes, r_max, degree, tail):
    """Push tail weights positive while preserving exactness on degree <= 7.

    The correction lives in the null space of the tail Vandermonde block, so
    sums of r^p, p = 0..degree, over the corrected weights are unchanged.
    """
    n = len(w)
    tail = min(tail, n - degree - 2)
    idx = np.arange(n - tail, n)
    vand = np.vander(nodes[idx] / r_max, degree + 1, increasing=True).T
    basis = null_space(vand)
    floor = 0.1 * np.median(np.abs(w[idx]))
    out = w.copy()
    boost = 1.0
    for _ in range(300):
        deficit = np.maximum(floor - out[idx], 0.0)
        if not deficit.any():
            break
        y, *_ = np.linalg.lstsq(basis, boost * deficit, rcond=None)
        out[idx] += basis @ y
        boost = min(boost * 1.05, 3.0)
    return out


def radial_weights(nodes: np.ndarray, r_max: float, q: int = 3,
                   degree: int = 7, require_positive: bool = False) -> np.ndarray:
    """Quadrature weights for int_0^{r_max} f(r) r^q dr on the given nodes."""
    w = _interpolatory_weights(np.asarray(nodes, float), r_max, q, degree)
    if np.all(w > 0):
        return w
    w = _repair_tail(w, np.asarray(nodes, float), r_max, degree, tail=24)
    if require_positive and not np.all(w > 0):
        raise UnsupportedGridError(
            f"could not build positive r^{q} weights on {len(nodes)} nodes")
    return w


def fd_weights(x0: float, xs: np.ndarray, m: int) -> np.ndarray:
    """Fornberg finite-difference weights for the m-th derivative at x0."""
    n = len(xs)
    c = np.zeros((n, m + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = xs[0] - x0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


@dataclass(frozen=True)
class AxisBall:
    """Axis-centered 5D ball B = {(x', z): |x'|^2 + (z - z0)^2 <= lambda^2}."""

    z0: float
    lam: float

    def __post_init__(self):
        if not (self.lam > 0):
            raise ValueError(f"ball radius must be positive, got {self.lam}")


@dataclass(frozen=True, eq=False)
class HalfPlaneGrid:
    """Collocation grid on the (r, z) half plane, periodic in z.

    nz must be a power of two; z nodes are uniform on [-l_z, l_z).
    quadrature_weights_r are the positive r^3 dr weights (lifted measure).
    """

    nr: int
    nz: int
    r_max: float
    l_z: float
    radial_nodes: np.ndarray = field(repr=False)
    quadrature_weights_r: np.ndarray = field(repr=False)
    bessel_band_edge: float = field(repr=False)

    @classmethod
    def build(cls, nr: int, nz: int, r_max: float, l_z: float) -> "HalfPlaneGrid":
        if nr < _MIN_NR:
            raise UnsupportedGridError(f"nr must be >= {_MIN_NR}, got {nr}")
        if nz < 8 or (nz & (nz - 1)) != 0:
            raise ValueError(f"nz must be a power of two >= 8, got {nz}")
        if r_max <= 0 or l_z <= 0:
            raise ValueError("r_max and l_z must be positive")
        jz, band = bessel_collocation(nr)
        nodes = r_max * jz / band
        w3 = radial_weights(nodes, r_max, q=3, require_positive=True)
        grid = cls(nr=nr, nz=nz, r_max=float(r_max), l_z=float(l_z),
                   radial_nodes=nodes, quadrature_weights_r=w3,
                   bessel_band_edge=band)
        nodes.setflags(write=False)
        w3.setflags(write=False)
        return grid

    # -- identity -------------------------------------------------------

    @property
    def key(self) -> tuple:
        return (self.nr, self.nz, round(self.r_max, 12), round(self.l_z, 12))

    def __eq__(self, other):
        return isinstance(other, HalfPlaneGrid) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    # -- geometry -------------------------------------------------------

    @property
    def dz(self) -> float:
        return 2.0 * self.l_z / self.nz

    @property
    def z_nodes(self) -> np.ndarray:
        return -self.l_z + self.dz * np.arange(self.nz)

    @property
    def dr_max(self) -> float:
        """Largest spacing between consecutive radial nodes."""
        return float(np.max(np.diff(self.radial_nodes)))

    @property
    def min_cell(self) -> float:
        return float(min(np.min(np.diff(self.radial_nodes)), self.dz))

    def weights(self, q: int) -> np.ndarray:
        if q == 3:
            return self.quadrature_weights_r
        cache = _WEIGHT_CACHE.setdefault(self.key, {})
        if q not in cache:
            w = radial_weights(self.radial_nodes, self.r_max, q=q)
            w.setflags(write=False)
            cache[q] = w
        return cache[q]

    def check_invariants(self) -> dict:
        """Quadrature exactness and node ordering diagnostics."""
        r, w = self.radial_nodes, self.quadrature_weights_r
        mono = bool(np.all(np.diff(r) > 0) and r[0] > 0)
        errs = {}
        for m in range(4):
            exact = self.r_max ** (4 + 2 * m) / (4 + 2 * m)
            errs[f"moment_r{3 + 2 * m}"] = abs(float(np.sum(w * r ** (2 * m))) - exact) / exact
        return {"nodes_increasing": mono, "weights_positive": bool(np.all(w > 0)), **errs}


_GRIDS: dict[tuple, HalfPlaneGrid] = {}
_WEIGHT_CACHE: dict[tuple, dict[int, np.ndarray]] = {}


def get_grid(nr: int, nz: int, r_max: float, l_z: float) -> HalfPlaneGrid:
    """Memoized grid constructor; grids are immutable so sharing is safe."""
    key = (nr, nz, round(float(r_max), 12), round(float(l_z), 12))
    if key not in _GRIDS:
        _GRIDS[key] = HalfPlaneGrid.build(nr, nz, r_max, l_z)
    return _GRIDS[key]
