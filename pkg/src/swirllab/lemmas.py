"""The quantitative lemma suite: one check record per in-scope statement.

Three check modes:

  pass_required  geometric / combinatorial facts that must hold exactly or
                 to stated tolerance on every run;
  exponent       scaling laws with existential constants: the decay or
                 scaling exponent is asserted, the constant is fitted by
                 least squares and reported;
  report_only    trend statements whose hypotheses involve limits; the
                 suite records the measured sequence without asserting.

run_suite returns the full list plus an overall flag that is False iff a
pass_required or exponent check failed.  Desk-scale caveats baked into the
checks: shell fields inherit polynomial kernel tails, so support-arithmetic
checks run on shell indices high enough that truncation tails at the domain
boundary sit below the asserted tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .biotsavart import lifted_velocity_from_g, shell_block
from .errors import RegimeError
from .extraction import (delta_sup, recenter, recenter_kappa,
                         ring_capture_fraction, sup_scan)
from .fields import (ScalarFieldRZ, ball_mask, integrate_mu5_values,
                     lifted_l2_norm_sq)
from .fitting import (axis_tube_envelope, ball_l2_norms, bump_field,
                      calibrate_constants, decay_exponent, diffuse_field,
                      k_lattice, local_mass_constant, lsq_constant,
                      product_profiles_all_shells, random_band_field,
                      shell_concentrated_field, velocity_block_constant)
from .grid import AxisBall, get_grid
from .packets import (ClassifyParams, centered_window, classify, coherence_test,
                      detect_packets, window_cover)
from .paraproduct import (decompose_nonlinearity, psi_factors,
                          starvation_monitor)
from .solver import SolverConfig, run
from .spectral import (DyadicPartition, decompose, frequency_overlap_check,
                       grad_norm_sq_mu5, shell_project, square_function_sum)

LEMMA_IDS = ["partition", "bernstein", "L3.1", "L4.1", "L4.2", "L4.3", "T5.1",
             "L6.1", "L7.1", "L7.2", "L8.1", "L8.2", "L8.3", "L8.4", "L8.5",
             "L8.6", "L9.1"]


@dataclass
class LemmaCheckResult:
    lemma_id: str
    name: str
    mode: str
    passed: bool | None
    measured: dict
    bounds: dict
    note: str = ""

    @property
    def status(self) -> str:
        if self.mode == "report_only":
            return "report-only"
        return "pass" if self.passed else "FAIL"

    def to_json(self) -> dict:
        return {"lemma_id": self.lemma_id, "name": self.name, "mode": self.mode,
                "status": self.status, "passed": self.passed,
                "measured": self.measured, "bounds": self.bounds,
                "note": self.note}


@dataclass
class SuiteConfig:
    nr: int = 240
    nz: int = 512
    r_max: float = 3.5
    l_z: float = 6.0
    k_min: int = 0
    k_max: int = 8
    sing: tuple[int, ...] = (2, 3, 4)
    seed: int = 42
    n0: int = 8
    eta: float = 0.4
    c0: float = 4.0
    n_profiles: int = 6
    n_packets: int = 25
    n_fields: int = 4
    l91_steps: int = 3
    k_shift: int = 0
    corrupt_partition: bool = False

    @classmethod
    def quick(cls, **kw) -> "SuiteConfig":
        """Reduced-effort variant for smoke runs; same checks, smaller counts."""
        base = {"n_profiles": 3, "n_packets": 8, "n_fields": 3, "l91_steps": 2}
        base.update(kw)
        return cls(**base)


@dataclass(frozen=True)
class _CorruptPartition(DyadicPartition):
    """Fault injection: double-width shells break telescoping and square sums."""

    def psi(self, k: int, t) -> np.ndarray:
        t = np.asarray(t, float)
        return self.phi(np.ldexp(t, -k - 1)) - self.phi(np.ldexp(t, -k + 1))


class _Ctx:
    def __init__(self, cfg: SuiteConfig):
        self.cfg = cfg
        scale = 2.0**-cfg.k_shift
        self.grid = get_grid(cfg.nr, cfg.nz, cfg.r_max * scale, cfg.l_z * scale)
        part_cls = _CorruptPartition if cfg.corrupt_partition else DyadicPartition
        self.partition = part_cls(cfg.k_min + cfg.k_shift, cfg.k_max + cfg.k_shift)
        self.sing = [k + cfg.k_shift for k in cfg.sing]
        self._diffuse = None
        self._constants = None

    def diffuse_fields(self, n=None):
        n = n or self.cfg.n_fields
        if self._diffuse is None or len(self._diffuse) < n:
            tube = 1.2 * 2.0 ** -min(self.sing)
            self._diffuse = [
                diffuse_field(self.grid, self.partition, self.sing,
                              self.cfg.seed + 100 + 7 * i, tube,
                              2.0 * self.grid.l_z / 3.0)
                for i in range(n)]
        return self._diffuse[:n]

    def constants(self):
        if self._constants is None:
            self._constants = calibrate_constants(
                self.grid, self.partition, self.sing, seed=self.cfg.seed + 999)
        return self._constants

    def band_field(self, seed, ks=None, envelope=False):
        ks = ks if ks is not None else self.sing
        env = axis_tube_envelope(self.grid, self.grid.r_max / 5.0,
                                 self.grid.l_z / 3.0) if envelope else None
        return random_band_field(self.grid, self.partition, ks, seed, envelope=env)


def _stable(values, factor: float = 1.5) -> bool:
    """Within [1/factor, factor] of the median."""
    a = np.asarray(values, float)
    med = float(np.median(a))
    return bool(a.max() <= factor * med and a.min() >= med / factor)


# ---------------------------------------------------------------------------
# individual checks
# ---------------------------------------------------------------------------


def check_partition(ctx: _Ctx) -> LemmaCheckResult:
    rep = ctx.partition.validate(rng=np.random.default_rng(ctx.cfg.seed))
    ok = (rep["telescoping_defect"] < 1e-12 and rep["support_ok"]
          and rep["square_sum_min"] >= 0.5 - 1e-9
          and rep["square_sum_max"] <= 1.0 + 1e-12)
    return LemmaCheckResult("partition", "shell partition of unity",
                            "pass_required", ok, rep,
                            {"telescoping": 1e-12, "square_sum": [0.5, 1.0]})


def check_bernstein(ctx: _Ctx) -> LemmaCheckResult:
    worst = 0.0
    for i in range(3):
        f = ctx.band_field(ctx.cfg.seed + i)
        for k in ctx.partition.ks:
            shell = shell_project(f, k, ctx.partition)
            nn = integrate_mu5_values(shell.values**2, ctx.grid)
            if nn < 1e-24:
                continue
            ratio = np.sqrt(grad_norm_sq_mu5(shell) / nn) / 2.0 ** (k + 1)
            worst = max(worst, ratio)
    ok = worst <= 1.0 + 1e-6
    return LemmaCheckResult("bernstein", "shell gradient bound",
                            "pass_required", ok, {"worst_ratio": float(worst)},
                            {"ratio": 1.0})


def _random_profile(rng, scale: float = 1.0):
    """Smooth compactly supported radial profile as a sum of even bumps."""
    n = rng.integers(1, 4)
    terms = [(rng.uniform(0.3, 1.0), scale * rng.uniform(0.0, 1.0),
              scale * rng.uniform(-1.0, 1.0),
              scale * rng.uniform(0.25, 0.45)) for _ in range(n)]

    def f(r, z):
        out = np.zeros(np.broadcast(r, z).shape)
        for a, r0, z0, s in terms:
            out += a * (np.exp(-((r - r0) ** 2 + (z - z0) ** 2) / (2 * s**2))
                        + np.exp(-((r + r0) ** 2 + (z - z0) ** 2) / (2 * s**2)))
        return out

    return f


def mc_lifted_norm_sq(profile, box: float, n_samples: int, seed: int):
    """Plain Monte Carlo estimate of ||F||^2_{L2(R^5)} for the radial lift."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-box, box, size=(n_samples, 5))
    r = np.sqrt(np.sum(x[:, :4] ** 2, axis=1))
    vals = profile(r, x[:, 4]) ** 2
    vol = (2.0 * box) ** 5
    est = vol * float(np.mean(vals))
    sig = vol * float(np.std(vals)) / np.sqrt(n_samples)
    return est, sig


def measure_identification_stats(grid, n_profiles: int, profile_seed: int,
                                 mc_seed: int, n_samples: int = 200_000):
    """Gaussian closed-form error plus MC deviations for random profiles."""
    rr = grid.radial_nodes[:, None]
    zz = grid.z_nodes[None, :]
    scale = min(1.0, grid.r_max / 3.5)
    gauss = ScalarFieldRZ(grid, np.exp(-(rr**2 + zz**2) / (2 * scale**2)))
    closed = np.pi**2.5 * scale**5
    gauss_err = abs(lifted_l2_norm_sq(gauss) - closed) / closed
    rng = np.random.default_rng(profile_seed)
    devs = []
    for i in range(n_profiles):
        prof = _random_profile(rng, scale)
        f = ScalarFieldRZ(grid, prof(rr, zz) * np.ones((grid.nr, grid.nz)))
        quad = lifted_l2_norm_sq(f)
        est, sig = mc_lifted_norm_sq(prof, box=2.9 * scale,
                                     n_samples=n_samples, seed=mc_seed + i)
        devs.append(abs(quad - est) / sig)
    return float(gauss_err), devs


def check_measure_identification(ctx: _Ctx) -> LemmaCheckResult:
    gauss_err, devs = measure_identification_stats(
        ctx.grid, ctx.cfg.n_profiles, profile_seed=ctx.cfg.seed + 5,
        mc_seed=3000)
    worst = max(devs)
    ok = gauss_err < 5e-3 and worst < 3.0
    return LemmaCheckResult(
        "L3.1", "radial measure identification", "pass_required", ok,
        {"gaussian_rel_err": gauss_err, "worst_mc_sigmas": worst,
         "n_profiles": ctx.cfg.n_profiles},
        {"gaussian_rel_err": 5e-3, "mc_sigmas": 3.0})


def single_node_ring(grid, r_target: float) -> tuple[ScalarFieldRZ, float]:
    """Unit mass on the grid node nearest (r_target, 0): the thinnest ring."""
    i = int(np.argmin(np.abs(grid.radial_nodes - r_target)))
    j = int(np.argmin(np.abs(grid.z_nodes)))
    vals = np.zeros((grid.nr, grid.nz))
    vals[i, j] = 1.0
    return ScalarFieldRZ(grid, vals), float(grid.radial_nodes[i])


def cap_fraction_closed_form(theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, float)
    return (theta - np.sin(theta) * np.cos(theta)) / np.pi


def mc_cap_fraction(r0: float, lam: float, n: int, seed: int) -> float:
    """S^3 Monte Carlo: fraction of the orbit within lam of a fixed orbit point."""
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((n, 4))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    base = np.zeros(4)
    base[0] = 1.0
    dist_sq = r0**2 * np.sum((w - base) ** 2, axis=1)
    return float(np.mean(dist_sq <= lam**2))


def ring_capture_stats(grid, n_points: int, ratio_range, mc_seed: int):
    ring, r0 = single_node_ring(grid, 0.7 * grid.r_max)
    ratios = np.geomspace(ratio_range[0], ratio_range[1], n_points)
    measured = np.array([ring_capture_fraction(ring, rho * r0, r0)
                         for rho in ratios])
    closed = cap_fraction_closed_form(ratios)
    point_dev = float(np.max(np.abs(measured / closed - 1.0)))
    slope = float(np.polyfit(np.log(ratios), np.log(measured), 1)[0])
    mc = mc_cap_fraction(r0, ratios[-1] * r0, 400_000, mc_seed)
    mc_dev = abs(measured[-1] - mc) / measured[-1]
    return slope, point_dev, float(mc_dev)


def check_ring_capture(ctx: _Ctx) -> LemmaCheckResult:
    slope, point_dev, mc_dev = ring_capture_stats(
        ctx.grid, 9, (0.01, 0.1), ctx.cfg.seed)
    ok = abs(slope - 3.0) <= 0.2 and point_dev <= 0.2 and mc_dev < 0.1
    return LemmaCheckResult(
        "L4.1", "off-axis ring capture", "pass_required", ok,
        {"exponent": slope, "pointwise_dev": point_dev, "mc_dev": mc_dev},
        {"exponent": [2.8, 3.2], "pointwise_dev": 0.2, "mc_dev": 0.1})


def bridged_two_lobe(grid, threshold_quantile: float = 0.05):
    """Two equal axis lobes joined by a faint tube, one packet at low threshold.

    The lobes sit far apart relative to their own size, so a capture ball at
    the packet scale centered on either mass mode grabs that lobe plus the
    near half of the bridge and little else: the best one-ball fraction
    lands near 1/2.  The bridge amplitude is set just above the detection
    threshold so the super-level set connects while the bridge mass stays
    negligible.  Returns (field, separation).
    """
    from .fields import weighted_quantile

    sep = 0.3 * grid.l_z
    sigma = 0.05 * grid.r_max
    r = grid.radial_nodes[:, None]
    z = grid.z_nodes[None, :]
    lobes = (np.exp(-(r**2 + (z + sep) ** 2) / (2 * sigma**2))
             + np.exp(-(r**2 + (z - sep) ** 2) / (2 * sigma**2)))
    dens = lobes**2
    w2d = np.broadcast_to(grid.quadrature_weights_r[:, None] * grid.dz, dens.shape)
    thr = weighted_quantile(dens.ravel(), np.ascontiguousarray(dens * w2d).ravel(),
                            threshold_quantile)
    bridge = 1.3 * np.sqrt(thr)
    tube = bridge * np.exp(-(r**2) / (2 * sigma**2)) \
        * np.exp(-((z / (1.05 * sep)) ** 8))
    return ScalarFieldRZ(grid, lobes + tube), sep


def check_pincer(ctx: _Ctx) -> LemmaCheckResult:
    grid = ctx.grid
    blob = bump_field(grid, 0.0, 0.2 * grid.l_z, 0.07 * grid.r_max,
                      0.07 * grid.r_max)
    p1 = detect_packets(blob, 0.9)[0]
    coh1, _ = coherence_test(p1, blob, ctx.cfg.eta)
    lobes, sep = bridged_two_lobe(grid)
    pl = detect_packets(lobes, 0.05, min_cells=4)
    joint = max(pl, key=lambda p: p.n_cells)
    z_cells = grid.z_nodes[joint.cells[1]]
    spans_both = bool(z_cells.max() - z_cells.min() > 1.5 * sep)
    frac = joint.eta_measured
    label = classify(joint, lobes, ClassifyParams(eta=0.6, k=min(ctx.sing),
                                                  scan=_cheap_scan(lobes)))
    ok = bool(coh1) and spans_both and abs(frac - 0.5) < 0.1 \
        and label == "fragmentation"
    return LemmaCheckResult(
        "L4.2", "coherence-fragmentation pincer", "pass_required", ok,
        {"blob_coherent": bool(coh1), "joint_spans_lobes": bool(spans_both),
         "two_lobe_fraction": float(frac), "two_lobe_label": label},
        {"two_lobe_fraction": [0.4, 0.6]})


def _cheap_scan(g):
    lo = 4.5 * g.grid.dr_max
    return sup_scan(g, (lo, min(g.grid.l_z, g.grid.r_max) / 2.0))


def coherent_packet_cases(grid, n_packets: int, eta: float, c0: float,
                          seed: int):
    """Randomized eta-coherent near-axis packets with their recenter results.

    Packets are axis-hugging bumps; draws that fail the lemma's hypotheses
    (coherence at a qualifying center, center radius below c0 lambda) are
    discarded, mirroring the lemma's conditioning.
    """
    rng = np.random.default_rng(seed)
    cases = []
    attempts = 0
    while len(cases) < n_packets and attempts < 50 * n_packets:
        attempts += 1
        sr = rng.uniform(0.04, 0.10) * grid.r_max
        sz = rng.uniform(0.04, 0.10) * grid.r_max
        r0 = rng.uniform(0.0, 2.5) * sr
        z0 = rng.uniform(-0.4, 0.4) * grid.l_z
        amp = rng.uniform(0.5, 2.0)
        f = bump_field(grid, r0, z0, sr, sz, amplitude=amp)
        pkts = detect_packets(f, 0.9)
        if not pkts:
            continue
        p = pkts[0]
        if p.center_r > c0 * p.lambda_n or p.eta_measured < eta:
            continue
        try:
            radius, kappa, achieved = recenter(p, eta, c0)
        except RegimeError:
            continue
        floor = kappa * p.lambda_n**-4 * p.mass
        cases.append({"achieved": achieved, "floor": floor,
                      "margin": achieved / floor, "lambda": p.lambda_n,
                      "center_r": p.center_r})
    return cases


def check_recentering(ctx: _Ctx) -> LemmaCheckResult:
    cases = coherent_packet_cases(ctx.grid, ctx.cfg.n_packets, ctx.cfg.eta,
                                  ctx.cfg.c0, ctx.cfg.seed + 7)
    all_hold = (len(cases) == ctx.cfg.n_packets
                and all(c["achieved"] >= c["floor"] * (1 - 1e-12) for c in cases))
    kappa_exact = recenter_kappa(0.5, 4.0)
    ok = all_hold and abs(kappa_exact - 8e-4) < 1e-12
    min_margin = min((c["margin"] for c in cases), default=float("nan"))
    return LemmaCheckResult(
        "L4.3", "recentering to axis", "pass_required", ok,
        {"n_cases": len(cases), "min_margin": float(min_margin),
         "kappa_rec_half_4": kappa_exact},
        {"all_hold": ctx.cfg.n_packets, "kappa_rec": 8e-4})


def check_starvation_monitor(ctx: _Ctx) -> LemmaCheckResult:
    cfg = SolverConfig(nr=96, nz=128, r_max=3.0, l_z=3.0, dt=2e-4, t_end=6e-3,
                       snapshot_every=10, initial="gaussian", amplitude=2.0)
    result = run(cfg)
    snaps = [(s.time, s.g) for s in result.snapshots]
    part = DyadicPartition(0, 4)
    recs = starvation_monitor(snaps, kappa=1e-6, c_starv=0.1, big_c_starv=10.0,
                              partition=part, sing_range=[1, 2],
                              classify_params=ClassifyParams(
                                  eta=0.3, k=2, aspect_max=50.0),
                              fitted_c=1.0)
    n_eval = sum(1 for r in recs if not r.get("skipped"))
    residuals = [r["residual"] for r in recs if not r.get("skipped")]
    return LemmaCheckResult(
        "T5.1", "starvation inequality monitor", "report_only", None,
        {"snapshots": len(recs), "evaluated": n_eval,
         "residuals": residuals}, {},
        note="constants are caller hypotheses; residuals recorded only")


def check_window_cover(ctx: _Ctx) -> LemmaCheckResult:
    grid = ctx.grid
    rng = np.random.default_rng(ctx.cfg.seed + 11)
    k = min(ctx.sing)
    lam = 2.0**-k
    all_ok = True
    max_j = 0
    for _ in range(10):
        z0 = rng.uniform(-0.3, 0.3) * grid.l_z
        zlen = rng.uniform(0.5, 2.5) * lam
        f = bump_field(grid, 0.0, z0, 0.25 * lam, zlen / 2.0)
        p = detect_packets(f, 0.9)[0]
        try:
            cov = window_cover(p, k, n0=ctx.cfg.n0)
        except RegimeError:
            all_ok = False
            continue
        max_j = max(max_j, len(cov.indices))
        ii, jj = p.cells
        r = grid.radial_nodes[ii]
        z = grid.z_nodes[jj]
        covered = np.zeros(len(ii), dtype=bool)
        for b in cov.balls + cov.balls_star:
            covered |= (r**2 + (z - b.z0) ** 2) <= b.lam**2
        core_cov = np.zeros(len(ii), dtype=bool)
        for b in cov.balls:
            core_cov |= (r**2 + (z - b.z0) ** 2) <= b.lam**2
        all_ok &= bool(np.all(covered)) and bool(np.all(core_cov[r < lam]))
        zs = np.linspace(-grid.l_z, grid.l_z, 4001)
        c1, c2, c3 = cov.overlap_counts(np.zeros_like(zs), zs)
        all_ok &= c1.max() <= 3 and c2.max() <= 7 and c3.max() <= 11
    return LemmaCheckResult(
        "L6.1", "packet-window cover", "pass_required", all_ok,
        {"max_J": max_j}, {"N0": ctx.cfg.n0, "overlap": [3, 7, 11]})


def check_local_dyadic_mass(ctx: _Ctx) -> LemmaCheckResult:
    fits, encl = [], []
    for g in ctx.diffuse_fields():
        rep = delta_sup(g, ctx.sing)
        c_fit, c_max = local_mass_constant(g, ctx.partition, ctx.sing, rep.delta)
        fits.append(c_fit)
        encl.append(c_max)
    ok = _stable(fits)
    return LemmaCheckResult(
        "L7.1", "local dyadic mass bound", "exponent", ok,
        {"fitted_C0": float(np.median(fits)),
         "spread": [float(min(fits)), float(max(fits))],
         "enclosing_C0": float(max(encl))},
        {"stability": "within +-50% of median"},
        note="constant fitted by least squares; scaling enters through the "
             "sqrt(delta) 2^{-2k} normalization")


def check_velocity_block(ctx: _Ctx) -> LemmaCheckResult:
    grid = ctx.grid
    fits, encl = [], []
    for g in ctx.diffuse_fields():
        rep = delta_sup(g, ctx.sing)
        U = lifted_velocity_from_g(g)
        c_fit, c_max = velocity_block_constant(g, U, ctx.partition, ctx.sing,
                                               rep.delta)
        fits.append(c_fit)
        encl.append(c_max)
    stable = _stable(fits)
    # scaling across one shell on a self-similar concentrated pair: the
    # Leray-projected lift carries an extra factor r near the axis, so the
    # normalized sup must decrease at least as fast as the 2^{-1/2} that the
    # order -1 bound alone allows (measured: close to 2^{-3/2})
    k_lo = min(ctx.sing)
    b = {}
    for k in (k_lo, k_lo + 1):
        f = shell_concentrated_field(grid, ctx.partition, k,
                                     width=0.5 * 2.0**-k)
        d = delta_sup(f, [k]).delta
        U = lifted_velocity_from_g(f)
        b[k] = float(np.max(shell_block(U, k, ctx.partition).magnitude())) / np.sqrt(d)
    ratio = b[k_lo + 1] / b[k_lo]
    ratio_ok = ratio <= 2.0**-0.5 * 1.2
    k_hi = max(ctx.sing)
    f = shell_concentrated_field(grid, ctx.partition, k_hi)
    U = lifted_velocity_from_g(f)
    blk = shell_block(U, k_hi, ctx.partition).magnitude()
    sups, dists = [], []
    for ball in k_lattice(grid, k_hi):
        m = ball_mask(grid, ball)
        if m.any():
            sups.append(float(np.max(blk[m])))
            dists.append(abs(ball.z0) / 2.0**-k_hi)
    expo = decay_exponent(np.array(dists), np.array(sups))
    ok = stable and ratio_ok and expo >= 4.0
    return LemmaCheckResult(
        "L7.2", "lifted velocity block bound", "exponent", ok,
        {"fitted_C1": float(np.median(fits)),
         "spread": [float(min(fits)), float(max(fits))],
         "enclosing_C1": float(max(encl)),
         "k_ratio": float(ratio), "decay_exponent": float(expo)},
        {"k_ratio": "<= 2^-1/2 * 1.2", "decay_exponent": 4.0},
        note="the realized lift gains an extra axis factor r, so the "
             "measured shell ratio sits near 2^{-3/2}, inside the bound")


def frequency_overlap_worst(grid, partition, content_ks, pair_ks, seed: int):
    """Worst normalized Delta_k(U_j Gt_j) residual over admissible (j, k)."""
    env = axis_tube_envelope(grid, grid.r_max / 5.0, grid.l_z / 3.0)
    f = random_band_field(grid, partition, content_ks, seed, envelope=env)
    U = lifted_velocity_from_g(f)
    worst = 0.0
    n_pairs = 0
    for k in pair_ks:
        for j in pair_ks:
            if j >= k - 4 or j not in partition.ks:
                continue
            U_j = shell_block(U, j, partition)
            gt_vals = sum(shell_project(f, m, partition).values
                          for m in (j - 1, j, j + 1) if m in partition.ks)
            gt = ScalarFieldRZ(grid, gt_vals)
            res = frequency_overlap_check(U_j, gt, k, partition)
            den = (float(np.max(U_j.magnitude()))
                   * np.sqrt(integrate_mu5_values(gt.values**2, grid)))
            if den < 1e-30:
                continue
            worst = max(worst, res / den)
            n_pairs += 1
    return worst, n_pairs


def check_frequency_overlap(ctx: _Ctx) -> LemmaCheckResult:
    # shells below index 2 carry kernel tails that reach the domain boundary
    # at desk scale, so the support-arithmetic check starts at j = 2
    base = ctx.cfg.k_shift
    content = [k for k in range(2 + base, 7 + base) if k in ctx.partition.ks]
    pairs = [k for k in ctx.partition.ks if k >= 2 + base]
    worst, n_pairs = frequency_overlap_worst(ctx.grid, ctx.partition, content,
                                             pairs, ctx.cfg.seed + 23)
    ok = worst < 1e-7 and n_pairs >= 3
    return LemmaCheckResult(
        "L8.1", "exact frequency overlap", "pass_required", ok,
        {"worst_ratio": float(worst), "n_pairs": n_pairs}, {"ratio": 1e-7},
        note="checked for band indices >= 2 where truncation tails at the "
             "boundary sit below the tolerance")


def check_divfree_transfer(ctx: _Ctx, n_fields: int = 4) -> LemmaCheckResult:
    from .paraproduct import _Workspace, hh_pairing_forms

    worst_pair = 0.0
    worst_div = 0.0
    for i in range(n_fields):
        g = ctx.band_field(ctx.cfg.seed + 31 + i, envelope=True)
        U = lifted_velocity_from_g(g)
        worst_div = max(worst_div, U.divfree_residual)
        ws = _Workspace(g, U, ctx.partition)
        for k in ctx.sing:
            for j in range(max(k - 1, min(ctx.sing)), min(k + 2, max(ctx.sing) + 1)):
                fa, fb, scale = hh_pairing_forms(ws, j, k)
                if scale < 1e-30:
                    continue
                worst_pair = max(worst_pair, abs(fa - fb) / scale)
    ok = worst_pair < 1e-6 and worst_div < 1e-6
    return LemmaCheckResult(
        "L8.2", "divergence-free transfer", "pass_required", ok,
        {"worst_ibp_reldiff": float(worst_pair),
         "worst_div_residual": float(worst_div)},
        {"ibp": 1e-6, "div": 1e-6},
        note="pairing agreement measured against its Cauchy-Schwarz scale")


def check_projector_product(ctx: _Ctx) -> LemmaCheckResult:
    return _product_bound_check(ctx, "L8.3", "projector on product", True)


def check_transport_product(ctx: _Ctx) -> LemmaCheckResult:
    return _product_bound_check(ctx, "L8.4", "localized transport product", False)


def _product_bound_check(ctx, lemma_id, name, projector_form: bool):
    from .fitting import projector_product_profile, transport_product_profile

    grid = ctx.grid
    fits = []
    for g in ctx.diffuse_fields():
        U = lifted_velocity_from_g(g)
        pl, pr, tl, tr = product_profiles_all_shells(
            g, U, ctx.partition, ctx.sing, grid.l_z / 2.0 + 0.5)
        fits.append(lsq_constant(pl, pr) if projector_form
                    else lsq_constant(tl, tr))
    stable = _stable(fits)
    k = max(ctx.sing)
    f = shell_concentrated_field(grid, ctx.partition, k)
    U = lifted_velocity_from_g(f)
    U_k = shell_block(U, k, ctx.partition)
    balls = k_lattice(grid, k)
    if projector_form:
        b = ScalarFieldRZ(grid, shell_project(f, k, ctx.partition).values)
        lhs, _ = projector_product_profile(U_k, b, k, ctx.partition, balls)
    else:
        lhs, _ = transport_product_profile(U_k, f, k, ctx.partition, balls)
    dists = np.array([abs(bb.z0) / (2.0**-k) for bb in balls])
    expo = decay_exponent(dists, lhs)
    ok = stable and expo >= 4.0
    return LemmaCheckResult(
        lemma_id, name, "exponent", ok,
        {"fitted_C": float(np.median(fits)),
         "spread": [float(min(fits)), float(max(fits))],
         "decay_exponent": float(expo)},
        {"stability": "within +-50% of median", "decay_exponent": 4.0})


def check_finite_overlap(ctx: _Ctx, n_fields: int = 5) -> LemmaCheckResult:
    grid = ctx.grid
    worst = 0.0
    for i in range(n_fields):
        g = ctx.band_field(ctx.cfg.seed + 61 + i, envelope=True)
        for k in ctx.sing:
            shell = shell_project(g, k, ctx.partition)
            total = integrate_mu5_values(shell.values**2, grid)
            if total < 1e-28:
                continue
            window = centered_window(0.0, k, ctx.cfg.n0)
            local = float(np.sum(ball_l2_norms(shell.values, grid, window) ** 2))
            worst = max(worst, local / total)
    lam = 2.0 ** -min(ctx.sing)
    balls = [AxisBall(i * lam, lam) for i in range(-6, 7)]
    zs = np.concatenate([np.linspace(-5 * lam, 5 * lam, 3001),
                         np.arange(-5, 6) * lam])
    counts = np.zeros(len(zs), int)
    for b in balls:
        counts += (zs - b.z0) ** 2 <= b.lam**2 + 1e-15
    counts_ok = counts.max() == 3
    ok = worst <= 3.0 + 1e-9 and counts_ok
    return LemmaCheckResult(
        "L8.5", "finite-overlap shell summation", "pass_required", ok,
        {"worst_sum_ratio": float(worst), "max_axis_count": int(counts.max())},
        {"sum_ratio": 3.0, "axis_count": 3})


def check_dissipation_equivalence(ctx: _Ctx, n_fields: int = 5) -> LemmaCheckResult:
    part = ctx.partition
    rep = part.validate(rng=np.random.default_rng(ctx.cfg.seed))
    hyp_ok = rep["square_sum_min"] >= 0.5 - 1e-9 and rep["square_sum_max"] <= 1.0 + 1e-12
    ratios = []
    ks_interior = list(part.ks)[1:-1]
    for i in range(n_fields):
        f = ctx.band_field(ctx.cfg.seed + 71 + i, ks=ks_interior)
        dec = decompose(f, part)
        s = square_function_sum(dec)
        gn = grad_norm_sq_mu5(f)
        if gn > 0:
            ratios.append(s / gn)
    ratios = np.array(ratios)
    ok = hyp_ok and bool(np.all((ratios >= 0.125) & (ratios <= 4.0)))
    return LemmaCheckResult(
        "L8.6", "dissipation equivalence", "pass_required", ok,
        {"ratio_min": float(ratios.min()), "ratio_max": float(ratios.max()),
         "square_sum_ok": bool(hyp_ok)},
        {"ratio": [0.125, 4.0]})


def diffuse_trend(grid, partition, sing, seed: int, steps: int,
                  n0: int = 8, delta0: float = 0.05, fit_margin: float = 1.2):
    """Audit sequence along delta_n = delta0 4^{-n}.

    One diffuse realization is rescaled in amplitude (delta is quadratic in
    amplitude), isolating the delta dependence from realization noise.  The
    audit constant is fitted on the first member and frozen; subsequent
    members are audited against it.
    """
    tube = 1.2 * 2.0 ** -min(sing)
    base = diffuse_field(grid, partition, sing, seed, tube, grid.l_z / 2.0,
                         target_delta=delta0)
    cover = {k: centered_window(0.0, k, n0) for k in sing}
    rows = []
    fitted_c = None
    for n in range(steps):
        f = ScalarFieldRZ(grid, base.values * 2.0**-n, role_tag="g")
        rep = delta_sup(f, sing)
        U = lifted_velocity_from_g(f)
        if fitted_c is None:
            psi1 = psi_factors(rep.delta, rep.j_min, n0, 1.0)[0]
            first = decompose_nonlinearity(f, U, sing, cover, partition,
                                           fitted_c=1.0, n0=n0,
                                           delta_report=rep)
            denom = psi1 * first.D_crit + first.R_low
            fitted_c = fit_margin * max(abs(first.N_total) / denom, 1e-12)
        pr = decompose_nonlinearity(f, U, sing, cover, partition,
                                    fitted_c=fitted_c, n0=n0, delta_report=rep)
        rows.append({"n": n, "delta": pr.delta,
                     "ratio": abs(pr.N_total) / pr.D_crit,
                     "psi": pr.psi, "bound_pass": pr.bound_pass,
                     "margin": pr.margin, "fitted_C": fitted_c})
    return rows


def check_diffuse_trend(ctx: _Ctx, steps=None) -> LemmaCheckResult:
    steps = steps or ctx.cfg.l91_steps
    rows = diffuse_trend(ctx.grid, ctx.partition, ctx.sing,
                         ctx.cfg.seed + 400, steps, n0=ctx.cfg.n0)
    ratios = [r["ratio"] for r in rows]
    mono = all(ratios[i + 1] <= ratios[i] * 1.10 for i in range(len(ratios) - 1))
    audits = all(r["bound_pass"] for r in rows)
    return LemmaCheckResult(
        "L9.1", "localized paraproduct smallness trend", "report_only", None,
        {"rows": rows, "monotone_within_10pct": bool(mono),
         "audits_pass": bool(audits)}, {},
        note="trend recorded; acceptance suite asserts it at full scale")


_CHECKS = [check_partition, check_bernstein, check_measure_identification,
           check_ring_capture, check_pincer, check_recentering,
           check_starvation_monitor, check_window_cover,
           check_local_dyadic_mass, check_velocity_block,
           check_frequency_overlap, check_divfree_transfer,
           check_projector_product, check_transport_product,
           check_finite_overlap, check_dissipation_equivalence,
           check_diffuse_trend]


def run_suite(cfg: SuiteConfig | None = None):
    """Run every lemma check once; returns (results, all_required_pass)."""
    cfg = cfg or SuiteConfig()
    ctx = _Ctx(cfg)
    results = []
    for fn in _CHECKS:
        try:
            results.append(fn(ctx))
        except Exception as exc:  # a crashed check is a failed check
            results.append(LemmaCheckResult(
                _infer_id(fn), fn.__name__, "pass_required", False,
                {}, {}, note=f"{type(exc).__name__}: {exc}"))
    seen = [r.lemma_id for r in results]
    assert sorted(seen) == sorted(LEMMA_IDS), f"suite coverage mismatch: {seen}"
    ok = all(r.passed for r in results if r.mode != "report_only")
    return results, ok


def _infer_id(fn) -> str:
    mapping = {check_partition: "partition", check_bernstein: "bernstein",
               check_measure_identification: "L3.1", check_ring_capture: "L4.1",
               check_pincer: "L4.2", check_recentering: "L4.3",
               check_starvation_monitor: "T5.1", check_window_cover: "L6.1",
               check_local_dyadic_mass: "L7.1", check_velocity_block: "L7.2",
               check_frequency_overlap: "L8.1", check_divfree_transfer: "L8.2",
               check_projector_product: "L8.3", check_transport_product: "L8.4",
               check_finite_overlap: "L8.5",
               check_dissipation_equivalence: "L8.6",
               check_diffuse_trend: "L9.1"}
    return mapping[fn]
