"""Bony decomposition of the lifted transport term over a dyadic range.

The audited quantity is the shell-by-shell interaction sum

    N = sum_k ( I_k^LH + I_k^HL + I_k^HH ),

with every term restricted to the lattice-ball cover supplied per shell.
LH pairs the singular-range low pass of the lifted velocity against the
full gradient; HL pairs the velocity shell against the low-passed gradient;
HH runs over bands j >= k - 4 (below that the shell projector annihilates
the product exactly for this partition) and is evaluated in its
integrated-by-parts form - int Delta_k(U_j Gt_j) . grad5 Delta_k g, which
is legitimate because the lifted blocks are divergence free.

The audit compares |N| against psi(delta) * D_crit + C * R_low where
D_crit is the singular-range square-function sum, and R_low collects the
complementary shells plus the explicit decomposition remainder.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .biotsavart import LiftedVelocity, lifted_velocity_from_g
from .errors import ResolutionError
from .extraction import DeltaReport, delta_sup, score
from .fields import ScalarFieldRZ, ball_mask, integrate_mu5_values
from .grid import AxisBall
from .packets import ClassifyParams, centered_window, classify, detect_packets
from .spectral import DyadicPartition, get_plan


@dataclass
class ParaproductReport:
    """Per-shell interaction integrals plus the audited inequality data."""

    k_range: list[int]
    D: dict[int, float]
    I_LH: dict[int, float]
    I_HL: dict[int, float]
    I_HH: dict[int, float]
    N_total: float
    D_crit: float
    R_low: float
    delta: float
    j_min: int
    psi: float
    psi_HL: float
    psi_HH: float
    fitted_C: float
    N0: int
    n_lift_global: float
    remainder: float
    cover_exterior: float
    bound_pass: bool | None = None
    margin: float | None = None
    extras: dict = field(default_factory=dict)

    def csv_rows(self):
        for k in self.k_range:
            yield (k, self.D[k], self.I_LH[k], self.I_HL[k], self.I_HH[k])

    def to_json(self) -> dict:
        return {
            "k_range": list(self.k_range),
            "D": {str(k): v for k, v in self.D.items()},
            "I_LH": {str(k): v for k, v in self.I_LH.items()},
            "I_HL": {str(k): v for k, v in self.I_HL.items()},
            "I_HH": {str(k): v for k, v in self.I_HH.items()},
            "N_total": self.N_total,
            "D_crit": self.D_crit,
            "R_low": self.R_low,
            "delta": self.delta,
            "j_min": self.j_min,
            "psi": self.psi,
            "psi_HL": self.psi_HL,
            "psi_HH": self.psi_HH,
            "fitted_C": self.fitted_C,
            "N0": self.N0,
            "n_lift_global": self.n_lift_global,
            "remainder": self.remainder,
            "cover_exterior": self.cover_exterior,
            "bound_pass": self.bound_pass,
            "margin": self.margin,
            **self.extras,
        }


def psi_factors(delta: float, j_min: int, n0: int, fitted_c: float):
    """Smallness prefactors of the three interaction families.

    psi     = C sqrt(delta) * sum_{l >= j_min} 2^{-l/2}
            = C sqrt(delta) * 2^{-j_min/2} / (1 - 2^{-1/2}),
    psi_HL  = psi_HH = C N0 sqrt(delta) * 2^{-3 j_min / 2}.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    root = np.sqrt(delta)
    psi = fitted_c * root * 2.0 ** (-j_min / 2.0) / (1.0 - 2.0**-0.5)
    psi_hl = fitted_c * n0 * root * 2.0 ** (-1.5 * j_min)
    return float(psi), float(psi_hl), float(psi_hl)


def schur_sum(d, kernel_exponent: float = 1.5, direction: str = "lower",
              c0: int = 4) -> float:
    """Bilinear form sum with a one-sided exponential kernel.

    direction 'lower': K(k, l) = 2^{-a(k-l)} for l < k (HL cascade);
    direction 'upper': K(k, l) = 2^{-a(l-k)} for l >= k - c0 (HH cascade).
    The geometric row-sum bound sum <= (sum_m kernel) * sum_k d_k^2 is
    asserted before returning.
    """
    if isinstance(d, dict):
        ks = sorted(d)
        vals = np.array([d[k] for k in ks], float)
    else:
        vals = np.asarray(d, float)
        ks = list(range(len(vals)))
    if np.any(vals < 0) or not np.all(np.isfinite(vals)):
        raise ValueError("d must be finite and nonnegative")
    a = kernel_exponent
    total = 0.0
    for i, k in enumerate(ks):
        for j, l in enumerate(ks):
            if direction == "lower":
                if l < k:
                    total += 2.0 ** (-a * (k - l)) * vals[i] * vals[j]
            elif direction == "upper":
                if l >= k - c0:
                    total += 2.0 ** (-a * (l - k)) * vals[i] * vals[j]
            else:
                raise ValueError(f"unknown direction {direction!r}")
    if direction == "lower":
        row = 2.0**-a / (1.0 - 2.0**-a)
    else:
        row = 2.0 ** (a * c0) / (1.0 - 2.0**-a)
    bound = row * float(np.sum(vals**2))
    assert total <= bound * (1.0 + 1e-12) + 1e-300, (total, bound)
    return float(total)


class _Workspace:
    """Shared spectral scratch for one decomposition call."""

    def __init__(self, g: ScalarFieldRZ, U: LiftedVelocity,
                 partition: DyadicPartition):
        self.plan = plan = get_plan(g.grid)
        self.grid = g.grid
        self.partition = partition
        self.sym = {k: partition.psi(k, plan.xi) for k in partition.ks}
        self.cg = plan.scalar_analyze(g.values)
        self.cur = plan.vector_analyze(U.v_radial.values)
        self.cuz = plan.scalar_analyze(U.v_z.values)
        self.g_shell = {k: plan.scalar_synthesize(self.cg * s)
                        for k, s in self.sym.items()}
        self.u_shell = {}
        for k, s in self.sym.items():
            self.u_shell[k] = (plan.vector_synthesize(self.cur * s),
                               plan.scalar_synthesize(self.cuz * s))
        gr = plan.vector_synthesize(plan.dr_coeffs(self.cg))
        gz = plan.scalar_synthesize(plan.dz_coeffs(self.cg))
        self.grad_g = (gr, gz)
        self.w2d = g.grid.quadrature_weights_r[:, None] * g.grid.dz

    def low_symbol(self, k: int, sing) -> np.ndarray:
        out = np.zeros_like(self.plan.xi)
        for l in sing:
            if l < k:
                out += self.sym[l]
        return out

    def shell_scalar(self, values: np.ndarray, k: int) -> np.ndarray:
        plan = self.plan
        return plan.scalar_synthesize(plan.scalar_analyze(values) * self.sym[k])

    def shell_vector(self, vr: np.ndarray, vz: np.ndarray, k: int):
        plan = self.plan
        return (plan.vector_synthesize(plan.vector_analyze(vr) * self.sym[k]),
                plan.scalar_synthesize(plan.scalar_analyze(vz) * self.sym[k]))

    def g_tilde(self, j: int) -> np.ndarray:
        ks = self.partition.ks
        return sum(self.g_shell[m] for m in (j - 1, j, j + 1) if m in ks)

    def shell_grad(self, k: int):
        plan = self.plan
        ck = self.cg * self.sym[k]
        return (plan.vector_synthesize(plan.dr_coeffs(ck)),
                plan.scalar_synthesize(plan.dz_coeffs(ck)))

    def ball_integral(self, values: np.ndarray, ball: AxisBall) -> float:
        mask = ball_mask(self.grid, ball)
        return float(np.sum((values * self.w2d)[mask]))


def hh_pairing_forms(ws: _Workspace, j: int, k: int):
    """Both integration-by-parts forms of one (j, k) high-high pairing.

    Form A:  int Delta_k(U_j . grad5 Gt_j) Delta_k g dmu5
    Form B: -int Delta_k(U_j Gt_j) . grad5 Delta_k g dmu5
    They agree when the lifted blocks are divergence free.  The returned
    scale is the Cauchy-Schwarz magnitude of form B's integrand, the right
    yardstick for "relative" when the pairing itself nearly cancels.
    """
    plan = ws.plan
    vr_j, vz_j = ws.u_shell[j]
    gt = ws.g_tilde(j)
    cgt = plan.scalar_analyze(gt)
    gtr = plan.vector_synthesize(plan.dr_coeffs(cgt))
    gtz = plan.scalar_synthesize(plan.dz_coeffs(cgt))
    transport = vr_j * gtr + vz_j * gtz
    form_a = integrate_mu5_values(ws.shell_scalar(transport, k) * ws.g_shell[k],
                                  ws.grid)
    pr, pz = ws.shell_vector(vr_j * gt, vz_j * gt, k)
    dgr, dgz = ws.shell_grad(k)
    form_b = -integrate_mu5_values(pr * dgr + pz * dgz, ws.grid)
    scale = np.sqrt(integrate_mu5_values(pr**2 + pz**2, ws.grid)
                    * integrate_mu5_values(dgr**2 + dgz**2, ws.grid))
    return form_a, form_b, scale


def decompose_nonlinearity(g: ScalarFieldRZ, U: LiftedVelocity, k_range,
                           cover_per_k: dict[int, list[AxisBall]],
                           partition: DyadicPartition, *,
                           fitted_c: float = 1.0, n0: int = 8,
                           delta_report: DeltaReport | None = None) -> ParaproductReport:
    """Cover-restricted LH/HL/HH interaction integrals over the given shells."""
    ks = sorted(k_range)
    for k in ks:
        partition.require_k(k)
        if k not in cover_per_k:
            raise ValueError(f"no cover supplied for shell {k}")
    ws = _Workspace(g, U, partition)
    plan = ws.plan

    d_map = {k: 2.0**k * np.sqrt(integrate_mu5_values(ws.g_shell[k] ** 2, g.grid))
             for k in partition.ks}
    d_crit = sum(4.0**k * integrate_mu5_values(ws.g_shell[k] ** 2, g.grid)
                 for k in ks)
    r_complement = sum(4.0**k * integrate_mu5_values(ws.g_shell[k] ** 2, g.grid)
                       for k in partition.ks if k not in ks)

    gr, gz = ws.grad_g
    i_lh, i_hl, i_hh = {}, {}, {}
    cover_interior_total = 0.0
    interaction_total = 0.0
    # band-product analyses are reused across target shells
    prod_coeffs: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for j in partition.ks:
        if j < min(ks) - 4:
            continue
        vr_j, vz_j = ws.u_shell[j]
        gt = ws.g_tilde(j)
        prod_coeffs[j] = (plan.vector_analyze(vr_j * gt),
                          plan.scalar_analyze(vz_j * gt))
    for k in ks:
        balls = cover_per_k[k]
        low = ws.low_symbol(k, ks)
        # LH: singular low pass of U against the full gradient
        ulr = plan.vector_synthesize(ws.cur * low)
        ulz = plan.scalar_synthesize(ws.cuz * low)
        t_lh = ws.shell_scalar(ulr * gr + ulz * gz, k) * ws.g_shell[k]
        # HL: velocity shell against the low-passed gradient
        cg_low = ws.cg * low
        sgr = plan.vector_synthesize(plan.dr_coeffs(cg_low))
        sgz = plan.scalar_synthesize(plan.dz_coeffs(cg_low))
        vr_k, vz_k = ws.u_shell[k]
        t_hl = ws.shell_scalar(vr_k * sgr + vz_k * sgz, k) * ws.g_shell[k]
        # HH in integrated-by-parts form over the finite band
        dgr, dgz = ws.shell_grad(k)
        t_hh = np.zeros_like(t_lh)
        for j in partition.ks:
            if j < k - 4:
                continue
            cpr, cpz = prod_coeffs[j]
            pr = plan.vector_synthesize(cpr * ws.sym[k])
            pz = plan.scalar_synthesize(cpz * ws.sym[k])
            t_hh -= pr * dgr + pz * dgz
        i_lh[k] = sum(ws.ball_integral(t_lh, b) for b in balls)
        i_hl[k] = sum(ws.ball_integral(t_hl, b) for b in balls)
        i_hh[k] = sum(ws.ball_integral(t_hh, b) for b in balls)
        interaction_total += i_lh[k] + i_hl[k] + i_hh[k]
        whole = (integrate_mu5_values(t_lh, g.grid)
                 + integrate_mu5_values(t_hl, g.grid)
                 + integrate_mu5_values(t_hh, g.grid))
        cover_interior_total += whole

    n_glob = integrate_mu5_values((U.v_radial.values * gr + U.v_z.values * gz)
                                  * g.values, g.grid)
    remainder = n_glob - interaction_total
    cover_exterior = cover_interior_total - interaction_total

    if delta_report is None:
        delta_report = delta_sup(g, ks)
    psi, psi_hl, psi_hh = psi_factors(delta_report.delta, delta_report.j_min,
                                      n0, fitted_c)
    report = ParaproductReport(
        k_range=ks,
        D={k: float(d_map[k]) for k in ks},
        I_LH=i_lh, I_HL=i_hl, I_HH=i_hh,
        N_total=float(interaction_total),
        D_crit=float(d_crit),
        R_low=float(r_complement + abs(remainder)),
        delta=delta_report.delta,
        j_min=delta_report.j_min,
        psi=psi, psi_HL=psi_hl, psi_HH=psi_hh,
        fitted_C=fitted_c, N0=n0,
        n_lift_global=float(n_glob),
        remainder=float(remainder),
        cover_exterior=float(cover_exterior),
    )
    audit_bound(report)
    return report


def audit_bound(report: ParaproductReport) -> bool:
    """Check |N| <= psi * D_crit + C * R_low and record the margin."""
    lhs = abs(report.N_total)
    rhs = report.psi * report.D_crit + report.fitted_C * report.R_low
    report.margin = float(rhs - lhs)
    report.bound_pass = bool(lhs <= rhs)
    return report.bound_pass


def starvation_monitor(snapshots, kappa: float, c_starv: float, big_c_starv: float,
                       *, partition: DyadicPartition, sing_range,
                       classify_params: ClassifyParams | None = None,
                       n0: int = 8, fitted_c: float = 1.0,
                       threshold_quantile: float = 0.9) -> list[dict]:
    """Evaluate the coercive inequality residual on each snapshot.

    A snapshot is a (time, g field) pair.  For the first admissible proximal
    packet whose own-scale axis score reaches kappa, the localized
    interaction sum over the packet window is compared against
    (1 - c_starv) D_crit + C_starv R_low.  Constants are caller-supplied
    hypotheses; residuals are recorded, never asserted.
    """
    params = classify_params or ClassifyParams(k=min(sing_range))
    records = []
    for time, g in snapshots:
        rec = {"time": float(time)}
        packet = None
        for p in detect_packets(g, threshold_quantile):
            if classify(p, g, params) != "admissible_proximal":
                continue
            try:
                q = score(g, AxisBall(p.center_z, p.lambda_n))
            except ResolutionError:
                continue
            if q >= kappa:
                packet = p
                rec["q_at_packet"] = q
                break
        if packet is None:
            rec["skipped"] = True
            rec["note"] = "no admissible packet with score >= kappa"
            records.append(rec)
            continue
        cover = {k: centered_window(packet.center_z, k, n0) for k in sing_range}
        U = lifted_velocity_from_g(g)
        rep = decompose_nonlinearity(g, U, sing_range, cover, partition,
                                     fitted_c=fitted_c, n0=n0)
        lhs = abs(rep.N_total)
        rhs = (1.0 - c_starv) * rep.D_crit + big_c_starv * rep.R_low
        rec.update({
            "skipped": False,
            "n_loc": lhs,
            "d_crit": rep.D_crit,
            "r_low": rep.R_low,
            "rhs": rhs,
            "residual": rhs - lhs,
            "packet_center": [packet.center_r, packet.center_z],
            "packet_scale": packet.lambda_n,
        })
        records.append(rec)
    return records
