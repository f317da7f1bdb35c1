import numpy as np
import pytest
from conftest import mesh

from swirllab.errors import RegimeError
from swirllab.extraction import sup_scan
from swirllab.fields import ScalarFieldRZ
from swirllab.fitting import bump_field
from swirllab.lemmas import bridged_two_lobe
from swirllab.packets import (BRANCHES, ClassifyParams, classify,
                              coherence_test, detect_packets, window_cover)


def test_zero_field_no_packets(grid_base):
    g = ScalarFieldRZ(grid_base, np.zeros((grid_base.nr, grid_base.nz)))
    assert detect_packets(g) == []


def test_single_bump_detection(grid_base):
    g = bump_field(grid_base, 0.0, 0.6, 0.3, 0.3)
    packets = detect_packets(g, 0.9)
    assert len(packets) == 1
    p = packets[0]
    assert abs(p.center_z - 0.6) < 2 * grid_base.dz
    assert p.mass > 0 and p.lambda_n > 0
    assert 0.0 <= p.eta_measured <= 1.0


def test_two_far_bumps_two_packets(grid_base):
    g = ScalarFieldRZ(grid_base, bump_field(grid_base, 0.0, -2.0, 0.2, 0.2).values
                      + bump_field(grid_base, 0.0, 2.0, 0.2, 0.2).values)
    assert len(detect_packets(g, 0.9)) == 2


def test_detection_deterministic(grid_base):
    g = bump_field(grid_base, 0.2, -0.4, 0.25, 0.3)
    a = detect_packets(g, 0.9)
    b = detect_packets(g, 0.9)
    assert len(a) == len(b)
    for p, q in zip(a, b):
        assert p.center_r == q.center_r and p.mass == q.mass
        assert np.array_equal(p.cells[0], q.cells[0])


def test_periodic_seam_merge(grid_base):
    # bump straddling the z boundary is one packet with a sane center
    g = bump_field(grid_base, 0.0, grid_base.l_z - 0.05, 0.2, 0.3)
    packets = detect_packets(g, 0.9)
    assert len(packets) == 1
    z = packets[0].center_z
    assert min(abs(z - (grid_base.l_z - 0.05)), abs(z + (grid_base.l_z + 0.05))) < 0.2


def test_coherence_blob_and_two_lobe(grid_base):
    blob = bump_field(grid_base, 0.0, 0.0, 0.25, 0.25)
    p = detect_packets(blob, 0.9)[0]
    ok, _ = coherence_test(p, blob, 0.9)
    assert ok
    lobes, sep = bridged_two_lobe(grid_base)
    joint = max(detect_packets(lobes, 0.05), key=lambda q: q.n_cells)
    frac = joint.eta_measured
    assert abs(frac - 0.5) < 0.1
    ok, center = coherence_test(joint, lobes, 0.6)
    assert not ok
    assert abs(abs(center[1]) - sep) < 0.5  # the core ball sits on a lobe


def test_coherence_amplitude_invariant(grid_base):
    g = bump_field(grid_base, 0.1, 0.3, 0.2, 0.2)
    p1 = detect_packets(g, 0.9)[0]
    g2 = ScalarFieldRZ(grid_base, 2.0 * g.values)
    p2 = detect_packets(g2, 0.9)[0]
    assert p1.eta_measured == pytest.approx(p2.eta_measured, rel=1e-12)


def _classify_with_scan(p, g, **kw):
    params = ClassifyParams(scan=sup_scan(g, (4.5 * g.grid.dr_max, 1.0)), **kw)
    return classify(p, g, params)


def test_classify_admissible_proximal(grid_base):
    # the detected core must stay thick at scale 2^-k in both directions,
    # so the bump width sits well above that scale
    k = 2
    g = bump_field(grid_base, 0.0, 0.0, 1.5 * 2.0**-k, 1.5 * 2.0**-k)
    p = detect_packets(g, 0.9)[0]
    assert p.thickness_r >= 2.0**-k and p.thickness_z >= 2.0**-k
    label = _classify_with_scan(p, g, k=k)
    assert label == "admissible_proximal"


def test_classify_thin_ring(grid_base):
    g = bump_field(grid_base, 2.4, 0.0, 0.08, 0.08)
    p = detect_packets(g, 0.9)[0]
    assert p.center_r >= 10 * p.lambda_n
    assert _classify_with_scan(p, g, k=2) == "thin_ring"


def test_classify_slab(grid_base):
    r, z = mesh(grid_base)
    slab = np.exp(-(z**2) / (2 * 0.04**2)) * np.exp(-((r / 2.2) ** 8))
    g = ScalarFieldRZ(grid_base, slab)
    p = detect_packets(g, 0.9)[0]
    aspect = max(p.thickness_r / p.thickness_z, p.thickness_z / p.thickness_r)
    assert aspect > 20
    assert _classify_with_scan(p, g, k=2) == "slab_collapse"


def test_classify_fragmentation(grid_base):
    lobes, _ = bridged_two_lobe(grid_base)
    joint = max(detect_packets(lobes, 0.05), key=lambda q: q.n_cells)
    label = _classify_with_scan(joint, lobes, k=2, eta=0.6)
    assert label == "fragmentation"


def test_classify_displaced_only(grid_base):
    # weak coherent satellite far from the dominant score peak
    main = bump_field(grid_base, 0.0, -2.5, 0.25, 0.25, amplitude=1.0)
    side = bump_field(grid_base, 0.0, 2.5, 0.18, 0.18, amplitude=0.5)
    g = ScalarFieldRZ(grid_base, main.values + side.values)
    packets = detect_packets(g, 0.15)
    assert len(packets) == 2
    satellite = min(packets, key=lambda p: p.mass)
    assert satellite.center_z > 0
    label = _classify_with_scan(satellite, g, k=2)
    assert label == "displaced_only"


def test_classify_total_and_exclusive(grid_base, rng):
    fields = [bump_field(grid_base, rng.uniform(0, 1.2), rng.uniform(-2, 2),
                         rng.uniform(0.1, 0.4), rng.uniform(0.1, 0.4))
              for _ in range(6)]
    for g in fields:
        scan = sup_scan(g, (4.5 * grid_base.dr_max, 1.0))
        for p in detect_packets(g, 0.9):
            label = classify(p, g, ClassifyParams(k=2, scan=scan))
            assert label in BRANCHES


def test_window_cover_small_packet(grid_base):
    k = 2
    g = bump_field(grid_base, 0.0, 0.1, 0.25 * 2.0**-k, 0.5 * 2.0**-k)
    p = detect_packets(g, 0.9)[0]
    cov = window_cover(p, k)
    assert len(cov.indices) <= 3
    ii, jj = p.cells
    r = grid_base.radial_nodes[ii]
    z = grid_base.z_nodes[jj]
    covered = np.zeros(len(ii), bool)
    for b in cov.balls:
        covered |= (r**2 + (z - b.z0) ** 2) <= b.lam**2
    assert np.all(covered[r < 2.0**-k])


def test_window_cover_minimal_for_point(grid_base):
    # near point-like packet between two lattice sites: one ball suffices
    k = 2
    lam = 2.0**-k
    g = bump_field(grid_base, 0.0, 1.5 * lam, 0.3 * lam, 0.3 * lam)
    p = detect_packets(g, 0.9)[0]
    cov = window_cover(p, k)
    assert len(cov.indices) == 1


def test_window_cover_regime_error(grid_base):
    g = bump_field(grid_base, 1.5, 0.0, 0.2, 0.2)
    p = detect_packets(g, 0.9)[0]
    with pytest.raises(RegimeError):
        window_cover(p, 2)


def test_overlap_counts_exact(grid_base):
    k = 2
    g = bump_field(grid_base, 0.0, 0.0, 0.25 * 2.0**-k, 1.2 * 2.0**-k)
    p = detect_packets(g, 0.9)[0]
    cov = window_cover(p, k)
    lam = 2.0**-k
    # an axis point exactly on a lattice site lies in <= 3 closed balls
    zs = np.arange(-6, 7) * lam
    c, cs, cs2 = cov.overlap_counts(np.zeros_like(zs), zs)
    assert c.max() <= 3 and cs.max() <= 7 and cs2.max() <= 11
    dense = np.linspace(-1.0, 1.0, 5001)
    c, cs, cs2 = cov.overlap_counts(np.zeros_like(dense), dense)
    assert c.max() <= 3 and cs.max() <= 7 and cs2.max() <= 11
