import csv
import math
from functools import partial
from itertools import product

import numpy as np
import pytest

from rydgate.dataset import random_toy_dataset, toy_alkali
from rydgate.dressing import DriveConfig, design_triple, triple_from_drives
from rydgate.vdw import (
    C6Result, Channel, OracleError, ResonanceError, build_channels, c6_second_order,
    dressed_c6, evaluate_point, find_zeros, oracle_c6, pair_factor, perturbative_radius,
    scan_c6, scan_function, write_scan_csv,
)


def toy_triple(ds, alpha=0.6, scale=40.0):
    return design_triple(ds.m_ratio, alpha, scale).with_frequencies(ds)


def undressed(ds):
    return triple_from_drives(DriveConfig(0, 0, 0, 0), [1, 0, 0], [0, 1, 0]).with_frequencies(ds)


def two_level_c6(c3, delta, r):
    """Lower-branch shift of [[0, g], [g, -delta]] read as -C6/r^6 (GHz um^6)."""
    g = c3 / r ** 3
    e = -delta / 2 + math.copysign(math.sqrt((delta / 2) ** 2 + g * g), delta)
    return -e * r ** 6 / 1000.0


# ---------------------------------------------------------------- second order

def test_single_channel_example():
    ch = Channel("V1", ("c", "c"), ("u", "u"), 1000.0, 2000.0, 0.0)
    res = c6_second_order([ch])
    assert res.value == pytest.approx(-0.5)
    # exact two-level diagonalisation agrees at large r
    for r in (20.0, 40.0):
        assert two_level_c6(1000.0, 2000.0, r) == pytest.approx(res.value, rel=1e-6)


def test_defect_sign_flip():
    a = Channel("V1", ("c", "c"), ("u", "u"), 700.0, 1500.0, 0.0)
    b = Channel("V1", ("c", "c"), ("u", "u"), 700.0, -1500.0, 0.0)
    assert c6_second_order([a]).value == -c6_second_order([b]).value


def test_resonance_raises_or_flags():
    ch = Channel("V2", ("c", "c"), ("t", "3"), 100.0, 0.3, 0.0)
    other = Channel("V1", ("c", "c"), ("u", "u"), 100.0, 50.0, 0.0)
    with pytest.raises(ResonanceError, match="0.3"):
        c6_second_order([ch, other])
    res = c6_second_order([ch, other], on_resonance="flag")
    assert res.flags == (ch,)
    assert res.value == pytest.approx(other.contribution)


def test_pair_factor():
    assert pair_factor(0, 0) == 1.0
    assert pair_factor(1, -1) == pair_factor(-1, 1) == -0.5
    assert pair_factor(1, 0) == 0.0


def test_v2_channel_count():
    ds = toy_alkali()
    tr = toy_triple(ds)
    for sp in ("c", "t"):
        v2 = [ch for ch in build_channels(ds, tr, sp) if ch.kind == "V2"]
        assert len(v2) == 8
        assert all(ch.ket != (sp, sp) for ch in v2)
        lit = [ch for ch in build_channels(ds, tr, sp, mode="literal") if ch.kind == "V2"]
        assert len(lit) == 8


def test_undressed_limit_only_bare_channels():
    ds = toy_alkali()
    chans = [ch for ch in build_channels(ds, undressed(ds), "c") if ch.amplitude > 1e-12]
    assert chans
    assert {ch.kind for ch in chans} <= {"V1", "V3"}
    for ch in chans:
        if ch.kind == "V1":
            assert ch.floquet_shift == 0.0


def test_undressed_limit_matches_direct_sum():
    ds = toy_alkali()
    s = ds.s_id
    trip = set(ds.triple)
    # independent enumeration straight from the dipole list
    nbrs = []
    for el in ds.dipoles:
        if el.from_id == s:
            nbrs.append((el.to_id, el.q, el.mu))
        elif el.to_id == s:
            nbrs.append((el.from_id, -el.q, el.mu))
    total = 0.0
    for (a, qa, ma), (b, qb, mb) in product(nbrs, nbrs):
        if qa + qb != 0 or (a in trip and b in trip):
            continue
        v = (1.0 if qa == 0 else -0.5) * ma * mb
        defect = 2 * ds.energy(s) - ds.energy(a) - ds.energy(b)
        total += -v * v / defect / 1000.0
    res = c6_second_order(build_channels(ds, undressed(ds), "c"))
    assert res.value == pytest.approx(total, rel=1e-12)


def test_breakdown_additivity():
    ds = toy_alkali()
    res = dressed_c6(ds, toy_triple(ds))
    for sp, val in (("c", res.c6_c), ("t", res.c6_t)):
        b = res.contributions[sp]
        assert val == b["V1"] + b["V2"] + b["V3"]


def test_modes_differ_only_in_grouping():
    ds = toy_alkali()
    tr = toy_triple(ds)
    co = dressed_c6(ds, tr, mode="coherent")
    li = dressed_c6(ds, tr, mode="literal")
    for sp in ("c", "t"):
        assert co.contributions[sp]["V2"] == pytest.approx(li.contributions[sp]["V2"], rel=1e-12)
    with pytest.raises(ValueError):
        build_channels(ds, tr, "c", mode="other")


def test_missing_dipole_state_warns():
    ds = toy_alkali()
    doc = ds.to_dict()
    doc["states"].append({"id": "70f", "n": 70, "l": 3, "j": 2.5, "mj": -0.5, "energy": 9e4})
    from rydgate.dataset import parse_dataset
    ds2 = parse_dataset(doc)
    with pytest.warns(UserWarning, match="70f"):
        build_channels(ds2, toy_triple(ds2), "c")


# ---------------------------------------------------------------- invariances

def test_dipole_scaling_lambda4():
    ds = toy_alkali()
    tr = toy_triple(ds)
    base = dressed_c6(ds, tr)
    for lam in (0.5, 1.7):
        sc = dressed_c6(ds.scaled_dipoles(lam), tr)
        assert sc.c6_c == pytest.approx(lam ** 4 * base.c6_c, rel=1e-12)
        assert sc.c6_t == pytest.approx(lam ** 4 * base.c6_t, rel=1e-12)


@pytest.mark.parametrize("offset", [-5000.0, 123.4, 1e5])
def test_frame_shift_invariance(offset):
    ds = toy_alkali()
    sh = ds.shifted(offset)
    a = dressed_c6(ds, toy_triple(ds))
    b = dressed_c6(sh, toy_triple(sh))
    assert b.c6_c == pytest.approx(a.c6_c, rel=1e-10)
    assert b.c6_t == pytest.approx(a.c6_t, rel=1e-10)
    da = [ch.defect for ch in build_channels(ds, toy_triple(ds), "c")]
    db = [ch.defect for ch in build_channels(sh, toy_triple(sh), "c")]
    assert np.allclose(da, db, rtol=1e-10, atol=1e-9)


# ---------------------------------------------------------------- oracle

def oracle_radii(ds, tr, sp):
    r0 = perturbative_radius(build_channels(ds, tr, sp), 1e-2)
    return r0 * np.linspace(1, 2, 8)


@pytest.mark.parametrize("seed", range(6))
def test_perturbative_matches_oracle(seed):
    ds = random_toy_dataset(seed)
    tr = toy_triple(ds)
    pert = dressed_c6(ds, tr)
    for sp, val in (("c", pert.c6_c), ("t", pert.c6_t)):
        fit = oracle_c6(ds, tr, sp, oracle_radii(ds, tr, sp))
        assert fit.c6 == pytest.approx(val, rel=1e-2)
        assert np.all(fit.overlaps >= 0.9)


def test_oracle_r_doubling_and_truncation():
    ds = random_toy_dataset(1)
    tr = toy_triple(ds)
    r = oracle_radii(ds, tr, "c")
    base = oracle_c6(ds, tr, "c", r)
    far = oracle_c6(ds, tr, "c", 2 * r, max_residual=1e-3)
    assert far.c6 == pytest.approx(base.c6, rel=1e-3)
    more = oracle_c6(ds, tr, "c", r, n_max=3)
    assert more.c6 == pytest.approx(base.c6, rel=1e-3)


def test_oracle_needs_enough_points():
    ds = random_toy_dataset(0)
    with pytest.raises(OracleError):
        oracle_c6(ds, toy_triple(ds), "c", [10.0, 11.0, 12.0])


# ---------------------------------------------------------------- scan

def test_scan_four_by_four_csv(tmp_path):
    ds = toy_alkali()
    scan = scan_c6(ds, np.linspace(0.3, 0.8, 4), np.linspace(20, 80, 4))
    assert len(scan.values) == 4 and all(len(row) == 4 for row in scan.values)
    path = tmp_path / "scan.csv"
    assert write_scan_csv(scan, path) == 16
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["alpha", "omega0_MHz", "c6_c_GHzum6", "c6_t_GHzum6", "flag"]
    assert len(rows) == 17


def test_scan_rejects_unsorted_axis():
    ds = toy_alkali()
    with pytest.raises(ValueError):
        scan_c6(ds, [0.3, 0.8, 0.5], [10, 20])


def test_scan_parallel_matches_serial():
    ds = toy_alkali()
    a, w = np.linspace(0.3, 0.8, 3), np.linspace(20, 80, 3)
    s1 = scan_c6(ds, a, w)
    s2 = scan_c6(ds, a, w, workers=2)
    assert np.array_equal(s1.grid("c6_c"), s2.grid("c6_c"))


def test_omega0_zero_is_flagged():
    ds = toy_alkali()
    scan = scan_c6(ds, np.linspace(0.3, 0.8, 3), [-10.0, 0.0, 10.0])
    assert np.all(scan.flags[:, 1])


def test_resonance_crossing_flips_sign():
    ds = toy_alkali()
    alpha = 0.6
    base = design_triple(ds.m_ratio, alpha, 1.0)
    w1 = base.drives.omega0

    def chans(w):
        return build_channels(ds, base.scaled(w / w1).with_frequencies(ds), "c")

    # defects are affine in the drive scale: locate a channel crossing zero
    lo, hi = chans(100.0), chans(200.0)
    root = None
    for a, b in zip(lo, hi):
        assert a.ket == b.ket and a.harmonic == b.harmonic
        slope = (b.defect - a.defect) / 100.0
        if slope and a.amplitude > 1e-3 * max(c.amplitude for c in lo):
            w = 100.0 - a.defect / slope
            if 30.0 < w < 2000.0:
                root = w if root is None else min(root, w, key=lambda x: abs(x - 300))
    assert root is not None
    slope_eps = 5.0 / max(abs((b.defect - a.defect) / 100.0) for a, b in zip(lo, hi))
    vals = []
    for w in (root - slope_eps, root + slope_eps):
        r = evaluate_point(ds, alpha, w)
        vals.append(r.c6_c)
    assert np.sign(vals[0]) != np.sign(vals[1])
    assert evaluate_point(ds, alpha, root).flagged


# ---------------------------------------------------------------- zeros

A_STAR, W_STAR = 0.437, 61.3


def planted(alpha, omega0):
    fc = (alpha - A_STAR) + 0.3 * (omega0 - W_STAR) / 100
    ft = (alpha - A_STAR) - 0.5 * (omega0 - W_STAR) / 100
    return C6Result(fc, ft, {}, ())


def planted_with_flag(alpha, omega0, flag_at=60.0):
    r = planted(alpha, omega0)
    if abs(omega0 - flag_at) < 1e-9:
        ch = Channel("V1", ("c", "c"), ("u", "u"), 1.0, 0.1, 0.0)
        return C6Result(r.c6_c, r.c6_t, {}, (ch,))
    return r


def test_planted_zero_recovered():
    scan = scan_function(planted, np.linspace(0.1, 0.9, 9), np.linspace(10, 110, 11))
    zeros = find_zeros(scan)
    conv = [z for z in zeros if z.status == "converged"]
    assert len(conv) == 1
    z = conv[0]
    assert abs(z.alpha - A_STAR) < 1e-6 and abs(z.omega0 - W_STAR) < 1e-6
    assert abs(z.residual_c) <= 1e-9 and abs(z.residual_t) <= 1e-9


def test_planted_zero_nonlinear():
    def ev(alpha, omega0):
        r = planted(alpha, omega0)
        g = 1 + 0.2 * math.sin(alpha * 3) + (omega0 / 200) ** 2
        return C6Result(r.c6_c * g, r.c6_t / g, {}, ())

    scan = scan_function(ev, np.linspace(0.1, 0.9, 9), np.linspace(10, 110, 11))
    conv = [z for z in find_zeros(scan) if z.status == "converged"]
    assert len(conv) == 1
    assert abs(conv[0].alpha - A_STAR) < 1e-6 and abs(conv[0].omega0 - W_STAR) < 1e-6


def test_no_sign_change_gives_empty():
    scan = scan_function(lambda a, w: C6Result(1.0 + a, 2.0 + w, {}, ()),
                         np.linspace(0, 1, 5), np.linspace(0, 1, 5))
    assert find_zeros(scan) == []


def test_zero_near_resonance_excluded():
    scan = scan_function(planted_with_flag, np.linspace(0.1, 0.9, 9), np.linspace(10, 110, 11))
    zeros = find_zeros(scan)
    assert zeros and all(z.status == "excluded" for z in zeros)
    # a flag three cells away from the seed cell leaves the zero alone
    far = scan_function(partial(planted_with_flag, flag_at=100.0),
                        np.linspace(0.1, 0.9, 9), np.linspace(10, 110, 11))
    conv = [z for z in find_zeros(far) if z.status == "converged"]
    assert len(conv) == 1 and abs(conv[0].omega0 - W_STAR) < 1e-6
    wide = {z.omega0: z.status for z in find_zeros(far, exclusion_radius=3)}
    assert wide[65.0] == "excluded"  # seed cell holding the planted zero
