import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from rydgate.dressing import DriveConfig, design_states
from rydgate.interactions import (
    MAGIC_ANGLE, Geometry, different_drives_max, dd_operator, expectation,
    offdiag_constant, offdiag_relation, product_state, rotating_frequencies,
    v_exchange, vcc, vct, vct_max, vtt,
)

PI2 = Geometry(1.0, math.pi / 2)


def unit(v):
    v = np.asarray(v, dtype=complex)
    return v / np.linalg.norm(v)


def test_operator_structure():
    op = dd_operator(1.3, 0.7, Geometry(2.1, 0.4))
    assert np.allclose(op.matrix, op.matrix.conj().T, atol=1e-12)
    assert np.count_nonzero(op.matrix) == 4
    # total m_L: s=0, p0=0, p+=1 ; entries must connect equal totals
    ml = [0, 0, 1]
    for i, j in zip(*np.nonzero(op.matrix)):
        assert ml[i // 3] + ml[i % 3] == ml[j // 3] + ml[j % 3]


def test_operator_examples():
    assert np.allclose(dd_operator(1.0, 1.0, Geometry(1.0, MAGIC_ANGLE)).matrix, 0, atol=1e-15)
    m = dd_operator(1.0, 0.0, PI2).matrix
    ref = np.zeros((9, 9))
    ref[1, 3] = ref[3, 1] = 1.0  # |s p0> <-> |p0 s>
    assert np.array_equal(m.real, ref)
    a = dd_operator(1.1, 0.9, Geometry(1.5, 0.3)).matrix
    b = dd_operator(1.1, 0.9, Geometry(3.0, 0.3)).matrix
    assert np.allclose(b, a / 8, atol=1e-15)
    with pytest.raises(ValueError):
        Geometry(0.0)


def test_expectation_examples():
    op = dd_operator(1.0, 1.0, PI2)
    s = np.array([1, 0, 0])
    assert expectation(op, (s, s), (s, s)) == 0
    c, t = design_states(1.0, 0.7)
    assert abs(expectation(op, (unit(c), unit(c)), (unit(c), unit(c)))) < 1e-12
    assert abs(expectation(op, (unit(c), unit(t)), (unit(t), unit(c)))) < 1e-12
    # pair tuples and 9-vectors agree
    v = product_state(unit(c), unit(t))
    assert expectation(op, v, v) == expectation(op, (unit(c), unit(t)), (unit(c), unit(t)))


def test_named_evaluators_delegate():
    rng = np.random.default_rng(5)
    for _ in range(10):
        c = unit(rng.normal(size=3) + 1j * rng.normal(size=3))
        t = unit(rng.normal(size=3) + 1j * rng.normal(size=3))
        g = Geometry(rng.uniform(0.5, 3), rng.uniform(0, math.pi))
        op = dd_operator(1.2, 0.8, g)
        assert vcc(c, g, 1.2, 0.8) == expectation(op, (c, c), (c, c)).real
        assert vtt(t, g, 1.2, 0.8) == expectation(op, (t, t), (t, t)).real
        assert vct(c, t, g, 1.2, 0.8) == expectation(op, (c, t), (c, t)).real
        assert v_exchange(c, t, g, 1.2, 0.8) == expectation(op, (c, t), (t, c))


def test_nullification_and_same_phase():
    rng = np.random.default_rng(7)
    for _ in range(200):
        m = rng.uniform(0.2, 4)
        if abs(2 * m * m - 1) < 1e-3:
            continue
        mu0, mup = m, 1.0
        g = Geometry(rng.uniform(0.5, 5), rng.uniform(0, math.pi))
        c, t = design_states(m, rng.choice([-1, 1]) * rng.uniform(0.05, 5))
        bound = 1e-12 * mu0 ** 2 / g.r ** 3
        assert abs(vcc(unit(c), g, mu0, mup)) <= bound
        assert abs(vtt(unit(t), g, mu0, mup)) <= bound
        assert abs(v_exchange(unit(c), unit(t), g, mu0, mup)) <= bound
    # t0 and t+ with the same phase: V_ct vanishes
    t0, tp = 0.6, 0.6 * 2 * 0.4 ** 2 / (2 * 0.9 ** 2) * 0.9 / 0.4
    c = unit([1, 0.4, 0.9])
    t = unit([1, t0, tp])
    mu0 = 1.0
    mup = math.sqrt(2 * mu0 ** 2 * 0.4 * t0 / (0.9 * tp))
    assert abs(vct(c, t, PI2, mu0, mup)) < 1e-12


def test_vct_max_examples():
    assert vct_max(1.0, 1.0, PI2).value == pytest.approx(0.25)
    deg = vct_max(1.0, math.sqrt(2.0), PI2)
    assert deg.value == 0 and deg.degenerate
    eps = 1e-7
    lo = vct_max(1.0, math.sqrt(2.0) * (1 + eps), PI2).value
    hi = vct_max(1.0, math.sqrt(2.0) * (1 - eps), PI2).value
    assert abs(lo) < 1e-6 and abs(hi) < 1e-6


@pytest.mark.parametrize("theta", [math.pi / 2, 0.0])
@pytest.mark.parametrize("m", [0.5, 0.9, 1.5, 3.0])
def test_vct_max_is_attained(m, theta):
    g = Geometry(1.3, theta)
    mu0, mup = 1.7 * m, 1.7

    def neg(x):
        c, t = design_states(m, math.exp(x))
        return -abs(vct(unit(c), unit(t), g, mu0, mup))

    res = minimize_scalar(neg, bounds=(-6, 6), method="bounded", options={"xatol": 1e-12})
    bound = vct_max(mu0, mup, g)
    assert -res.fun == pytest.approx(abs(bound.value), rel=1e-6)
    assert math.exp(res.x) == pytest.approx(bound.c0, rel=1e-4)


def test_vct_max_at_design_optimum():
    c, t = design_states(1.0, 1.0)
    assert vct(unit(c), unit(t), PI2, 1.0, 1.0) == pytest.approx(vct_max(1.0, 1.0, PI2).value)


def test_different_drives():
    d = different_drives_max(1.0, 1.0, PI2)
    assert d.value == pytest.approx(1 / 3, abs=1e-12)
    assert d.c0 == pytest.approx(1 / math.sqrt(3))
    # numeric maximisation of 4 c0 t0 mu0^2 f / (N_c^2 N_t^2) at c0 = -t0, c+ = t+
    for mu0, mup in [(1.0, 1.0), (1.3, 0.6), (0.4, 2.0)]:
        m = mu0 / mup

        def neg(x):
            c = unit([1, x, math.sqrt(2) * m * x])
            t = unit([1, -x, math.sqrt(2) * m * x])
            return -abs(vct(c, t, PI2, mu0, mup))

        res = minimize_scalar(neg, bounds=(1e-3, 10), method="bounded", options={"xatol": 1e-12})
        ref = different_drives_max(mu0, mup, PI2)
        assert -res.fun == pytest.approx(ref.value, rel=1e-9)
        assert res.x == pytest.approx(ref.c0, rel=1e-5)
    assert different_drives_max(1.0, 1e8, PI2).value == pytest.approx(1.0)


def test_different_drives_exceeds_same_drive():
    for mu0 in np.linspace(0.2, 3, 10):
        for mup in np.linspace(0.2, 3, 10):
            same = vct_max(mu0, mup, PI2)
            if same.degenerate:
                continue
            assert different_drives_max(mu0, mup, PI2).value >= abs(same.value) - 1e-15


def test_offdiag_relation():
    k = offdiag_constant(1.0, 1.3)
    assert k == pytest.approx(0.5, abs=1e-12)
    rng = np.random.default_rng(2)
    for _ in range(10):
        c, t = rng.normal(size=3), rng.normal(size=3)
        lhs, rhs = offdiag_relation(c, t, PI2, 1.0, 1.3)
        assert lhs.real == pytest.approx(rhs, rel=1e-9)
    c, t = design_states(1.3, 0.5)
    lhs, rhs = offdiag_relation(c, t, PI2, 1.3, 1.0)
    assert abs(lhs) < 1e-12 and abs(rhs) < 1e-12
    lhs, rhs = offdiag_relation([1, 0.3, 0.2], [1, 0.5, -0.1], Geometry(1.0, MAGIC_ANGLE), 1.0, 1.0)
    assert abs(lhs) < 1e-15 and abs(rhs) < 1e-15


def test_rotating_frequencies():
    d = DriveConfig(1, 1, 0, 0, nu0=1000.0, nuplus=3000.0)
    terms = rotating_frequencies(d)
    assert [t.frequency for t in terms] == [2000.0, 6000.0, 4000.0, 2000.0]
    assert all(t.negligible for t in terms)
    eq = rotating_frequencies(DriveConfig(1, 1, 0, 0, nu0=500.0, nuplus=500.0))
    assert [t.negligible for t in eq if t.frequency == 0] == [False]
    with pytest.raises(ValueError):
        rotating_frequencies(DriveConfig(1, 1, 0, 0))
