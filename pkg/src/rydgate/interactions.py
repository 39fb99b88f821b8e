"""Rotating-frame dipole-dipole interaction on the two-atom dressed manifold.

The 9x9 operator acts on the product basis {s, p0, p+} x {s, p0, p+} with index
``3 * i + j``.  Only the total-m_L conserving exchange terms survive the
rotating-wave approximation::

    V = f(r, theta) * (mu0^2 |s p0><p0 s| - mu+^2 / 2 |s p+><p+ s|) + h.c.

Every named interaction (V_cc, V_tt, V_ct, <ct|V|tc>) is evaluated through this
matrix; no prefactor is written out by hand.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dressing import DressedState, DriveConfig, _check_m, DegenerateDesignError

MAGIC_ANGLE = math.acos(1 / math.sqrt(3))

S, P0, PP = 0, 1, 2


@dataclass(frozen=True)
class Geometry:
    r: float
    theta: float = math.pi / 2

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"separation must be positive, got r = {self.r}")

    @property
    def angular(self) -> float:
        """(1 - 3 cos^2 theta) / r^3 in um^-3."""
        c = math.cos(self.theta)
        return (1 - 3 * c * c) / self.r ** 3


@dataclass(frozen=True)
class PairOperator:
    matrix: np.ndarray
    geometry: Geometry
    mu0: float
    muplus: float


def _pair(i: int, j: int) -> int:
    return 3 * i + j


def dd_operator(mu0: float, muplus: float, g: Geometry) -> PairOperator:
    f = g.angular
    v = np.zeros((9, 9), dtype=complex)
    v[_pair(S, P0), _pair(P0, S)] = f * mu0 ** 2
    v[_pair(S, PP), _pair(PP, S)] = -f * muplus ** 2 / 2
    v = v + v.conj().T
    return PairOperator(v, g, mu0, muplus)


def _vec(state) -> np.ndarray:
    if isinstance(state, DressedState):
        return state.coeffs
    return np.asarray(state, dtype=complex)


def product_state(a, b) -> np.ndarray:
    return np.kron(_vec(a), _vec(b))


def expectation(op: PairOperator, left, right) -> complex:
    """<left|V|right>; each side is a 9-vector or a pair of single-atom states."""
    lv = product_state(*left) if isinstance(left, tuple) else np.asarray(left, dtype=complex)
    rv = product_state(*right) if isinstance(right, tuple) else np.asarray(right, dtype=complex)
    return complex(lv.conj() @ op.matrix @ rv)


def vcc(c, g: Geometry, mu0: float, muplus: float) -> float:
    return expectation(dd_operator(mu0, muplus, g), (c, c), (c, c)).real


def vtt(t, g: Geometry, mu0: float, muplus: float) -> float:
    return vcc(t, g, mu0, muplus)


def vct(c, t, g: Geometry, mu0: float, muplus: float) -> float:
    return expectation(dd_operator(mu0, muplus, g), (c, t), (c, t)).real


def v_exchange(c, t, g: Geometry, mu0: float, muplus: float) -> complex:
    """The resonant off-diagonal element <ct|V|tc>."""
    return expectation(dd_operator(mu0, muplus, g), (c, t), (t, c))


class InteractionBound(NamedTuple):
    value: float
    c0: float
    degenerate: bool = False


def vct_max(mu0: float, muplus: float, g: Geometry) -> InteractionBound:
    """Largest |c>-|t> interaction reachable with one set of global drives.

    min(mu0^2 / (mu+^2/2), (mu+^2/2) / mu0^2) * (mu0^2 - mu+^2/2) * f(r, theta),
    attained at |c0| = |2M^2 - 1|^(-1/2).  At M^2 = 1/2 the bound is 0 and flagged.
    """
    a, b = mu0 ** 2, muplus ** 2 / 2
    m = abs(mu0 / muplus)
    try:
        _check_m(m)
    except DegenerateDesignError:
        return InteractionBound(0.0, math.inf, True)
    value = min(a / b, b / a) * (a - b) * g.angular
    return InteractionBound(value, abs(2 * m * m - 1) ** -0.5)


def different_drives_max(mu0: float, muplus: float, g: Geometry) -> InteractionBound:
    """Maximum |c>-|t> interaction when control and target atoms see different drives.

    The harmonic-mean form (mu0^-2 + 2 mu+^-2)^-1 * f(r, theta), at c0 = t0 = (1 + 2M^2)^-1/2.
    """
    m = abs(mu0 / muplus)
    value = g.angular / (mu0 ** -2 + 2 * muplus ** -2)
    return InteractionBound(value, (1 + 2 * m * m) ** -0.5)


def _raw(state) -> tuple[np.ndarray, float]:
    v = _vec(state)
    raw = v / v[0]
    return raw, float(np.linalg.norm(raw))


def offdiag_constant(mu0: float, muplus: float) -> float:
    """Measure k in <ct|V|tc> = k (N_c^4 V_cc + N_t^4 V_tt) / (N_c^2 N_t^2).

    Taken from one fixed non-nulled pair of states at unit geometry.
    """
    g = Geometry(1.0, math.pi / 2)
    c = np.array([1.0, 0.7, 0.2])
    t = np.array([1.0, -0.3, 0.9])
    lhs, combo = _offdiag_parts(c, t, g, mu0, muplus)
    return (lhs / combo).real


def _offdiag_parts(c, t, g, mu0, muplus) -> tuple[complex, float]:
    rc, nc = _raw(c)
    rt, nt = _raw(t)
    cn, tn = rc / nc, rt / nt
    lhs = v_exchange(cn, tn, g, mu0, muplus)
    combo = (nc ** 4 * vcc(cn, g, mu0, muplus) + nt ** 4 * vtt(tn, g, mu0, muplus)) / (nc * nt) ** 2
    return lhs, combo


def offdiag_relation(c, t, g: Geometry, mu0: float, muplus: float) -> tuple[complex, float]:
    """Return (<ct|V|tc>, k (N_c^4 V_cc + N_t^4 V_tt) / (N_c^2 N_t^2)) for comparison."""
    lhs, combo = _offdiag_parts(c, t, g, mu0, muplus)
    return lhs, offdiag_constant(mu0, muplus) * combo


@dataclass(frozen=True)
class RotatingTerm:
    label: str
    frequency: float
    negligible: bool


def rotating_frequencies(d: DriveConfig, threshold: float = 100.0) -> list[RotatingTerm]:
    """Dropped non-m_L-conserving term classes and their rotating-frame frequencies.

    A class is negligible when |frequency| >= ``threshold`` (MHz).
    """
    if d.nu0 is None or d.nuplus is None:
        raise ValueError("drive frequencies nu0, nu+ are not set")
    terms = [
        ("2 nu0", 2 * d.nu0),
        ("2 nu+", 2 * d.nuplus),
        ("nu+ + nu0", d.nuplus + d.nu0),
        ("nu+ - nu0", d.nuplus - d.nu0),
    ]
    return [RotatingTerm(label, f, abs(f) >= threshold) for label, f in terms]
