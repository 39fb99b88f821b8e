"""Microwave dressing of |s>, |p0>, |p+> into the control/target states |c>, |t>.

All matrices use the basis order (|s>, |p0>, |p+>).  Frequencies are ordinary
MHz.  The drive Hamiltonian in the rotating frame is::

    H = -D0 |p0><p0| - D+ |p+><p+| + (O0 |s><p0| + O+ |s><p+| + h.c.)
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .dataset import LevelDataset, pair_defect

SQRT2 = math.sqrt(2.0)


class DressingError(ValueError):
    pass


class DegenerateDesignError(DressingError):
    """M^2 = 1/2: no pair of orthogonal nulled states exists."""


@dataclass(frozen=True)
class DriveConfig:
    omega0: float
    omegaplus: float
    delta0: float
    deltaplus: float
    nu0: float | None = None
    nuplus: float | None = None

    def scaled(self, factor: float) -> "DriveConfig":
        return DriveConfig(
            self.omega0 * factor, self.omegaplus * factor,
            self.delta0 * factor, self.deltaplus * factor,
        )

    def with_frequencies(self, dataset: LevelDataset) -> "DriveConfig":
        """Fill nu0, nu+ from the dataset transition frequencies: nu = omega + Delta."""
        return replace(
            self,
            nu0=dataset.transition_frequency(dataset.p0_id) + self.delta0,
            nuplus=dataset.transition_frequency(dataset.pplus_id) + self.deltaplus,
        )

    @property
    def magnitude(self) -> float:
        return max(abs(self.omega0), abs(self.omegaplus), abs(self.delta0), abs(self.deltaplus))

    def as_dict(self) -> dict:
        return {
            "omega0": self.omega0, "omegaplus": self.omegaplus,
            "delta0": self.delta0, "deltaplus": self.deltaplus,
            "nu0": self.nu0, "nuplus": self.nuplus,
        }


def mw_hamiltonian(d: DriveConfig) -> np.ndarray:
    h = np.zeros((3, 3), dtype=complex)
    h[1, 1] = -d.delta0
    h[2, 2] = -d.deltaplus
    h[0, 1] = d.omega0
    h[0, 2] = d.omegaplus
    h[1, 0] = np.conj(d.omega0)
    h[2, 0] = np.conj(d.omegaplus)
    return h


@dataclass(frozen=True)
class DressedState:
    coeffs: np.ndarray
    raw: np.ndarray
    norm: float
    shift: float
    lifetime: float | None = None

    @classmethod
    def from_raw(cls, raw, shift: float, lifetime: float | None = None) -> "DressedState":
        raw = np.asarray(raw, dtype=complex)
        norm = float(np.linalg.norm(raw))
        return cls(raw / norm, raw, norm, float(shift), lifetime)

    def scaled(self, factor: float) -> "DressedState":
        return replace(self, shift=self.shift * factor)

    def as_dict(self) -> dict:
        return {
            "coeffs": _complex_list(self.coeffs),
            "raw": _complex_list(self.raw),
            "norm": self.norm,
            "shift": self.shift,
            "lifetime": self.lifetime,
        }


@dataclass(frozen=True)
class DressedTriple:
    c: DressedState
    t: DressedState
    third: DressedState
    rotation: np.ndarray
    drives: DriveConfig

    @property
    def states(self) -> tuple[DressedState, DressedState, DressedState]:
        return (self.c, self.t, self.third)

    @property
    def shifts(self) -> np.ndarray:
        return np.array([self.c.shift, self.t.shift, self.third.shift])

    def species(self, name: str) -> DressedState:
        if name not in ("c", "t"):
            raise ValueError(f"species must be 'c' or 't', got {name!r}")
        return self.c if name == "c" else self.t

    def scaled(self, factor: float) -> "DressedTriple":
        """Multiply the drive Hamiltonian by ``factor``: same states, scaled shifts."""
        return DressedTriple(
            self.c.scaled(factor), self.t.scaled(factor), self.third.scaled(factor),
            self.rotation, self.drives.scaled(factor),
        )

    def with_omega0(self, omega0: float) -> "DressedTriple":
        if self.drives.omega0 == 0:
            raise DressingError("cannot rescale a design with omega0 = 0")
        return self.scaled(omega0 / self.drives.omega0)

    def with_frequencies(self, dataset: LevelDataset) -> "DressedTriple":
        return replace(self, drives=self.drives.with_frequencies(dataset))

    def with_lifetimes(self, dataset: LevelDataset) -> "DressedTriple":
        taus = [dataset.lifetime(sid) for sid in dataset.triple]
        if any(tau is None for tau in taus):
            return self
        rates = np.array([1.0 / tau for tau in taus])
        states = [
            replace(st, lifetime=float(1.0 / np.dot(np.abs(st.coeffs) ** 2, rates)))
            for st in self.states
        ]
        return replace(self, c=states[0], t=states[1], third=states[2])

    def as_dict(self) -> dict:
        return {
            "c": self.c.as_dict(),
            "t": self.t.as_dict(),
            "third": self.third.as_dict(),
            "rotation": [_complex_list(row) for row in self.rotation],
            "drives": self.drives.as_dict(),
        }


@dataclass(frozen=True)
class DressingDesign:
    m_ratio: float
    alpha: float
    scale: float = 1.0

    def __post_init__(self):
        if self.m_ratio <= 0:
            raise DressingError("M must be positive")
        if self.alpha == 0:
            raise DressingError("alpha must be nonzero")
        _check_m(self.m_ratio)
        if self.alpha == 1:
            warnings.warn(
                "alpha = 1: light shifts of |c> and |t> are degenerate", RuntimeWarning, stacklevel=3
            )

    @property
    def c0(self) -> float:
        return self.alpha * c0_max(self.m_ratio)

    def triple(self) -> DressedTriple:
        return solve_drives(*design_states(self.m_ratio, self.c0), self.scale)


def _complex_list(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex)]


def _check_m(m: float) -> None:
    if abs(2 * m * m - 1) < 1e-12:
        raise DegenerateDesignError(f"M^2 = 1/2 (M = {m}) admits no orthogonal nulled pair")


def design_states(m: float, c0: float) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalised (1, c0, c+) and (1, t0, t+) with vanishing intraspecies interaction.

    c+ = sqrt(2) M c0, t+ = -sqrt(2) M t0 and t0 = 1 / ((2M^2 - 1) c0), which makes
    the two vectors orthogonal.
    """
    _check_m(m)
    if c0 == 0:
        raise DressingError("c0 must be nonzero")
    t0 = 1.0 / ((2 * m * m - 1) * c0)
    c = np.array([1.0, c0, SQRT2 * m * c0])
    t = np.array([1.0, t0, -SQRT2 * m * t0])
    return c, t


def c0_max(m: float) -> float:
    _check_m(m)
    return abs(2 * m * m - 1) ** -0.5


def _canonical(c, t) -> tuple[np.ndarray, np.ndarray]:
    c = np.asarray(c, dtype=complex)
    t = np.asarray(t, dtype=complex)
    if abs(c[0]) < 1e-14 or abs(t[0]) < 1e-14:
        raise DressingError("dressed vectors need a nonzero |s> component")
    c = c / c[0]
    t = t / t[0]
    # absorb the phases of c0, c+ into |p0>, |p+>
    phases = np.ones(3, dtype=complex)
    for k in (1, 2):
        if abs(c[k]) > 0:
            phases[k] = np.conj(c[k]) / abs(c[k])
    c, t = c * phases, t * phases
    if np.max(np.abs(t.imag)) > 1e-12 * max(1.0, np.max(np.abs(t))):
        raise DressingError("t coefficients stay complex after absorbing the phases of c")
    return c.real, t.real


_ROW_NAMES = ["c:s", "c:p0", "c:p+", "t:s", "t:p0", "t:p+"]


def _constraint_matrix(c: np.ndarray, t: np.ndarray) -> np.ndarray:
    # unknowns x = (O0, O+, D0, D+, Ec, Et); rows are (H v - E v) components
    a = np.zeros((6, 6))
    for k, (v, ecol) in enumerate(((c, 4), (t, 5))):
        r = 3 * k
        a[r, 0], a[r, 1], a[r, ecol] = v[1], v[2], -1.0
        a[r + 1, 0], a[r + 1, 2], a[r + 1, ecol] = 1.0, -v[1], -v[1]
        a[r + 2, 1], a[r + 2, 3], a[r + 2, ecol] = 1.0, -v[2], -v[2]
    return a


def _degenerate_rows(a: np.ndarray) -> list[str]:
    full = np.linalg.matrix_rank(a, tol=1e-10 * np.abs(a).max())
    return [
        _ROW_NAMES[i] for i in range(6)
        if np.linalg.matrix_rank(np.delete(a, i, axis=0), tol=1e-10 * np.abs(a).max()) == full
    ]


def solve_drives(c, t, scale: float = 1.0) -> DressedTriple:
    """Find drives for which both vectors are eigenvectors of the drive Hamiltonian.

    H v = E v for the two vectors is linear in (O0, O+, D0, D+, Ec, Et); the
    one-dimensional null space of that system gives the drives up to an overall
    factor, fixed so that max(|O0|, |O+|, |D0|, |D+|) = |scale| with O0 carrying
    the sign of ``scale``.
    """
    c, t = _canonical(c, t)
    overlap = abs(np.dot(c, t)) / (np.linalg.norm(c) * np.linalg.norm(t))
    if overlap > 1e-10:
        raise DressingError(f"input vectors are not orthogonal (|<c|t>| = {overlap:.3e})")
    a = _constraint_matrix(c, t)
    _, sv, vt = np.linalg.svd(a)
    if sv[-2] <= 1e-10 * sv[0]:
        rows = ", ".join(_degenerate_rows(a)) or "unidentified"
        raise DressingError(f"rank-deficient drive constraints; redundant rows: {rows}")
    x = vt[-1]
    x = x / np.max(np.abs(x[:4]))
    lead = x[0] if abs(x[0]) > 1e-12 else x[1]
    x = x * math.copysign(1.0, lead) * scale
    drives = DriveConfig(*(float(v) for v in x[:4]))
    h = mw_hamiltonian(drives)
    e_c, e_t = float(x[4]), float(x[5])
    e_3 = float(np.trace(h).real) - e_c - e_t
    third = np.cross(c, t)
    third = third / np.linalg.norm(third)
    lead = third[np.argmax(np.abs(third) > 1e-12)]
    third = third * math.copysign(1.0, lead)
    states = [DressedState.from_raw(c, e_c), DressedState.from_raw(t, e_t),
              DressedState.from_raw(third / third[0] if abs(third[0]) > 1e-12 else third, e_3)]
    rotation = np.conj(np.column_stack([s.coeffs for s in states]))
    triple = DressedTriple(*states, rotation=rotation, drives=drives)
    residual = eigen_residual(triple)
    if residual > 1e-10 * max(abs(scale), 1e-300):
        raise DressingError(f"eigen-residual {residual:.3e} exceeds tolerance")
    return triple


def triple_from_drives(drives: DriveConfig, c_guess, t_guess) -> DressedTriple:
    """Diagonalise a given drive Hamiltonian; pick |c>, |t> by overlap with guesses."""
    h = mw_hamiltonian(drives)
    vals, vecs = np.linalg.eigh(h)
    picked = []
    for guess in (c_guess, t_guess):
        guess = np.asarray(guess, dtype=complex)
        scores = np.abs(vecs.conj().T @ guess)
        scores[picked] = -1
        picked.append(int(np.argmax(scores)))
    picked.append(({0, 1, 2} - set(picked)).pop())
    states = []
    for i in picked:
        v = vecs[:, i]
        k = int(np.argmax(np.abs(v) > 1e-12))
        v = v * np.conj(v[k]) / abs(v[k])
        states.append(DressedState.from_raw(v, float(vals[i])))
    rotation = np.conj(np.column_stack([s.coeffs for s in states]))
    return DressedTriple(*states, rotation=rotation, drives=drives)


def design_triple(m: float, alpha: float, scale: float = 1.0) -> DressedTriple:
    return DressingDesign(m, alpha, scale).triple()


def eigen_residual(triple: DressedTriple) -> float:
    h = mw_hamiltonian(triple.drives)
    return max(float(np.linalg.norm(h @ s.coeffs - s.shift * s.coeffs)) for s in triple.states)


@dataclass(frozen=True)
class RegimeReport:
    dd_coupling: float
    rabi_min: float
    drive_scale: float
    min_defect: float
    margin: float
    dressing_dominates: bool
    confined_to_triple: bool

    @property
    def ok(self) -> bool:
        return self.dressing_dominates and self.confined_to_triple


def validate_regime(
    triple: DressedTriple,
    dataset: LevelDataset,
    l_dd: float,
    margin: float = 10.0,
    theta: float = math.pi / 2,
) -> RegimeReport:
    """Check C3 / l_dd^3 << Omega_mw << delta with a multiplicative ``margin``.

    The dipole scale is the larger undressed exchange coupling of the triple at
    ``l_dd``; the left inequality uses the smaller Rabi frequency, the right one
    the largest drive parameter and the smallest |defect| between a pair of triple
    states and any dipole-coupled pair with a member outside the triple.
    """
    if l_dd <= 0:
        raise ValueError("l_dd must be positive")
    ang = abs(1 - 3 * math.cos(theta) ** 2)
    c3 = max(dataset.mu0 ** 2, dataset.muplus ** 2 / 2) * ang
    dd = c3 / l_dd ** 3
    d = triple.drives
    rabi_min = min(abs(d.omega0), abs(d.omegaplus))
    scale = d.magnitude

    inside = set(dataset.triple)
    defects = []
    for a in dataset.triple:
        for b in dataset.triple:
            for a2, qa, _ in dataset.neighbours(a):
                for b2, qb, _ in dataset.neighbours(b):
                    if qa + qb != 0 or (a2 in inside and b2 in inside):
                        continue
                    defects.append(abs(pair_defect(dataset, a, b, a2, b2)))
    min_defect = min(defects) if defects else math.inf
    return RegimeReport(
        dd_coupling=dd,
        rabi_min=rabi_min,
        drive_scale=scale,
        min_defect=min_defect,
        margin=margin,
        dressing_dominates=rabi_min >= margin * dd,
        confined_to_triple=min_defect >= margin * scale,
    )
