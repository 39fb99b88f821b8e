"""Second-order (Floquet-shifted) van der Waals coefficients of dressed pair states.

Frame conventions: energies are measured from E_s; in the rotating frame |p0>,
|p+> carry frame frequencies nu0, nu+ and every other state (|s> included)
carries none.  A lab-frame pair term |x y><x' y'| then rotates as
exp(i k.nu t) with the integer harmonic vector

    k = n(x) + n(y) - n(x') - n(y'),   n(p0) = (1, 0), n(p+) = (0, 1).

Only pair terms that conserve total m survive (q1 + q2 = 0); their angular
weight is 1 for (q1, q2) = (0, 0) and -1/2 for (+-1, -+1), times
(1 - 3 cos^2 theta).  Terms that keep both atoms inside the dressed triple and
rotate (k != 0) are dropped, as is done for the dressed operator.

Units: couplings MHz um^3, defects MHz, C6 in GHz um^6 with V = -C6 / r^6.
"""
from __future__ import annotations

import math
import warnings
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from ..dataset import LevelDataset
from ..dressing import DressedTriple

KINDS = ("V1", "V2", "V3")
DRESSED = ("c", "t", "3")
RESONANCE_THRESHOLD = 1.0  # MHz


class ResonanceError(ValueError):
    def __init__(self, channel: "Channel", threshold: float):
        self.channel = channel
        self.threshold = threshold
        super().__init__(
            f"resonant {channel.kind} channel {channel.name}: defect {channel.defect:.6g} MHz "
            f"below threshold {threshold:g} MHz"
        )


@dataclass(frozen=True)
class Channel:
    kind: str
    bra: tuple[str, str]
    ket: tuple[str, str]
    coupling: complex
    defect: float
    floquet_shift: float
    weight: complex = 1.0
    harmonic: tuple[int, int] = (0, 0)
    multiplicity: int = 1

    @property
    def name(self) -> str:
        return f"<{self.bra[0]} {self.bra[1]}| -> |{self.ket[0]} {self.ket[1]}> k={self.harmonic}"

    @property
    def amplitude(self) -> float:
        return abs(self.weight * self.coupling)

    @property
    def contribution(self) -> float:
        """This channel's share of C6 in GHz um^6."""
        return -self.multiplicity * self.amplitude ** 2 / self.defect / 1000.0

    def as_dict(self) -> dict:
        return {
            "kind": self.kind, "bra": list(self.bra), "ket": list(self.ket),
            "coupling": abs(self.coupling), "defect": self.defect,
            "floquet_shift": self.floquet_shift, "harmonic": list(self.harmonic),
            "multiplicity": self.multiplicity,
        }


@dataclass(frozen=True)
class SpeciesC6:
    value: float
    breakdown: dict
    flags: tuple[Channel, ...] = ()


@dataclass(frozen=True)
class C6Result:
    c6_c: float
    c6_t: float
    contributions: dict = field(default_factory=dict)
    resonant_flags: tuple[Channel, ...] = ()

    @property
    def flagged(self) -> bool:
        return bool(self.resonant_flags)

    def as_dict(self) -> dict:
        return {
            "c6_c": self.c6_c, "c6_t": self.c6_t,
            "contributions": self.contributions,
            "resonant_flags": [dict(ch.as_dict(), species=ch.bra[0]) for ch in self.resonant_flags],
        }


def pair_factor(q1: int, q2: int) -> float:
    """Angular weight of an m-conserving pair term; 0 if total m changes."""
    if q1 + q2 != 0:
        return 0.0
    return 1.0 if q1 == 0 else -0.5


def _harmonic(ds: LevelDataset, sid: str) -> np.ndarray:
    if sid == ds.p0_id:
        return np.array([1, 0])
    if sid == ds.pplus_id:
        return np.array([0, 1])
    return np.zeros(2, dtype=int)


def _frame(triple: DressedTriple, ds: LevelDataset):
    d = triple.drives
    if d.nu0 is None or d.nuplus is None:
        d = d.with_frequencies(ds)
    return np.array([d.nu0, d.nuplus])


def _lab_terms(ds: LevelDataset):
    """Yield (x, y, x2, y2, amp) for pair terms |x y><x2 y2| with x, y in the triple."""
    for x in ds.triple:
        for y in ds.triple:
            for x2, qa, mua in ds.neighbours(x):
                for y2, qb, mub in ds.neighbours(y):
                    f = pair_factor(qa, qb)
                    if f:
                        yield x, y, x2, y2, f * mua * mub


def _check_u_states(ds: LevelDataset) -> None:
    for lvl in ds.states:
        if lvl.id not in ds.triple and not ds.neighbours(lvl.id):
            warnings.warn(f"state {lvl.id} has no dipole data; no channels pass through it",
                          stacklevel=3)


def build_channels(
    ds: LevelDataset,
    triple: DressedTriple,
    species: str,
    theta: float = math.pi / 2,
    mode: str = "coherent",
) -> list[Channel]:
    """Enumerate second-order channels out of the dressed pair |ss'> for ss' = cc or tt.

    ``mode="coherent"`` adds every path reaching the same intermediate pair and
    harmonic before squaring, and lists mixed intermediates in both atom
    orderings.  ``mode="literal"`` keeps one channel per (sigma, sigma', sigma'')
    product with the mixed channels listed once and weighted by 2.
    """
    if mode not in ("coherent", "literal"):
        raise ValueError(f"mode must be 'coherent' or 'literal', got {mode!r}")
    if species not in ("c", "t"):
        raise ValueError(f"species must be 'c' or 't', got {species!r}")
    sp = DRESSED.index(species)
    _check_u_states(ds)
    nu = _frame(triple, ds)
    ang = 1 - 3 * math.cos(theta) ** 2
    trip = ds.triple
    tidx = {sid: i for i, sid in enumerate(trip)}
    R = triple.rotation
    e_d = triple.shifts
    e_s = ds.energy(ds.s_id)
    e0 = 2 * e_d[sp]

    def e_u(sid):
        return ds.energy(sid) - e_s

    if mode == "literal":
        return _literal_channels(ds, R, e_d, e0, sp, nu, ang, tidx, e_u)

    acc: dict = defaultdict(complex)
    for x, y, x2, y2, amp in _lab_terms(ds):
        lead = R[tidx[x], sp] * R[tidx[y], sp] * amp * ang
        k = _harmonic(ds, x) + _harmonic(ds, y) - _harmonic(ds, x2) - _harmonic(ds, y2)
        kk = (int(k[0]), int(k[1]))
        in1, in2 = x2 in tidx, y2 in tidx
        if not in1 and not in2:
            acc[("V1", x2, y2, kk)] += lead
        elif in1 and not in2:
            for d in range(3):
                acc[("V3", DRESSED[d], y2, kk)] += lead * np.conj(R[tidx[x2], d])
        elif in2 and not in1:
            for d in range(3):
                acc[("V3", x2, DRESSED[d], kk)] += lead * np.conj(R[tidx[y2], d])
        elif kk == (0, 0):
            for d1 in range(3):
                for d2 in range(3):
                    if (d1, d2) != (sp, sp):
                        w = np.conj(R[tidx[x2], d1] * R[tidx[y2], d2])
                        acc[("V2", DRESSED[d1], DRESSED[d2], kk)] += lead * w
    for d1 in range(3):
        for d2 in range(3):
            if (d1, d2) != (sp, sp):
                acc.setdefault(("V2", DRESSED[d1], DRESSED[d2], (0, 0)), 0j)

    def energy(label):
        return e_d[DRESSED.index(label)] if label in DRESSED else e_u(label)

    bra = (DRESSED[sp], DRESSED[sp])
    out = []
    for (kind, a, b, kk), amp in acc.items():
        shift = float(np.dot(kk, nu))
        defect = e0 + shift - energy(a) - energy(b)
        out.append(Channel(kind, bra, (a, b), complex(amp), float(defect), shift, 1.0, kk))
    out.sort(key=lambda ch: (KINDS.index(ch.kind), ch.ket, ch.harmonic))
    return out


def _literal_channels(ds, R, e_d, e0, sp, nu, ang, tidx, e_u) -> list[Channel]:
    bra = (DRESSED[sp], DRESSED[sp])
    out = []
    v2: dict = defaultdict(complex)
    for x, y, x2, y2, amp in _lab_terms(ds):
        a = R[tidx[x], sp] * R[tidx[y], sp]
        k = _harmonic(ds, x) + _harmonic(ds, y) - _harmonic(ds, x2) - _harmonic(ds, y2)
        kk = (int(k[0]), int(k[1]))
        shift = float(np.dot(kk, nu))
        in1, in2 = x2 in tidx, y2 in tidx
        coupling = amp * ang
        if not in1 and not in2:
            defect = e0 + shift - e_u(x2) - e_u(y2)
            out.append(Channel("V1", bra, (x2, y2), coupling, defect, shift, a, kk))
        elif in1 and not in2:
            for d in range(3):
                w = a * np.conj(R[tidx[x2], d])
                defect = e0 + shift - e_d[d] - e_u(y2)
                out.append(Channel("V3", bra, (DRESSED[d], y2), coupling, defect, shift, w, kk, 2))
        elif in1 and in2 and kk == (0, 0):
            for d1 in range(3):
                for d2 in range(3):
                    if (d1, d2) != (sp, sp):
                        v2[(d1, d2)] += a * np.conj(R[tidx[x2], d1] * R[tidx[y2], d2]) * coupling
    for d1 in range(3):
        for d2 in range(3):
            if (d1, d2) != (sp, sp):
                defect = e0 - e_d[d1] - e_d[d2]
                out.append(Channel("V2", bra, (DRESSED[d1], DRESSED[d2]),
                                   v2.get((d1, d2), 0j), defect, 0.0))
    return out


def _amp_floor(channels: list[Channel]) -> float:
    top = max((ch.amplitude for ch in channels), default=0.0)
    return 1e-9 * top


def c6_second_order(
    channels: list[Channel],
    threshold: float = RESONANCE_THRESHOLD,
    on_resonance: str = "raise",
) -> SpeciesC6:
    """C6 = -sum |weight * coupling|^2 / defect over channels, by kind.

    Channels with |defect| < threshold and non-negligible amplitude raise
    ResonanceError, or with ``on_resonance="flag"`` are left out of the sum and
    returned as flags.
    """
    if on_resonance not in ("raise", "flag"):
        raise ValueError("on_resonance must be 'raise' or 'flag'")
    floor = _amp_floor(channels)
    parts = {k: 0.0 for k in KINDS}
    flags = []
    for ch in channels:
        if ch.amplitude <= floor:
            continue
        if abs(ch.defect) < threshold:
            if on_resonance == "raise":
                raise ResonanceError(ch, threshold)
            flags.append(ch)
            continue
        parts[ch.kind] += ch.contribution
    total = parts["V1"] + parts["V2"] + parts["V3"]
    return SpeciesC6(total, parts, tuple(flags))


def dressed_c6(
    ds: LevelDataset,
    triple: DressedTriple,
    theta: float = math.pi / 2,
    threshold: float = RESONANCE_THRESHOLD,
    on_resonance: str = "raise",
    mode: str = "coherent",
) -> C6Result:
    res = {}
    for sp in ("c", "t"):
        chans = build_channels(ds, triple, sp, theta, mode)
        res[sp] = c6_second_order(chans, threshold, on_resonance)
    return C6Result(
        res["c"].value, res["t"].value,
        {sp: dict(r.breakdown) for sp, r in res.items()},
        res["c"].flags + res["t"].flags,
    )


def perturbative_radius(channels: list[Channel], ratio: float = 1e-2) -> float:
    """Smallest r (um) with max|coupling| / r^3 <= ratio * min|defect|."""
    live = [ch for ch in channels if ch.amplitude > _amp_floor(channels)]
    if not live:
        return 1.0
    top = max(ch.amplitude for ch in live)
    low = min(abs(ch.defect) for ch in live)
    return (top / (ratio * low)) ** (1 / 3)
