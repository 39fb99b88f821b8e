"""Rydberg level data: states, energies, lifetimes and transition dipoles.

A dataset is a JSON document with three top-level keys::

    {
      "states":  [{"id": "60s", "n": 60, "l": 0, "j": 0.5, "mj": -0.5,
                   "energy": 0.0, "lifetime": 0.3}, ...],
      "dipoles": [{"from": "60s", "to": "59p", "q": 0, "mu": 48.0}, ...],
      "roles":   {"s_id": "60s", "p0_id": "59p", "pplus_id": "60p+"}
    }

Energies are in MHz, lifetimes in ms.  Dipole moments are pre-scaled so that
a q=0 pair coupling is ``mu_a * mu_b * (1 - 3 cos^2 theta) / r^3`` in MHz with
``r`` in micrometres.  Each stored element also stands for its reverse
coupling with the same (real) ``mu``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np


class DatasetError(ValueError):
    """Raised when a dataset file cannot be parsed or fails validation."""


@dataclass(frozen=True)
class StateLabel:
    id: str
    n: int
    l: int
    j: float
    mj: float


@dataclass(frozen=True)
class Level:
    label: StateLabel
    energy: float
    lifetime: float | None = None

    @property
    def id(self) -> str:
        return self.label.id


@dataclass(frozen=True)
class DipoleElement:
    from_id: str
    to_id: str
    q: int
    mu: float


@dataclass(frozen=True)
class LevelDataset:
    states: tuple[Level, ...]
    dipoles: tuple[DipoleElement, ...]
    s_id: str
    p0_id: str
    pplus_id: str
    _index: dict = field(init=False, repr=False, compare=False)
    _couplings: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {lvl.id: i for i, lvl in enumerate(self.states)}
        couplings: dict[str, list[tuple[str, int, float]]] = {lvl.id: [] for lvl in self.states}
        for el in self.dipoles:
            if el.from_id in couplings and el.to_id in couplings:
                couplings[el.from_id].append((el.to_id, el.q, el.mu))
                couplings[el.to_id].append((el.from_id, -el.q, el.mu))
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_couplings", couplings)

    @property
    def ids(self) -> list[str]:
        return [lvl.id for lvl in self.states]

    @property
    def triple(self) -> tuple[str, str, str]:
        return (self.s_id, self.p0_id, self.pplus_id)

    def index(self, state_id: str) -> int:
        try:
            return self._index[state_id]
        except KeyError:
            raise DatasetError(f"unknown state id {state_id!r}") from None

    def level(self, state_id: str) -> Level:
        return self.states[self.index(state_id)]

    def energy(self, state_id: str) -> float:
        return self.level(state_id).energy

    def lifetime(self, state_id: str) -> float | None:
        return self.level(state_id).lifetime

    def neighbours(self, state_id: str) -> list[tuple[str, int, float]]:
        """Dipole partners of a state as ``(other_id, q, mu)`` with q = mj_other - mj_self."""
        self.index(state_id)
        return list(self._couplings[state_id])

    def mu(self, a: str, b: str) -> float:
        """Transition moment between two states, 0.0 if not dipole coupled."""
        for other, _, mu in self._couplings[self.level(a).id]:
            if other == b:
                return mu
        return 0.0

    @property
    def mu0(self) -> float:
        return self.mu(self.s_id, self.p0_id)

    @property
    def muplus(self) -> float:
        return self.mu(self.s_id, self.pplus_id)

    @property
    def m_ratio(self) -> float:
        return abs(self.mu0 / self.muplus)

    def transition_frequency(self, target: str) -> float:
        """omega = E_target - E_s, the bare s -> target transition frequency (MHz)."""
        return self.energy(target) - self.energy(self.s_id)

    def shifted(self, offset: float) -> "LevelDataset":
        """Copy with every energy moved by ``offset`` MHz."""
        states = tuple(Level(lvl.label, lvl.energy + offset, lvl.lifetime) for lvl in self.states)
        return LevelDataset(states, self.dipoles, self.s_id, self.p0_id, self.pplus_id)

    def scaled_dipoles(self, factor: float) -> "LevelDataset":
        dipoles = tuple(DipoleElement(d.from_id, d.to_id, d.q, d.mu * factor) for d in self.dipoles)
        return LevelDataset(self.states, dipoles, self.s_id, self.p0_id, self.pplus_id)

    def to_dict(self) -> dict:
        states = []
        for lvl in self.states:
            rec = {
                "id": lvl.label.id,
                "n": lvl.label.n,
                "l": lvl.label.l,
                "j": lvl.label.j,
                "mj": lvl.label.mj,
                "energy": lvl.energy,
            }
            if lvl.lifetime is not None:
                rec["lifetime"] = lvl.lifetime
            states.append(rec)
        dipoles = [{"from": d.from_id, "to": d.to_id, "q": d.q, "mu": d.mu} for d in self.dipoles]
        roles = {"s_id": self.s_id, "p0_id": self.p0_id, "pplus_id": self.pplus_id}
        return {"states": states, "dipoles": dipoles, "roles": roles}


def _half_integer(value, what: str) -> float:
    twice = 2 * float(value)
    if not math.isfinite(twice) or abs(twice - round(twice)) > 1e-9:
        raise DatasetError(f"{what} = {value!r} is not a multiple of 1/2")
    return round(twice) / 2


def _parse_state(rec: dict, pos: int) -> Level:
    try:
        sid = str(rec["id"])
        n, l = rec["n"], rec["l"]
        j = _half_integer(rec["j"], f"state {sid!r}: j")
        mj = _half_integer(rec["mj"], f"state {sid!r}: mj")
        energy = float(rec["energy"])
    except KeyError as exc:
        raise DatasetError(f"state record #{pos}: missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DatasetError):
            raise
        raise DatasetError(f"state record #{pos}: {exc}") from None
    if not (isinstance(n, int) and n > 0):
        raise DatasetError(f"state {sid!r}: n must be a positive integer, got {n!r}")
    if not (isinstance(l, int) and 0 <= l < n):
        raise DatasetError(f"state {sid!r}: l must be an integer in [0, n), got {l!r}")
    if round(2 * j) % 2 != 1:
        raise DatasetError(f"state {sid!r}: j = {j} is not half-odd (alkali fine structure)")
    if not abs(l - 0.5) <= j <= l + 0.5:
        raise DatasetError(f"state {sid!r}: j = {j} incompatible with l = {l}")
    if abs(mj) > j or round(2 * (j - mj)) % 2 != 0:
        raise DatasetError(f"state {sid!r}: mj = {mj} invalid for j = {j}")
    if not math.isfinite(energy):
        raise DatasetError(f"state {sid!r}: energy is not finite")
    lifetime = rec.get("lifetime")
    if lifetime is not None:
        lifetime = float(lifetime)
        if not (math.isfinite(lifetime) and lifetime > 0):
            raise DatasetError(f"state {sid!r}: lifetime must be positive")
    return Level(StateLabel(sid, n, l, j, mj), energy, lifetime)


def _check_dipole(el: DipoleElement, levels: dict[str, Level], pos: int) -> None:
    name = f"dipole #{pos} ({el.from_id} -> {el.to_id}, q={el.q})"
    for end in (el.from_id, el.to_id):
        if end not in levels:
            raise DatasetError(f"{name}: unknown state id {end!r}")
    if el.q not in (-1, 0, 1):
        raise DatasetError(f"{name}: q must be -1, 0 or +1")
    if not math.isfinite(el.mu):
        raise DatasetError(f"{name}: mu is not finite")
    a, b = levels[el.from_id].label, levels[el.to_id].label
    if abs(a.l - b.l) != 1:
        raise DatasetError(f"{name}: selection rule violated, |l_from - l_to| = {abs(a.l - b.l)}")
    if abs(a.j - b.j) > 1:
        raise DatasetError(f"{name}: selection rule violated, |j_from - j_to| > 1")
    if abs(b.mj - (a.mj + el.q)) > 1e-9:
        raise DatasetError(f"{name}: selection rule violated, mj_to = {b.mj} != mj_from + q = {a.mj + el.q}")


def parse_dataset(doc: dict) -> LevelDataset:
    """Build and validate a dataset from its JSON-compatible dictionary form."""
    if not isinstance(doc, dict):
        raise DatasetError("dataset document must be a JSON object")
    for key in ("states", "dipoles", "roles"):
        if key not in doc:
            raise DatasetError(f"missing top-level key {key!r}")
    states = [_parse_state(rec, i) for i, rec in enumerate(doc["states"])]
    levels: dict[str, Level] = {}
    for lvl in states:
        if lvl.id in levels:
            raise DatasetError(f"duplicate state id {lvl.id!r}")
        levels[lvl.id] = lvl

    dipoles = []
    seen = set()
    for i, rec in enumerate(doc["dipoles"]):
        try:
            el = DipoleElement(str(rec["from"]), str(rec["to"]), int(rec["q"]), float(rec["mu"]))
        except KeyError as exc:
            raise DatasetError(f"dipole #{i}: missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise DatasetError(f"dipole #{i}: {exc}") from None
        _check_dipole(el, levels, i)
        key = frozenset((el.from_id, el.to_id))
        if key in seen:
            raise DatasetError(f"dipole #{i}: duplicate element between {el.from_id!r} and {el.to_id!r}")
        seen.add(key)
        dipoles.append(el)

    roles = doc["roles"]
    try:
        s_id, p0_id, pplus_id = (str(roles[k]) for k in ("s_id", "p0_id", "pplus_id"))
    except (KeyError, TypeError):
        raise DatasetError("roles must name s_id, p0_id and pplus_id") from None
    for role, sid in (("s_id", s_id), ("p0_id", p0_id), ("pplus_id", pplus_id)):
        if sid not in levels:
            raise DatasetError(f"role {role}: unknown state id {sid!r}")
    if len({s_id, p0_id, pplus_id}) != 3:
        raise DatasetError("roles must name three distinct states")

    ds = LevelDataset(tuple(states), tuple(dipoles), s_id, p0_id, pplus_id)
    q_of = {other: q for other, q, _ in ds.neighbours(s_id)}
    if q_of.get(p0_id) != 0:
        raise DatasetError(f"designated triple: no q=0 element between {s_id!r} and {p0_id!r}")
    if q_of.get(pplus_id) != 1:
        raise DatasetError(f"designated triple: no q=+1 element from {s_id!r} to {pplus_id!r}")
    return ds


def load_dataset(path) -> LevelDataset:
    """Read a dataset file.  ``"toy_alkali"`` names the bundled fixture."""
    path = Path(path)
    if not path.exists() and path.stem in bundled_datasets():
        text = resources.files("rydgate.data").joinpath(path.stem + ".json").read_text()
    else:
        try:
            text = path.read_text()
        except OSError as exc:
            raise DatasetError(f"cannot read {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: malformed JSON ({exc})") from None
    return parse_dataset(doc)


def save_dataset(ds: LevelDataset, path) -> None:
    Path(path).write_text(json.dumps(ds.to_dict(), indent=2) + "\n")


def bundled_datasets() -> list[str]:
    return sorted(
        p.name[:-5] for p in resources.files("rydgate.data").iterdir() if p.name.endswith(".json")
    )


def toy_alkali() -> LevelDataset:
    return load_dataset("toy_alkali")


def pair_defect(d: LevelDataset, a: str, b: str, a2: str, b2: str) -> float:
    """Two-atom energy defect (E_a + E_b) - (E_a2 + E_b2) in MHz."""
    return (d.energy(a) + d.energy(b)) - (d.energy(a2) + d.energy(b2))


def random_toy_dataset(seed: int, n_extra: int = 3, mu_scale: float = 40.0) -> LevelDataset:
    """Random valid dataset: the dressing triple plus ``n_extra`` undressed states.

    Every extra state is dipole-coupled to at least one member of the triple and
    energies are spread over tens of GHz, so pair defects are large compared with
    the couplings at a few micrometres.
    """
    rng = np.random.default_rng(seed)
    states = [
        {"id": "s", "n": 60, "l": 0, "j": 0.5, "mj": -0.5, "energy": 0.0},
        {"id": "p0", "n": 59, "l": 1, "j": 0.5, "mj": -0.5, "energy": float(-rng.uniform(15e3, 25e3))},
        {"id": "pp", "n": 60, "l": 1, "j": 0.5, "mj": 0.5, "energy": float(rng.uniform(15e3, 25e3))},
    ]
    mu0 = float(mu_scale * rng.uniform(0.7, 1.3))
    mup = float(mu_scale * rng.uniform(0.7, 1.3))
    dipoles = [
        {"from": "s", "to": "p0", "q": 0, "mu": mu0},
        {"from": "s", "to": "pp", "q": 1, "mu": mup},
    ]
    # (l, j, mj) choices for extra states and the triple members they can couple to
    templates = [
        (0, 0.5, -0.5), (0, 0.5, 0.5), (1, 1.5, -0.5), (1, 0.5, -0.5),
        (2, 1.5, -0.5), (2, 1.5, 0.5), (2, 2.5, -1.5), (2, 1.5, 1.5),
    ]
    triple = {s["id"]: s for s in states}
    made = 0
    while made < n_extra:
        l, j, mj = templates[rng.integers(len(templates))]
        partners = []
        for tid, t in triple.items():
            q = mj - t["mj"]
            if abs(l - t["l"]) == 1 and abs(q) <= 1 and abs(j - t["j"]) <= 1:
                partners.append((tid, int(round(q))))
        if not partners:
            continue
        uid = f"u{made}"
        sign = rng.choice([-1.0, 1.0])
        states.append({
            "id": uid, "n": 58 + made % 4, "l": l, "j": j, "mj": mj,
            "energy": float(sign * rng.uniform(5e3, 60e3)),
        })
        keep = rng.uniform(size=len(partners)) < 0.8
        keep[rng.integers(len(partners))] = True
        for (tid, q), k in zip(partners, keep):
            if k:
                dipoles.append({"from": tid, "to": uid, "q": q, "mu": float(mu_scale * rng.uniform(0.2, 1.2))})
        made += 1
    return parse_dataset({
        "states": states,
        "dipoles": dipoles,
        "roles": {"s_id": "s", "p0_id": "p0", "pplus_id": "pp"},
    })
