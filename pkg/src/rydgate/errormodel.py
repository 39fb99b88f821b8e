"""Gate error budget: Rydberg decay, imperfect blockade and residual vdW shifts.

User-facing frequencies are ordinary MHz and lifetimes are ms.  Decay terms need
angular frequency, so they carry an explicit 2*pi*1e6 * 1e-3 conversion; ratios of
two frequencies (blockade, vdW) are unit free.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

CONTROL, TARGET, IDLE = "control", "target", "idle"
CONVENTIONS = ("worst-case-blockade", "configuration-average")
RATES = ("step", "main-text")


def _omega_tau(omega: float, tau: float) -> float:
    """Dimensionless product of an angular Rabi frequency and a lifetime."""
    return 2 * math.pi * omega * 1e6 * tau * 1e-3


@dataclass(frozen=True)
class Lattice:
    positions: np.ndarray
    roles: tuple[str, ...]
    spacing: float = 1.0

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "roles", tuple(self.roles))
        if len(self.roles) != len(pos):
            raise ValueError("one role per position required")
        bad = set(self.roles) - {CONTROL, TARGET, IDLE}
        if bad:
            raise ValueError(f"unknown roles {sorted(bad)}")
        if len({tuple(p) for p in pos}) != len(pos):
            raise ValueError("duplicate lattice positions")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")

    @property
    def controls(self) -> list[int]:
        return [i for i, r in enumerate(self.roles) if r == CONTROL]

    @property
    def targets(self) -> list[int]:
        return [i for i, r in enumerate(self.roles) if r == TARGET]

    def distance(self, i: int, j: int) -> float:
        return float(np.linalg.norm(self.positions[i] - self.positions[j]))

    @property
    def d_nn(self) -> float:
        """Nearest control-target distance in lattice units."""
        return min(self.distance(c, t) for c in self.controls for t in self.targets)

    def check_gate(self) -> None:
        if not self.controls or not self.targets:
            raise ValueError("lattice needs at least one control and one target")

    def to_dict(self) -> dict:
        return {"positions": self.positions.tolist(), "roles": list(self.roles),
                "spacing": self.spacing}

    @classmethod
    def from_dict(cls, doc: dict) -> "Lattice":
        try:
            return cls(doc["positions"], doc["roles"], float(doc.get("spacing", 1.0)))
        except KeyError as exc:
            raise ValueError(f"lattice spec missing key {exc.args[0]!r}") from None


def load_lattice(path) -> Lattice:
    with open(path) as fh:
        return Lattice.from_dict(json.load(fh))


def checkerboard_lattice(n: int = 4, spacing: float = 1.0) -> Lattice:
    """n x n square lattice; controls where x + y is even, targets on the other sublattice."""
    pos = [(x, y) for y in range(n) for x in range(n)]
    roles = [CONTROL if (x + y) % 2 == 0 else TARGET for x, y in pos]
    return Lattice(np.array(pos, dtype=float), roles, spacing)


@dataclass(frozen=True)
class ErrorParams:
    v_nn: float
    tau: float
    tau_c: float | None = None
    tau_t: float | None = None
    v_vdw_total: float = 0.0

    def __post_init__(self):
        if not self.v_nn > 0:
            raise ValueError("v_nn must be positive")
        for name in ("tau", "tau_c", "tau_t"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ValueError(f"{name} must be positive")
        if self.v_vdw_total < 0:
            raise ValueError("v_vdw_total must be nonnegative")

    @property
    def split(self) -> bool:
        return self.tau_c is not None and self.tau_t is not None

    @property
    def tau_single(self) -> float:
        """Lifetime used when one tau is needed: harmonic mean of tau_c, tau_t if split."""
        if self.split:
            return 2.0 / (1.0 / self.tau_c + 1.0 / self.tau_t)
        return self.tau

    def as_dict(self) -> dict:
        return {"v_nn_MHz": self.v_nn, "tau_ms": self.tau, "tau_c_ms": self.tau_c,
                "tau_t_ms": self.tau_t, "v_vdw_total_MHz": self.v_vdw_total}


@dataclass(frozen=True)
class ErrorBudget:
    eps_decay: float
    eps_blockade: float
    eps_vdw: float
    total: float
    omega_opt: float
    convention: str = CONVENTIONS[1]
    rates: str = RATES[1]
    flags: tuple[str, ...] = field(default=())

    def as_dict(self) -> dict:
        return {
            "eps_decay": self.eps_decay, "eps_blockade": self.eps_blockade,
            "eps_vdw": self.eps_vdw, "total": self.total, "omega_opt_MHz": self.omega_opt,
            "convention": self.convention, "rates": self.rates, "flags": list(self.flags),
        }


class Blockade(NamedTuple):
    v_b: float
    unblockaded: bool


def blockade_strength(lat: Lattice, control_subset, target: int, v_nn: float = 1.0) -> Blockade:
    """V_b = sum_c v_nn (d_nn / d_c)^3 over the given controls.

    At theta = pi/2 every in-plane pair has the same angular factor, so the sum is
    of magnitudes and the angular factor lives in v_nn.
    """
    if lat.roles[target] != TARGET:
        raise ValueError(f"site {target} is not a target")
    subset = list(control_subset)
    if not subset:
        return Blockade(0.0, True)
    d_nn = lat.d_nn
    v = sum(v_nn * (d_nn / lat.distance(c, target)) ** 3 for c in subset)
    return Blockade(float(v), False)


def eps_decay(omega: float, tau: float) -> float:
    """(pi/2) / (Omega tau) for one atom, Omega in angular units."""
    if not omega > 0 or not tau > 0:
        raise ValueError("omega and tau must be positive")
    if math.isinf(tau):
        return 0.0
    return (math.pi / 2) / _omega_tau(omega, tau)


def eps_blockade(omega_t: float, v_b: float) -> float:
    if v_b <= 0:
        return math.inf
    return (2 * omega_t / v_b) ** 2


def eps_vdw(v_vdw: float, omega: float) -> float:
    return (v_vdw / (2 * omega)) ** 2


def step_error(n_c: int, n_t: int, omega: float, tau: float, mean_vb_inv2: float) -> float:
    """(N_c + N_t) pi / (4 Omega tau) + N_t <V_b^-2> Omega^2."""
    return (n_c + n_t) * math.pi / (4 * _omega_tau(omega, tau)) + n_t * mean_vb_inv2 * omega ** 2


def optimal_step_error(n_c: int, n_t: int, tau: float, v: float) -> tuple[float, float]:
    """Closed-form minimum of step_error over Omega, with v = <V_b^-2>^(-1/2) in MHz.

    Returns (eps_min, omega_opt in MHz).
    """
    if min(n_c, n_t, tau, v) <= 0:
        raise ValueError("counts, tau and v must be positive")
    w = 2 * math.pi * 1e6 * v
    t = tau * 1e-3
    eps = 3 * math.pi ** (2 / 3) * n_t ** (1 / 3) * (n_c + n_t) ** (2 / 3) / (4 * (w * t) ** (2 / 3))
    omega = ((n_c + n_t) * math.pi * w ** 2 / (8 * n_t * t)) ** (1 / 3)
    return eps, omega / (2 * math.pi * 1e6)


def numeric_step_minimum(n_c: int, n_t: int, tau: float, v: float) -> tuple[float, float]:
    """Bounded 1D minimisation of step_error in log(Omega)."""
    _, guess = optimal_step_error(n_c, n_t, tau, v)
    return _minimise(lambda om: step_error(n_c, n_t, om, tau, v ** -2), guess)


def _minimise(fn, guess: float) -> tuple[float, float]:
    lg = math.log(guess)
    res = minimize_scalar(lambda x: fn(math.exp(x)), bounds=(lg - 4, lg + 4),
                          method="bounded", options={"xatol": 1e-12, "maxiter": 500})
    return float(res.fun), float(math.exp(res.x))


def _mean_vb(lat: Lattice, target: int, v_nn: float) -> float:
    """V_b averaged over every non-empty subset of excited controls.

    Each control lies in 2^(N_c - 1) of the 2^N_c - 1 non-empty subsets.
    """
    cs = lat.controls
    n = len(cs)
    full = blockade_strength(lat, cs, target, v_nn).v_b
    return full * 2 ** (n - 1) / (2 ** n - 1)


def configuration_vb(lat: Lattice, target: int, v_nn: float) -> list[float]:
    """V_b for every non-empty control pattern, in a fixed enumeration order."""
    cs = lat.controls
    out = []
    for k in range(1, len(cs) + 1):
        for sub in itertools.combinations(cs, k):
            out.append(blockade_strength(lat, sub, target, v_nn).v_b)
    return out


def gate_error(lat: Lattice, params: ErrorParams, convention: str = "configuration-average",
               rates: str = "main-text") -> ErrorBudget:
    """Optimise the shared Rabi frequency and return the error budget.

    convention:
      worst-case-blockade    each target's V_b from all controls together
      configuration-average  each target's V_b averaged over the non-empty
                             patterns of excited controls
    rates:
      step       (N_c + N_t) pi / (4 Omega tau) + sum_t (Omega / V_b,t)^2
      main-text  (N_c + N_t) (pi/2) / (Omega tau) + sum_t (2 Omega / V_b,t)^2
    The vdW term (V_vdW / 2 Omega)^2 is added in both cases.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")
    if rates not in RATES:
        raise ValueError(f"rates must be one of {RATES}")
    lat.check_gate()
    flags = []
    vbs = []
    for t in lat.targets:
        if convention == "worst-case-blockade":
            vb = blockade_strength(lat, lat.controls, t, params.v_nn).v_b
        else:
            vb = _mean_vb(lat, t, params.v_nn)
        if vb <= 0:
            flags.append(f"target {t} unblockaded")
        vbs.append(vb)
    if flags:
        return ErrorBudget(math.inf, math.inf, 0.0, math.inf, math.nan, convention, rates, tuple(flags))
    inv2 = float(sum(v ** -2 for v in vbs))
    dec_k, blk_k = (0.5, 1.0) if rates == "step" else (1.0, 4.0)

    def decay(om):
        if params.split:
            n_c, n_t = len(lat.controls), len(lat.targets)
            return dec_k * (n_c * eps_decay(om, params.tau_c) + n_t * eps_decay(om, params.tau_t))
        return dec_k * (len(lat.controls) + len(lat.targets)) * eps_decay(om, params.tau)

    def parts(om):
        return decay(om), blk_k * inv2 * om ** 2, eps_vdw(params.v_vdw_total, om)

    guess = (decay(1.0) / (2 * blk_k * inv2)) ** (1 / 3)
    _, om = _minimise(lambda w: sum(parts(w)), guess)
    d, b, v = parts(om)
    return ErrorBudget(d, b, v, d + b + v, om, convention, rates, ())
