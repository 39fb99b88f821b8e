"""Noise-free algebra of the multi-qubit blockade gates and GHZ growth.

Qubit order is controls first, then targets, big-endian: qubit 0 is the most
significant bit of the basis index.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

DENSE_CAP = 12
PULSE_CAP = 8
PRUNE = 1e-14

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
# i*H has determinant 1 and still maps Z to X under conjugation
H_SU = 1j * H


class CircuitError(ValueError):
    pass


def _check_size(n: int, cap: int = DENSE_CAP) -> None:
    if n > cap:
        raise CircuitError(f"{n} qubits exceeds the dense cap of {cap}")


def _check_km(k: int, m: int) -> None:
    if k < 1 or m < 1:
        raise CircuitError("need k >= 1 controls and m >= 1 targets")


def kron_all(mats) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m_ in mats:
        out = np.kron(out, m_)
    return out


def _bits(n: int) -> np.ndarray:
    """Row b holds the bits of basis index b, most significant first."""
    idx = np.arange(2 ** n)
    return (idx[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1


def ckzm_unitary(k: int, m: int) -> np.ndarray:
    """Diagonal C_kZ^m: (-1)^(number of targets in |1>) iff every control is |1>."""
    _check_km(k, m)
    _check_size(k + m)
    b = _bits(k + m)
    on = np.all(b[:, :k] == 1, axis=1)
    phase = np.where(on, (-1.0) ** b[:, k:].sum(axis=1), 1.0)
    return np.diag(phase.astype(complex))


def cknotm(k: int, m: int) -> np.ndarray:
    """Flip every target iff all controls are |1>, written as an exact permutation.

    Equal to H^{(x)m} C_kZ^m H^{(x)m} on the targets.
    """
    _check_km(k, m)
    _check_size(k + m)
    n = k + m
    b = _bits(n)
    on = np.all(b[:, :k] == 1, axis=1)
    flip = (1 << m) - 1
    dest = np.where(on, np.arange(2 ** n) ^ flip, np.arange(2 ** n))
    u = np.zeros((2 ** n, 2 ** n), dtype=complex)
    u[dest, np.arange(2 ** n)] = 1.0
    return u


def hadamard_conjugated_ckzm(k: int, m: int) -> np.ndarray:
    hh = kron_all([I2] * k + [H] * m)
    return hh @ ckzm_unitary(k, m) @ hh


def x_conjugated_ckzm(k: int, m: int) -> np.ndarray:
    xx = kron_all([I2] * k + [X] * m)
    return xx @ ckzm_unitary(k, m) @ xx


# --- pulse-level sequence on three-level sites {0, 1, r} ---------------------

def _apply_site(psi: np.ndarray, op: np.ndarray, site: int) -> np.ndarray:
    psi = np.moveaxis(psi, site, 0)
    shape = psi.shape
    psi = (op @ psi.reshape(shape[0], -1)).reshape(shape)
    return np.moveaxis(psi, 0, site)


def _pi_pulse(sign: float) -> np.ndarray:
    """exp(-i sign pi/2 sigma_x) on |0> <-> |r>, identity on |1>."""
    u = np.eye(3, dtype=complex)
    u[0, 0] = u[2, 2] = math.cos(math.pi / 2)
    u[0, 2] = u[2, 0] = -1j * sign * math.sin(math.pi / 2)
    return u


def pulse_simulate(k: int, m: int, leakage_tol: float = 1e-12) -> np.ndarray:
    """Computational-subspace unitary of the pi / 2pi / -pi sequence, ideal blockade.

    Targets see a 2pi pulse on |0> <-> |t> that returns -|0>, unless some control
    sits in |c>, in which case nothing happens to them.
    """
    _check_km(k, m)
    n = k + m
    if n > PULSE_CAP:
        raise CircuitError(f"{n} three-level sites exceeds the pulse cap of {PULSE_CAP}")
    dim2 = 2 ** n
    # columns: every computational input, embedded in the (3,)*n register
    psi = np.zeros((3,) * n + (dim2,), dtype=complex)
    for col, bits in enumerate(itertools.product((0, 1), repeat=n)):
        psi[bits + (col,)] = 1.0
    for c in range(k):
        psi = _apply_site(psi, _pi_pulse(1.0), c)
    two_pi = _pi_pulse(1.0) @ _pi_pulse(1.0)
    free = psi.copy()
    for t in range(k, n):
        free = _apply_site(free, two_pi, t)
    # controls all outside |c> -> the targets rotate; otherwise blockaded
    mask = np.ones((3,) * k, dtype=bool)
    for idx in itertools.product(range(3), repeat=k):
        mask[idx] = 2 not in idx
    mask = mask.reshape(mask.shape + (1,) * (m + 1))
    psi = np.where(mask, free, psi)
    for c in range(k):
        psi = _apply_site(psi, _pi_pulse(-1.0), c)
    comp = psi[(slice(0, 2),) * n].reshape(dim2, dim2)
    leak = float(np.max(np.abs(1 - np.sum(np.abs(comp) ** 2, axis=0))))
    if leak > leakage_tol:
        raise CircuitError(f"leakage {leak:.3e} out of the computational subspace")
    return comp


# --- single-qubit decomposition -------------------------------------------------

def rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def zdelta(delta: float) -> np.ndarray:
    """Z_delta = exp(i delta / 2) Z."""
    return np.exp(0.5j * delta) * Z


@dataclass(frozen=True)
class SU2Decomposition:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    delta: float

    @property
    def W(self) -> np.ndarray:
        return self.A @ Z @ self.B @ Z @ self.C

    def as_dict(self) -> dict:
        def enc(mat):
            return [[[float(v.real), float(v.imag)] for v in row] for row in mat]
        return {"A": enc(self.A), "B": enc(self.B), "C": enc(self.C), "delta": self.delta}


def su2_decompose(u) -> SU2Decomposition:
    """U = exp(i delta) A Z B Z C with A B C = I and det A = det B = det C = 1."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not np.allclose(u.conj().T @ u, I2, atol=1e-10):
        raise CircuitError("input is not a 2x2 unitary")
    delta = float(np.angle(np.linalg.det(u)) / 2)  # in (-pi/2, pi/2]
    w = u * np.exp(-1j * delta)
    a, b = w[0, 0], w[1, 0]
    gamma = 2 * math.atan2(abs(b), abs(a))
    s = -2 * np.angle(a) if abs(a) > 1e-15 else 0.0  # beta + phi
    d = 2 * np.angle(b) if abs(b) > 1e-15 else 0.0  # beta - phi
    beta, phi = (s + d) / 2, (s - d) / 2
    a_x = rz(beta) @ ry(gamma / 2)
    b_x = ry(-gamma / 2) @ rz(-(phi + beta) / 2)
    c_x = rz((phi - beta) / 2)
    hd = H_SU.conj().T
    return SU2Decomposition(a_x @ H_SU, hd @ b_x @ H_SU, hd @ c_x, delta)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


# --- C_k U_1...U_m assembly --------------------------------------------------------

def controlled_layer(k: int, mats) -> np.ndarray:
    """Apply mats[i] to target i iff all k controls are |1>; identity otherwise."""
    m = len(mats)
    n = k + m
    _check_size(n)
    on = kron_all(mats)
    d = 2 ** m
    u = np.eye(2 ** n, dtype=complex)
    u[-d:, -d:] = on  # the block where every control bit is 1
    return u


def cku_assemble(k: int, u_list) -> tuple[list[dict], np.ndarray]:
    """C layer, C_kZ_<delta>^m, B layer, C_kZ_<delta>^m, A layer (time order).

    <delta> is the mean of the per-target phases.  Returns a circuit description
    and its dense unitary.
    """
    u_list = [np.asarray(u, dtype=complex) for u in u_list]
    m = len(u_list)
    _check_km(k, m)
    _check_size(k + m)
    decs = [su2_decompose(u) for u in u_list]
    mean_delta = float(np.mean([dc.delta for dc in decs]))
    ctrl = [I2] * k

    def layer(name):
        return kron_all(ctrl + [getattr(dc, name) for dc in decs])

    cz = controlled_layer(k, [zdelta(mean_delta)] * m)
    ops = [("C", layer("C")), ("CkZd", cz), ("B", layer("B")), ("CkZd", cz), ("A", layer("A"))]
    total = np.eye(2 ** (k + m), dtype=complex)
    circuit = []
    for name, op in ops:
        total = op @ total
        entry = {"layer": name}
        if name == "CkZd":
            entry.update(controls=list(range(k)), targets=list(range(k, k + m)), delta=mean_delta)
        else:
            entry.update(targets=list(range(k, k + m)))
        circuit.append(entry)
    return circuit, total


def controlled_block(k: int, u_list) -> np.ndarray:
    """Reference: U_1 (x) ... (x) U_m on the targets iff all controls are |1>."""
    return controlled_layer(k, [np.asarray(u, dtype=complex) for u in u_list])


# --- sparse state simulation ---------------------------------------------------------

@dataclass
class SparseState:
    n: int
    amps: dict = field(default_factory=dict)
    max_support: int = 0

    @classmethod
    def zeros(cls, n: int) -> "SparseState":
        return cls(n, {"0" * n: 1.0 + 0j}, 1)

    @property
    def support(self) -> int:
        return len(self.amps)

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.amps.values()))

    def _track(self, bound: int | None) -> None:
        self.max_support = max(self.max_support, self.support)
        if bound is not None and self.support > bound:
            raise CircuitError(f"support {self.support} exceeds bound {bound}")

    def apply_1q(self, site: int, u: np.ndarray, bound: int | None = None) -> None:
        out: dict = {}
        for key, a in self.amps.items():
            b = int(key[site])
            for nb in (0, 1):
                v = u[nb, b] * a
                if v != 0:
                    k2 = key[:site] + str(nb) + key[site + 1:]
                    out[k2] = out.get(k2, 0) + v
        self.amps = {k_: v for k_, v in out.items() if abs(v) > PRUNE}
        self._track(bound)

    def ckzm(self, controls, targets) -> None:
        for key in self.amps:
            if all(key[c] == "1" for c in controls):
                if sum(key[t] == "1" for t in targets) % 2:
                    self.amps[key] = -self.amps[key]

    def fidelity(self, other: dict) -> float:
        ov = sum(np.conj(v) * self.amps.get(k_, 0) for k_, v in other.items())
        return float(abs(ov) ** 2)

    def probabilities(self) -> dict:
        return {k_: abs(v) ** 2 for k_, v in sorted(self.amps.items())}

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "amplitudes": {k_: [float(v.real), float(v.imag)] for k_, v in sorted(self.amps.items())},
            "support": self.support,
            "max_support": self.max_support,
        }


def ghz_reference(n: int) -> dict:
    r = 1 / math.sqrt(2)
    return {"0" * n: r, "1" * n: r}


@dataclass
class GHZRun:
    state: SparseState
    sites: list
    fidelity: float
    support_after_h: list


def ghz_simulate(steps: int) -> GHZRun:
    """Grow a GHZ state over the diamond |x| + |y| <= steps.

    Each step: H on its targets, C_kZ^m from the previous shell, H on its targets.
    """
    from .ghzplan import plan_steps

    if steps < 1:
        raise CircuitError("need at least one step")
    plan = plan_steps(steps)
    sites = [(0, 0)] + [t for st in plan for t in st.targets]
    pos = {s: i for i, s in enumerate(sites)}
    st = SparseState.zeros(len(sites))
    st.apply_1q(pos[(0, 0)], H)
    after_h = []
    for step in plan:
        ctrl = [pos[c] for c in step.controls]
        tg = [pos[t] for t in step.targets]
        bound = 2 ** (len(tg) + 1)
        for t in tg:
            st.apply_1q(t, H, bound)
        after_h.append(st.support)
        st.ckzm(ctrl, tg)
        for t in tg:
            st.apply_1q(t, H, bound)
    fid = st.fidelity(ghz_reference(len(sites)))
    return GHZRun(st, sites, fid, after_h)


def run_circuit(spec: dict) -> SparseState:
    """Execute a JSON-style circuit: {"n_qubits": n, "gates": [{"op": ..., ...}]}.

    ops: h, x, z (targets); ckzm, cknotm (controls, targets); u (targets, matrix
    as [[re, im], ...] pairs or plain reals).
    """
    n = int(spec["n_qubits"])
    st = SparseState.zeros(n)
    for g in spec.get("gates", []):
        op = g["op"]
        tg = list(g.get("targets", []))
        if any(not 0 <= q < n for q in tg + list(g.get("controls", []))):
            raise CircuitError(f"qubit index out of range in {g}")
        if op in ("h", "x", "z"):
            for t in tg:
                st.apply_1q(t, {"h": H, "x": X, "z": Z}[op])
        elif op == "u":
            mat = parse_matrix(g["matrix"])
            for t in tg:
                st.apply_1q(t, mat)
        elif op == "ckzm":
            st.ckzm(g["controls"], tg)
        elif op == "cknotm":
            for t in tg:
                st.apply_1q(t, H)
            st.ckzm(g["controls"], tg)
            for t in tg:
                st.apply_1q(t, H)
        else:
            raise CircuitError(f"unknown op {op!r}")
    return st


def parse_matrix(doc) -> np.ndarray:
    """2x2 matrix from nested lists of numbers or [re, im] pairs."""
    rows = []
    for row in doc:
        vals = []
        for v in row:
            if isinstance(v, (list, tuple)):
                vals.append(complex(v[0], v[1]))
            else:
                vals.append(complex(v))
        rows.append(vals)
    mat = np.array(rows, dtype=complex)
    if mat.shape != (2, 2):
        raise CircuitError("matrix must be 2x2")
    return mat
