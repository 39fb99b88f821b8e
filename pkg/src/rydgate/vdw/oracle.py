"""Exact-diagonalisation check of dressed C6 values in an extended Floquet space.

The two-atom Hamiltonian is assembled from the single-atom drive Hamiltonian
and the lab-frame dipole operators only; nothing here reuses the channel
bookkeeping of the perturbative model.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from ..dataset import LevelDataset
from ..dressing import DressedTriple, mw_hamiltonian


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleFit:
    c6: float
    residual: float
    energies: np.ndarray
    r: np.ndarray
    overlaps: np.ndarray


def _single_atom(ds: LevelDataset, triple: DressedTriple):
    ids = [ds.s_id, ds.p0_id, ds.pplus_id] + [i for i in ds.ids if i not in ds.triple]
    n = len(ids)
    h = np.zeros((n, n), dtype=complex)
    h[:3, :3] = mw_hamiltonian(triple.drives)
    e_s = ds.energy(ds.s_id)
    for i, sid in enumerate(ids[3:], start=3):
        h[i, i] = ds.energy(sid) - e_s
    harm = np.zeros((n, 2), dtype=int)
    harm[1] = (1, 0)
    harm[2] = (0, 1)
    # dq[q][b, a] = <b| d_q |a>, with q = m_b - m_a
    dq = {q: np.zeros((n, n)) for q in (-1, 0, 1)}
    pos = {sid: i for i, sid in enumerate(ids)}
    for el in ds.dipoles:
        a, b = pos[el.from_id], pos[el.to_id]
        dq[el.q][b, a] = el.mu
        dq[-el.q][a, b] = el.mu
    return ids, h, harm, dq


def floquet_matrix_parts(ds: LevelDataset, triple: DressedTriple, species: str,
                         theta: float, n_max: int):
    """Return (K0, K1, target) with K(r) = K0 + K1 / r^3 over the harmonic grid."""
    ids, h1, harm, dq = _single_atom(ds, triple)
    n = len(ids)
    eye = np.eye(n)
    h0 = np.kron(h1, eye) + np.kron(eye, h1)
    ang = 1 - 3 * math.cos(theta) ** 2
    v = ang * (np.kron(dq[0], dq[0]) - 0.5 * (np.kron(dq[1], dq[-1]) + np.kron(dq[-1], dq[1])))
    pair_h = (harm[:, None, :] + harm[None, :, :]).reshape(n * n, 2)
    inside = np.zeros(n * n, dtype=bool)
    inside.reshape(n, n)[:3, :3] = True

    d = triple.drives if triple.drives.nu0 is not None else triple.drives.with_frequencies(ds)
    nu = np.array([d.nu0, d.nuplus])
    grid = list(itertools.product(range(-n_max, n_max + 1), repeat=2))
    where = {g: i for i, g in enumerate(grid)}
    dim = n * n
    k0 = np.zeros((len(grid) * dim,) * 2, dtype=complex)
    k1 = np.zeros_like(k0)
    rows, cols = np.nonzero(v)
    # |row><col| rotates with k = h(row) - h(col); it links block m to block m + k
    ks = pair_h[rows] - pair_h[cols]
    keep = ~(inside[rows] & inside[cols] & np.any(ks != 0, axis=1))
    rows, cols, ks = rows[keep], cols[keep], ks[keep]
    for g, bi in where.items():
        sl = slice(bi * dim, (bi + 1) * dim)
        k0[sl, sl] = h0 - np.dot(g, nu) * np.eye(dim)
        for rr, cc, kv in zip(rows, cols, ks):
            tgt = (g[0] + kv[0], g[1] + kv[1])
            bj = where.get(tgt)
            if bj is not None:
                k1[bi * dim + rr, bj * dim + cc] += v[rr, cc]
    sp = triple.species(species)
    single = np.zeros(n, dtype=complex)
    single[:3] = sp.coeffs
    target = np.zeros(len(grid) * dim, dtype=complex)
    b0 = where[(0, 0)]
    target[b0 * dim:(b0 + 1) * dim] = np.kron(single, single)
    return k0, k1, target


def oracle_c6(
    ds: LevelDataset,
    triple: DressedTriple,
    species: str,
    r_list,
    theta: float = math.pi / 2,
    n_max: int = 2,
    max_residual: float = 1e-4,
    n_eig: int = 6,
) -> OracleFit:
    """Fit E(r) = E_inf - C6 / r^6 (+ r^-9, r^-12 nuisance terms) to the tracked level.

    ``r_list`` is in um and should sit in the perturbative regime.  Returns C6
    in GHz um^6 and the relative rms fit residual.
    """
    r = np.sort(np.asarray(r_list, dtype=float))[::-1]
    if len(r) < 5:
        raise OracleError("need at least 5 separations to fit")
    k0, k1, target = floquet_matrix_parts(ds, triple, species, theta, n_max)
    k0, k1 = sps.csc_matrix(k0), sps.csc_matrix(k1)
    e_ref = float(np.real(np.vdot(target, k0 @ target)))
    prev = target
    energies, overlaps = [], []
    for ri in r:
        # shift-invert just off the unperturbed level keeps the factorisation regular
        vals, vecs = spla.eigsh(k0 + k1 / ri ** 3, k=min(n_eig, k0.shape[0] - 2),
                                sigma=e_ref + 1e-3 * (1 + abs(e_ref)), which="LM")
        ov = np.abs(vecs.conj().T @ prev)
        i = int(np.argmax(ov))
        if ov[i] < 0.9:
            raise OracleError(f"eigenvalue tracking ambiguous at r = {ri:g} um (overlap {ov[i]:.3f})")
        energies.append(vals[i])
        overlaps.append(ov[i])
        v = vecs[:, i]
        prev = v * np.exp(-1j * np.angle(np.vdot(prev, v)))
    energies = np.array(energies)
    x = (r.min() / r) ** 3
    basis = np.column_stack([np.ones_like(x), x ** 2, x ** 3, x ** 4])
    coef, *_ = np.linalg.lstsq(basis, energies, rcond=None)
    fit = basis @ coef
    shift = energies - coef[0]
    scale = max(float(np.max(np.abs(shift))), 1e-300)
    residual = float(np.sqrt(np.mean((fit - energies) ** 2)) / scale)
    if residual > max_residual:
        raise OracleError(f"fit residual {residual:.3e} above {max_residual:g}")
    c6 = -coef[1] * r.min() ** 6 / 1000.0
    return OracleFit(float(c6), residual, energies, r, np.array(overlaps))
