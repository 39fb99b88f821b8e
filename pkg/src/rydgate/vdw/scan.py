"""Scans of dressed C6 values over (alpha, Omega0) and simultaneous-zero search."""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np

from ..dataset import LevelDataset
from ..dressing import DressingError, design_triple
from .model import RESONANCE_THRESHOLD, C6Result, dressed_c6

Evaluator = Callable[[float, float], C6Result]


@dataclass(frozen=True)
class ZeroCrossing:
    alpha: float
    omega0: float
    residual_c: float
    residual_t: float
    status: str  # converged | unconverged | excluded
    iterations: int = 0

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha, "omega0_MHz": self.omega0,
            "residual_c": self.residual_c, "residual_t": self.residual_t,
            "status": self.status, "iterations": self.iterations,
        }


@dataclass
class C6Scan:
    alpha_axis: np.ndarray
    omega0_axis: np.ndarray
    values: list  # values[i][j] for alpha_axis[i], omega0_axis[j]
    evaluator: Evaluator | None = None
    zeros: list = field(default_factory=list)

    def grid(self, attr: str) -> np.ndarray:
        return np.array([[getattr(v, attr) for v in row] for row in self.values], dtype=float)

    @property
    def flags(self) -> np.ndarray:
        return np.array([[v.flagged for v in row] for row in self.values], dtype=bool)

    def rows(self):
        for i, a in enumerate(self.alpha_axis):
            for j, w in enumerate(self.omega0_axis):
                v = self.values[i][j]
                yield float(a), float(w), v.c6_c, v.c6_t, int(v.flagged)


def evaluate_point(ds: LevelDataset, alpha: float, omega0: float, theta: float = math.pi / 2,
                   threshold: float = RESONANCE_THRESHOLD, scale_rule: str = "omega0",
                   mode: str = "coherent") -> C6Result:
    """Design the dressing at (alpha, Omega0) and return its C6 pair, flagging resonances.

    ``scale_rule="omega0"`` scales the drives so that Omega0 equals the axis value;
    ``"magnitude"`` makes the axis value the largest drive parameter instead.
    """
    try:
        base = design_triple(ds.m_ratio, alpha, 1.0)
        if scale_rule == "omega0":
            factor = omega0 / base.drives.omega0
        elif scale_rule == "magnitude":
            factor = omega0 / base.drives.magnitude
        else:
            raise ValueError(f"unknown scale rule {scale_rule!r}")
        triple = base.scaled(factor).with_frequencies(ds)
    except (DressingError, ZeroDivisionError):
        return C6Result(math.nan, math.nan, {}, ())
    return dressed_c6(ds, triple, theta, threshold, on_resonance="flag", mode=mode)


def _is_monotone(axis) -> bool:
    d = np.diff(np.asarray(axis, dtype=float))
    return bool(np.all(d > 0) or np.all(d < 0))


def scan_function(evaluator: Evaluator, alpha_axis, omega0_axis, workers: int = 1) -> C6Scan:
    """Evaluate ``evaluator(alpha, omega0)`` on the grid; points are independent."""
    alpha_axis = np.asarray(alpha_axis, dtype=float)
    omega0_axis = np.asarray(omega0_axis, dtype=float)
    for name, ax in (("alpha", alpha_axis), ("omega0", omega0_axis)):
        if ax.ndim != 1 or (len(ax) > 1 and not _is_monotone(ax)):
            raise ValueError(f"{name} axis must be one-dimensional and strictly monotone")
    pts = [(a, w) for a in alpha_axis for w in omega0_axis]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            flat = list(pool.map(_call, [evaluator] * len(pts), pts))
    else:
        flat = [evaluator(a, w) for a, w in pts]
    n = len(omega0_axis)
    values = [flat[i * n:(i + 1) * n] for i in range(len(alpha_axis))]
    return C6Scan(alpha_axis, omega0_axis, values, evaluator)


def _call(fn, pt):
    return fn(*pt)


def scan_c6(ds: LevelDataset, alpha_axis, omega0_axis, theta: float = math.pi / 2,
            threshold: float = RESONANCE_THRESHOLD, scale_rule: str = "omega0",
            workers: int = 1, mode: str = "coherent") -> C6Scan:
    ev = partial(evaluate_point, ds, theta=theta, threshold=threshold,
                 scale_rule=scale_rule, mode=mode)
    return scan_function(ev, alpha_axis, omega0_axis, workers)


def write_scan_csv(scan: C6Scan, path) -> int:
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "omega0_MHz", "c6_c_GHzum6", "c6_t_GHzum6", "flag"])
        for row in scan.rows():
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])
            n += 1
    return n


def zeros_to_json(zeros, path=None) -> str:
    text = json.dumps([z.as_dict() for z in zeros], indent=2)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


def _sign_change(vals) -> bool:
    vals = np.asarray(vals, dtype=float)
    if not np.all(np.isfinite(vals)):
        return False
    return bool(vals.min() < 0 < vals.max())


def _newton(ev: Evaluator, a0: float, w0: float, da: float, dw: float,
            tol: float, max_iter: int, bounds):
    x = np.array([a0, w0], dtype=float)
    h = np.array([da, dw]) * 1e-4
    f = None
    for it in range(1, max_iter + 1):
        r = ev(*x)
        f = np.array([r.c6_c, r.c6_t])
        if not np.all(np.isfinite(f)):
            return x, f, it, False
        if np.all(np.abs(f) <= tol):
            return x, f, it, True
        jac = np.empty((2, 2))
        for k in range(2):
            xp = x.copy()
            xp[k] += h[k]
            rp = ev(*xp)
            jac[:, k] = (np.array([rp.c6_c, rp.c6_t]) - f) / h[k]
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            return x, f, it, False
        # damp steps that would leave the neighbourhood of the seed cell
        lim = np.array([da, dw]) * 2
        ratio = np.max(np.abs(step) / lim)
        if ratio > 1:
            step = step / ratio
        x = x + step
        h = np.maximum(np.abs(step) * 1e-3, np.array([da, dw]) * 1e-10)
        (alo, ahi), (wlo, whi) = bounds
        if not (alo <= x[0] <= ahi and wlo <= x[1] <= whi):
            return x, f, it, False
    return x, f, max_iter, False


def find_zeros(scan: C6Scan, zero_tolerance: float = 1e-9, exclusion_radius: int = 2,
               max_iter: int = 50, evaluator: Evaluator | None = None) -> list[ZeroCrossing]:
    """Locate points where C6^(c) and C6^(t) vanish together.

    Grid cells where both quantities change sign across their four corners seed a
    Newton refinement on the evaluator (finite-difference Jacobian).  Seeds within
    ``exclusion_radius`` cells of a flagged resonance are reported as excluded.
    """
    ev = evaluator or scan.evaluator
    if ev is None:
        raise ValueError("scan carries no evaluator to refine against")
    a_ax, w_ax = scan.alpha_axis, scan.omega0_axis
    cc, ct, fl = scan.grid("c6_c"), scan.grid("c6_t"), scan.flags
    bounds = ((min(a_ax[0], a_ax[-1]), max(a_ax[0], a_ax[-1])),
              (min(w_ax[0], w_ax[-1]), max(w_ax[0], w_ax[-1])))
    flagged = np.argwhere(fl)
    out: list[ZeroCrossing] = []
    for i in range(len(a_ax) - 1):
        for j in range(len(w_ax) - 1):
            block = (slice(i, i + 2), slice(j, j + 2))
            if not (_sign_change(cc[block]) and _sign_change(ct[block])):
                continue
            a0 = 0.5 * (a_ax[i] + a_ax[i + 1])
            w0 = 0.5 * (w_ax[j] + w_ax[j + 1])
            near = any(
                max(abs(fi - ii), abs(fj - jj)) <= exclusion_radius
                for fi, fj in flagged for ii in (i, i + 1) for jj in (j, j + 1)
            )
            if near:
                r = ev(a0, w0)
                out.append(ZeroCrossing(a0, w0, r.c6_c, r.c6_t, "excluded"))
                continue
            da = abs(a_ax[i + 1] - a_ax[i])
            dw = abs(w_ax[j + 1] - w_ax[j])
            x, f, it, ok = _newton(ev, a0, w0, da, dw, zero_tolerance, max_iter, bounds)
            z = ZeroCrossing(float(x[0]), float(x[1]), float(f[0]), float(f[1]),
                             "converged" if ok else "unconverged", it)
            if ok and any(p.status == "converged" and abs(p.alpha - z.alpha) <= 1e-9 * da * 1e3
                          and abs(p.omega0 - z.omega0) <= 1e-9 * dw * 1e3 for p in out):
                continue
            out.append(z)
    scan.zeros = out
    return out
