"""GHZ growth on the square lattice: schedule, blockade statistics, error estimates.

After step s the GHZ set is the diamond |x| + |y| <= s.  Step s uses the shell
|x| + |y| = s - 1 as controls (the origin for s = 1) and the shell |x| + |y| = s
as targets.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errormodel import ErrorParams, optimal_step_error

COMBINATIONS = ("sum", "product")


def shell(k: int) -> list[tuple[int, int]]:
    """Lattice sites with |x| + |y| = k, in a fixed order."""
    if k == 0:
        return [(0, 0)]
    return sorted({(x, s * (k - abs(x))) for x in range(-k, k + 1) for s in (1, -1)})


@dataclass(frozen=True)
class GrowthStep:
    index: int
    controls: tuple[tuple[int, int], ...]
    targets: tuple[tuple[int, int], ...]

    @property
    def n_c(self) -> int:
        return len(self.controls)

    @property
    def n_t(self) -> int:
        return len(self.targets)

    @property
    def size(self) -> int:
        """GHZ size after this step."""
        return 2 * self.index ** 2 + 2 * self.index + 1

    @property
    def mean_ratio(self) -> float:
        return mean_ratio(self)


def plan_steps(k: int) -> list[GrowthStep]:
    if k < 1:
        raise ValueError("need at least one step")
    return [GrowthStep(s, tuple(shell(s - 1)), tuple(shell(s))) for s in range(1, k + 1)]


def _ratios(step: GrowthStep) -> np.ndarray:
    c = np.array(step.controls, dtype=float)
    t = np.array(step.targets, dtype=float)
    d = np.linalg.norm(t[:, None, :] - c[None, :, :], axis=2)
    d_nn = d.min()
    vb = np.sum((d_nn / d) ** 3, axis=1)
    return 1.0 / vb ** 2


def mean_ratio(step: GrowthStep) -> float:
    """<(V_nn / V_b)^2> over the step's targets, V_b summed over all its controls.

    Same geometric sum as errormodel.blockade_strength, vectorised over targets.
    """
    return float(np.mean(_ratios(step)))


@dataclass(frozen=True)
class Extrapolation:
    limit: float
    values: np.ndarray
    steps: np.ndarray
    converged: bool


def asymptotic_ratio(max_steps: int = 40, min_steps: int = 10) -> Extrapolation:
    """Extrapolate mean_ratio(s) to s -> infinity by a fit in {1, 1/s, 1/s^2}.

    Convergence is judged by repeating the fit on the upper half of the range.
    """
    if max_steps < 10:
        raise ValueError("max_steps must be at least 10")
    steps = np.arange(min_steps, max_steps + 1)
    vals = np.array([mean_ratio(GrowthStep(s, tuple(shell(s - 1)), tuple(shell(s)))) for s in steps])

    def fit(sel):
        x = 1.0 / steps[sel]
        basis = np.column_stack([np.ones_like(x), x, x * x])
        return np.linalg.lstsq(basis, vals[sel], rcond=None)[0][0]

    limit = float(fit(slice(None)))
    half = float(fit(slice(len(steps) // 2, None)))
    converged = abs(limit - half) <= 1e-3 and limit <= vals.min()
    return Extrapolation(limit, vals, steps, bool(converged))


@dataclass
class GrowthPlan:
    steps: list
    per_step_eps: list
    cumulative_eps: list
    params: ErrorParams
    combination: str = "sum"
    omega_opt: list = field(default_factory=list)
    ratios: list = field(default_factory=list)

    def rows(self):
        for st, r, om, e, cum in zip(self.steps, self.ratios, self.omega_opt,
                                     self.per_step_eps, self.cumulative_eps):
            yield st.index, st.n_c, st.n_t, r, om, e, cum

    def as_dict(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "combination": self.combination,
            "steps": [
                {"step": s, "n_c": nc, "n_t": nt, "size": 2 * s * s + 2 * s + 1,
                 "mean_ratio": r, "omega_opt_MHz": om, "eps": e, "cumulative": cum}
                for s, nc, nt, r, om, e, cum in self.rows()
            ],
            "discrepancy": discrepancy_report(self),
        }


def combine(eps, combination: str = "sum") -> list[float]:
    if combination == "sum":
        return [float(x) for x in np.cumsum(eps)]
    if combination == "product":
        return [float(x) for x in 1 - np.cumprod(1 - np.asarray(eps))]
    raise ValueError(f"combination must be one of {COMBINATIONS}")


def plan_errors(k: int, v_nn: float, tau: float, combination: str = "sum") -> GrowthPlan:
    """Per-step optimal error with v = v_nn / sqrt(mean_ratio), then cumulated."""
    params = ErrorParams(v_nn, tau)
    steps = plan_steps(k)
    ratios, eps, oms = [], [], []
    for st in steps:
        r = mean_ratio(st)
        e, om = optimal_step_error(st.n_c, st.n_t, tau, v_nn / math.sqrt(r))
        ratios.append(r)
        eps.append(e)
        oms.append(om)
    return GrowthPlan(steps, eps, combine(eps, combination), params, combination, oms, ratios)


def discrepancy_report(plan: GrowthPlan, reference=None) -> dict:
    """Cumulative errors under every combination rule, and offsets from reference values."""
    out = {rule: combine(plan.per_step_eps, rule) for rule in COMBINATIONS}
    out["sum_minus_product"] = [a - b for a, b in zip(out["sum"], out["product"])]
    if reference is not None:
        ref = list(reference)[: len(plan.steps)]
        for rule in COMBINATIONS:
            out[f"{rule}_minus_reference"] = [a - b for a, b in zip(out[rule], ref)]
    return out


def write_plan_csv(plan: GrowthPlan, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "n_c", "n_t", "mean_ratio", "omega_opt_MHz", "eps", "cumulative"])
        for row in plan.rows():
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])


def write_plan_json(plan: GrowthPlan, path) -> None:
    with open(path, "w") as fh:
        json.dump(plan.as_dict(), fh, indent=2)
        fh.write("\n")
