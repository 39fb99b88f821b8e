"""
Error budgets for one multi-target gate and for GHZ growth
==========================================================

All frequencies are ordinary MHz; 2.7 stands for 2 pi x 2.7 MHz.
"""

from rydgate.errormodel import (
    CONVENTIONS, RATES, ErrorParams, checkerboard_lattice, gate_error, optimal_step_error,
)
from rydgate.ghzplan import asymptotic_ratio, discrepancy_report, plan_errors

V_NN, TAU = 2.7, 0.44

# one growth step: one control, four targets
eps, omega = optimal_step_error(1, 4, TAU, V_NN)
print(f"single step: eps = {eps:.4f} at Omega = {omega:.4f} MHz")

# 4 x 4 checkerboard, eight controls and eight targets, every convention
lat = checkerboard_lattice(4)
for conv in CONVENTIONS:
    for rates in RATES:
        b = gate_error(lat, ErrorParams(V_NN, TAU), conv, rates)
        print(f"{conv:>22} / {rates:<9} total {b.total:.4f}  "
              f"(decay {b.eps_decay:.4f}, blockade {b.eps_blockade:.4f})")

# GHZ growth over three steps
plan = plan_errors(3, V_NN, TAU)
for row in plan.rows():
    step, n_c, n_t, ratio, om, e, cum = row
    print(f"step {step}: N_c={n_c:>2} N_t={n_t:>2} <(V_nn/V_b)^2>={ratio:.4f} eps={e:.4f} cum={cum:.4f}")
print("combination rules:", discrepancy_report(plan))
print(f"large-step limit of the ratio: {asymptotic_ratio(40).limit:.4f}")
