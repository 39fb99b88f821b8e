"""
Gate algebra and GHZ growth
===========================

Blockade pulses, the A Z B Z C construction and a 25-site GHZ state.
"""

import numpy as np

from rydgate.circuits import (
    I2, X, Z, cku_assemble, ckzm_unitary, ghz_simulate, haar_unitary, kron_all,
    pulse_simulate, su2_decompose,
)

# three pulses on a 2-control, 3-target register reproduce C_2Z^3 up to X on targets
x3 = kron_all([I2, I2, X, X, X])
diff = np.max(np.abs(x3 @ pulse_simulate(2, 3) @ x3 - ckzm_unitary(2, 3)))
print(f"pulse sequence vs C2Z3: {diff:.1e}")

# any single-qubit unitary as exp(i delta) A Z B Z C with A B C = I
rng = np.random.default_rng(0)
u = haar_unitary(2, rng)
dec = su2_decompose(u)
print(f"delta = {dec.delta:.4f}")
print(f"|ABC - I| = {np.max(np.abs(dec.A @ dec.B @ dec.C - I2)):.1e}")
print(f"|e^(i delta) AZBZC - U| = {np.max(np.abs(np.exp(1j * dec.delta) * dec.A @ Z @ dec.B @ Z @ dec.C - u)):.1e}")

# controlled U1 (x) U2 from two C_kZ layers
us = [haar_unitary(2, rng) for _ in range(2)]
circuit, total = cku_assemble(2, us)
print("layers:", [c["layer"] for c in circuit])

# grow a GHZ state over the diamond |x| + |y| <= 3
run = ghz_simulate(3)
print(f"{run.state.n} sites, fidelity {run.fidelity:.12f}, support after H {run.support_after_h}")
