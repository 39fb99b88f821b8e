"""
Dressed states that do not talk to themselves
=============================================

Build a dressed pair |c>, |t> from the s, p0, p+ triple and check that the
dipole-dipole interaction only survives between the two species.
"""

import math

import numpy as np

from rydgate.dataset import toy_alkali
from rydgate.dressing import design_triple, eigen_residual, validate_regime
from rydgate.interactions import Geometry, v_exchange, vcc, vct, vct_max, vtt

# the bundled toy alkali dataset fixes the dipole ratio M = mu0 / mu+
ds = toy_alkali()
print(f"M = {ds.m_ratio:.4f}  (mu0 = {ds.mu0}, mu+ = {ds.muplus} MHz um^3/2)")

# design at alpha = c0 / c0_max = 0.5 with the largest drive parameter 20 MHz
triple = design_triple(ds.m_ratio, 0.5, 20.0).with_frequencies(ds)
d = triple.drives
print(f"Omega0 = {d.omega0:.3f}  Omega+ = {d.omegaplus:.3f}  "
      f"Delta0 = {d.delta0:.3f}  Delta+ = {d.deltaplus:.3f}  (MHz)")
print("light shifts c, t, 3:", np.round(triple.shifts, 4))
print(f"eigen residual {eigen_residual(triple):.1e}")

# interactions at 5 um, in the plane
g = Geometry(5.0, math.pi / 2)
c, t = triple.c.coeffs, triple.t.coeffs
print(f"V_cc = {vcc(c, g, ds.mu0, ds.muplus):+.2e}   V_tt = {vtt(t, g, ds.mu0, ds.muplus):+.2e}")
print(f"|<ct|V|tc>| = {abs(v_exchange(c, t, g, ds.mu0, ds.muplus)):.2e}")
print(f"V_ct = {vct(c, t, g, ds.mu0, ds.muplus):+.4f} MHz")

# the largest V_ct a same-drive design can reach, and where
best = vct_max(ds.mu0, ds.muplus, g)
print(f"max |V_ct| = {abs(best.value):.4f} MHz at c0 = {best.c0:.4f}")

# is 20 MHz a sensible drive for 5 um spacing on this dataset?
rep = validate_regime(triple, ds, 5.0)
print(f"dressing dominates: {rep.dressing_dominates}, confined to triple: {rep.confined_to_triple}")
