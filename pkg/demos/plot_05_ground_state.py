"""
Normalized ground states below the threshold mass
=================================================

Estimate the Sobolev and Gagliardo-Nirenberg constants on the grid, build
the threshold mass a0 from them, and minimize the energy on the mass
sphere inside the gradient ball. The m(a) curve is negative and
subadditive.
"""

import numpy as np

from nlslab.groundstate import GroundStateConstants, InequalityConstants, MinimizeOptions, m_curve
from nlslab.potential import default_well
from nlslab.spectral import make_grid

g = make_grid(3, 24, 12.0)
v = default_well(g)
ineq = InequalityConstants.estimate(g, q=2.5)
consts = GroundStateConstants.build(ineq, v, g)
print(f"S ~ {ineq.sobolev_S:.4f}, C ~ {ineq.gn_C:.4f}, a0 = {consts.a0:.4f}, rho0 = {consts.rho0:.4f}")

a = consts.a0 / 4
rows = m_curve([a / 2, a], consts, v, g, MinimizeOptions(tol=1e-9))
for r in rows:
    print(f"a = {r['a']:.4f}   m(a) = {r['m']:.6f}   lambda = {r['lambda']:.5f}   starts agree to {np.ptp(r['starts']):.1e}")
print("m(a) - 2 m(a/2) =", rows[1]["m"] - 2 * rows[0]["m"])
