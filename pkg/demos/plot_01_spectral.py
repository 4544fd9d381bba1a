"""
Littlewood-Paley pieces on the periodic box
===========================================

A smooth field is split into dyadic shells and into unit frequency cubes.
Both families add back up to the field.
"""

import numpy as np

from nlslab.randomization import profile
from nlslab.spectral import dyadic_scales, lp_project, make_grid, sobolev_norm, unit_lattice, unit_project

g = make_grid(2, 64, 4 * np.pi)
f = profile(g, "gaussian", amplitude=1.0, width=1.5, momentum=0.5)
# drop the zero mode: dyadic shells start above pi/L
f = f.with_modes(np.where(g.kabs > 0, f.modes, 0.0))

# dyadic shells and the share of the H^1 norm each one carries
total = np.zeros(g.shape, complex)
for n in dyadic_scales(g):
    piece = lp_project(f, n)
    total += piece.values
    print(f"N = {n:8.3f}   ||P_N f||_H1 = {sobolev_norm(piece, 1.0):.4e}")
print("shell sum error:", np.linalg.norm(total - f.values) / np.linalg.norm(f.values))

# unit cubes: a partition of unity on the frequency lattice
cubes = sum((unit_project(f, k).values for k in unit_lattice(g)), np.zeros(g.shape))
print("unit cube sum error:", np.linalg.norm(cubes - f.values) / np.linalg.norm(f.values))
