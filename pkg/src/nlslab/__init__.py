"""Desk-scale spectral laboratory for the nonlinear Schrödinger equation with a potential.

Modules
-------
spectral       periodic grid, fields, Littlewood-Paley and unit-scale projections
potential      potentials and their Kato / L^{d/2} admissibility
randomization  Wiener randomization and tail/moment diagnostics
evolution      split-step linear and nonlinear flows, conserved quantities
spacetime      Strichartz, lateral and X/Y/G norms, trilinear ratios
picard         Duhamel fixed-point solver for the forced cubic equation
groundstate    inequality constants, f(a, rho), local minimizers, m(a)
stability      orbit distance and orbital-stability experiments
snapshot       NLSF binary field format
"""

from .spectral import GridSpec, SpectralField, make_grid

__all__ = ["GridSpec", "SpectralField", "make_grid"]
__version__ = "0.1.0"
