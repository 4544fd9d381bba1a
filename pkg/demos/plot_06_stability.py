"""
Orbital stability of the standing wave
======================================

Evolve the ground state and small perturbations of it, and track the H^1
distance to the orbit {e^{i theta} u_a(. - y)}.
"""

from nlslab.groundstate import GroundStateConstants, InequalityConstants, MinimizeOptions, minimize_local
from nlslab.potential import default_well
from nlslab.spectral import make_grid
from nlslab.stability import PerturbationSpec, almost_sure_stability_experiment, stability_experiment, standing_wave_config

g = make_grid(3, 24, 12.0)
v = default_well(g)
consts = GroundStateConstants.build(InequalityConstants.estimate(g, 2.5), v, g)
gs = minimize_local(consts.a0 / 4, consts, v, g, MinimizeOptions(tol=1e-9))
cfg = standing_wave_config(2.5, dt=5e-3, sample_dt=0.25)

still = stability_experiment(gs, None, 2.0, cfg, v)
print(f"unperturbed: max orbit distance {still.max_dist:.2e}")

for delta in (1e-3, 2e-3):
    tr = stability_experiment(gs, PerturbationSpec("deterministic_H1", delta, seed=3), 2.0, cfg, v)
    print(f"delta = {delta:.0e}: max distance {tr.max_dist:.2e} ({tr.verdict}, budget {tr.epsilon_budget:.0e})")

# rough randomized perturbations, small in H^0.6
traces, summary = almost_sure_stability_experiment(gs, 0.6, 1e-3, 5, cfg, v, horizon=1.0, seed=2)
print(f"rough perturbations within budget: {summary['stayed_within']}/{summary['n']}, Wilson 95% {summary['wilson95']}")
