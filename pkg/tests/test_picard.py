import numpy as np
import pytest

from nlslab.evolution import EvolveConfig, TrajectorySeries, free_trajectory, nls_evolve
from nlslab.picard import PicardConfig, continuation_scan, picard_solve, smallness_gate
from nlslab.potential import default_well
from nlslab.randomization import RandomSeedPlan, profile, randomize
from nlslab.spacetime import NormConfig, y_norm
from nlslab.spectral import SpectralField, make_grid


@pytest.fixture(scope="module")
def g():
    return make_grid(2, 32, 4 * np.pi)


@pytest.fixture(scope="module")
def v(g):
    return default_well(g)


def forcing(g, v, amp, cfg=PicardConfig(), seed=1):
    f = randomize(profile(g, "hs", s=0.5, kcut=4.0), RandomSeedPlan(seed)) * amp
    return f, free_trajectory(f, cfg.times, v)


def rel_l2(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def test_zero_data(g):
    cfg = PicardConfig()
    F = TrajectorySeries.constant(SpectralField.zeros(g), cfg.times)
    res = picard_solve(SpectralField.zeros(g), F, cfg=cfg, ncfg=NormConfig())
    assert res.converged and len(res.iterates) == 1
    assert not np.any(res.v.values)
    assert res.gate_values == (0.0, 0.0, True)


def test_tiny_data_contracts(g, v):
    cfg = PicardConfig(delta=0.05, tol=1e-12)
    f, F = forcing(g, v, 0.002, cfg)
    res = picard_solve(SpectralField.zeros(g), F, v, cfg, NormConfig())
    xv, yf, ok = res.gate_values
    assert ok and xv + yf <= cfg.delta / 10
    assert res.converged and res.contraction_factors
    assert max(res.contraction_factors) <= 0.5
    assert res.residual <= 2 * cfg.tol


def test_tiny_data_default_tolerance(g, v):
    cfg = PicardConfig(delta=0.05, tol=1e-8)
    _, F = forcing(g, v, 0.005, cfg)
    res = picard_solve(SpectralField.zeros(g), F, v, cfg)
    assert res.converged and all(c <= 0.5 for c in res.contraction_factors)
    assert res.residual <= 2 * cfg.tol


def test_matches_split_step_oracle(g, v):
    cfg = PicardConfig(tol=1e-12)
    f, F = forcing(g, v, 0.005, cfg)
    res = picard_solve(SpectralField.zeros(g), F, v, cfg)
    T = cfg.interval[1]
    oracle = nls_evolve(f, EvolveConfig(dt=cfg.dt, snapshot_every=10**9), v, T).at(-1).values
    assert rel_l2(res.u.at(-1).values, oracle) <= 1e-4


def test_unforced_matches_evolution(g, v):
    cfg = PicardConfig(tol=1e-12, interval=(0.0, 0.5))
    v0 = profile(g, "gaussian", amplitude=0.3, width=2.0, momentum=0.3)
    F = TrajectorySeries.constant(SpectralField.zeros(g), cfg.times)
    res = picard_solve(v0, F, v, cfg)
    ref = nls_evolve(v0, EvolveConfig(dt=cfg.dt, snapshot_every=10**9), v, 0.5).at(-1).values
    assert res.converged and rel_l2(res.v.at(-1).values, ref) <= 1e-5


def test_doubling_tolerance_keeps_convergence(g, v):
    _, F = forcing(g, v, 0.05)
    for tol in (1e-10, 2e-10, 4e-10):
        res = picard_solve(SpectralField.zeros(g), F, v, PicardConfig(tol=tol))
        assert res.converged


def test_gate_flips_when_sum_crosses_delta(g, v):
    cfg = PicardConfig(delta=0.05)
    _, F1 = forcing(g, v, 1.0, cfg)
    zero = SpectralField.zeros(g)
    unit = smallness_gate(zero, F1, cfg)[1]
    for c in np.geomspace(1e-3, 1.0, 12):
        F = TrajectorySeries(g, F1.times, c * F1.values)
        xv, yf, ok = smallness_gate(zero, F, cfg)
        assert yf == pytest.approx(c * unit, rel=1e-10)
        assert ok == (xv + yf <= cfg.delta)
    # the flip happens between neighbouring scales
    c_star = cfg.delta / unit
    assert smallness_gate(zero, TrajectorySeries(g, F1.times, 0.99 * c_star * F1.values), cfg)[2]
    assert not smallness_gate(zero, TrajectorySeries(g, F1.times, 1.01 * c_star * F1.values), cfg)[2]


def test_gate_passes_on_short_interval(g, v):
    f, _ = forcing(g, v, 1.0)
    yf = [y_norm(free_trajectory(f, np.arange(n + 1) / 256, v)).total for n in (4, 16, 64)]
    assert np.all(np.diff(yf) >= 0)
    assert yf[0] < yf[-1]


def test_rejects_mismatched_forcing(g):
    other = make_grid(2, 16, 4 * np.pi)
    F = TrajectorySeries.constant(SpectralField.zeros(other), [0.0, 0.1])
    with pytest.raises(ValueError):
        picard_solve(SpectralField.zeros(g), F)
    F = TrajectorySeries.constant(SpectralField.zeros(g), [0.1, 0.2])
    with pytest.raises(ValueError):
        picard_solve(SpectralField.zeros(g), F)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_reported(g, v):
    cfg = PicardConfig(max_iter=8, interval=(0.0, 1.0), dt=1 / 64)
    _, F = forcing(g, v, 60.0, cfg)
    res = picard_solve(SpectralField.zeros(g), F, v, cfg)
    assert not res.converged
    assert res.flags.get("nan_abort") or len(res.iterates) == cfg.max_iter


@pytest.mark.parametrize("kw", [dict(delta=0.0), dict(tol=0.0), dict(dt=-1.0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        PicardConfig(**kw)


# ---------------------------------------------------------------- continuation


def test_scan_zero_data(g):
    cfg = PicardConfig(dt=1 / 32)
    recs = continuation_scan(SpectralField.zeros(g), None, cfg, t_max=2.0)
    probes = [r for r in recs if "gate" in r]
    assert all(r["gate"][2] and r["converged"] for r in probes)
    assert recs[-1]["bracket"][1] is None


def test_scan_brackets_and_is_monotone(g, v):
    cfg = PicardConfig(dt=1 / 64, delta=0.05)
    f = randomize(profile(g, "hs", s=0.5, kcut=4.0), RandomSeedPlan(2)) * 0.3
    recs = continuation_scan(f, v, cfg, t_max=8.0, t_tol=1e-2, solve=False)
    probes = sorted((r["interval"][1], r["gate"][1]) for r in recs if "gate" in r)
    ys = [y for _, y in probes]
    assert np.all(np.diff(ys) >= -1e-12)
    lo, hi = recs[-1]["bracket"]
    assert recs[-1]["bisections"] <= 20
    if hi is not None:
        assert hi - lo <= max(1e-2, cfg.dt) + 1e-12
