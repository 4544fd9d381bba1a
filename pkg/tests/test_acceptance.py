"""Acceptance gate: one PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or ``python tests/test_acceptance.py`` (lines printed inline).
Criteria 2 and 5 to 9 drive the ``nlslab`` command line so that the
figures checked here are the ones a user would reproduce.
"""

import csv
import json
import sys

import numpy as np
import pytest

from conftest import band_limited
from nlslab.cli import EXIT_OK, main
from nlslab.evolution import EvolveConfig, free_trajectory, mass, nls_evolve
from nlslab.groundstate import Functional, GroundStateConstants, InequalityConstants, f_aux, gn_quotient, sobolev_quotient
from nlslab.potential import default_well, lhalf_norm
from nlslab.randomization import RandomSeedPlan, moment_estimate, profile, randomize
from nlslab.spacetime import (
    divisibility_aggregate,
    lateral_norm,
    mixed_strichartz_norm,
    split_indices,
    x_norm,
    y_norm,
)
from nlslab.spectral import (
    SpectralField,
    directional_project,
    dyadic_scales,
    grad_norm_sq,
    lp_project,
    make_grid,
    unit_lattice,
    unit_project,
)

LINES: list[str] = []


def verdict(n: int, title: str, checks: dict):
    """Record the criterion line; ``checks`` maps a label to (ok, shown value)."""
    ok = all(c[0] for c in checks.values())
    detail = "; ".join(f"{k} {c[1]}" for k, c in checks.items())
    line = f"criterion {n} {title}: {'PASS' if ok else 'FAIL'} ({detail})"
    LINES.append(line)
    print(line)
    failed = [k for k, c in checks.items() if not c[0]]
    assert ok, f"failed checks: {failed}"


def cli(tmp, command, cfg, name):
    out = tmp / name
    p = tmp / f"{name}.json"
    p.write_text(json.dumps(cfg))
    code = main([command, "--config", str(p), "--out", str(out), "--quiet"])
    man = json.loads((out / "manifest.json").read_text())
    return code, out, man


@pytest.fixture(scope="module")
def tmp(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


def fmt(x):
    return f"{x:.3g}"


# ---------------------------------------------------------------- 1


def test_criterion_1_spectral_identities():
    rng = np.random.default_rng(1)
    parseval = part_unit = part_lp = direc = 0.0
    for d, m in [(2, 64), (3, 16)]:
        g = make_grid(d, m, 2 * np.pi)
        f = band_limited(g, rng)
        f = SpectralField.from_modes(g, np.where(g.kabs > 0, f.modes, 0.0))
        scale = np.linalg.norm(f.values)
        back = SpectralField.from_modes(g, np.fft.fftn(f.values))
        l2x = np.sum(np.abs(f.values) ** 2)
        l2k = np.sum(np.abs(np.fft.fftn(f.values)) ** 2) / g.size
        parseval = max(parseval, np.linalg.norm(back.values - f.values) / scale, abs(l2x - l2k) / l2x)
        tot = sum((unit_project(f, k).values for k in unit_lattice(g)), np.zeros(g.shape))
        part_unit = max(part_unit, np.linalg.norm(tot - f.values) / scale)
        tot = sum((lp_project(f, n).values for n in dyadic_scales(g)), np.zeros(g.shape))
        part_lp = max(part_lp, np.linalg.norm(tot - f.values) / scale)
        for n in dyadic_scales(g):
            rest = lp_project(f, n)
            s = max(np.linalg.norm(rest.values), 1e-300)
            for ell in range(1, d + 1):
                rest = rest - directional_project(rest, n, ell)
            direc = max(direc, np.linalg.norm(rest.values) / s)
    verdict(1, "spectral identities", {
        "Parseval": (parseval <= 1e-12, fmt(parseval)),
        "sum_k P_k": (part_unit <= 1e-10, fmt(part_unit)),
        "sum_N P_N": (part_lp <= 1e-10, fmt(part_lp)),
        "directional": (direc <= 1e-10, fmt(direc)),
    })


# ---------------------------------------------------------------- 2


def test_criterion_2_conservation(tmp):
    # Gaussian at rest: the moving default datum has |E(0)| at 5% of its energy components
    datum = {"kind": "gaussian", "amplitude": 1.0, "width": 2.0, "momentum": 0.0}
    code, _, man = cli(tmp, "evolve", {"evolve": {"dt": 1e-3, "horizon": 1.0}, "datum": datum}, "c2")
    s = man["summary"]
    g = make_grid(2, 64, 8 * np.pi)
    v = default_well(g)
    u0 = profile(g, "gaussian", 1.0, 2.0, momentum=0.0)
    ref = nls_evolve(u0, EvolveConfig(dt=1e-3 / 16, snapshot_every=10**9), v, 1.0).at(-1).values
    errs = [np.linalg.norm(nls_evolve(u0, EvolveConfig(dt=dt, snapshot_every=10**9), v, 1.0).at(-1).values - ref)
            for dt in (4e-3, 2e-3, 1e-3)]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    verdict(2, "conservation", {
        "exit": (code == EXIT_OK, code),
        "mass drift": (s["mass_drift"] <= 1e-8, fmt(s["mass_drift"])),
        "energy drift": (s["energy_drift"] <= 1e-6, fmt(s["energy_drift"])),
        "order ratios": (all(3.5 <= r <= 4.5 for r in ratios), "/".join(f"{r:.3f}" for r in ratios)),
    })


# ---------------------------------------------------------------- 3 and 4


@pytest.fixture(scope="module")
def gs_setup():
    g = make_grid(3, 48, 8 * np.pi)
    v = default_well(g)
    return g, v, GroundStateConstants.build(InequalityConstants.estimate(g, 2.5), v, g)


def log_max(fun, n=10_000):
    # six decades at 10^4 points: spacing 0.14%, so the scan resolves 0.1%
    rho = np.logspace(-3, 3, n)
    vals = fun(rho)
    i = int(np.argmax(vals))
    assert 0 < i < n - 1, "maximum on the scan boundary"
    return rho[i], vals[i]


def test_criterion_3_closed_forms(gs_setup):
    _, _, c = gs_setup
    ineq, vneg, a0 = c.ineq, c.vneg_lhalf, c.a0
    worst = 0.0
    for a in (a0 / 4, a0 / 2, a0, 2 * a0):
        rho, _ = log_max(lambda r: f_aux(a, r, ineq, vneg))
        worst = max(worst, abs(rho / c.rho_a(a) - 1))
    root = abs(f_aux(a0, c.rho0, ineq, vneg))
    m_half = log_max(lambda r: f_aux(a0 / 2, r, ineq, vneg))[1]
    m_at = max(log_max(lambda r: f_aux(a0, r, ineq, vneg))[1], f_aux(a0, c.rho0, ineq, vneg))
    m_two = log_max(lambda r: f_aux(2 * a0, r, ineq, vneg))[1]
    verdict(3, "closed-form constants", {
        "rho_max vs scan": (worst <= 1e-3, fmt(worst)),
        "f(a0, rho0)": (root <= 1e-8, fmt(root)),
        "max f at a0/2": (m_half > 0, fmt(m_half)),
        "at a0": (abs(m_at) <= 1e-8, fmt(m_at)),
        "at 2a0": (m_two < 0, fmt(m_two)),
    })


def test_criterion_4_inequalities(gs_setup):
    g, v, c = gs_setup
    ineq = c.ineq
    vneg = lhalf_norm(v, g, negative=True)
    fn = Functional(g, v.values(g), ineq.q, True)
    r = np.random.default_rng(4)
    gn_bad = sob_bad = low_bad = 0
    gn_top, sob_low = 0.0, np.inf
    for _ in range(1000):
        f = band_limited(g, r, kcut=r.uniform(0.4, 2.5), width=r.uniform(1.5, 6.0))
        u = SpectralField(g, f.values.real * r.uniform(0.01, 3.0))
        qg, qs = gn_quotient(u, ineq.q), sobolev_quotient(u)
        gn_top, sob_low = max(gn_top, qg), min(sob_low, qs)
        gn_bad += qg > ineq.gn_C
        sob_bad += qs < ineq.sobolev_S
        rho = grad_norm_sq(u)
        lower = rho * f_aux(mass(u), rho, ineq, vneg)
        low_bad += fn.energy(u.values.real) < lower - 1e-12 * abs(lower)
    verdict(4, "inequality suite", {
        "GN violations": (gn_bad == 0, f"{gn_bad} (max quotient {fmt(gn_top)} vs C {fmt(ineq.gn_C)})"),
        "Sobolev violations": (sob_bad == 0, f"{sob_bad} (min quotient {fmt(sob_low)} vs S {fmt(ineq.sobolev_S)})"),
        "energy lower bound violations": (low_bad == 0, low_bad),
    })


# ---------------------------------------------------------------- 5


def test_criterion_5_ground_state(tmp):
    code, out, man = cli(tmp, "groundstate", {}, "c5")
    res = json.loads((out / "groundstate.json").read_text())
    r, k = res["result"], res["constants"]
    code2, out2, man2 = cli(tmp, "mcurve", {"experiment": {"a_fractions": [0.125, 0.25]}}, "c5m")
    half, full = man2["summary"]["table"]
    tol = 1e-9
    spread = max(full["starts"]) - min(full["starts"])
    sub = full["m"] - 2 * half["m"]
    verdict(5, "ground state", {
        "exit": (code == code2 == EXIT_OK, f"{code}/{code2}"),
        "converged": (r["converged"], r["converged"]),
        "residual": (r["residual"] <= 1e-6, fmt(r["residual"])),
        "m(a)": (r["m_a"] < 0, fmt(r["m_a"])),
        "lambda": (r["lambda"] < 0, fmt(r["lambda"])),
        "grad^2 < rho0": (r["grad_norm_sq"] < k["rho0"], f"{fmt(r['grad_norm_sq'])} < {fmt(k['rho0'])}"),
        "multi-start spread": (spread <= 1e-4 and abs(full["m"] - r["m_a"]) <= 1e-4, fmt(spread)),
        "m(a) - 2m(a/2)": (sub <= 2 * tol, fmt(sub)),
    })


# ---------------------------------------------------------------- 6


def test_criterion_6_orbital_stability(tmp):
    code, out, man = cli(tmp, "stability", {}, "c6")
    s = man["summary"]
    perturbed = {k: v for k, v in s["verdicts"].items() if k != "unperturbed"}
    n_ok = sum(v == "stayed_within" for v in perturbed.values())
    verdict(6, "orbital stability", {
        "exit": (code == EXIT_OK, code),
        "within 10 delta": (len(perturbed) == 20 and n_ok == 20, f"{n_ok}/{len(perturbed)}, max {fmt(s['max_dist'])}"),
        "unperturbed": (s["stationary_max_dist"] <= 1e-6, fmt(s["stationary_max_dist"])),
    })


# ---------------------------------------------------------------- 7


def test_criterion_7_picard(tmp):
    code, out, man = cli(tmp, "picard", {"picard": {"tol": 1e-12}}, "c7")
    s = man["summary"]
    xv, yf, _ = s["gate_values"]
    delta = man["config"]["picard"]["delta"]
    tol = man["config"]["picard"]["tol"]
    verdict(7, "Picard solver", {
        "exit": (code == EXIT_OK, code),
        "gate <= delta/10": (xv + yf <= delta / 10, fmt(xv + yf)),
        "max contraction": (s["max_contraction"] <= 0.5, fmt(s["max_contraction"])),
        "residual <= 2 tol": (s["residual"] <= 2 * tol, fmt(s["residual"])),
        "oracle rel L2": (s["oracle_rel_l2"] <= 1e-4, fmt(s["oracle_rel_l2"])),
    })


# ---------------------------------------------------------------- 8


def test_criterion_8_randomization(tmp):
    c = np.random.default_rng(8).normal(size=40) + 1j * np.random.default_rng(9).normal(size=40)
    ratios = [moment_estimate(c, p, 10_000, RandomSeedPlan(p))["ratio"] for p in (2, 4, 8, 16)]
    code, _, man = cli(tmp, "taildiag", {"grid": {"d": 2, "m": 32, "half_len": float(8 * np.pi)},
                                         "experiment": {"n": 500}}, "c8")
    s = man["summary"]
    verdict(8, "randomization statistics", {
        "moment ratios": (max(ratios) <= 1.0 and min(ratios) > 0, "/".join(f"{r:.3f}" for r in ratios) + " <= 1"),
        "exit": (code == EXIT_OK, code),
        "tail slope": (s["fitted_slope"] < 0, fmt(s["fitted_slope"])),
        "tail R^2": (s["r_squared"] >= 0.9, fmt(s["r_squared"])),
    })


# ---------------------------------------------------------------- 9


def test_criterion_9_norm_framework(tmp):
    g = make_grid(2, 32, 4 * np.pi)
    v = default_well(g)
    base = profile(g, "hs", s=0.5, kcut=4.0)
    fub = 0.0
    div_ok = True
    for seed in (1, 2, 3):
        tr = free_trajectory(randomize(base, RandomSeedPlan(seed)), np.arange(33) / 64, v)
        parts = [tr.restrict(a, b) for a, b in split_indices(len(tr), 4)]
        for r in (2, 3, 4.5):
            for ell in (1, 2):
                fub = max(fub, abs(lateral_norm(tr, r, r, ell) / mixed_strichartz_norm(tr, r, r) - 1))
        for norm in (x_norm, y_norm):
            div_ok &= divisibility_aggregate([norm(p).total for p in parts], 400) <= norm(tr).total
        for p, q in [(np.inf, 2), (4, 400)]:
            whole = lateral_norm(tr, p, q, 1)
            div_ok &= divisibility_aggregate([lateral_norm(x, p, q, 1) for x in parts], max(p, q)) <= whole * (1 + 1e-12)
    codes = []
    rows = []
    for name, dt in (("c9a", 1 / 64), ("c9b", 1 / 128)):
        code, out, _ = cli(tmp, "trilinear", {"experiment": {"dt": dt}}, name)
        codes.append(code)
        with open(out / "trilinear.csv") as fh:
            rows.append([float(r["ratio"]) for r in csv.DictReader(fh)])
    a, b = np.array(rows[0]), np.array(rows[1])
    finite = bool(np.all(np.isfinite(a)) and np.all(np.isfinite(b)))
    change = float(np.max(np.abs(b / a - 1))) if finite else np.inf
    verdict(9, "norm framework", {
        "Fubini": (fub <= 1e-10, fmt(fub)),
        "4-way divisibility X/Y/lateral": (bool(div_ok), bool(div_ok)),
        "trilinear exit": (codes == [EXIT_OK, EXIT_OK], codes),
        "trilinear finite": (finite, f"{len(a)} ratios"),
        "dt-halving change": (change <= 0.2, fmt(change)),
    })


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
