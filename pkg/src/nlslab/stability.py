"""
Orbit distance to a standing-wave profile and the orbital-stability experiments
built on it.

The orbit of a profile u_a is {e^{i theta} u_a(. - y)}. On the periodic grid the
translations are searched over the lattice by one FFT cross-correlation and
then refined below the cell size by per-axis parabolic interpolation of the
exact (Fourier-shifted) correlation.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from .evolution import EvolveConfig, TrajectorySeries, energy, mass, nls_evolve
from .groundstate import GroundStateResult
from .picard import PicardConfig, h1_norms, picard_solve
from .potential import PotentialSpec, zero
from .randomization import RandomSeedPlan, randomize
from .spacetime import NormConfig, x_norm, y_norm
from .spectral import GridSpec, SpectralField, sobolev_norm

log = logging.getLogger(__name__)

STATIONARY_BUDGET = 1e-6


def _h1_weight(grid: GridSpec) -> np.ndarray:
    return 1.0 + grid.ksq


def h1_inner(f: SpectralField, g: SpectralField) -> complex:
    """<f, g>_{H^1} = int (1 + |xi|^2) f^ conj(g^)."""
    gr = f.grid
    return complex(np.sum(_h1_weight(gr) * f.modes * np.conj(g.modes)) * gr.cellvol / gr.size)


def shift_field(f: SpectralField, y) -> SpectralField:
    """f(. - y) by a Fourier phase (exact for lattice shifts)."""
    g = f.grid
    ph = sum(k * yj for k, yj in zip(g.freqs, np.asarray(y, dtype=float)))
    return f.multiply_modes(np.exp(-1j * ph))


def _wrap(y: np.ndarray, L: float) -> np.ndarray:
    return (y + L) % (2 * L) - L


def orbit_projection(u: SpectralField, u_a: SpectralField, search_shifts: bool = True) -> tuple[float, float, np.ndarray]:
    """(distance, theta, y) minimizing ||u - e^{i theta} u_a(. - y)||_{H^1}.

    For a fixed shift the optimal phase is the argument of the H^1 inner
    product; the shift maximizes the modulus of that inner product.
    """
    g = u.grid
    if u_a.grid != g:
        raise ValueError("fields live on different grids")
    w = _h1_weight(g)
    wu = w * u.modes

    def corr_at(y):
        ph = sum(k * yj for k, yj in zip(g.freqs, y))
        return abs(np.sum(wu * np.conj(u_a.modes * np.exp(-1j * ph))))

    y = np.zeros(g.d)
    if search_shifts:
        corr = np.abs(np.fft.ifftn(wu * np.conj(u_a.modes)))
        idx = np.unravel_index(int(np.argmax(corr)), corr.shape)
        y = np.array([(i if i <= g.m // 2 else i - g.m) * g.dx for i in idx])
        c0 = corr_at(y)
        # successive parabolic refinement, one axis at a time
        for h in (0.5 * g.dx, 0.125 * g.dx, 0.03125 * g.dx):
            for j in range(g.d):
                e = np.zeros(g.d)
                e[j] = h
                cm, cp = corr_at(y - e), corr_at(y + e)
                den = cm - 2 * c0 + cp
                if den < 0:
                    trial = y + e * float(np.clip(0.5 * (cm - cp) / den, -1.0, 1.0))
                    ct = corr_at(trial)
                    if ct > c0:
                        y, c0 = trial, ct
        y = _wrap(y, g.half_len)

    sa = shift_field(u_a, y)
    ip = h1_inner(u, sa)
    theta = float(np.angle(ip)) if ip != 0 else 0.0
    diff = u.modes - np.exp(1j * theta) * sa.modes
    dist = float(np.sqrt(np.sum(w * np.abs(diff) ** 2) * g.cellvol / g.size))
    return dist, theta, y


def orbit_distance(u: SpectralField, u_a: SpectralField, search_shifts: bool = True) -> float:
    """inf over phase and translation of ||u - e^{i theta} u_a(. - y)||_{H^1}."""
    return orbit_projection(u, u_a, search_shifts)[0]


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PerturbationSpec:
    """How a perturbation phi - u_a is drawn.

    ``deterministic_H1``: smooth localized complex direction from ``seed``,
    scaled to H^1 size ``size``.
    ``random_rough``: Wiener randomization of an H^s profile (s < 1), scaled
    to H^s size ``size``.
    """

    kind: str
    size: float
    seed: int = 0
    s: float | None = None

    def __post_init__(self):
        if self.kind not in ("deterministic_H1", "random_rough"):
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if not self.size > 0:
            raise ValueError("perturbation size must be positive")
        if self.kind == "random_rough" and (self.s is None or not self.s < 1):
            raise ValueError("rough perturbations need s < 1")


def _envelope(grid: GridSpec, width: float) -> np.ndarray:
    return np.exp(-(grid.radius**2) / (2 * width**2))


def perturbation_field(spec: PerturbationSpec, grid: GridSpec, width: float = 4.0) -> SpectralField:
    rng = np.random.default_rng(spec.seed)
    noise = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    if spec.kind == "deterministic_H1":
        smooth = SpectralField(grid, noise).multiply_modes(np.exp(-grid.ksq))
        p = SpectralField(grid, smooth.values * _envelope(grid, width))
        return p * (spec.size / sobolev_norm(p, 1.0))
    # rough profile: spectrum decaying like <xi>^-(d/2 + s), i.e. barely H^s
    prof = SpectralField(grid, noise).multiply_modes((1 + grid.ksq) ** (-(grid.d / 2 + spec.s) / 2))
    prof = SpectralField(grid, prof.values * _envelope(grid, width))
    p = randomize(prof, RandomSeedPlan(spec.seed + 1))
    return p * (spec.size / sobolev_norm(p, spec.s))


@dataclass
class StabilityTrace:
    times: list
    orbit_dist: list
    mass_drift: list
    energy_drift: list
    epsilon_budget: float
    verdict: str
    t_exit: float | None = None
    perturbation: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    @property
    def max_dist(self) -> float:
        return float(max(self.orbit_dist))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["max_dist"] = self.max_dist
        return out


def _trace(tr: TrajectorySeries, u_a: SpectralField, cfg: EvolveConfig, v, budget: float, pert: dict) -> StabilityTrace:
    m0 = mass(tr.at(0))
    e0 = energy(tr.at(0), cfg, v)
    dists, md, ed = [], [], []
    for f in tr.fields:
        dists.append(orbit_distance(f, u_a))
        md.append(abs(mass(f) - m0) / m0)
        ed.append(abs(energy(f, cfg, v) - e0) / max(abs(e0), 1e-300))
    t_exit = None
    for t, dd in zip(tr.times, dists):
        if dd > budget:
            t_exit = float(t)
            break
    flags = dict(tr.flags)
    if flags.get("blowup_suspect"):
        verdict = "aborted"
    else:
        verdict = "stayed_within" if t_exit is None else "exited"
    return StabilityTrace(
        [float(t) for t in tr.times],
        [float(x) for x in dists],
        [float(x) for x in md],
        [float(x) for x in ed],
        float(budget),
        verdict,
        t_exit,
        pert,
        flags,
    )


def standing_wave_config(q: float, dt: float = 5e-3, sample_dt: float = 0.25, critical: bool = True) -> EvolveConfig:
    return EvolveConfig(
        dt=dt,
        nonlinearity="mixed",
        q=q,
        include_critical=critical,
        snapshot_every=max(1, int(round(sample_dt / dt))),
    )


def _profile(gs) -> SpectralField:
    if isinstance(gs, GroundStateResult):
        if not gs.converged:
            raise ValueError("ground state did not converge")
        return gs.u_a
    return gs


def stability_experiment(
    gs: GroundStateResult | SpectralField,
    pert: PerturbationSpec | None,
    horizon: float,
    cfg: EvolveConfig,
    v: PotentialSpec | None = None,
    budget_factor: float = 10.0,
    budget: float | None = None,
) -> StabilityTrace:
    """Evolve u_a + perturbation and record its distance to the orbit of u_a.

    The budget defaults to ``budget_factor * pert.size``. With ``pert=None``
    the profile itself is evolved and the default budget is the solver
    drift allowance ``STATIONARY_BUDGET``.
    """
    u_a = _profile(gs)
    v = v or zero()
    g = u_a.grid
    if pert is None:
        phi = u_a
        info = {"kind": "none", "size": 0.0}
        budget = STATIONARY_BUDGET if budget is None else budget
    else:
        p = perturbation_field(pert, g)
        phi = u_a + p
        info = {
            "kind": pert.kind,
            "size": pert.size,
            "seed": pert.seed,
            "s": pert.s,
            "h1_norm": sobolev_norm(p, 1.0),
            "hs_norm": sobolev_norm(p, pert.s) if pert.s is not None else None,
        }
        budget = budget_factor * pert.size if budget is None else budget
    tr = nls_evolve(phi, cfg, v, horizon)
    return _trace(tr, u_a, cfg, v, budget, info)


def _run_one(args):
    return stability_experiment(*args)


def run_many(jobs: list, workers: int = 1) -> list:
    """Map ``stability_experiment`` over argument tuples, preserving order."""
    if workers <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_run_one, jobs))


def wilson_interval(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    lo, hi = proportion_confint(k, n, alpha=1 - level, method="wilson")
    return float(lo), float(hi)


def almost_sure_stability_experiment(
    gs: GroundStateResult | SpectralField,
    s: float,
    delta: float,
    n: int,
    cfg: EvolveConfig,
    v: PotentialSpec | None = None,
    horizon: float = 10.0,
    seed: int = 0,
    budget_factor: float = 10.0,
    workers: int = 1,
) -> tuple[list[StabilityTrace], dict]:
    """n rough randomized perturbations of H^s size delta.

    The budget is ``budget_factor * delta`` in the H^1 orbit distance. Returns
    the traces and a summary with the fraction that stayed within budget and
    its Wilson 95% interval.
    """
    u_a = _profile(gs)
    if not 0.5 < s < 1:
        log.warning("s = %g outside the recommended range (1/2, 1)", s)
    seeds = np.random.SeedSequence(seed).generate_state(n)
    jobs = [
        (u_a, PerturbationSpec("random_rough", delta, int(sd), s), horizon, cfg, v, budget_factor)
        for sd in seeds
    ]
    traces = run_many(jobs, workers)
    ok = sum(t.verdict == "stayed_within" for t in traces)
    lo, hi = wilson_interval(ok, n)
    summary = {
        "n": n,
        "s": s,
        "delta": delta,
        "stayed_within": ok,
        "fraction": ok / n,
        "wilson95": [lo, hi],
        "aborted": sum(t.verdict == "aborted" for t in traces),
    }
    return traces, summary


def perturbation_compare(
    u0: SpectralField,
    F: TrajectorySeries,
    v_pot: PotentialSpec | None = None,
    cfg: PicardConfig = PicardConfig(),
    ncfg: NormConfig = NormConfig(),
) -> tuple[float, float, dict]:
    """Forced versus unforced cubic flow from the same datum on F's interval.

    Both solutions come from ``picard_solve`` on the same time grid (the
    unforced one with F = 0), so the returned differences isolate the
    effect of the forcing. Returns (sup_t H^1 difference, X-norm of the
    difference, info with the forcing's Y-norm gate value and convergence).
    """
    zero_f = TrajectorySeries(F.grid, F.times, np.zeros_like(F.values))
    forced = picard_solve(u0, F, v_pot, cfg)
    free = picard_solve(u0, zero_f, v_pot, cfg)
    if not (forced.converged and free.converged):
        raise RuntimeError("Picard iteration did not converge")
    diff = forced.v - free.v
    sup_h1 = float(np.max(h1_norms(diff.values, F.grid)))
    xd = x_norm(diff, ncfg).total if np.any(diff.values) else 0.0
    yf = y_norm(F, ncfg).total if np.any(F.values) else 0.0
    return sup_h1, float(xd), {"forcing_y": float(yf), "iterations": [len(forced.iterates), len(free.iterates)]}


__all__ = [
    "h1_inner",
    "shift_field",
    "orbit_projection",
    "orbit_distance",
    "PerturbationSpec",
    "perturbation_field",
    "StabilityTrace",
    "standing_wave_config",
    "stability_experiment",
    "run_many",
    "wilson_interval",
    "almost_sure_stability_experiment",
    "perturbation_compare",
]
