"""
Local solver for the forced cubic equation

    i v_t + H v + sigma |F + v|^2 (F + v) = 0,    v(0) = v0,

by fixed-point iteration of the Duhamel map

    Phi(v)(t) = e^{itH} v0 + i sigma int_0^t e^{i(t-s)H} |F+v|^2 (F+v)(s) ds.

The time integral is the trapezoid rule on the forcing's snapshot grid, with
one linear step e^{i dt H} per node. For the sign of the Duhamel term see the
convention in ``evolution``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .evolution import LinearStepper, TrajectorySeries, free_trajectory
from .potential import PotentialSpec, zero
from .spacetime import NormConfig, x_norm, y_norm
from .spectral import GridSpec, SpectralField

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PicardConfig:
    delta: float = 0.05
    max_iter: int = 50
    tol: float = 1e-8
    interval: tuple = (0.0, 0.25)
    dt: float = 1 / 256
    sigma: float = 1.0

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def times(self) -> np.ndarray:
        t0, t1 = self.interval
        n = int(round((t1 - t0) / self.dt))
        return t0 + self.dt * np.arange(n + 1)


@dataclass
class PicardResult:
    v: TrajectorySeries
    u: TrajectorySeries
    iterates: list
    contraction_factors: list
    converged: bool
    gate_values: tuple
    residual: float = float("nan")
    flags: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "iterates": [float(x) for x in self.iterates],
            "contraction_factors": [float(x) for x in self.contraction_factors],
            "converged": bool(self.converged),
            "gate_values": [float(x) for x in self.gate_values[:2]] + [bool(self.gate_values[2])],
            "residual": float(self.residual),
            "interval": list(self.u.interval),
            "flags": self.flags,
        }


def h1_norms(vals: np.ndarray, grid: GridSpec) -> np.ndarray:
    """H^1 norm of every snapshot in a (nt, *grid.shape) array."""
    ax = grid.spatial_axes(1)
    m = np.fft.fftn(vals, axes=ax)
    return np.sqrt(np.sum((1 + grid.ksq) * np.abs(m) ** 2, axis=ax) * grid.cellvol / grid.size)


def smallness_gate(
    v0: SpectralField,
    F: TrajectorySeries,
    cfg: PicardConfig,
    ncfg: NormConfig = NormConfig(),
    v_pot: PotentialSpec | None = None,
) -> tuple[float, float, bool]:
    """(||e^{itH} v0||_X, ||F||_Y, verdict sum <= delta) on F's interval."""
    free = free_trajectory(v0, F.times - F.times[0], v_pot)
    xv = x_norm(free, ncfg).total if np.any(v0.values) else 0.0
    yf = y_norm(F, ncfg).total if np.any(F.values) else 0.0
    return xv, yf, bool(xv + yf <= cfg.delta)


def duhamel_map(
    v: np.ndarray,
    free: np.ndarray,
    F: np.ndarray,
    step: LinearStepper,
    dt: float,
    sigma: float,
) -> np.ndarray:
    """One application of Phi on raw (nt, *shape) arrays."""
    u = F + v
    nl = sigma * (u.real**2 + u.imag**2) * u
    out = np.empty_like(free)
    acc = np.zeros(free.shape[1:], dtype=np.complex128)
    out[0] = free[0]
    for n in range(1, len(free)):
        acc = step(acc + 0.5 * dt * nl[n - 1]) + 0.5 * dt * nl[n]
        out[n] = free[n] + 1j * acc
    return out


def picard_solve(
    v0: SpectralField,
    F: TrajectorySeries,
    v_pot: PotentialSpec | None = None,
    cfg: PicardConfig = PicardConfig(),
    ncfg: NormConfig | None = None,
) -> PicardResult:
    """Iterate Phi from the free evolution of v0 until the sup-in-time H^1
    increment drops below ``cfg.tol``.

    ``F`` must be sampled on a uniform grid starting at t = 0. The gate is
    evaluated (and logged) but never blocks the solve; pass ``ncfg=None`` to
    skip computing it.
    """
    g = v0.grid
    if F.grid != g:
        raise ValueError("forcing and datum live on different grids")
    if abs(F.times[0]) > 1e-14:
        raise ValueError("forcing must start at t = 0 (shift the interval)")
    if not F.is_uniform():
        raise ValueError("forcing snapshots must be uniform in time")
    v_pot = v_pot or zero()
    dt = F.dt
    step = LinearStepper(g, v_pot, dt)
    free = np.empty_like(F.values)
    free[0] = v0.values
    for n in range(1, len(F)):
        free[n] = step(free[n - 1])

    gate = (float("nan"), float("nan"), True)
    if ncfg is not None:
        gate = smallness_gate(v0, F, cfg, ncfg, v_pot)
        if not gate[2]:
            log.warning("smallness gate fails: %.3g + %.3g > %.3g", gate[0], gate[1], cfg.delta)

    v = free.copy()
    incs, factors = [], []
    converged = False
    flags = {}
    for _ in range(cfg.max_iter):
        new = duhamel_map(v, free, F.values, step, dt, cfg.sigma)
        if not np.all(np.isfinite(new)):
            flags["nan_abort"] = True
            break
        inc = float(np.max(h1_norms(new - v, g)))
        if incs and incs[-1] > 0:
            factors.append(inc / incs[-1])
        incs.append(inc)
        v = new
        if inc < cfg.tol:
            converged = True
            break
    residual = float("nan")
    if not flags.get("nan_abort"):
        residual = float(np.max(h1_norms(duhamel_map(v, free, F.values, step, dt, cfg.sigma) - v, g)))
    vt = TrajectorySeries(g, F.times, v)
    ut = TrajectorySeries(g, F.times, v + F.values)
    return PicardResult(vt, ut, incs, factors, converged, gate, residual, flags)


def continuation_scan(
    f_omega: SpectralField,
    v_pot: PotentialSpec | None = None,
    cfg: PicardConfig = PicardConfig(),
    ncfg: NormConfig = NormConfig(),
    t_start: float | None = None,
    t_max: float = 64.0,
    t_tol: float = 1e-2,
    solve: bool = True,
) -> list[dict]:
    """Bracket the largest T with ||e^{itH} f^omega||_{Y([0,T])} <= delta.

    T doubles from ``t_start`` until the gate fails (or ``t_max``), then the
    bracket is bisected on the dt lattice down to ``max(t_tol, dt)``. Every
    probe is recorded with its gate values and, if ``solve``, whether the
    Picard iteration for v (v(0) = 0) converged on [0, T].
    """
    dt = cfg.dt
    zero_v0 = SpectralField.zeros(f_omega.grid)
    records: list[dict] = []

    def probe(T):
        n = max(1, int(round(T / dt)))
        T = n * dt
        F = free_trajectory(f_omega, dt * np.arange(n + 1), v_pot)
        yf = y_norm(F, ncfg).total if np.any(F.values) else 0.0
        ok = yf <= cfg.delta
        rec = {"interval": [0.0, T], "gate": [0.0, yf, bool(ok)], "converged": None, "bisection": None}
        if solve:
            res = picard_solve(zero_v0, F, v_pot, PicardConfig(cfg.delta, cfg.max_iter, cfg.tol, (0.0, T), dt, cfg.sigma))
            rec["converged"] = res.converged
            rec["iterations"] = len(res.iterates)
        records.append(rec)
        return T, ok

    T = t_start if t_start is not None else 4 * dt
    lo, hi = None, None
    while True:
        T, ok = probe(T)
        if ok:
            lo = T
            if T >= t_max:
                break
            T = min(2 * T, t_max)
        else:
            hi = T
            break
    if lo is None and hi is not None:
        lo = 0.0
    k = 0
    while hi is not None and hi - lo > max(t_tol, dt) + 1e-12:
        mid = dt * round(0.5 * (lo + hi) / dt)
        if mid <= lo or mid >= hi:
            break
        k += 1
        mid, ok = probe(mid)
        records[-1]["bisection"] = k
        if ok:
            lo = mid
        else:
            hi = mid
    records.append({"bracket": [lo, hi], "bisections": k})
    return records
