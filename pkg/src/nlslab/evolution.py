"""
Split-step integration of the linear group e^{itH} and of the nonlinear flow.

Sign convention (shared by every module): H := Delta - V, so e^{itH} solves
i u_t + Delta u - V u = 0 and a plane wave exp(i xi.x) evolves with phase
exp(-i t |xi|^2). The nonlinear equations are

    i u_t + Delta u - V u + sigma |u|^2 u = 0                  (cubic)
    i u_t + Delta u - V u + |u|^{q-2} u + |u|^{2*-2} u = 0      (mixed)

with sigma = +1 focusing, -1 defocusing.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .potential import PotentialSpec, warn_if_inadmissible, zero
from .spectral import GridSpec, SpectralField, grad_norm_sq

log = logging.getLogger(__name__)

BLOWUP_AMPLITUDE = 1e6


@dataclass
class TrajectorySeries:
    """Snapshots of a field at strictly increasing times.

    ``values`` has shape (len(times), *grid.shape).
    """

    grid: GridSpec
    times: np.ndarray
    values: np.ndarray
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (len(self.times),) + self.grid.shape:
            raise ValueError("values do not match times x grid")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @classmethod
    def from_fields(cls, times, fields) -> TrajectorySeries:
        fields = list(fields)
        return cls(fields[0].grid, np.asarray(times), np.stack([f.values for f in fields]))

    @classmethod
    def constant(cls, f: SpectralField, times) -> TrajectorySeries:
        times = np.asarray(times, dtype=float)
        return cls(f.grid, times, np.broadcast_to(f.values, (len(times),) + f.grid.shape).copy())

    @property
    def interval(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    @property
    def fields(self) -> list[SpectralField]:
        return [SpectralField(self.grid, v) for v in self.values]

    def __len__(self):
        return len(self.times)

    def at(self, i: int) -> SpectralField:
        return SpectralField(self.grid, self.values[i])

    def restrict(self, i0: int, i1: int) -> TrajectorySeries:
        """Sub-trajectory on snapshots i0..i1 inclusive."""
        return TrajectorySeries(self.grid, self.times[i0 : i1 + 1], self.values[i0 : i1 + 1])

    def map_modes(self, mult: np.ndarray) -> TrajectorySeries:
        ax = self.grid.spatial_axes(1)
        vals = np.fft.ifftn(np.fft.fftn(self.values, axes=ax) * mult, axes=ax)
        return TrajectorySeries(self.grid, self.times, vals)

    def __add__(self, other: TrajectorySeries) -> TrajectorySeries:
        return TrajectorySeries(self.grid, self.times, self.values + other.values)

    def __sub__(self, other: TrajectorySeries) -> TrajectorySeries:
        return TrajectorySeries(self.grid, self.times, self.values - other.values)

    def scaled(self, c: complex) -> TrajectorySeries:
        return TrajectorySeries(self.grid, self.times, c * self.values)

    def is_uniform(self, tol: float = 1e-12) -> bool:
        if len(self.times) < 3:
            return True
        return bool(np.max(np.abs(np.diff(self.times) - self.dt)) <= tol * max(1.0, abs(self.dt)))


@dataclass(frozen=True)
class EvolveConfig:
    """Split-step settings.

    ``nonlinearity`` is ``"cubic"`` (sign ``sigma``) or ``"mixed"`` with
    subcritical power ``q`` and optional energy-critical term.
    """

    dt: float = 1e-3
    nonlinearity: str = "cubic"
    sigma: float = 1.0
    q: float | None = None
    include_critical: bool = True
    snapshot_every: int = 1
    scheme: str = "strang"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.nonlinearity not in ("cubic", "mixed", "none"):
            raise ValueError(f"unknown nonlinearity {self.nonlinearity!r}")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be >= 1")

    def validate_for(self, grid: GridSpec):
        if self.nonlinearity == "mixed":
            if grid.d < 3:
                raise ValueError("mixed nonlinearity needs d >= 3 (critical exponent)")
            if self.q is None or not 2 < self.q < 2 + 4 / grid.d:
                raise ValueError(f"q must lie in (2, 2 + 4/d), got {self.q}")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def critical_exponent(d: int) -> float:
    return 2 * d / (d - 2)


def _nonlinear_rate(u: np.ndarray, cfg: EvolveConfig, d: int) -> np.ndarray:
    """g(|u|) such that the nonlinear substep is u -> u exp(i g dt)."""
    if cfg.nonlinearity == "none":
        return np.zeros(u.shape)
    a2 = u.real**2 + u.imag**2
    if cfg.nonlinearity == "cubic":
        return cfg.sigma * a2
    g = a2 ** ((cfg.q - 2) / 2)
    if cfg.include_critical:
        g = g + a2 ** ((critical_exponent(d) - 2) / 2)
    return g


def _kinetic_phase(grid: GridSpec, dt: float) -> np.ndarray:
    return np.exp(-1j * dt * grid.ksq)


def linear_propagate(f: SpectralField, t: float, v: PotentialSpec | None = None, dt: float = 1e-2) -> SpectralField:
    """e^{itH} f by Strang splitting (exact multiplier when V = 0).

    Negative ``t`` runs backwards. ``t`` is covered by round(|t|/dt) steps of
    equal size; a warning is issued when ``dt`` does not divide ``t``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    v = v or zero()
    g = f.grid
    if t == 0:
        return f
    if v.is_zero:
        return f.multiply_modes(_kinetic_phase(g, t))
    warn_if_inadmissible(v, g)
    n = max(1, int(round(abs(t) / dt)))
    if abs(n * dt - abs(t)) > 1e-9 * max(1.0, abs(t)):
        warnings.warn("dt does not divide t; using equal steps of t/n", stacklevel=2)
    h = t / n
    half_v = np.exp(-0.5j * h * v.values(g))
    kin = _kinetic_phase(g, h)
    u = f.values
    for _ in range(n):
        u = np.fft.ifftn(kin * np.fft.fftn(half_v * u)) * half_v
    return SpectralField(g, u)


class LinearStepper:
    """Repeated application of e^{i h H} on raw arrays (batched over leading axes)."""

    def __init__(self, grid: GridSpec, v: PotentialSpec | None, h: float):
        self.grid = grid
        self.axes = grid.spatial_axes(0)
        self.kin = _kinetic_phase(grid, h)
        v = v or zero()
        self.half_v = None if v.is_zero else np.exp(-0.5j * h * v.values(grid))

    def __call__(self, u: np.ndarray) -> np.ndarray:
        ax = tuple(range(u.ndim - self.grid.d, u.ndim))
        if self.half_v is None:
            return np.fft.ifftn(self.kin * np.fft.fftn(u, axes=ax), axes=ax)
        u = np.fft.ifftn(self.kin * np.fft.fftn(self.half_v * u, axes=ax), axes=ax)
        return self.half_v * u


def free_trajectory(f: SpectralField, times, v: PotentialSpec | None = None, dt: float | None = None) -> TrajectorySeries:
    """e^{itH} f sampled at uniform ``times`` starting at 0.

    With V = 0 every snapshot is an exact multiplier; otherwise one Strang
    step per snapshot interval (or ``dt`` substeps if given).
    """
    times = np.asarray(times, dtype=float)
    g = f.grid
    v = v or zero()
    if v.is_zero:
        ax = g.spatial_axes(1)
        ph = np.exp(-1j * times.reshape((-1,) + (1,) * g.d) * g.ksq)
        vals = np.fft.ifftn(ph * f.modes, axes=ax)
        return TrajectorySeries(g, times, vals)
    h = times[1] - times[0]
    sub = 1 if dt is None else max(1, int(round(h / dt)))
    step = LinearStepper(g, v, h / sub)
    out = np.empty((len(times),) + g.shape, dtype=np.complex128)
    u = f.values
    out[0] = u
    if times[0] != 0:
        u = linear_propagate(f, times[0], v, h / sub).values
        out[0] = u
    for i in range(1, len(times)):
        for _ in range(sub):
            u = step(u)
        out[i] = u
    return TrajectorySeries(g, times, out)


def nls_evolve(
    u0: SpectralField,
    cfg: EvolveConfig,
    v: PotentialSpec | None = None,
    horizon: float = 1.0,
) -> TrajectorySeries:
    """Strang split-step: half pointwise phase (V and nonlinearity), full
    kinetic step, half pointwise phase. Negative ``horizon`` integrates
    backwards in time.

    Snapshots every ``cfg.snapshot_every`` steps (plus the final time). If
    the amplitude exceeds 1e6 or becomes non-finite, integration stops and
    the partial trajectory carries ``flags["blowup_suspect"] = True``.
    """
    g = u0.grid
    cfg.validate_for(g)
    v = v or zero()
    n = int(round(abs(horizon) / cfg.dt))
    h = np.sign(horizon) * cfg.dt if n else 0.0
    vv = v.values(g)
    kin = _kinetic_phase(g, h)
    u = u0.values.copy()
    times, snaps = [0.0], [u.copy()]
    flags = {"blowup_suspect": False}

    def half(u):
        return u * np.exp(0.5j * h * (_nonlinear_rate(u, cfg, g.d) - vv))

    for i in range(1, n + 1):
        u = half(np.fft.ifftn(kin * np.fft.fftn(half(u))))
        if i % cfg.snapshot_every == 0 or i == n:
            amp = np.max(np.abs(u))
            if not np.isfinite(amp) or amp > BLOWUP_AMPLITUDE:
                flags["blowup_suspect"] = True
                flags["stopped_at"] = i * h
                log.warning("blowup suspected at t=%g", i * h)
                break
            times.append(i * h)
            snaps.append(u.copy())
    times = np.asarray(times)
    vals = np.stack(snaps)
    if h < 0:
        times, vals = times[::-1], vals[::-1]
        flags["reversed"] = True
    return TrajectorySeries(g, times, vals, flags)


def mass(u: SpectralField) -> float:
    return float(np.sum(np.abs(u.values) ** 2) * u.grid.cellvol)


def energy(u: SpectralField, cfg: EvolveConfig, v: PotentialSpec | None = None) -> float:
    """Hamiltonian conserved by ``nls_evolve`` for the given nonlinearity."""
    g = u.grid
    v = v or zero()
    a2 = np.abs(u.values) ** 2
    e = 0.5 * grad_norm_sq(u) + 0.5 * float(np.sum(v.values(g) * a2) * g.cellvol)
    if cfg.nonlinearity == "cubic":
        e -= cfg.sigma * 0.25 * float(np.sum(a2**2) * g.cellvol)
    elif cfg.nonlinearity == "mixed":
        e -= float(np.sum(a2 ** (cfg.q / 2)) * g.cellvol) / cfg.q
        if cfg.include_critical:
            ps = critical_exponent(g.d)
            e -= float(np.sum(a2 ** (ps / 2)) * g.cellvol) / ps
    return e


def conservation_series(tr: TrajectorySeries, cfg: EvolveConfig, v: PotentialSpec | None = None) -> np.ndarray:
    """Rows of (t, mass, energy)."""
    rows = [(t, mass(f), energy(f, cfg, v)) for t, f in zip(tr.times, tr.fields)]
    return np.array(rows)
