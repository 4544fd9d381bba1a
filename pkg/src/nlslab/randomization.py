"""Wiener randomization over unit frequency cubes and its tail/moment diagnostics."""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .spectral import GridSpec, SpectralField, _unit_partition, sobolev_norm, unit_bumps, varphi


@dataclass(frozen=True)
class RandomSeedPlan:
    """Seed and law of the coefficients g_k.

    ``law`` is ``"gaussian"`` (complex, E|g|^2 = 1) or ``"ones"``
    (deterministic g_k = 1, used to check the partition of unity).
    """

    seed: int = 0
    law: str = "gaussian"


def _key(seed: int, k: tuple[int, ...]) -> list[int]:
    h = hashlib.blake2b(digest_size=16)
    h.update(int(seed).to_bytes(8, "little", signed=True))
    for c in k:
        h.update(int(c).to_bytes(4, "little", signed=True))
    dig = h.digest()
    return [int.from_bytes(dig[i : i + 4], "little") for i in range(0, 16, 4)]


def coefficient(plan: RandomSeedPlan, k: tuple[int, ...]) -> complex:
    """g_k for one lattice point; depends only on (seed, k)."""
    if plan.law == "ones":
        return 1.0 + 0j
    rng = np.random.default_rng(_key(plan.seed, tuple(k)))
    re, im = rng.normal(0.0, np.sqrt(0.5), size=2)
    return complex(re, im)


def randomize(f: SpectralField, plan: RandomSeedPlan) -> SpectralField:
    """f^omega = sum_k g_k P_k f."""
    g = f.grid
    mult = np.zeros(g.shape, dtype=np.complex128)
    active = np.abs(f.modes) > 0
    for k, ix, bump in unit_bumps(g):
        if not np.any(active[ix]):
            continue
        mult[ix] += coefficient(plan, k) * bump
    mult /= _unit_partition(g)
    return f.multiply_modes(mult)


def profile(
    grid: GridSpec,
    kind: str = "gaussian",
    amplitude: float = 1.0,
    width: float = 2.0,
    s: float = 0.5,
    kcut: float = 4.0,
    momentum: float = 0.0,
) -> SpectralField:
    """Deterministic data to randomize or evolve.

    ``gaussian``: amplitude * exp(-|x|^2 / (2 width^2)) * exp(i momentum x_1).
    ``hs``: radial profile with spectrum <xi>^-(d/2 + s) cut off smoothly at
    ``kcut``, so that it sits at the edge of H^s; scaled to H^s norm
    ``amplitude``.
    """
    if kind == "gaussian":
        env = np.exp(-(grid.radius**2) / (2 * width**2))
        return SpectralField(grid, amplitude * env * np.exp(1j * momentum * grid.coords[0]))
    if kind == "hs":
        spec = (1 + grid.ksq) ** (-(grid.d / 2 + s) / 2) * varphi(grid.kabs / kcut)
        f = SpectralField.from_modes(grid, spec.astype(np.complex128))
        return f * (amplitude / sobolev_norm(f, s))
    raise ValueError(f"unknown profile kind {kind!r}")


def unit_energy(f: SpectralField) -> float:
    """sum_k ||P_k f||_2^2 (the expected squared L2 norm of f^omega)."""
    g = f.grid
    part = _unit_partition(g)
    power = np.abs(f.modes) ** 2
    tot = 0.0
    for _, ix, bump in unit_bumps(g):
        tot += np.sum((bump / part[ix]) ** 2 * power[ix])
    return float(tot * g.cellvol / g.size)


def gaussian_draws(n: int, size: int, seed: int) -> np.ndarray:
    """n x size complex Gaussians with E|g|^2 = 1."""
    rng = np.random.default_rng(seed)
    return (rng.normal(size=(n, size)) + 1j * rng.normal(size=(n, size))) * np.sqrt(0.5)


def moment_estimate(coeffs, p: float, n: int, plan: RandomSeedPlan) -> dict:
    """Empirical L^p_omega norm of sum_n c_n g_n.

    Returns the estimate together with ``ratio`` = estimate / (sqrt(p) ||c||_2).
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    if n < 100:
        raise ValueError("need at least 100 samples")
    c = np.asarray(coeffs, dtype=np.complex128).ravel()
    g = gaussian_draws(n, c.size, plan.seed)
    s = np.abs(g @ c)
    top = s.max()
    est = 0.0 if top == 0 else float(top * np.mean((s / top) ** p) ** (1 / p))
    l2 = float(np.linalg.norm(c))
    ratio = est / (np.sqrt(p) * l2) if l2 > 0 else 0.0
    return {"estimate": est, "ratio": ratio, "p": float(p), "n": int(n)}


@dataclass
class TailReport:
    lambdas: list
    empirical_prob: list
    fitted_slope: float
    r_squared: float
    n_samples: int
    degenerate: bool = False
    samples: list = field(default_factory=list, repr=False)

    def to_dict(self, with_samples: bool = False) -> dict:
        out = asdict(self)
        if not with_samples:
            out.pop("samples")
        return out


def fit_tail(values, lambdas) -> TailReport:
    """Exceedance probabilities and a least-squares fit of log p against lambda^2."""
    vals = np.asarray(values, dtype=float)
    lam = np.asarray(lambdas, dtype=float)
    prob = np.array([np.mean(vals > x) for x in lam])
    # monotone by construction for sorted lambdas; enforce for unsorted input
    order = np.argsort(lam)
    lam, prob = lam[order], prob[order]
    keep = prob > 0
    slope, r2, degenerate = float("nan"), float("nan"), True
    if keep.sum() >= 3:
        x, y = lam[keep] ** 2, np.log(prob[keep])
        if np.ptp(y) > 0:
            A = np.vstack([x, np.ones_like(x)]).T
            (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
            resid = y - (slope * x + icpt)
            r2 = 1.0 - np.sum(resid**2) / np.sum((y - y.mean()) ** 2)
            slope, r2, degenerate = float(slope), float(r2), False
    return TailReport(lam.tolist(), prob.tolist(), slope, r2, int(vals.size), degenerate, vals.tolist())


def tail_diagnostic(
    f: SpectralField,
    norm_eval: Callable[[SpectralField], float],
    lambdas,
    n: int,
    seed: int = 0,
) -> TailReport:
    """Sample ``norm_eval(f^omega)`` over ``n`` seeds and fit the tail.

    ``norm_eval`` receives the randomized datum and returns the space-time
    norm of its free evolution (see ``spacetime.free_y_norm``).
    """
    if n < 200:
        raise ValueError("need at least 200 samples")
    ss = np.random.SeedSequence(seed)
    seeds = [int(s.generate_state(1, np.uint64)[0] >> 1) for s in ss.spawn(n)]
    vals = [norm_eval(randomize(f, RandomSeedPlan(s))) for s in seeds]
    return fit_tail(vals, lambdas)
