"""
Periodic-box spectral representation.

The whole space R^d is replaced by the box [-L, L)^d sampled on an m^d grid.
Fields are stored by their physical samples; discrete Fourier coefficients
are computed lazily and cached. Frequencies live on the lattice pi*k/L.

Three families of Fourier multipliers are provided:

    * unit-scale projections        P_k,       multiplier psi(xi - k),  k in Z^d
    * dyadic Littlewood-Paley       P_N,       multiplier phi(xi/N) - phi(2 xi/N)
    * directional projections       P_{N,e_l}, multiplier phi_dir(|xi_l| / N)
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

__all__ = [
    "GridSpec",
    "SpectralField",
    "make_grid",
    "smooth_step",
    "varphi",
    "phi_dir",
    "psi_radius",
    "dyadic_scales",
    "lp_multiplier",
    "lp_project",
    "lp_project_le",
    "fattened_project",
    "directional_multiplier",
    "directional_project",
    "unit_lattice",
    "unit_bumps",
    "unit_multiplier",
    "unit_project",
    "sobolev_norm",
    "lebesgue_norm",
    "gradient",
    "grad_norm_sq",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [-L, L)^d with m points per axis."""

    d: int
    m: int
    half_len: float

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.m,) * self.d

    @property
    def size(self) -> int:
        return self.m**self.d

    @property
    def dx(self) -> float:
        return 2.0 * self.half_len / self.m

    @property
    def cellvol(self) -> float:
        return self.dx**self.d

    @property
    def volume(self) -> float:
        return (2.0 * self.half_len) ** self.d

    @property
    def dk(self) -> float:
        """Frequency lattice spacing pi / L."""
        return np.pi / self.half_len

    @property
    def basis(self) -> np.ndarray:
        return np.eye(self.d)

    @cached_property
    def x1d(self) -> np.ndarray:
        return -self.half_len + self.dx * np.arange(self.m)

    @cached_property
    def k1d(self) -> np.ndarray:
        """Angular frequencies in FFT order."""
        return self.dk * np.fft.fftfreq(self.m, 1.0 / self.m)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.x1d] * self.d), indexing="ij"))

    @cached_property
    def freqs(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.k1d] * self.d), indexing="ij"))

    @cached_property
    def deriv_freqs(self) -> tuple[np.ndarray, ...]:
        # Nyquist row zeroed: i*xi is not Hermitian-symmetric there.
        k = self.k1d.copy()
        k[self.m // 2] = 0.0
        return tuple(np.meshgrid(*([k] * self.d), indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(sum(x**2 for x in self.coords))

    @cached_property
    def ksq(self) -> np.ndarray:
        return sum(k**2 for k in self.freqs)

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt(self.ksq)

    @property
    def kmax(self) -> float:
        """Largest |xi| present on the lattice."""
        return float(np.sqrt(self.d) * self.dk * self.m / 2)

    def spatial_axes(self, lead: int = 0) -> tuple[int, ...]:
        return tuple(range(lead, lead + self.d))


def _fft_size(m: int) -> bool:
    if m % 3 == 0:
        m //= 3
    return m & (m - 1) == 0


def make_grid(d: int, m: int, half_len: float = 8 * np.pi) -> GridSpec:
    """Build a grid, rejecting unsupported dimensions and resolutions.

    >>> make_grid(1, 8, np.pi).k1d
    array([ 0.,  1.,  2.,  3., -4., -3., -2., -1.])
    """
    if int(d) != d or not 1 <= d <= 4:
        raise ValueError(f"dimension must be in 1..4, got {d}")
    if int(m) != m or m < 8 or not _fft_size(int(m)):
        raise ValueError(f"points per axis must be 2^j or 3*2^j and >= 8, got {m}")
    if not half_len > 0:
        raise ValueError(f"half_len must be positive, got {half_len}")
    return GridSpec(int(d), int(m), float(half_len))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Complex field on a periodic grid.

    ``values`` are physical samples (row-major, last axis fastest). ``modes``
    are the unnormalised DFT coefficients, computed on first access. The
    field is immutable; arithmetic returns new fields.
    """

    grid: GridSpec
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.complex128)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} != grid shape {self.grid.shape}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_modes(cls, grid: GridSpec, modes: np.ndarray, meta: dict | None = None) -> SpectralField:
        modes = np.asarray(modes, dtype=np.complex128)
        out = cls(grid, np.fft.ifftn(modes), meta or {})
        frozen = modes.copy()
        frozen.flags.writeable = False
        out.__dict__["modes"] = frozen
        return out

    @classmethod
    def zeros(cls, grid: GridSpec) -> SpectralField:
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))

    @classmethod
    def plane_wave(cls, grid: GridSpec, k_index, amplitude: complex = 1.0) -> SpectralField:
        """Single lattice mode exp(i xi.x) with xi = (pi/L) * k_index."""
        xi = grid.dk * np.asarray(k_index, dtype=float)
        phase = sum(xi[j] * grid.coords[j] for j in range(grid.d))
        return cls(grid, amplitude * np.exp(1j * phase))

    @cached_property
    def modes(self) -> np.ndarray:
        out = np.fft.fftn(self.values)
        out.flags.writeable = False
        return out

    def with_modes(self, modes: np.ndarray) -> SpectralField:
        return SpectralField.from_modes(self.grid, modes)

    def multiply_modes(self, mult: np.ndarray) -> SpectralField:
        return SpectralField.from_modes(self.grid, self.modes * mult)

    def l2_modes(self) -> float:
        """L2 norm computed in frequency space (Parseval)."""
        g = self.grid
        return float(np.sqrt(np.sum(np.abs(self.modes) ** 2) * g.cellvol / g.size))

    def conj(self) -> SpectralField:
        return SpectralField(self.grid, np.conj(self.values))

    def _check(self, other: SpectralField):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, SpectralField):
            self._check(other)
            return SpectralField(self.grid, self.values + other.values)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, SpectralField):
            self._check(other)
            return SpectralField(self.grid, self.values - other.values)
        return NotImplemented

    def __mul__(self, c):
        if np.isscalar(c):
            return SpectralField(self.grid, c * self.values)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.values)

    def __repr__(self) -> str:
        return f"SpectralField(d={self.grid.d}, m={self.grid.m}, L={self.grid.half_len:g})"


# ---------------------------------------------------------------------------
# cutoff profiles
# ---------------------------------------------------------------------------


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
    b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def varphi(r):
    """Radial cutoff: 1 on |xi| <= 1, 0 on |xi| >= 2, monotone between."""
    return 1.0 - smooth_step(np.asarray(r, dtype=float) - 1.0)


def phi_dir(t):
    """One-dimensional bump for directional projections.

    Equal to 1 on [1/4, 2] and vanishing outside (1/8, 4). The plateau is
    wide enough that on the annulus N/2 < |xi| < 2N some coordinate always
    satisfies |xi_l| / N in [1/4, 2] when d <= 4, which makes the product of
    the complementary projections annihilate P_N exactly.
    """
    t = np.abs(np.asarray(t, dtype=float))
    return smooth_step(8.0 * (t - 0.125)) * (1.0 - smooth_step((t - 2.0) / 2.0))


def psi_radius(d: int) -> float:
    # Unit balls around Z^d cover R^d only for d <= 3 (covering radius sqrt(d)/2).
    return 1.0 if d <= 3 else 1.125


def _psi_raw(dist, radius: float):
    s = np.clip(np.asarray(dist, dtype=float) / radius, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        return np.where(s < 1.0, np.exp(1.0 - 1.0 / np.where(s < 1.0, 1.0 - s * s, 1.0)), 0.0)


# ---------------------------------------------------------------------------
# dyadic projections
# ---------------------------------------------------------------------------


def dyadic_scales(grid: GridSpec) -> list[float]:
    """Dyadic N covering every nonzero lattice frequency.

    The lowest scale is the largest power of two not exceeding pi/L, the
    highest the smallest power of two at or above the largest |xi|. With
    this band, sum_N P_N is the identity off the zero mode.
    """
    lo = int(np.floor(np.log2(grid.dk) + 1e-12))
    hi = int(np.ceil(np.log2(grid.kmax) - 1e-12))
    return [float(2.0**j) for j in range(lo, hi + 1)]


@lru_cache(maxsize=256)
def lp_multiplier(grid: GridSpec, n: float) -> np.ndarray:
    k = grid.kabs
    out = varphi(k / n) - varphi(2.0 * k / n)
    out.flags.writeable = False
    return out


def _in_band(grid: GridSpec, n: float) -> bool:
    return grid.dk / 2 < 2 * n and n / 2 < grid.kmax


def lp_project(f: SpectralField, n: float) -> SpectralField:
    """Dyadic Littlewood-Paley piece P_N f."""
    if not _in_band(f.grid, n):
        out = SpectralField.zeros(f.grid)
        out.meta["out_of_band"] = True
        return out
    return f.multiply_modes(lp_multiplier(f.grid, float(n)))


def lp_project_le(f: SpectralField, n: float) -> SpectralField:
    return f.multiply_modes(varphi(f.grid.kabs / n))


def fattened_project(f: SpectralField, n: float) -> SpectralField:
    """P~_N = P_{<=8N} - P_{<=N/8}."""
    k = f.grid.kabs
    return f.multiply_modes(varphi(k / (8 * n)) - varphi(8 * k / n))


@lru_cache(maxsize=256)
def directional_multiplier(grid: GridSpec, n: float, ell: int) -> np.ndarray:
    if not 1 <= ell <= grid.d:
        raise ValueError(f"axis index must be in 1..{grid.d}, got {ell}")
    out = phi_dir(np.abs(grid.freqs[ell - 1]) / n)
    out.flags.writeable = False
    return out


def directional_project(f: SpectralField, n: float, ell: int) -> SpectralField:
    return f.multiply_modes(directional_multiplier(f.grid, float(n), int(ell)))


# ---------------------------------------------------------------------------
# unit-scale projections
# ---------------------------------------------------------------------------


def unit_lattice(grid: GridSpec) -> list[tuple[int, ...]]:
    """Integer points k whose bump psi(. - k) meets the frequency lattice."""
    kmax = grid.dk * grid.m / 2
    r = int(np.ceil(kmax + psi_radius(grid.d)))
    pts = []
    for k in itertools.product(range(-r, r + 1), repeat=grid.d):
        # closest lattice frequency to k along each axis, clipped to the band
        near = np.clip(np.abs(k), 0, kmax)
        if np.sqrt(np.sum((np.abs(k) - near) ** 2)) < psi_radius(grid.d):
            pts.append(tuple(int(c) for c in k))
    return pts


@lru_cache(maxsize=8)
def unit_bumps(grid: GridSpec) -> tuple:
    """Unnormalised bumps psi(. - k) restricted to their support.

    Returns ``(k, index, values)`` triples: ``index`` is an ``np.ix_`` tuple
    selecting the frequency sub-box where psi(. - k) can be nonzero. Working
    on the sub-box keeps the cost proportional to the grid size rather than
    to (grid size) x (number of lattice points).
    """
    rad = psi_radius(grid.d)
    k1 = grid.k1d
    near: dict[int, np.ndarray] = {}
    out = []
    for k in unit_lattice(grid):
        axes = []
        for c in k:
            if c not in near:
                near[c] = np.nonzero(np.abs(k1 - c) < rad)[0]
            axes.append(near[c])
        if any(a.size == 0 for a in axes):
            continue
        ix = np.ix_(*axes)
        dist = np.sqrt(sum((k1[a] - c).reshape([-1 if i == j else 1 for i in range(grid.d)]) ** 2
                           for j, (a, c) in enumerate(zip(axes, k))))
        vals = _psi_raw(dist, rad)
        if not np.any(vals):
            continue
        vals.flags.writeable = False
        out.append((k, ix, vals))
    return tuple(out)


@lru_cache(maxsize=16)
def _unit_partition(grid: GridSpec) -> np.ndarray:
    total = np.zeros(grid.shape)
    for _, ix, vals in unit_bumps(grid):
        total[ix] += vals
    total.flags.writeable = False
    return total


def _dist_to(grid: GridSpec, k) -> np.ndarray:
    return np.sqrt(sum((grid.freqs[j] - k[j]) ** 2 for j in range(grid.d)))


def unit_multiplier(grid: GridSpec, k) -> np.ndarray:
    """Normalised psi(xi - k): the sum over k of these is exactly 1."""
    raw = _psi_raw(_dist_to(grid, k), psi_radius(grid.d))
    return raw / _unit_partition(grid)


def unit_project(f: SpectralField, k) -> SpectralField:
    k = tuple(int(c) for c in np.atleast_1d(k))
    if len(k) != f.grid.d:
        raise ValueError("lattice point has wrong dimension")
    return f.multiply_modes(unit_multiplier(f.grid, k))


# ---------------------------------------------------------------------------
# norms and derivatives
# ---------------------------------------------------------------------------


def sobolev_norm(f: SpectralField, s: float) -> float:
    """H^s norm with the Japanese-bracket multiplier <xi>^s."""
    if not -2 <= s <= 2:
        raise ValueError("regularity outside [-2, 2]")
    g = f.grid
    w = (1.0 + g.ksq) ** s
    return float(np.sqrt(np.sum(w * np.abs(f.modes) ** 2) * g.cellvol / g.size))


def _lp(vals: np.ndarray, r: float, weight: float) -> float:
    a = np.abs(vals)
    top = a.max() if a.size else 0.0
    if r == np.inf:
        return float(top)
    if top == 0.0:
        return 0.0
    return float(top * (np.sum((a / top) ** r) * weight) ** (1.0 / r))


def lebesgue_norm(f, r: float) -> float:
    """L^r norm by cell-volume quadrature; r = inf is the grid maximum."""
    if not r >= 1:
        raise ValueError("exponent must be >= 1")
    if isinstance(f, SpectralField):
        return _lp(f.values, r, f.grid.cellvol)
    raise TypeError("expected a SpectralField")


def gradient(f: SpectralField) -> list[np.ndarray]:
    return [np.fft.ifftn(1j * k * f.modes) for k in f.grid.deriv_freqs]


def grad_norm_sq(f: SpectralField) -> float:
    """||grad f||_2^2 via the |xi|^2 multiplier."""
    g = f.grid
    return float(np.sum(g.ksq * np.abs(f.modes) ** 2) * g.cellvol / g.size)
