"""Potentials V(x) and their Kato / L^{d/2} admissibility analysis."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma

from .spectral import GridSpec, SpectralField

KINDS = ("zero", "gaussian_well", "truncated_inverse_power", "tabulated")


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """A real potential on the grid.

    ``kind`` is one of ``KINDS``; ``params`` holds the kind's parameters:

    * gaussian_well: depth, width      -> V = -depth * exp(-|x|^2 / width^2)
    * truncated_inverse_power: strength, exponent, cutoff
                                       -> V = -strength * max(|x|, cutoff)^-exponent
    * tabulated: field (SpectralField; the real part is used)
    """

    kind: str = "zero"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "tabulated":
            fld = self.params.get("field")
            if not isinstance(fld, SpectralField):
                raise ValueError("tabulated potential needs a SpectralField under 'field'")
            if np.max(np.abs(fld.values.imag)) > 1e-12 * max(1.0, np.max(np.abs(fld.values))):
                raise ValueError("tabulated potential must be real-valued")

    @property
    def is_zero(self) -> bool:
        if self.kind == "zero":
            return True
        if self.kind == "tabulated":
            return not np.any(self.params["field"].values.real)
        return False

    def values(self, grid: GridSpec) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros(grid.shape)
        if self.kind == "gaussian_well":
            p = self.params
            return -p["depth"] * np.exp(-(grid.radius**2) / p["width"] ** 2)
        if self.kind == "truncated_inverse_power":
            p = self.params
            r = np.maximum(grid.radius, p["cutoff"])
            return -p["strength"] * r ** (-p["exponent"])
        fld = self.params["field"]
        if fld.grid != grid:
            raise ValueError("tabulated potential lives on a different grid")
        return np.array(fld.values.real)

    def negative_part(self, grid: GridSpec) -> np.ndarray:
        """V_- = min(V, 0)."""
        return np.minimum(self.values(grid), 0.0)

    def scaled(self, c: float, grid: GridSpec) -> PotentialSpec:
        return tabulated(SpectralField(grid, c * self.values(grid)))

    def describe(self) -> dict:
        if self.kind == "tabulated":
            return {"kind": "tabulated"}
        return {"kind": self.kind, **self.params}


def zero() -> PotentialSpec:
    return PotentialSpec("zero")


def gaussian_well(depth: float, width: float) -> PotentialSpec:
    return PotentialSpec("gaussian_well", {"depth": float(depth), "width": float(width)})


def truncated_inverse_power(strength: float, exponent: float, cutoff: float) -> PotentialSpec:
    return PotentialSpec(
        "truncated_inverse_power",
        {"strength": float(strength), "exponent": float(exponent), "cutoff": float(cutoff)},
    )


def tabulated(f: SpectralField) -> PotentialSpec:
    return PotentialSpec("tabulated", {"field": f})


def from_config(cfg: dict, grid: GridSpec | None = None) -> PotentialSpec:
    kind = cfg.get("kind", "zero")
    if kind == "zero":
        return zero()
    if kind == "gaussian_well":
        return gaussian_well(cfg["depth"], cfg["width"])
    if kind == "default_well":
        return default_well(grid, cfg.get("width", 2.0), cfg.get("fraction", 0.5))
    if kind == "truncated_inverse_power":
        return truncated_inverse_power(cfg["strength"], cfg["exponent"], cfg["cutoff"])
    if kind == "tabulated":
        from . import snapshot

        fld, _ = snapshot.read(cfg["path"])
        return tabulated(SpectralField(fld.grid, fld.values.real))
    raise ValueError(f"unknown potential kind {kind!r}")


# ---------------------------------------------------------------------------


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / gamma(d / 2 + 1)


def kato_threshold(d: int) -> float:
    """d(d-2) alpha(d); equals 4 pi^2 in four dimensions."""
    return d * (d - 2) * unit_ball_volume(d)


def _kato_kernel(grid: GridSpec) -> np.ndarray:
    # minimum-image distance on the torus
    box = 2 * grid.half_len
    ax = grid.x1d + grid.half_len  # offsets 0..box
    ax = np.minimum(ax, box - ax)
    dist = np.sqrt(sum(a**2 for a in np.meshgrid(*([ax] * grid.d), indexing="ij")))
    with np.errstate(divide="ignore"):
        ker = np.where(dist > 0, 1.0 / np.where(dist > 0, dist, 1.0), 0.0)
    # self cell: exact integral of 1/|y| over the ball of one cell's volume
    d = grid.d
    r = (grid.cellvol / unit_ball_volume(d)) ** (1.0 / d)
    ker[(0,) * d] = d * unit_ball_volume(d) * r ** (d - 1) / (d - 1) / grid.cellvol
    return ker


def kato_profile(vals: np.ndarray, grid: GridSpec) -> np.ndarray:
    """x -> sum_y |V(y)| / |x - y| * cellvol, by periodic FFT convolution."""
    ker = _kato_kernel(grid)
    conv = np.fft.ifftn(np.fft.fftn(np.abs(vals)) * np.fft.fftn(ker)).real
    return conv * grid.cellvol


def _require_3d(grid: GridSpec):
    if grid.d < 3:
        raise ValueError("Kato and L^{d/2} analysis needs d >= 3")


def kato_norm(v: PotentialSpec, grid: GridSpec, negative: bool = False) -> float:
    """sup_x int |V(y)| / |x - y| dy; ``negative=True`` uses V_- only."""
    _require_3d(grid)
    vals = v.negative_part(grid) if negative else v.values(grid)
    if not np.any(vals):
        return 0.0
    return float(np.max(kato_profile(vals, grid)))


def lhalf_norm(v: PotentialSpec, grid: GridSpec, negative: bool = False) -> float:
    """||V||_{L^{d/2}} (or ||V_-||_{L^{d/2}})."""
    _require_3d(grid)
    vals = v.negative_part(grid) if negative else v.values(grid)
    r = grid.d / 2
    return float((np.sum(np.abs(vals) ** r) * grid.cellvol) ** (1 / r))


@dataclass(frozen=True)
class AdmissibilityReport:
    kato_norm: float
    kato_norm_neg: float
    lhalf_norm: float
    lhalf_norm_neg: float
    threshold: float
    admissible: bool
    alpha_d: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def admissibility(v: PotentialSpec, grid: GridSpec) -> AdmissibilityReport:
    k = kato_norm(v, grid)
    kn = kato_norm(v, grid, negative=True)
    lh = lhalf_norm(v, grid)
    lhn = lhalf_norm(v, grid, negative=True)
    thr = kato_threshold(grid.d)
    ok = bool(np.isfinite(k) and np.isfinite(lh) and kn < thr)
    return AdmissibilityReport(k, kn, lh, lhn, thr, ok, unit_ball_volume(grid.d))


def default_well(grid: GridSpec, width: float = 2.0, fraction: float = 0.5) -> PotentialSpec:
    """Gaussian well whose negative-part Kato norm is ``fraction`` of the threshold.

    For d >= 3 the depth is calibrated on the grid itself (the Kato norm is
    homogeneous, so one evaluation suffices). Below three dimensions there is
    no threshold; the three-dimensional closed-form depth 1/width^2 (scaled by
    ``fraction / 0.5``) is used instead.
    """
    if grid is None or grid.d < 3:
        return gaussian_well(fraction / 0.5 / width**2, width)
    unit = kato_norm(gaussian_well(1.0, width), grid)
    return gaussian_well(fraction * kato_threshold(grid.d) / unit, width)


def warn_if_inadmissible(v: PotentialSpec, grid: GridSpec):
    if grid.d < 3 or v.is_zero:
        return
    rep = admissibility(v, grid)
    if not rep.admissible:
        warnings.warn(
            f"potential fails the Kato smallness condition "
            f"({rep.kato_norm_neg:.4g} >= {rep.threshold:.4g})",
            stacklevel=3,
        )
