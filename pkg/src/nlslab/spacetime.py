"""
Space-time norms on sampled trajectories.

Time integrals use the trapezoid rule on the snapshot times, space integrals
the cell-volume rule. Large exponents are evaluated after scaling by the
maximum modulus, so r = 4/eps = 400 is computed exactly without overflow.

Dyadic norms (each summed in l^2 over N):

    X_N(v) = N |v|_{L2 L4} + N |v|_{L3 L3} + N |v|_{L6 L12/5}
             + sum_l N^{-1/2+eps} |v|_{W_l^{4/(2-eps), 4/eps}}
    Y_N(F) = <N>^{1/3+3eps} |F|_{L3 L6} + |F|_{L6 L6}
             + sum_l N^{-1/6} |F|_{W_l^{4/(2-eps), 4/eps}}
             + sum_l <N>^{1/3+3eps} N^{1/2-eps} |P_{N,l} F|_{L_l^{4/eps, 4/(2-eps)}}
    G_N(h) <= min(N |h|_{L1 L2}, sum_l N^{1/2+eps} |h|_{L_l^{4/(4-eps), 4/(2+eps)}})

where v, F, h stand for the P_N pieces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .evolution import TrajectorySeries, free_trajectory
from .potential import PotentialSpec
from .spectral import GridSpec, SpectralField, directional_multiplier, dyadic_scales, lp_multiplier


@dataclass(frozen=True)
class NormConfig:
    eps: float = 0.01
    s_target: float = 0.5
    dyadic_band: tuple | None = None
    quadrature: str = "trapezoid"

    def __post_init__(self):
        if not 0 < self.eps <= 0.05:
            raise ValueError("eps must lie in (0, 0.05]")
        if 1 / 3 + 3 * self.eps > self.s_target + 1e-15:
            raise ValueError("need 1/3 + 3 eps <= s")

    def scales(self, grid: GridSpec) -> list[float]:
        return list(self.dyadic_band) if self.dyadic_band else dyadic_scales(grid)


@dataclass
class NormReport:
    kind: str
    per_dyadic: dict
    total: float
    interval: tuple
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "per_dyadic": {repr(float(n)): comp for n, comp in self.per_dyadic.items()},
            "total": self.total,
            "interval": list(self.interval),
            "notes": self.notes,
        }


def time_weights(times: np.ndarray) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if len(t) < 2:
        raise ValueError("need at least two snapshots")
    w = np.empty_like(t)
    w[0] = 0.5 * (t[1] - t[0])
    w[-1] = 0.5 * (t[-1] - t[-2])
    w[1:-1] = 0.5 * (t[2:] - t[:-2])
    return w


def _norm1d(a: np.ndarray, r: float, w) -> float:
    """(sum w a^r)^(1/r) for a nonnegative vector."""
    if r == np.inf:
        return float(a.max())
    top = float(a.max())
    if top == 0.0:
        return 0.0
    return float(top * np.sum(w * (a / top) ** r) ** (1 / r))


def _spatial_norms(vals: np.ndarray, r: float, grid: GridSpec) -> np.ndarray:
    """L^r_x norm of every snapshot."""
    a = np.abs(vals).reshape(len(vals), -1)
    if r == np.inf:
        return a.max(axis=1)
    top = a.max(axis=1, keepdims=True)
    safe = np.where(top > 0, top, 1.0)
    return top[:, 0] * (np.sum((a / safe) ** r, axis=1) * grid.cellvol) ** (1 / r)


def mixed_norm_array(vals: np.ndarray, times: np.ndarray, q: float, r: float, grid: GridSpec) -> float:
    return _norm1d(_spatial_norms(vals, r, grid), q, time_weights(times))


def mixed_strichartz_norm(tr: TrajectorySeries, q: float, r: float) -> float:
    """||u||_{L^q_t L^r_x} over the trajectory's interval."""
    if len(tr) < 2:
        raise ValueError("need at least two snapshots")
    return mixed_norm_array(tr.values, tr.times, q, r, tr.grid)


def _grad_abs(modes: np.ndarray, grid: GridSpec) -> np.ndarray:
    ax = grid.spatial_axes(1)
    acc = np.zeros(modes.shape)
    for k in grid.deriv_freqs:
        acc += np.abs(np.fft.ifftn(1j * k * modes, axes=ax)) ** 2
    return np.sqrt(acc)


def lateral_array(
    amp: np.ndarray,
    times: np.ndarray,
    p: float,
    q: float,
    ell: int,
    grid: GridSpec,
    grad_amp: np.ndarray | None = None,
) -> float:
    """Outer L^p over x_ell of inner L^q over (t, x').

    ``amp`` is |h| on (t, x); ``grad_amp`` (|grad h|) adds the W-space term.
    """
    if not 1 <= ell <= grid.d:
        raise ValueError(f"axis index must be in 1..{grid.d}, got {ell}")
    axis = ell  # axis 0 is time
    others = tuple(i for i in range(amp.ndim) if i != axis)
    if q == np.inf:
        inner = amp.max(axis=others)
        if grad_amp is not None:
            inner = np.maximum(inner, grad_amp.max(axis=others))
    else:
        top = amp.max()
        if grad_amp is not None:
            top = max(top, grad_amp.max())
        if top == 0:
            return 0.0
        wt = time_weights(times).reshape((-1,) + (1,) * grid.d) * grid.dx ** (grid.d - 1)
        s = (amp / top) ** q
        if grad_amp is not None:
            s = s + (grad_amp / top) ** q
        inner = top * np.sum(wt * s, axis=others) ** (1 / q)
    return _norm1d(inner, p, grid.dx)


def lateral_norm(tr: TrajectorySeries, p: float, q: float, ell: int, with_gradient: bool = False) -> float:
    """||h||_{L^{p,q}_{e_ell}} (or W^{p,q}_{e_ell} with ``with_gradient``)."""
    g = tr.grid
    if not 1 <= ell <= g.d:
        raise ValueError(f"axis index must be in 1..{g.d}, got {ell}")
    if len(tr) < 2:
        raise ValueError("need at least two snapshots")
    amp = np.abs(tr.values)
    grad = None
    if with_gradient:
        grad = _grad_abs(np.fft.fftn(tr.values, axes=g.spatial_axes(1)), g)
    return lateral_array(amp, tr.times, p, q, ell, g, grad)


# ---------------------------------------------------------------------------
# dyadic pieces
# ---------------------------------------------------------------------------


def _bracket(n: float) -> float:
    return float(np.sqrt(1 + n * n))


class _Piece:
    """A band-projected trajectory with lazily derived quantities."""

    def __init__(self, modes: np.ndarray, times: np.ndarray, grid: GridSpec):
        self.modes = modes
        self.times = times
        self.grid = grid
        self._vals = None
        self._amp = None
        self._grad = None

    @property
    def vals(self):
        if self._vals is None:
            self._vals = np.fft.ifftn(self.modes, axes=self.grid.spatial_axes(1))
        return self._vals

    @property
    def amp(self):
        if self._amp is None:
            self._amp = np.abs(self.vals)
        return self._amp

    @property
    def grad(self):
        if self._grad is None:
            self._grad = _grad_abs(self.modes, self.grid)
        return self._grad

    def mixed(self, q, r):
        return mixed_norm_array(self.vals, self.times, q, r, self.grid)

    def lateral(self, p, q, ell, with_gradient=False):
        return lateral_array(self.amp, self.times, p, q, ell, self.grid, self.grad if with_gradient else None)

    def directional(self, n, ell):
        mult = directional_multiplier(self.grid, float(n), ell)
        return _Piece(self.modes * mult, self.times, self.grid)


def x_components(piece: _Piece, n: float, eps: float) -> dict:
    d = piece.grid.d
    comp = {
        "L2L4": n * piece.mixed(2, 4),
        "L3L3": n * piece.mixed(3, 3),
        "L6L12/5": n * piece.mixed(6, 12 / 5),
    }
    for ell in range(1, d + 1):
        comp[f"W{ell}"] = n ** (-0.5 + eps) * piece.lateral(4 / (2 - eps), 4 / eps, ell, True)
    comp["total"] = float(sum(comp.values()))
    return comp


def y_components(piece: _Piece, n: float, eps: float) -> dict:
    d = piece.grid.d
    w = _bracket(n) ** (1 / 3 + 3 * eps)
    comp = {"L3L6": w * piece.mixed(3, 6), "L6L6": piece.mixed(6, 6)}
    for ell in range(1, d + 1):
        comp[f"W{ell}"] = n ** (-1 / 6) * piece.lateral(4 / (2 - eps), 4 / eps, ell, True)
    for ell in range(1, d + 1):
        dp = piece.directional(n, ell)
        comp[f"LS{ell}"] = w * n ** (0.5 - eps) * dp.lateral(4 / eps, 4 / (2 - eps), ell)
    comp["total"] = float(sum(comp.values()))
    return comp


def g_components(piece: _Piece, n: float, eps: float) -> dict:
    d = piece.grid.d
    b1 = n * piece.mixed(1, 2)
    b2 = sum(n ** (0.5 + eps) * piece.lateral(4 / (4 - eps), 4 / (2 + eps), ell) for ell in range(1, d + 1))
    return {"L1L2": b1, "lateral": float(b2), "total": float(min(b1, b2)), "upper_bound": True}


_COMPONENTS = {"X": x_components, "Y": y_components, "G": g_components}


def _dyadic_report(tr: TrajectorySeries, cfg: NormConfig, kind: str) -> NormReport:
    g = tr.grid
    if len(tr) < 2:
        raise ValueError("need at least two snapshots")
    modes = np.fft.fftn(tr.values, axes=g.spatial_axes(1))
    per = {}
    for n in cfg.scales(g):
        piece = _Piece(modes * lp_multiplier(g, float(n)), tr.times, g)
        per[float(n)] = _COMPONENTS[kind](piece, n, cfg.eps)
    total = float(np.sqrt(sum(c["total"] ** 2 for c in per.values())))
    notes = {"eps": cfg.eps}
    if kind == "G":
        notes["upper_bound"] = True
    return NormReport(kind, per, total, tr.interval, notes)


def x_norm(tr: TrajectorySeries, cfg: NormConfig = NormConfig()) -> NormReport:
    return _dyadic_report(tr, cfg, "X")


def y_norm(tr: TrajectorySeries, cfg: NormConfig = NormConfig()) -> NormReport:
    return _dyadic_report(tr, cfg, "Y")


def g_norm_upper(tr: TrajectorySeries, cfg: NormConfig = NormConfig()) -> NormReport:
    """Upper bound on G(I): the splitting infimum is replaced by the better pure branch."""
    return _dyadic_report(tr, cfg, "G")


def free_y_norm(
    f: SpectralField,
    horizon: float = 0.5,
    dt: float = 1 / 64,
    v: PotentialSpec | None = None,
    cfg: NormConfig = NormConfig(),
) -> float:
    """||e^{itH} f||_{Y([0, horizon])}."""
    n = int(round(horizon / dt))
    tr = free_trajectory(f, dt * np.arange(n + 1), v)
    return y_norm(tr, cfg).total


def divisibility_aggregate(values, r: float) -> float:
    """l^r norm of a finite sequence (for time-divisibility checks)."""
    a = np.abs(np.asarray(values, dtype=float))
    return _norm1d(a, r, 1.0)


def split_indices(n_snap: int, parts: int) -> list[tuple[int, int]]:
    """Consecutive index ranges sharing endpoints, covering 0..n_snap-1."""
    cuts = np.linspace(0, n_snap - 1, parts + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(cuts[:-1], cuts[1:])]


# ---------------------------------------------------------------------------
# trilinear estimates
# ---------------------------------------------------------------------------

# which inputs carry X (v) and which Y (F) norms
CASE_ROLES = {
    1: "XXX",
    2: "XYX",
    3: "XXY",
    4: "XYY",
    5: "YYY",
    6: "YXX",
    7: "YYX",
    8: "YXY",
}


def trilinear_bracket(case: int, n: float, n1: float, n2: float, n3: float, eps: float) -> float:
    """Frequency factor on the right-hand side of the trilinear estimate."""
    r32, r31, r21 = n3 / n2, n3 / n1, n2 / n1
    if case == 1:
        return n * (r32 ** (2 / 3) / n1 + r32 ** (1 / 3) + r31 ** (1 / 3) + r21 ** (1 / 3))
    if case == 2:
        return n * (r32 ** (1 / 3) / n1 + r32 ** (1 / 3) + r21 ** (2 / 3) + r21 ** (1 / 3))
    if case == 3:
        return n * (r32 ** (2 / 3) / n1 + r32 ** (2 / 3) + r21 ** (2 / 3) + r32)
    if case == 4:
        return n * (r32 ** (1 / 3) / n1 + r32 ** (1 / 3) + r21 ** (2 / 3) + r32)
    if case == 5:
        return (n / n1) ** (0.5 + eps) * r31 ** (1 / 6)
    if case == 6:
        return (n / n2) ** (0.5 + eps) * r32 ** (0.5 - eps)
    if case == 7:
        return (n / n3) ** (0.5 + eps) * r21 ** (1 / 6)
    if case == 8:
        return (n / n2) ** (0.5 + eps) * r32 ** (1 / 6)
    raise ValueError(f"case must be 1..8, got {case}")


def default_bands(grid: GridSpec) -> list[tuple]:
    """Four (N, N1, N2, N3) configurations around the middle of the dyadic band."""
    sc = dyadic_scales(grid)
    mid = sc[len(sc) // 2]
    return [
        (mid / 2, mid, mid / 2, mid / 4),
        (mid, mid, mid, mid / 2),
        (mid, 2 * mid, mid, mid / 2),
        (mid / 2, 2 * mid, 2 * mid, mid),
    ]


@dataclass
class TrilinearResult:
    case: int
    bands: tuple
    lhs: float
    rhs: float
    ratio: float
    defined: bool

    def row(self) -> tuple:
        return (self.case, *self.bands, self.lhs, self.rhs, self.ratio)


def trilinear_ratio(
    a: TrajectorySeries,
    b: TrajectorySeries,
    c: TrajectorySeries,
    bands: tuple,
    case: int,
    cfg: NormConfig = NormConfig(),
    ell: int | None = None,
) -> TrilinearResult:
    """Measured left side over the right side of one trilinear estimate.

    Cases 1-4 measure N ||P_N(prod)||_{L^1_t H^1_x}; cases 5-8 measure
    N^{1/2+eps} ||P_N(prod)||_{W_e^{4/(4-eps), 4/(2+eps)}} with e = e_ell
    (the worst axis when ``ell`` is None).
    """
    if case not in CASE_ROLES:
        raise ValueError(f"case must be 1..8, got {case}")
    n, n1, n2, n3 = (float(x) for x in bands)
    if not n1 >= n2 >= n3:
        raise ValueError("need N1 >= N2 >= N3")
    roles = CASE_ROLES[case]
    g = a.grid
    ax = g.spatial_axes(1)
    eps = cfg.eps
    pieces, norms = [], []
    for tr, nn, role in zip((a, b, c), (n1, n2, n3), roles):
        modes = np.fft.fftn(tr.values, axes=ax) * lp_multiplier(g, nn)
        pc = _Piece(modes, tr.times, g)
        pieces.append(pc)
        comp = x_components(pc, nn, eps) if role == "X" else y_components(pc, nn, eps)
        norms.append(comp["total"])
    prod = pieces[0].vals * pieces[1].vals * pieces[2].vals
    pm = np.fft.fftn(prod, axes=ax) * lp_multiplier(g, n)
    out = _Piece(pm, a.times, g)
    if case <= 4:
        h1 = np.sqrt(np.sum((1 + g.ksq) * np.abs(pm) ** 2, axis=ax) * g.cellvol / g.size)
        lhs = n * _norm1d(h1, 1, time_weights(a.times))
    else:
        axes = [ell] if ell else range(1, g.d + 1)
        lhs = max(n ** (0.5 + eps) * out.lateral(4 / (4 - eps), 4 / (2 + eps), e, True) for e in axes)
    rhs = trilinear_bracket(case, n, n1, n2, n3, eps) * float(np.prod(norms))
    if rhs == 0:
        # a vanishing input makes both sides vanish; only lhs > 0 is undefined
        if lhs == 0:
            return TrilinearResult(case, (n, n1, n2, n3), lhs, rhs, 0.0, True)
        return TrilinearResult(case, (n, n1, n2, n3), lhs, rhs, float("nan"), False)
    return TrilinearResult(case, (n, n1, n2, n3), lhs, rhs, lhs / rhs, True)
