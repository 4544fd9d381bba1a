"""
Normalized ground states of

    I(u) = 1/2 ||grad u||^2 + 1/2 int V u^2 - 1/q ||u||_q^q - 1/2* ||u||_{2*}^{2*}

on the mass sphere S(a) = {||u||_2^2 = a}, restricted to the gradient ball
||grad u||_2^2 < rho_0.

The lower bound I(u) >= ||grad u||^2 f(a, ||grad u||^2) combines the Sobolev
constant S and the Gagliardo-Nirenberg constant C_{d,q}; both are estimated
numerically here because only their existence is known in general.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .evolution import critical_exponent, mass
from .potential import PotentialSpec, lhalf_norm, zero
from .spectral import GridSpec, SpectralField, grad_norm_sq, lebesgue_norm

log = logging.getLogger(__name__)

GN_SAFETY = 0.01
SOBOLEV_SAFETY = 0.01


# ---------------------------------------------------------------------------
# inequality constants


def gn_beta(d: int, q: float) -> float:
    return d * (0.5 - 1.0 / q)


def gn_quotient(u: SpectralField, q: float) -> float:
    """||u||_q / (||grad u||_2^beta ||u||_2^(1-beta))."""
    b = gn_beta(u.grid.d, q)
    l2 = lebesgue_norm(u, 2)
    gn = np.sqrt(grad_norm_sq(u))
    return lebesgue_norm(u, q) / (gn**b * l2 ** (1 - b))


def sobolev_quotient(u: SpectralField) -> float:
    """||grad u||_2^2 / ||u||_{2*}^2."""
    return grad_norm_sq(u) / lebesgue_norm(u, critical_exponent(u.grid.d)) ** 2


def _neg_log_gn(x: np.ndarray, grid: GridSpec, q: float, beta: float, log_scale: float, pin: float):
    """-log(quotient) plus a penalty pinning log(||grad u||^2 / ||u||^2).

    The quotient is dilation invariant on R^d, so the penalty does not move
    the supremum; it stops the ascent from drifting to box-scale profiles,
    where torus effects (constants have zero gradient) inflate the quotient.
    """
    u = x.reshape(grid.shape)
    cv = grid.cellvol
    lap = np.fft.ifftn(grid.ksq * np.fft.fftn(u)).real
    top = np.max(np.abs(u))
    w = np.abs(u) / top
    sq = np.sum(w**q) * cv
    g2 = np.sum(u * lap) * cv
    l2 = np.sum(u * u) * cv
    val = np.log(top) + np.log(sq) / q - 0.5 * beta * np.log(g2) - 0.5 * (1 - beta) * np.log(l2)
    grad = w ** (q - 1) * np.sign(u) * cv / (sq * top) - beta * lap * cv / g2 - (1 - beta) * u * cv / l2
    dev = np.log(g2) - np.log(l2) - log_scale
    pgrad = 2 * pin * dev * (2 * lap * cv / g2 - 2 * u * cv / l2)
    return -val + pin * dev**2, (pgrad - grad).ravel()


def gn_constant_estimate(
    d: int,
    q: float,
    grid: GridSpec,
    width: float | None = None,
    max_iter: int = 500,
    safety: float = GN_SAFETY,
) -> float:
    """Estimate the optimal Gagliardo-Nirenberg constant C_{d,q}.

    The quotient is maximized over real grid functions by L-BFGS on its
    logarithm, starting from a centered Gaussian of the given ``width``
    (default L/8). The best quotient seen along the iterates is a lower bound
    for the optimum on this grid; it is returned multiplied by ``1 + safety``.

    Raises
    ------
    FloatingPointError
        if the ascent produced no finite iterate.
    """
    if grid.d != d:
        raise ValueError("grid dimension mismatch")
    upper = np.inf if d <= 2 else critical_exponent(d)
    if not 2 <= q < upper:
        raise ValueError(f"q must lie in [2, {upper}), got {q}")
    if q == 2:
        return 1.0
    beta = gn_beta(d, q)
    w = grid.half_len / 8 if width is None else width
    seed = np.exp(-(grid.radius**2) / (2 * w**2))
    best = [gn_quotient(SpectralField(grid, seed), q)]
    log_scale = np.log(d / (2 * w**2))

    def track(xk):
        val = gn_quotient(SpectralField(grid, xk.reshape(grid.shape)), q)
        if np.isfinite(val):
            best.append(val)

    res = minimize(
        _neg_log_gn,
        seed.ravel(),
        args=(grid, q, beta, log_scale, 10.0),
        jac=True,
        method="L-BFGS-B",
        callback=track,
        options={"maxiter": max_iter, "gtol": 1e-10, "ftol": 1e-14},
    )
    track(res.x)
    top = max(best)
    if not np.isfinite(top):
        raise FloatingPointError("Gagliardo-Nirenberg ascent diverged")
    return float(top * (1 + safety))


def _bubble(grid: GridSpec, sigma: float) -> SpectralField:
    d = grid.d
    e = -(d - 2) / 2
    edge = (1 + (grid.half_len / sigma) ** 2) ** e
    b = np.maximum((1 + (grid.radius / sigma) ** 2) ** e - edge, 0.0)
    return SpectralField(grid, b)


def sobolev_sweep(d: int, grid: GridSpec, n_sigma: int = 16) -> tuple[float, float, np.ndarray]:
    """Estimate S from truncated Aubin-Talenti bubbles.

    The bubble (1 + |x/sigma|^2)^(-(d-2)/2) is cut off at radius L so that
    it vanishes on the box faces. Cutting costs a relative O(sigma/L) in the
    quotient, and bubbles narrower than a few cells are under-resolved (their
    discrete quotient dips below S). The sweep therefore covers
    3 dx <= sigma <= L/4 and extrapolates a quadratic fit in sigma/L to 0.

    Returns
    -------
    (S, sigma_best, table)
        ``sigma_best`` is the sweep point with the smallest quotient;
        ``table`` has rows (sigma, quotient).
    """
    if d < 3:
        raise ValueError("Sobolev constant needs d >= 3")
    if grid.d != d:
        raise ValueError("grid dimension mismatch")
    # sweep in units of L so that the estimate is exactly scale invariant
    x = np.geomspace(3.0 / grid.m, 0.25, n_sigma)
    sig = grid.half_len * x
    vals = np.array([sobolev_quotient(_bubble(grid, s)) for s in sig])
    est = float(np.polyfit(x, vals, 2)[-1])
    if not 0 < est <= vals.min():
        raise FloatingPointError("Sobolev sweep is not monotone in sigma; refine the grid")
    i = int(np.argmin(vals))
    return est, float(sig[i]), np.column_stack([sig, vals])


def sobolev_constant_estimate(d: int, grid: GridSpec) -> float:
    return sobolev_sweep(d, grid)[0]


@dataclass(frozen=True)
class InequalityConstants:
    """Constants entering the energy lower bound.

    ``sobolev_S`` is used as given (callers apply any deflation before
    construction); ``gn_C`` likewise.
    """

    sobolev_S: float
    gn_C: float
    d: int
    q: float
    notes: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.sobolev_S > 0 or not self.gn_C > 0:
            raise ValueError("constants must be positive")
        if not 2 < self.q < 2 + 4 / self.d:
            raise ValueError(f"q must lie in (2, 2 + 4/d), got {self.q}")

    @property
    def beta(self) -> float:
        return gn_beta(self.d, self.q)

    @property
    def pstar(self) -> float:
        return critical_exponent(self.d)

    @classmethod
    def estimate(cls, grid: GridSpec, q: float) -> InequalityConstants:
        """Inflated GN constant and deflated Sobolev constant for this grid."""
        s_raw, sig, _ = sobolev_sweep(grid.d, grid)
        c = gn_constant_estimate(grid.d, q, grid)
        notes = {
            "sobolev_raw": s_raw,
            "sobolev_sigma": sig,
            "sobolev_safety": SOBOLEV_SAFETY,
            "gn_safety": GN_SAFETY,
        }
        return cls(s_raw * (1 - SOBOLEV_SAFETY), c, grid.d, q, notes)

    def to_dict(self) -> dict:
        return {"sobolev_S": self.sobolev_S, "gn_C": self.gn_C, "beta": self.beta, "d": self.d, "q": self.q, **self.notes}


# ---------------------------------------------------------------------------
# the auxiliary function f(a, rho) and its closed-form extremals


def headroom(c: InequalityConstants, vneg: float) -> float:
    return 0.5 * (1 - vneg / c.sobolev_S)


def f_aux(a, rho, c: InequalityConstants, vneg: float):
    d, q, ps, S = c.d, c.q, c.pstar, c.sobolev_S
    mid = c.gn_C**q / q * np.power(a, (2 * q - d * (q - 2)) / 4) * np.power(rho, (d * (q - 2) - 4) / 4)
    crit = np.power(rho, (ps - 2) / 2) / (ps * S ** (ps / 2))
    return headroom(c, vneg) - mid - crit


def _rho_coeff(c: InequalityConstants) -> tuple[float, float]:
    """(base, D) with rho_a = base^(4/D) a^((2q - d(q-2))/D)."""
    d, q = c.d, c.q
    base = d * (4 - d * (q - 2)) * c.gn_C**q * c.sobolev_S ** (c.pstar / 2) / (4 * q)
    return base, 2 * c.pstar - d * (q - 2)


def rho_max(a, c: InequalityConstants):
    """Unique maximizer of rho -> f(a, rho)."""
    base, D = _rho_coeff(c)
    return base ** (4 / D) * np.power(a, (2 * c.q - c.d * (c.q - 2)) / D)


def k_const(c: InequalityConstants) -> float:
    """K with max_rho f(a, rho) = headroom - K a^(2/d)."""
    d, q, ps, S = c.d, c.q, c.pstar, c.sobolev_S
    base, D = _rho_coeff(c)
    t1 = c.gn_C**q / q * base ** ((d * (q - 2) - 4) / D)
    t2 = base ** (2 * (ps - 2) / D) / (ps * S ** (ps / 2))
    return float(t1 + t2)


def a_zero(c: InequalityConstants, vneg: float) -> tuple[float, float]:
    """(K, a0) where a0 is the root of a -> max_rho f(a, rho).

    The root of headroom - K a^(2/d) is (headroom / K)^(d/2).
    """
    K = k_const(c)
    h = headroom(c, vneg)
    if h <= 0:
        warnings.warn("no headroom: ||V_-||_{d/2} >= S, a0 = 0", stacklevel=2)
        return K, 0.0
    return K, float((h / K) ** (c.d / 2))


@dataclass(frozen=True)
class GroundStateConstants:
    K: float
    a0: float
    rho0: float
    vneg_lhalf: float
    headroom: float
    ineq: InequalityConstants

    def rho_a(self, a):
        return rho_max(a, self.ineq)

    @classmethod
    def build(cls, c: InequalityConstants, v: PotentialSpec, grid: GridSpec) -> GroundStateConstants:
        vneg = lhalf_norm(v, grid, negative=True) if not v.is_zero else 0.0
        K, a0 = a_zero(c, vneg)
        rho0 = float(rho_max(a0, c)) if a0 > 0 else 0.0
        return cls(K, a0, rho0, vneg, headroom(c, vneg), c)

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "a0": self.a0,
            "rho0": self.rho0,
            "vneg_lhalf": self.vneg_lhalf,
            "headroom": self.headroom,
            "inequality_constants": self.ineq.to_dict(),
        }


# ---------------------------------------------------------------------------
# energy and local minimization


@dataclass(frozen=True)
class Functional:
    """I(u) for fixed potential values and exponents."""

    grid: GridSpec
    vvals: np.ndarray
    q: float
    critical: bool = True

    @property
    def pstar(self) -> float:
        return critical_exponent(self.grid.d)

    def parts(self, u: np.ndarray) -> dict:
        g = self.grid
        cv = g.cellvol
        m = np.fft.fftn(u)
        a2 = np.abs(u) ** 2
        out = {
            "kinetic": float(np.sum(g.ksq * np.abs(m) ** 2) * cv / g.size),
            "potential": float(np.sum(self.vvals * a2) * cv),
            "subcritical": float(np.sum(a2 ** (self.q / 2)) * cv),
            "critical": float(np.sum(a2 ** (self.pstar / 2)) * cv) if self.critical else 0.0,
        }
        out["energy"] = (
            0.5 * out["kinetic"]
            + 0.5 * out["potential"]
            - out["subcritical"] / self.q
            - (out["critical"] / self.pstar if self.critical else 0.0)
        )
        return out

    def energy(self, u: np.ndarray) -> float:
        return self.parts(u)["energy"]

    def nonlinear(self, u: np.ndarray) -> np.ndarray:
        a = np.abs(u)
        out = a ** (self.q - 2) * u
        if self.critical:
            out = out + a ** (self.pstar - 2) * u
        return out

    def linear(self, u: np.ndarray) -> np.ndarray:
        """-Delta u + V u."""
        return np.fft.ifftn(self.grid.ksq * np.fft.fftn(u)).real + self.vvals * u

    def gradient(self, u: np.ndarray) -> np.ndarray:
        return self.linear(u) - self.nonlinear(u)


def energy_functional(u: SpectralField, v: PotentialSpec | None, q: float, critical: bool = True) -> float:
    g = u.grid
    return Functional(g, (v or zero()).values(g), q, critical).energy(u.values.real)


def multiplier_fit(u: np.ndarray, fn: Functional) -> tuple[float, float]:
    """Least-squares lambda in -Delta u + V u - N(u) = lambda u and the
    relative residual ||. - lambda u||_2 / ||u||_{H^1}."""
    g = fn.grid
    cv = g.cellvol
    r0 = fn.gradient(u)
    lam = float(np.sum(r0 * u) / np.sum(u * u))
    res = r0 - lam * u
    m = np.fft.fftn(u)
    h1 = np.sqrt(np.sum((1 + g.ksq) * np.abs(m) ** 2) * cv / g.size)
    return lam, float(np.sqrt(np.sum(res**2) * cv) / h1)


@dataclass(frozen=True)
class MinimizeOptions:
    tol: float = 1e-7
    max_iter: int = 20000
    seed_width: float = 3.0
    tau0: float = 1.0
    precond_shift: float | None = None
    memory: str = "cg"


@dataclass
class GroundStateResult:
    u_a: SpectralField
    m_a: float
    lam: float
    grad_norm_sq: float
    iterations: list
    residual: float
    converged: bool
    a: float
    rho0: float
    flags: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "a": self.a,
            "m_a": self.m_a,
            "lambda": self.lam,
            "grad_norm_sq": self.grad_norm_sq,
            "rho0": self.rho0,
            "residual": self.residual,
            "converged": self.converged,
            "n_iterations": len(self.iterations),
            "mass": mass(self.u_a),
            "flags": self.flags,
        }


def radial_seed(grid: GridSpec, a: float, width: float) -> np.ndarray:
    u = np.exp(-(grid.radius**2) / (2 * width**2))
    return u * np.sqrt(a / (np.sum(u * u) * grid.cellvol))


def minimize_local(
    a: float,
    consts: GroundStateConstants,
    v: PotentialSpec | None,
    grid: GridSpec,
    opts: MinimizeOptions = MinimizeOptions(),
    q: float | None = None,
    critical: bool = True,
) -> GroundStateResult:
    """Local minimizer of I on S(a) inside the gradient ball B_{rho0}.

    Preconditioned projected descent: the L2 gradient of I is projected to
    the tangent space of S(a), preconditioned by (c - Delta)^-1, combined
    with the previous direction (Polak-Ribiere, restarted when it is not a
    descent direction), and the step is retracted to S(a) by rescaling.
    Steps backtrack while I would increase (Armijo) or ||grad u||^2 would
    reach rho0. Once energy differences reach roundoff, the approximate Wolfe
    test of Hager and Zhang (slope at the trial point) replaces Armijo. The
    iteration stops once the relative residual of the stationary equation
    falls below ``opts.tol``.
    """
    q = consts.ineq.q if q is None else q
    if not 0 < a < consts.a0:
        raise ValueError(f"mass must lie in (0, a0 = {consts.a0:.6g}), got {a}")
    v = v or zero()
    fn = Functional(grid, v.values(grid), q, critical)
    cv = grid.cellvol
    rho0 = consts.rho0

    def inner(x, y):
        return float(np.sum(x * y) * cv)

    def retract(x):
        return x * np.sqrt(a / inner(x, x))

    def kinetic(x):
        return float(np.sum(grid.ksq * np.abs(np.fft.fftn(x)) ** 2) * cv / grid.size)

    u = retract(radial_seed(grid, a, opts.seed_width))
    if kinetic(u) >= rho0:
        raise ValueError("seed lies outside the gradient ball; widen it")
    e = fn.energy(u)
    log_rows = []
    flags = {}
    direction = prev_pr = prev_r = None
    tau = opts.tau0
    converged = False
    lam, resid = multiplier_fit(u, fn)
    shift = opts.precond_shift
    for it in range(opts.max_iter):
        gr = fn.gradient(u)
        lam = inner(gr, u) / a
        r = gr - lam * u
        lam, resid = multiplier_fit(u, fn)
        log_rows.append((it, e, lam, resid, tau))
        if resid < opts.tol:
            converged = True
            break
        c = shift if shift is not None else max(abs(lam), 1e-3)
        pr = np.fft.ifftn(np.fft.fftn(r) / (c + grid.ksq)).real
        pr = pr - inner(pr, u) / a * u
        dirn = -pr
        if direction is not None and opts.memory == "cg":
            beta = max(0.0, inner(r, pr - prev_pr) / inner(prev_r, prev_pr))
            cand = -pr + beta * (direction - inner(direction, u) / a * u)
            if inner(cand, r) < 0:
                dirn = cand
        slope = inner(dirn, r)
        accepted = False
        t = tau
        for _ in range(60):
            trial = retract(u + t * dirn)
            kin = kinetic(trial)
            if kin < rho0:
                et = fn.energy(trial)
                if et <= e + 1e-4 * t * slope:
                    accepted = True
                    break
                if abs(et - e) <= 1e-12 * abs(e):
                    # energy change at roundoff level: approximate Wolfe test on the slope
                    gt = fn.gradient(trial)
                    dslope = inner(gt - inner(gt, trial) / a * trial, dirn)
                    if 0.9 * slope <= dslope <= -0.8 * slope:
                        accepted = True
                        break
            t *= 0.5
        if not accepted:
            if kinetic(u) > 0.99 * rho0:
                flags["boundary_stall"] = True
            else:
                flags["line_search_stall"] = True
            log.warning("line search stalled at iteration %d (residual %.3g)", it, resid)
            break
        u, e = trial, et
        direction, prev_pr, prev_r = dirn, pr, r
        tau = min(4 * t, 1e3) if t == tau else t
    res = GroundStateResult(
        SpectralField(grid, u),
        float(fn.energy(u)),
        float(lam),
        kinetic(u),
        log_rows,
        float(resid),
        converged,
        float(a),
        rho0,
        flags,
    )
    return res


def m_curve(
    a_list,
    consts: GroundStateConstants,
    v: PotentialSpec | None,
    grid: GridSpec,
    opts: MinimizeOptions = MinimizeOptions(),
    widths=(2.0, 3.0, 4.5),
    critical: bool = True,
) -> list[dict]:
    """m(a) for each mass, best of a multi-start over seed widths.

    Each row carries the per-seed energies so that agreement of the
    multi-start can be checked, and ``refine`` is set when some start failed
    to converge.
    """
    rows = []
    for a in a_list:
        runs = []
        for w in widths:
            o = MinimizeOptions(opts.tol, opts.max_iter, w, opts.tau0, opts.precond_shift, opts.memory)
            try:
                runs.append(minimize_local(a, consts, v, grid, o, critical=critical))
            except ValueError as exc:
                log.warning("start width %g skipped: %s", w, exc)
        if not runs:
            raise RuntimeError(f"no admissible start for a = {a}")
        best = min(runs, key=lambda r: r.m_a)
        rows.append(
            {
                "a": float(a),
                "m": best.m_a,
                "lambda": best.lam,
                "gradnormsq": best.grad_norm_sq,
                "converged": best.converged,
                "residual": best.residual,
                "starts": [r.m_a for r in runs],
                "refine": not all(r.converged for r in runs),
                "result": best,
            }
        )
    return rows
