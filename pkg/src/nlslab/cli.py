"""
Command-line front end.

    nlslab COMMAND [--config PATH] [--seed N] [--out DIR] [--quiet]

Every run writes ``config.json`` (the fully materialized configuration),
its artifacts, and ``manifest.json`` into the output directory. Exit status
is 0 on success, 2 on a validation error and 3 on a numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from . import config as cfgmod
from . import snapshot
from .evolution import EvolveConfig, conservation_series, free_trajectory, nls_evolve
from .groundstate import GroundStateConstants, InequalityConstants, MinimizeOptions, m_curve, minimize_local
from .picard import PicardConfig, continuation_scan, picard_solve
from .potential import PotentialSpec, admissibility, from_config
from .randomization import RandomSeedPlan, fit_tail, profile, randomize, tail_diagnostic, unit_energy
from .spacetime import NormConfig, default_bands, free_y_norm, g_norm_upper, trilinear_ratio, x_norm, y_norm
from .spectral import GridSpec, SpectralField, make_grid
from .stability import (
    PerturbationSpec,
    almost_sure_stability_experiment,
    perturbation_compare,
    run_many,
    standing_wave_config,
)

log = logging.getLogger("nlslab")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


class NumericalFailure(RuntimeError):
    """A run finished but its numerical contract failed (exit status 3)."""


class Run:
    """Output directory, artifact bookkeeping and per-run seeds."""

    def __init__(self, command: str, cfg: dict, out: Path):
        self.command = command
        self.cfg = cfg
        self.out = out
        self.artifacts: list[str] = []
        self.seeds: dict = {}
        self.summary: dict = {}
        self.partial = False

    def path(self, name: str) -> Path:
        p = (self.out / name).resolve()
        if self.out.resolve() not in p.parents:
            raise cfgmod.ConfigError(f"artifact {name!r} would leave the output directory")
        return p

    def seed(self, label: str) -> int:
        s = cfgmod.derive_seed(self.cfg["seed"], f"{self.command}/{label}")
        self.seeds[label] = s
        return s

    def write_text(self, name: str, text: str):
        self.path(name).write_text(text)
        self.artifacts.append(name)

    def write_json(self, name: str, obj):
        self.write_text(name, cfgmod.dumps(obj))

    def write_csv(self, name: str, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])
        self.write_text(name, buf.getvalue())

    def write_field(self, name: str, f: SpectralField, t: float = 0.0):
        snapshot.write(self.path(name), f, t)
        self.artifacts.append(name)


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


# ---------------------------------------------------------------------------
# builders shared by the commands


def grid_of(cfg: dict) -> GridSpec:
    g = cfg["grid"]
    return make_grid(g["d"], g["m"], g["half_len"])


def potential_of(cfg: dict, grid: GridSpec) -> PotentialSpec:
    return from_config(cfg["potential"], grid)


def norms_of(cfg: dict) -> NormConfig:
    n = dict(cfg["norms"])
    if n["dyadic_band"] is not None:
        n["dyadic_band"] = tuple(n["dyadic_band"])
    return NormConfig(**n)


def evolve_of(cfg: dict) -> EvolveConfig:
    e = {k: v for k, v in cfg["evolve"].items() if k != "horizon"}
    return EvolveConfig(**e)


def picard_of(cfg: dict) -> PicardConfig:
    p = dict(cfg["picard"])
    p["interval"] = tuple(p["interval"])
    return PicardConfig(**p)


def datum_of(cfg: dict, grid: GridSpec) -> SpectralField:
    d = cfg["datum"]
    if d["path"] is not None:
        f, _ = snapshot.read(d["path"])
        if f.grid != grid:
            raise cfgmod.ConfigError("datum snapshot lives on a different grid")
        return f
    return profile(grid, d["kind"], d["amplitude"], d["width"], d["s"], d["kcut"], d["momentum"])


def _times(horizon: float, dt: float) -> np.ndarray:
    n = int(round(horizon / dt))
    if n < 1:
        raise cfgmod.ConfigError("horizon shorter than one step")
    return dt * np.arange(n + 1)


def workers() -> int:
    try:
        return max(1, int(os.environ.get("NLSLAB_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# commands


def cmd_randomize(run: Run):
    cfg, blk = run.cfg, run.cfg["experiment"]
    g = grid_of(cfg)
    f = datum_of(cfg, g)
    run.write_field("profile.nlsf", f)
    norms = []
    for i in range(blk["n_samples"]):
        fw = randomize(f, RandomSeedPlan(run.seed(f"sample{i}"), blk["law"]))
        run.write_field(f"omega_{i:03d}.nlsf", fw)
        norms.append(float(np.sqrt(np.sum(np.abs(fw.values) ** 2) * g.cellvol)))
    run.summary = {"unit_energy": unit_energy(f), "l2_samples": norms}
    run.write_json("randomize.json", run.summary)


def cmd_taildiag(run: Run):
    cfg, blk = run.cfg, run.cfg["experiment"]
    g = grid_of(cfg)
    v = potential_of(cfg, g)
    ncfg = norms_of(cfg)
    f = datum_of(cfg, g) * blk["amplitude"]

    def norm_eval(x):
        return free_y_norm(x, blk["horizon"], blk["dt"], v, ncfg)

    rep = tail_diagnostic(f, norm_eval, [], blk["n"], run.seed("samples"))
    lam = blk["lambdas"]
    if lam is None:
        # thresholds between the median and the 98th percentile of the sample
        lam = np.linspace(*np.percentile(rep.samples, [50, 98]), 12).tolist()
    rep = fit_tail(rep.samples, lam)
    run.write_json("tail_report.json", rep.to_dict())
    run.write_csv("tail_samples.csv", ["sample", "y_norm"], enumerate(rep.samples))
    run.summary = {"fitted_slope": rep.fitted_slope, "r_squared": rep.r_squared, "degenerate": rep.degenerate}


def cmd_evolve(run: Run):
    cfg = run.cfg
    g = grid_of(cfg)
    v = potential_of(cfg, g)
    ecfg = evolve_of(cfg)
    u0 = datum_of(cfg, g)
    tr = nls_evolve(u0, ecfg, v, cfg["evolve"]["horizon"])
    index = []
    for i, (t, f) in enumerate(zip(tr.times, tr.fields)):
        name = f"snap_{i:04d}.nlsf"
        run.write_field(name, f, float(t))
        index.append({"t": float(t), "file": name})
    run.write_json("snapshots.json", {"grid": cfg["grid"], "snapshots": index, "flags": tr.flags})
    rows = conservation_series(tr, ecfg, v)
    run.write_csv("conservation.csv", ["t", "mass", "energy"], rows.tolist())
    m, e = rows[:, 1], rows[:, 2]
    run.summary = {
        "mass_drift": float(np.max(np.abs(m - m[0])) / m[0]) if m[0] else 0.0,
        "energy_drift": float(np.max(np.abs(e - e[0])) / max(abs(e[0]), 1e-300)),
        "blowup_suspect": bool(tr.flags.get("blowup_suspect")),
    }
    if tr.flags.get("blowup_suspect"):
        run.partial = True
        raise NumericalFailure("blowup suspected; trajectory truncated")


def _free_of_datum(run: Run, horizon: float, dt: float, label: str, randomized: bool = True):
    cfg = run.cfg
    g = grid_of(cfg)
    v = potential_of(cfg, g)
    f = datum_of(cfg, g)
    if randomized:
        f = randomize(f, RandomSeedPlan(run.seed(label)))
    return free_trajectory(f, _times(horizon, dt), v)


def cmd_norms(run: Run):
    e = run.cfg["experiment"]
    tr = _free_of_datum(run, e["horizon"], e["dt"], "datum", e["randomized"])
    ncfg = norms_of(run.cfg)
    reps = [x_norm(tr, ncfg), y_norm(tr, ncfg), g_norm_upper(tr, ncfg)]
    run.write_json("norms.json", [r.to_dict() for r in reps])
    run.summary = {r.kind: r.total for r in reps}


def cmd_trilinear(run: Run):
    e = run.cfg["experiment"]
    g = grid_of(run.cfg)
    trs = [_free_of_datum(run, e["horizon"], e["dt"], f"factor{j}") for j in range(3)]
    bands = [tuple(b) for b in e["bands"]] if e["bands"] else default_bands(g)
    ncfg = norms_of(run.cfg)
    rows = []
    for case in e["cases"]:
        for b in bands:
            rows.append(trilinear_ratio(*trs, b, int(case), ncfg).row())
    run.write_csv("trilinear.csv", ["case", "N", "N1", "N2", "N3", "lhs", "rhs", "ratio"], rows)
    ratios = [r[-1] for r in rows]
    run.summary = {"max_ratio": float(np.nanmax(ratios)), "all_finite": bool(np.all(np.isfinite(ratios)))}
    if not run.summary["all_finite"]:
        raise NumericalFailure("non-finite trilinear ratio")


def cmd_picard(run: Run):
    cfg, exp = run.cfg, run.cfg["experiment"]
    g = grid_of(cfg)
    v = potential_of(cfg, g)
    pcfg = picard_of(cfg)
    ncfg = norms_of(cfg)
    f = datum_of(cfg, g) * exp["amplitude"]
    if exp["randomized"]:
        f = randomize(f, RandomSeedPlan(run.seed("datum")))
    t0, t1 = pcfg.interval
    F = free_trajectory(f, pcfg.times - t0, v)
    res = picard_solve(SpectralField.zeros(g), F, v, pcfg, ncfg)
    # independent split-step oracle for u = F + v
    ocfg = EvolveConfig(dt=pcfg.dt, nonlinearity="cubic", sigma=pcfg.sigma, snapshot_every=10**9)
    oT = nls_evolve(f, ocfg, v, t1 - t0).values[-1]
    uT = res.u.values[-1]
    rel = float(np.linalg.norm(uT - oT) / max(np.linalg.norm(oT), 1e-300))
    out = res.summary()
    out["oracle_rel_l2"] = rel
    if exp["scan"]:
        out["continuation"] = continuation_scan(f, v, pcfg, ncfg, t_max=exp["t_max"])
    run.write_json("picard.json", out)
    run.write_field("u.nlsf", res.u.at(-1), float(t1))
    run.write_field("v.nlsf", res.v.at(-1), float(t1))
    run.summary = {
        "gate_values": out["gate_values"],
        "converged": res.converged,
        "max_contraction": max(res.contraction_factors, default=0.0),
        "residual": res.residual,
        "oracle_rel_l2": rel,
    }
    if not res.converged:
        raise NumericalFailure("Picard iteration did not converge")


def ground_state(cfg: dict, blk: dict):
    g = grid_of(cfg)
    v = potential_of(cfg, g)
    ineq = InequalityConstants.estimate(g, blk["q"])
    consts = GroundStateConstants.build(ineq, v, g)
    if consts.a0 <= 0:
        raise NumericalFailure("no admissible mass range (a0 = 0)")
    a = blk["a_fraction"] * consts.a0
    path = blk.get("profile_path")
    if path:
        u, _ = snapshot.read(path)
        return g, v, consts, u, None
    opts = MinimizeOptions(tol=blk.get("tol", 1e-9), max_iter=blk.get("max_iter", 20000), seed_width=blk.get("seed_width", 3.0))
    res = minimize_local(a, consts, v, g, opts, critical=blk["critical"])
    return g, v, consts, res.u_a, res


def cmd_groundstate(run: Run):
    blk = run.cfg["experiment"]
    g, v, consts, u, res = ground_state(run.cfg, blk)
    out = {"result": res.summary(), "constants": consts.to_dict(), "potential": v.describe(),
           "admissibility": admissibility(v, g).to_dict() if g.d >= 3 else None}
    run.write_json("groundstate.json", out)
    run.write_field("u_a.nlsf", res.u_a)
    run.summary = {"a": res.a, "m_a": res.m_a, "lambda": res.lam, "residual": res.residual, "converged": res.converged,
                   "a0": consts.a0, "rho0": consts.rho0}
    if not res.converged:
        run.partial = True
        raise NumericalFailure(f"ground state did not converge (flags {res.flags})")


def cmd_mcurve(run: Run):
    blk = run.cfg["experiment"]
    g = grid_of(run.cfg)
    v = potential_of(run.cfg, g)
    ineq = InequalityConstants.estimate(g, blk["q"])
    consts = GroundStateConstants.build(ineq, v, g)
    a_list = [fr * consts.a0 for fr in blk["a_fractions"]]
    rows = m_curve(a_list, consts, v, g, MinimizeOptions(tol=blk["tol"]), widths=blk["widths"], critical=blk["critical"])
    run.write_csv(
        "mcurve.csv",
        ["a", "m", "lambda", "gradnormsq", "converged"],
        [(r["a"], r["m"], r["lambda"], r["gradnormsq"], r["converged"]) for r in rows],
    )
    run.summary = {
        "a0": consts.a0,
        "table": [{k: r[k] for k in ("a", "m", "lambda", "converged", "starts", "refine")} for r in rows],
    }
    run.write_json("mcurve.json", run.summary)
    if not all(r["converged"] for r in rows):
        run.partial = True
        raise NumericalFailure("some m(a) points did not converge")


def _trace_outputs(run: Run, traces, labels):
    run.write_json("traces.json", [t.to_dict() for t in traces])
    run.write_csv("summary.csv", ["sample", "max_dist", "verdict"], [(lab, t.max_dist, t.verdict) for lab, t in zip(labels, traces)])


def cmd_stability(run: Run):
    blk = run.cfg["experiment"]
    g, v, consts, u, _ = ground_state(run.cfg, blk)
    ecfg = standing_wave_config(blk["q"], blk["dt"], blk["sample_dt"], blk["critical"])
    jobs, labels = [], []
    if blk["include_unperturbed"]:
        jobs.append((u, None, blk["horizon"], ecfg, v, blk["budget_factor"]))
        labels.append("unperturbed")
    for i in range(blk["n"]):
        sd = run.seed(f"direction{i}")
        jobs.append((u, PerturbationSpec("deterministic_H1", blk["delta"], sd), blk["horizon"], ecfg, v, blk["budget_factor"]))
        labels.append(str(i))
    traces = run_many(jobs, workers())
    _trace_outputs(run, traces, labels)
    run.summary = {
        "verdicts": {lab: t.verdict for lab, t in zip(labels, traces)},
        "max_dist": max(t.max_dist for t, lab in zip(traces, labels) if lab != "unperturbed") if blk["n"] else None,
        "stationary_max_dist": traces[0].max_dist if blk["include_unperturbed"] else None,
        "budget": blk["budget_factor"] * blk["delta"],
    }


def cmd_asstability(run: Run):
    blk = run.cfg["experiment"]
    g, v, consts, u, _ = ground_state(run.cfg, blk)
    ecfg = standing_wave_config(blk["q"], blk["dt"], blk["sample_dt"], blk["critical"])
    traces, summ = almost_sure_stability_experiment(
        u, blk["s"], blk["delta"], blk["n"], ecfg, v, blk["horizon"], run.seed("samples"), blk["budget_factor"], workers()
    )
    _trace_outputs(run, traces, [str(i) for i in range(len(traces))])
    run.write_json("asstability.json", summ)
    run.summary = summ


def cmd_perturb(run: Run):
    cfg, blk = run.cfg, run.cfg["experiment"]
    g = grid_of(cfg)
    v = potential_of(cfg, g)
    pcfg = picard_of(cfg)
    ncfg = norms_of(cfg)
    base = datum_of(cfg, g)
    u0 = base * blk["amplitude"]
    fw = randomize(base, RandomSeedPlan(run.seed("forcing")))
    recs = []
    for i, c in enumerate(blk["forcing_scales"]):
        F = free_trajectory(fw * c, pcfg.times - pcfg.interval[0], v)
        sup_h1, xd, info = perturbation_compare(u0, F, v, pcfg, ncfg)
        recs.append({"sample": i, "forcing_scale": c, "sup_h1_diff": sup_h1, "x_diff": xd, **info})
    run.write_json("perturb.json", recs)
    run.write_csv("summary.csv", ["sample", "max_dist", "verdict"], [(r["sample"], r["sup_h1_diff"], "finite" if np.isfinite(r["sup_h1_diff"]) else "nonfinite") for r in recs])
    run.summary = {"records": [{k: r[k] for k in ("forcing_scale", "sup_h1_diff", "x_diff", "forcing_y")} for r in recs]}


# ---------------------------------------------------------------------------
# report


def build_report(manifest_paths) -> tuple[str, list]:
    """Markdown summary and CSV rows (command, run, key, value)."""
    import json

    lines = ["# nlslab run report", ""]
    rows = []
    groups: dict = {}
    for p in manifest_paths:
        p = Path(p)
        try:
            man = json.loads(p.read_text())
        except (OSError, ValueError):
            groups.setdefault("(unreadable)", []).append((p, None))
            continue
        groups.setdefault(man.get("command", "?"), []).append((p, man))
    for cmd in sorted(groups):
        lines += [f"## {cmd}", ""]
        for p, man in groups[cmd]:
            if man is None:
                lines += [f"- `{p}`: manifest absent or unreadable", ""]
                rows.append((cmd, str(p), "status", "absent"))
                continue
            status = man.get("status")
            lines.append(f"- `{p}`: status {status}, partial {man.get('partial')}")
            missing = [a for a in man.get("artifacts", []) if not (p.parent / a).exists()]
            for a in missing:
                lines.append(f"  - artifact absent: `{a}`")
                rows.append((cmd, str(p), "absent_artifact", a))
            summ = man.get("summary", {})
            if cmd == "groundstate" and summ:
                lines += ["", "| a | m(a) | lambda |", "|---|---|---|", f"| {summ.get('a'):.6g} | {summ.get('m_a'):.6g} | {summ.get('lambda'):.6g} |"]
            elif cmd == "mcurve" and summ:
                lines += ["", "| a | m(a) | lambda | converged |", "|---|---|---|---|"]
                lines += [f"| {r['a']:.6g} | {r['m']:.6g} | {r['lambda']:.6g} | {r['converged']} |" for r in summ.get("table", [])]
            else:
                for k in sorted(summ):
                    val = summ[k]
                    if isinstance(val, (dict, list)):
                        val = json.dumps(val, sort_keys=True)
                    lines.append(f"  - {k}: {val}")
            for k in sorted(summ):
                val = summ[k]
                rows.append((cmd, str(p), k, json.dumps(val, sort_keys=True) if isinstance(val, (dict, list)) else val))
            lines.append("")
    return "\n".join(lines) + "\n", rows


def cmd_report(run: Run):
    paths = list(run.cfg["experiment"]["manifests"])
    md, rows = build_report(paths)
    run.write_text("report.md", md)
    run.write_csv("report.csv", ["command", "manifest", "key", "value"], rows)
    run.summary = {"n_manifests": len(paths)}


HANDLERS = {
    "randomize": cmd_randomize,
    "taildiag": cmd_taildiag,
    "evolve": cmd_evolve,
    "norms": cmd_norms,
    "trilinear": cmd_trilinear,
    "picard": cmd_picard,
    "groundstate": cmd_groundstate,
    "mcurve": cmd_mcurve,
    "stability": cmd_stability,
    "asstability": cmd_asstability,
    "perturb": cmd_perturb,
    "report": cmd_report,
}


# ---------------------------------------------------------------------------


def _versions() -> dict:
    try:
        own = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"nlslab": own, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


def parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nlslab", description="Spectral NLS laboratory runner.")
    p.add_argument("command", choices=cfgmod.COMMANDS)
    p.add_argument("manifests", nargs="*", help="manifest paths (report only)")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", type=int, help="override the global seed")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--quiet", action="store_true", help="only log warnings")
    return p


def prepare(command: str, given: dict, seed: int | None = None, out: str | None = None, manifests=()) -> dict:
    given = dict(given)
    if seed is not None:
        given["seed"] = seed
    if out is not None:
        given["output_dir"] = out
    cfg = cfgmod.materialize(command, given)
    if manifests:
        cfg["experiment"]["manifests"] = list(cfg["experiment"]["manifests"]) + [str(m) for m in manifests]
    return cfg


def run_command(command: str, cfg: dict) -> int:
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    run = Run(command, cfg, out)
    run.write_json("config.json", cfg)
    t0 = time.perf_counter()
    status, code, message = "ok", EXIT_OK, ""
    try:
        HANDLERS[command](run)
    except (cfgmod.ConfigError, ValueError, KeyError, TypeError) as exc:
        status, code, message = "validation_error", EXIT_VALIDATION, f"{type(exc).__name__}: {exc}"
        run.partial = True
    except (NumericalFailure, FloatingPointError, RuntimeError, ArithmeticError) as exc:
        status, code, message = "numerical_failure", EXIT_NUMERICAL, f"{type(exc).__name__}: {exc}"
        run.partial = True
    manifest = {
        "command": command,
        "config": cfg,
        "versions": _versions(),
        "wall_time": time.perf_counter() - t0,
        "artifacts": run.artifacts,
        "partial": run.partial,
        "status": status,
        "message": message,
        "seed": cfg["seed"],
        "derived_seeds": run.seeds,
        "summary": run.summary,
    }
    (out / "manifest.json").write_text(cfgmod.dumps(manifest))
    if message:
        log.error(message)
    return code


def main(argv=None) -> int:
    args = parser().parse_intermixed_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        given = cfgmod.load(args.config) if args.config else {}
        if args.manifests and args.command != "report":
            raise cfgmod.ConfigError("positional manifests are only accepted by 'report'")
        cfg = prepare(args.command, given, args.seed, args.out, args.manifests)
        grid_of(cfg)
    except ValueError as exc:
        print(f"nlslab: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return run_command(args.command, cfg)


if __name__ == "__main__":
    sys.exit(main())
