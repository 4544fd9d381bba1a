import json

import pytest

from nlslab import config as cfgmod
from nlslab.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION, build_report, main

SMALL_2D = {"grid": {"d": 2, "m": 16, "half_len": 6.0}}
SMALL_3D = {"grid": {"d": 3, "m": 24, "half_len": 12.0}}


def run(tmp_path, command, cfg=None, name="out", extra=()):
    out = tmp_path / name
    argv = [command, "--out", str(out), "--quiet", *extra]
    if cfg is not None:
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(cfg))
        argv += ["--config", str(p)]
    return main(argv), out


def test_unknown_command(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    with pytest.raises(SystemExit) as exc:
        main(["explode", "--out", "x"])
    assert exc.value.code == EXIT_VALIDATION
    assert not any(tmp_path.iterdir())


def test_unknown_key(tmp_path):
    code, out = run(tmp_path, "evolve", {"grid": {"d": 2, "m": 16, "half_len": 6.0, "spacing": 1}})
    assert code == EXIT_VALIDATION and not out.exists()


def test_invalid_grid(tmp_path):
    code, _ = run(tmp_path, "evolve", {"grid": {"d": 2, "m": 7, "half_len": 6.0}})
    assert code == EXIT_VALIDATION


def test_positional_manifests_only_for_report(tmp_path):
    code, _ = run(tmp_path, "evolve", SMALL_2D, extra=("some/manifest.json",))
    assert code == EXIT_VALIDATION


def test_config_round_trip(tmp_path):
    given = {**SMALL_2D, "evolve": {"horizon": 0.05, "dt": 1e-3}}
    code, out = run(tmp_path, "evolve", given, extra=("--seed", "4"))
    assert code == EXIT_OK
    saved = cfgmod.load(out / "config.json")
    assert saved == cfgmod.materialize("evolve", {**given, "seed": 4, "output_dir": str(out)})
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"] == saved and man["status"] == "ok" and not man["partial"]
    for a in man["artifacts"]:
        assert (out / a).exists()


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_numerical_failure_exit(tmp_path):
    cfg = {**SMALL_2D, "experiment": {"amplitude": 200.0}, "picard": {"max_iter": 4, "interval": [0.0, 1.0]}}
    code, out = run(tmp_path, "picard", cfg)
    assert code == EXIT_NUMERICAL
    man = json.loads((out / "manifest.json").read_text())
    assert man["partial"] and man["status"] == "numerical_failure"


def _json_artifacts(out):
    man = json.loads((out / "manifest.json").read_text())
    return {a: (out / a).read_bytes() for a in man["artifacts"] if a != "config.json"}


@pytest.mark.parametrize("command,cfg", [
    ("evolve", {**SMALL_2D, "evolve": {"horizon": 0.05}}),
    ("taildiag", {**SMALL_2D, "experiment": {"n": 200, "horizon": 0.125}}),
])
def test_rerun_is_byte_identical(tmp_path, command, cfg):
    c1, a = run(tmp_path, command, cfg, "a")
    c2, b = run(tmp_path, command, cfg, "b")
    assert c1 == c2 == EXIT_OK
    assert _json_artifacts(a) == _json_artifacts(b)
    ma, mb = (json.loads((d / "manifest.json").read_text()) for d in (a, b))
    assert ma["derived_seeds"] == mb["derived_seeds"] and ma["summary"] == mb["summary"]


def test_writes_stay_in_output_dir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({**SMALL_2D, "evolve": {"horizon": 0.05}}))
    before = set(tmp_path.iterdir())
    assert main(["evolve", "--config", str(cfg_path), "--out", "only_here", "--quiet"]) == EXIT_OK
    assert set(tmp_path.iterdir()) - before == {tmp_path / "only_here"}


# ---------------------------------------------------------------- report


def test_report_empty(tmp_path):
    md, rows = build_report([])
    assert md.startswith("# nlslab run report") and not rows


@pytest.fixture(scope="module")
def three_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("runs")
    codes = [
        run(base, "groundstate", SMALL_3D, "gs"),
        run(base, "evolve", {**SMALL_2D, "evolve": {"horizon": 0.05}}, "ev"),
        run(base, "norms", {**SMALL_2D, "experiment": {"horizon": 0.125}}, "nm"),
    ]
    assert all(c == EXIT_OK for c, _ in codes)
    return base, [out / "manifest.json" for _, out in codes]


def test_report_groundstate_row(three_runs):
    _, mans = three_runs
    md, rows = build_report(mans[:1])
    summ = json.loads(mans[0].read_text())["summary"]
    assert "| a | m(a) | lambda |" in md
    assert f"| {summ['a']:.6g} | {summ['m_a']:.6g} | {summ['lambda']:.6g} |" in md
    assert summ["m_a"] < 0 and summ["lambda"] < 0


def test_report_mixed_grouped(three_runs, tmp_path):
    base, mans = three_runs
    code, out = run(tmp_path, "report", extra=[str(m) for m in mans] + [str(base / "missing" / "manifest.json")])
    assert code == EXIT_OK
    md = (out / "report.md").read_text()
    heads = [line for line in md.splitlines() if line.startswith("## ")]
    assert heads == sorted(heads) and {"## evolve", "## groundstate", "## norms"} <= set(heads)
    assert "manifest absent or unreadable" in md
    assert (out / "report.csv").read_text().startswith("command,manifest,key,value")


def test_report_lists_absent_artifact(three_runs):
    base, mans = three_runs
    man = json.loads(mans[1].read_text())
    victim = base / "ev" / man["artifacts"][-1]
    data = victim.read_bytes()
    victim.unlink()
    try:
        md, rows = build_report([mans[1]])
    finally:
        victim.write_bytes(data)
    assert f"artifact absent: `{man['artifacts'][-1]}`" in md


@pytest.mark.slow
def test_groundstate_default_config(tmp_path):
    code, out = run(tmp_path, "groundstate")
    assert code == EXIT_OK
    res = json.loads((out / "groundstate.json").read_text())
    assert res["result"]["converged"] and res["result"]["m_a"] < 0
    assert (out / "u_a.nlsf").exists()
