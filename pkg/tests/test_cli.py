import json

import pytest

from landingopt import cli


SPHERE_CFG = """\
# minimize x_1 on the unit circle
problem.kind = sphere
problem.n = 2
problem.seed = 0
metric.kind = euclidean
normal_op = identity
solver = landing_ls
ls.rho = 0.1
out = {out}
"""

BROCKETT_CFG = """\
problem.kind = brockett
problem.n = 20
problem.p = 3
problem.seed = 7
metric.kind = euclidean
normal_op = gram_euclid
solver = landing_ls
ls.rho = 0.1
ls.max_iter = 4000
out = {out}
"""


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_parse_config_text_basics():
    values, lines = cli.parse_config_text("a.b = 1  # comment\n\nc = x\n")
    assert values == {"a.b": "1", "c": "x"}
    assert lines["c"] == 3


def test_parse_config_rejects_garbage():
    with pytest.raises(cli.ConfigError):
        cli.parse_config_text("just words\n")
    with pytest.raises(cli.ConfigError):
        cli.parse_config_text("a = 1\na = 2\n")


def test_unknown_metric_is_input_error(tmp_path, capsys):
    path = write_cfg(tmp_path, SPHERE_CFG.format(out=tmp_path / "o")
                     .replace("euclidean", "fast"))
    assert cli.cmd_run(path) == cli.EXIT_INPUT
    assert "metric.kind" in capsys.readouterr().err


def test_unknown_key_is_input_error(tmp_path):
    path = write_cfg(tmp_path, SPHERE_CFG.format(out=tmp_path / "o")
                     + "bogus.key = 1\n")
    assert cli.cmd_run(path) == cli.EXIT_INPUT


def test_beta_requires_beta_metric(tmp_path):
    path = write_cfg(tmp_path, SPHERE_CFG.format(out=tmp_path / "o")
                     + "metric.beta = 0.5\n")
    assert cli.cmd_run(path) == cli.EXIT_INPUT


def test_alpha_requires_fixed_solver(tmp_path):
    path = write_cfg(tmp_path, SPHERE_CFG.format(out=tmp_path / "o")
                     + "fixed.alpha = 0.001\n")
    assert cli.cmd_run(path) == cli.EXIT_INPUT


def test_missing_config_is_input_error(tmp_path):
    assert cli.cmd_run(str(tmp_path / "nope.cfg")) == cli.EXIT_INPUT


def test_sphere_demo_run(tmp_path):
    out = tmp_path / "sphere"
    path = write_cfg(tmp_path, SPHERE_CFG.format(out=out))
    assert cli.cmd_run(path) == cli.EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "Converged"
    assert summary["final_f"] == pytest.approx(-1.0, abs=1e-6)
    assert set(summary) == {"status", "iterations", "final_f", "final_feas",
                            "final_grad_norm", "mu_final", "wall_ms"}


def test_trace_csv_layout_and_determinism(tmp_path):
    out = tmp_path / "sphere"
    path = write_cfg(tmp_path, SPHERE_CFG.format(out=out))
    assert cli.cmd_run(path) == cli.EXIT_OK
    first = (out / "trace.csv").read_bytes()
    assert cli.cmd_run(path) == cli.EXIT_OK
    second = (out / "trace.csv").read_bytes()
    assert first == second
    header = first.decode().splitlines()[0]
    assert header == "k,f,feas,grad_norm_g,mu,alpha,merit,backtracks"
    # floats round-trip exactly at 17 significant digits
    row = first.decode().splitlines()[1].split(",")
    assert float(row[1]) == float(format(float(row[1]), ".17g"))


def test_fixed_step_config(tmp_path):
    out = tmp_path / "fixed"
    cfg = SPHERE_CFG.format(out=out).replace("solver = landing_ls",
                                             "solver = landing_fixed")
    cfg += "fixed.alpha = 0.001\nls.max_iter = 60000\n"
    path = write_cfg(tmp_path, cfg)
    assert cli.cmd_run(path) == cli.EXIT_OK


def test_newton_solver_config(tmp_path):
    out = tmp_path / "newton"
    cfg = SPHERE_CFG.format(out=out).replace("solver = landing_ls",
                                             "solver = sqp_ref")
    path = write_cfg(tmp_path, cfg)
    assert cli.cmd_run(path) == cli.EXIT_OK


def test_verify_exit_codes(capsys):
    assert cli.cmd_verify(seed=0, profile="small") == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "max deviation" in out
    assert cli.cmd_verify(seed=0, profile="small", inject_fault=True) \
        == cli.EXIT_PROPERTY


def test_bench_runs_directory(tmp_path, capsys):
    for i in range(3):
        write_cfg(tmp_path, SPHERE_CFG.format(out=tmp_path / f"out{i}"),
                  name=f"c{i}.cfg")
    assert cli.cmd_bench(str(tmp_path), jobs=2) == cli.EXIT_OK
    for i in range(3):
        assert (tmp_path / f"out{i}" / "trace.csv").exists()


def test_bench_empty_directory(tmp_path):
    assert cli.cmd_bench(str(tmp_path), jobs=1) == cli.EXIT_INPUT


def test_main_entrypoint(tmp_path):
    out = tmp_path / "main"
    path = write_cfg(tmp_path, SPHERE_CFG.format(out=out))
    assert cli.main(["run", path]) == cli.EXIT_OK
    assert cli.main(["verify", "--seed", "2"]) == cli.EXIT_OK


def test_stiefel_metric_on_sphere_rejected(tmp_path):
    cfg = SPHERE_CFG.format(out=tmp_path / "o").replace(
        "metric.kind = euclidean", "metric.kind = canonical")
    path = write_cfg(tmp_path, cfg)
    assert cli.cmd_run(path) == cli.EXIT_INPUT


def test_brockett_default_run(tmp_path):
    out = tmp_path / "brockett"
    path = write_cfg(tmp_path, BROCKETT_CFG.format(out=out))
    assert cli.cmd_run(path) == cli.EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "Converged"
    assert summary["final_feas"] <= 1e-8


def test_brockett_run_with_canonical_metric(tmp_path):
    cfg = BROCKETT_CFG.format(out=tmp_path / "b").replace(
        "metric.kind = euclidean", "metric.kind = canonical").replace(
        "normal_op = gram_euclid", "normal_op = identity").replace(
        "problem.n = 20", "problem.n = 8")
    path = write_cfg(tmp_path, cfg)
    assert cli.cmd_run(path) == cli.EXIT_OK
    summary = json.loads((tmp_path / "b" / "summary.json").read_text())
    assert summary["final_feas"] <= 1e-8
