import pytest

from hslab.cli import main, run
from hslab.config import parse_config, serialize_config
from hslab.errors import ConfigError

MINIMAL = "problem.p = 0,0; 1,0\nproblem.pdot = 1,0\n"
SMALL_GRID = "grid.n = 65\ngrid.l = 3\n"


def test_parse_minimal_defaults():
    spec = parse_config(MINIMAL)
    assert spec.p == (0j, 1 + 0j)
    assert spec.pdot == (1 + 0j,)
    assert spec.grid_l == 6.0
    assert spec.grid_n == 257
    assert spec.newton_tol == 1e-10
    assert spec.max_newton == 50
    assert spec.cg_rel_tol == 1e-12
    assert spec.workers == 1
    # default center is the half-cell offset
    assert spec.effective_center() == complex(spec.grid_spacing() / 2, 0.0)


def test_parse_rejects_even_n_with_line_number():
    with pytest.raises(ConfigError) as err:
        parse_config("problem.p = 0,0; 1,0\ngrid.n = 256\n")
    assert err.value.line == 2
    assert "grid.n" in str(err.value)


def test_parse_rejects_unknown_key_and_bad_number():
    with pytest.raises(ConfigError) as err:
        parse_config("bogus.key = 1\n")
    assert err.value.line == 1
    with pytest.raises(ConfigError) as err:
        parse_config("grid.l = six\n")
    assert err.value.line == 1
    with pytest.raises(ConfigError):
        parse_config("problem.p = 1\n")  # complex needs re,im


def test_config_round_trip():
    text = (
        MINIMAL
        + "grid.n = 129\nexperiment.t_list = 1; 3; 9\ngrid.center = 0.1,-0.25\n"
        + "output.fields = u; w\nsolver.cg_max_iters = auto\n"
    )
    spec = parse_config(text)
    again = parse_config(serialize_config(spec))
    assert again == spec
    assert serialize_config(again) == serialize_config(spec)


def test_comments_and_blank_lines():
    spec = parse_config("# header\n\nproblem.p = 0,0; 1,0  # inline\n")
    assert spec.p == (0j, 1 + 0j)


def test_run_solve_writes_outputs(tmp_path):
    spec = parse_config(MINIMAL + SMALL_GRID + "output.fields = u; w\n")
    code = run("solve", spec, str(tmp_path), quiet=True)
    assert code == 0
    report = (tmp_path / "report.csv").read_text().splitlines()
    assert report[0] == "iterations,final_residual_inf,energy,converged,u_origin"
    row = report[1].split(",")
    assert row[3] == "true"
    assert abs(float(row[4]) + 0.3159) < 0.01
    meta = (tmp_path / "meta.txt").read_text()
    assert meta.startswith("hslab ")
    assert "problem.p = 0.0,0.0; 1.0,0.0" in meta
    field = (tmp_path / "field_u.csv").read_text().splitlines()
    assert field[0].startswith("# n=65, L=")
    assert len(field) == 1 + 65
    assert len(field[1].split(",")) == 65
    assert (tmp_path / "field_w.csv").exists()
    assert (tmp_path / "fig_solve.png").exists()


def test_run_deterministic_bytes(tmp_path):
    spec = parse_config(MINIMAL + SMALL_GRID)
    run("solve", spec, str(tmp_path / "a"), quiet=True)
    run("solve", spec, str(tmp_path / "b"), quiet=True)
    assert (tmp_path / "a/report.csv").read_bytes() == (tmp_path / "b/report.csv").read_bytes()


def test_run_solve_failure_exit_code(tmp_path):
    spec = parse_config(MINIMAL + SMALL_GRID + "solver.max_newton = 1\n")
    code = run("solve", spec, str(tmp_path), quiet=True)
    assert code == 2
    report = (tmp_path / "report.csv").read_text().splitlines()
    assert report[1].split(",")[3] == "false"


def test_run_validation_exit_code(tmp_path):
    # explicit origin-centered grid puts a node on the zero of P = z
    spec = parse_config(MINIMAL + SMALL_GRID + "grid.center = 0,0\n")
    assert run("solve", spec, str(tmp_path), quiet=True) == 3


def test_run_ray_report(tmp_path):
    spec = parse_config(MINIMAL + SMALL_GRID + "experiment.t_list = 1; 2\noutput.formats = csv\n")
    code = run("ray", spec, str(tmp_path), quiet=True)
    assert code == 0
    lines = (tmp_path / "report.csv").read_text().splitlines()
    assert lines[0].startswith("t,R,g_value,gsf_value,diff,near_integral")
    assert len(lines) == 1 + 2 + 1
    assert lines[-1].startswith("slope,")
    assert not (tmp_path / "fig_ray.png").exists()


def test_run_ray_workers_deterministic(tmp_path, monkeypatch):
    spec = parse_config(MINIMAL + SMALL_GRID + "experiment.t_list = 1; 2\n")
    run("ray", spec, str(tmp_path / "w1"), quiet=True)
    monkeypatch.setenv("HSLAB_THREADS", "2")
    run("ray", spec, str(tmp_path / "w2"), quiet=True)
    assert (tmp_path / "w1/report.csv").read_bytes() == (tmp_path / "w2/report.csv").read_bytes()


def test_hslab_threads_validated(tmp_path, monkeypatch):
    monkeypatch.setenv("HSLAB_THREADS", "zero")
    spec = parse_config(MINIMAL + SMALL_GRID)
    with pytest.raises(ConfigError):
        run("ray", spec, str(tmp_path), quiet=True)


def test_run_bessel_and_stokes_and_decay(tmp_path):
    spec = parse_config(MINIMAL + SMALL_GRID)
    assert run("bessel", spec, str(tmp_path / "b"), quiet=True) == 0
    lines = (tmp_path / "b/report.csv").read_text().splitlines()
    assert lines[0] == "x,i0,i0_scaled"
    assert float(lines[1].split(",")[1]) == 1.0
    assert run("stokes", spec, str(tmp_path / "s"), quiet=True) == 0
    assert (tmp_path / "s/report.csv").read_text().splitlines()[0] == (
        "rho,disk_integral,boundary_integral,residual,scale,relative"
    )
    assert run("decay", spec, str(tmp_path / "d"), quiet=True) == 0
    dec = (tmp_path / "d/report.csv").read_text().splitlines()
    assert dec[0].startswith("target,gamma")
    assert {row.split(",")[0] for row in dec[1:]} == {"w_c0", "w_c1", "f"}


def test_main_argv_paths(tmp_path):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text(MINIMAL + SMALL_GRID)
    assert main(["bessel", "--config", str(cfg), "--out", str(tmp_path / "o"), "--quiet"]) == 0
    bad = tmp_path / "bad.txt"
    bad.write_text("grid.n = 64\n")
    assert main(["solve", "--config", str(bad), "--out", str(tmp_path / "o2")]) == 1
    assert main(["solve", "--config", str(tmp_path / "missing.txt"), "--out", str(tmp_path / "o3")]) == 1
