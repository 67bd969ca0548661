import subprocess
import sys

import pytest

from sarcov import __version__
from sarcov.cli import EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, main
from sarcov.model import Route, Solution, load_solution, save_solution


@pytest.fixture
def run(capsys):
    def _run(*argv):
        code = main([str(a) for a in argv])
        out = capsys.readouterr()
        return code, out.out, out.err
    return _run


@pytest.fixture
def scenario(tmp_path, run):
    path = tmp_path / "s.txt"
    code, _, _ = run("generate", "--m", 20, "--k", 3, "--seed", 42, "--out", path)
    assert code == EXIT_OK
    return path


def test_generate_reports_count(tmp_path, run):
    code, out, _ = run("generate", "--m", 20, "--k", 3, "--seed", 42, "--out", tmp_path / "a.txt")
    assert code == EXIT_OK
    assert out.splitlines()[0] == "60 viewpoints"


def test_generate_uses_run_dir(tmp_path, run, monkeypatch):
    monkeypatch.setenv("SARCOV_RUN_DIR", str(tmp_path / "runs"))
    code, _, _ = run("generate", "--m", 3, "--seed", 5)
    assert code == EXIT_OK
    assert (tmp_path / "runs" / "scenario_seed5.txt").exists()


def test_generate_bad_pitch(tmp_path, run):
    code, _, err = run("generate", "--theta", 95, "--out", tmp_path / "x.txt")
    assert code == EXIT_USAGE
    assert "theta" in err or "pitch" in err


def test_plan_then_validate(tmp_path, scenario, run):
    sol = tmp_path / "sol.txt"
    code, out, _ = run("plan", scenario, "--n", 5, "--seed", 1, "--out", sol, "--clusters", tmp_path / "c.txt")
    assert code == EXIT_OK
    assert out.startswith("coverage_rate=")
    assert (tmp_path / "c.txt").read_text().startswith("clusters v1 method=adpc N=5")
    code, out, _ = run("validate", scenario, sol)
    assert code == EXIT_OK
    assert "energy: PASS" in out and out.splitlines()[-1] == "valid"


@pytest.mark.parametrize("clustering,solver", [("kmeans", "pso"), ("dpc", "ga"), ("adpc", "aco")])
def test_plan_other_methods(tmp_path, scenario, run, clustering, solver):
    sol = tmp_path / "sol.txt"
    code, _, _ = run("plan", scenario, "--clustering", clustering, "--solver", solver,
                     "--iterations", 10, "--population", 8, "--out", sol)
    assert code == EXIT_OK
    assert run("validate", scenario, sol)[0] == EXIT_OK


def test_plan_unknown_solver(scenario, run):
    with pytest.raises(SystemExit) as info:
        run("plan", scenario, "--solver", "annealing")
    assert info.value.code == EXIT_USAGE


def test_plan_missing_scenario(tmp_path, run):
    code, _, err = run("plan", tmp_path / "nope.txt")
    assert code == EXIT_USAGE and err.startswith("error:")


def test_validate_flags_duplicate(tmp_path, scenario, run):
    sol = tmp_path / "sol.txt"
    run("plan", scenario, "--n", 2, "--out", sol)
    original = load_solution(sol)
    first = original.routes[0]
    second = original.routes[1]
    edited = Solution([first, Route(second.uav_id, second.visit_order + first.visit_order[:1], 0.0)],
                      original.dropped)
    save_solution(edited, sol)
    code, out, _ = run("validate", scenario, sol, "--e-max", 1e9)
    assert code == EXIT_VIOLATION
    assert "uniqueness: FAIL" in out and out.splitlines()[-1] == "INVALID"


def test_validate_over_budget(tmp_path, scenario, run):
    sol = tmp_path / "sol.txt"
    run("plan", scenario, "--out", sol)
    code, out, _ = run("validate", scenario, sol, "--e-max", 10)
    assert code == EXIT_VIOLATION and "energy: FAIL" in out


def test_validate_unknown_viewpoint(tmp_path, scenario, run):
    sol = tmp_path / "sol.txt"
    save_solution(Solution([Route(1, ((99, 1),), 10.0)]), sol)
    code, _, err = run("validate", scenario, sol)
    assert code == EXIT_USAGE and "99:1" in err


def test_sweep_and_plot(tmp_path, run):
    plan = tmp_path / "plan.txt"
    plan.write_text("M=5\nN_values=2,3\nK_values=2\ntrials=2\nmax_iterations=5\npopulation_size=4\n")
    code, out, _ = run("sweep", plan, "--out", tmp_path / "run")
    assert code == EXIT_OK and "20 records, 0 failed" in out
    code, out, _ = run("plot", tmp_path / "run" / "records.csv")
    assert code == EXIT_OK
    assert (tmp_path / "run" / "plots" / "coverage_vs_N.csv").exists()
    assert any(line.startswith(("PASS monotone_N", "FAIL monotone_N")) for line in out.splitlines())
    assert len(list((tmp_path / "run" / "plots").glob("*.svg"))) == 10


def test_plot_empty_records(tmp_path, run):
    path = tmp_path / "records.csv"
    path.write_text("method,N,K,trial,seed,coverage_rate,feasible,per_uav_energy,"
                    "clustering_runtime,solver_runtime,total_distance,error\n")
    code, _, _ = run("plot", path)
    assert code == EXIT_USAGE


def test_distance_flag_both_positions(tmp_path, scenario, run):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert run("--distance-2d", "plan", scenario, "--out", a)[0] == EXIT_OK
    assert run("plan", scenario, "--distance-2d", "--out", b)[0] == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert run("validate", scenario, a, "--distance-2d")[0] == EXIT_OK


def test_module_entry_point():
    result = subprocess.run([sys.executable, "-m", "sarcov", "--version"], capture_output=True, text=True)
    assert result.returncode == 0
    assert result.stdout.strip() == f"sarcov {__version__}"
