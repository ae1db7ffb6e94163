from pathlib import Path

import pandas as pd
import pytest

import claycop

REPO_ROOT = Path(__file__).resolve().parent.parent
QUICK_PLAN = str(REPO_ROOT / "config" / "quick-plan.json")
SHORT_LOOP = ["--burn-in", "30", "--tail", "30"]


@pytest.fixture
def sample_csv(tmp_path):
    path = tmp_path / "sample.csv"
    assert claycop.main(["--quiet", "sample", "--alpha", "0.8", "-m", "100", "--seed", "42", "-o", str(path)]) == 0
    return path


# ── Usage ───────────────────────────────────────────────────

def test_no_command_prints_help(capsys):
    assert claycop.main([]) == 1
    assert "usage" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["sample", "--alpha", "0.8", "-o", "x.csv"],
    ["sample", "--alpha", "abc", "-m", "10", "-o", "x.csv"],
    ["estimate", "bayes", "x.csv"],
    ["experiment", "--mode", "sideways"],
    ["--bogus"],
])
def test_bad_flags_exit_with_usage_code(argv):
    with pytest.raises(SystemExit) as info:
        claycop.main(argv)
    assert info.value.code == 1


@pytest.mark.parametrize("argv", [
    ["sample", "--alpha", "0.8", "-m", "0", "-o", "x.csv"],
    ["sample", "--alpha", "-1", "-m", "10", "-o", "x.csv"],
    ["demo-sklar", "--margin1", "beta:1"],
    ["demo-sklar", "-m", "1"],
])
def test_invalid_values_exit_with_usage_code(argv, tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert claycop.main(argv) == 1
    assert "❌" in capsys.readouterr().err


def test_check_deps(capsys):
    assert claycop.main(["--check-deps"]) == 0
    assert "All required dependencies satisfied" in capsys.readouterr().out


# ── sample / pseudo ─────────────────────────────────────────

def test_sample_is_reproducible(tmp_path, sample_csv):
    again = tmp_path / "again.csv"
    claycop.main(["--quiet", "sample", "--alpha", "0.8", "-m", "100", "--seed", "42", "-o", str(again)])
    frame = pd.read_csv(sample_csv)
    assert list(frame.columns) == ["u1", "u2"]
    assert len(frame) == 100
    assert again.read_bytes() == sample_csv.read_bytes()


def test_seed_falls_back_to_environment(tmp_path, sample_csv, monkeypatch):
    monkeypatch.setenv("CLAYCOP_SEED", "42")
    from_env = tmp_path / "env.csv"
    claycop.main(["--quiet", "sample", "--alpha", "0.8", "-m", "100", "-o", str(from_env)])
    assert from_env.read_bytes() == sample_csv.read_bytes()


def test_default_seed_without_environment(tmp_path, sample_csv, monkeypatch):
    monkeypatch.delenv("CLAYCOP_SEED", raising=False)
    default = tmp_path / "default.csv"
    claycop.main(["--quiet", "sample", "--alpha", "0.8", "-m", "100", "-o", str(default)])
    assert default.read_bytes() == sample_csv.read_bytes()


def test_bad_environment_seed(tmp_path, monkeypatch):
    monkeypatch.setenv("CLAYCOP_SEED", "forty-two")
    assert claycop.main(["sample", "--alpha", "1", "-m", "5", "-o", str(tmp_path / "s.csv")]) == 1


def test_sample_reports_kendall_tau(tmp_path, capsys):
    claycop.main(["sample", "--alpha", "2", "-m", "2000", "--seed", "1", "-o", str(tmp_path / "s.csv")])
    out = capsys.readouterr().out
    assert "theoretical 0.5000" in out


@pytest.mark.slow
def test_sample_tau_on_large_sample(tmp_path):
    from scipy.stats import kendalltau

    path = tmp_path / "big.csv"
    claycop.main(["--quiet", "sample", "--alpha", "2", "-m", "100000", "--seed", "3", "-o", str(path)])
    frame = pd.read_csv(path)
    assert abs(kendalltau(frame["u1"], frame["u2"]).statistic - 0.5) < 0.01


def test_pseudo(tmp_path, sample_csv):
    out = tmp_path / "pseudo.csv"
    assert claycop.main(["--quiet", "pseudo", str(sample_csv), "-o", str(out)]) == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["i", "t"]
    assert len(frame) == 100
    assert frame["t"].between(0, 1, inclusive="neither").all()


# ── estimate ────────────────────────────────────────────────

def _result(capsys, label):
    lines = [line for line in capsys.readouterr().out.splitlines() if line.startswith(label + "\t")]
    assert len(lines) == 1
    return float(lines[0].split("\t")[1])


def test_estimate_mle_is_repeatable(sample_csv, capsys):
    assert claycop.main(["--quiet", "estimate", "mle", str(sample_csv)]) == 0
    first = _result(capsys, "mle")
    claycop.main(["--quiet", "estimate", "mle", str(sample_csv)])
    assert _result(capsys, "mle") == first
    assert first > 0


def test_estimate_ai_writes_trace_and_population(tmp_path, sample_csv, capsys):
    trace, population = tmp_path / "trace.csv", tmp_path / "population.csv"
    argv = ["--quiet", "estimate", "ai", str(sample_csv), "--seed", "42", *SHORT_LOOP,
            "--trace", str(trace), "--population", str(population)]
    assert claycop.main(argv) == 0
    estimate = _result(capsys, "ai")
    assert abs(estimate - 0.8) < 0.6
    assert len(pd.read_csv(trace)) == 60
    assert list(pd.read_csv(population).columns) == ["alpha_hat"]
    assert len(pd.read_csv(population)) == 30

    claycop.main(argv)
    assert _result(capsys, "ai") == estimate


def test_estimate_dummy_requires_true_alpha(sample_csv, capsys):
    assert claycop.main(["estimate", "dummy", str(sample_csv)]) == 1
    assert "--true-alpha" in capsys.readouterr().err


def test_estimate_dummy(sample_csv, capsys):
    argv = ["--quiet", "estimate", "dummy", str(sample_csv), "--true-alpha", "0.8", "--replicas", "50"]
    assert claycop.main(argv) == 0
    assert _result(capsys, "dummy") > 0


def test_malformed_csv_is_a_runtime_error(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("u1,u2\n0.1,0.2\n0.3,oops\n")
    assert claycop.main(["estimate", "mle", str(path)]) == 2
    err = capsys.readouterr().err
    assert "❌" in err and "data rows 2" in err


def test_missing_input_is_a_runtime_error(tmp_path):
    assert claycop.main(["estimate", "mle", str(tmp_path / "missing.csv")]) == 2


# ── ci ──────────────────────────────────────────────────────

def test_ci_writes_interval(tmp_path, sample_csv, capsys):
    out = tmp_path / "ci.csv"
    argv = ["--quiet", "ci", str(sample_csv), *SHORT_LOOP, "--replicas", "40", "--true-alpha", "0.8", "-o", str(out)]
    assert claycop.main(argv) == 0
    assert "interval\t" in capsys.readouterr().out
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["sample_id", "lower", "upper", "level", "contains_truth"]
    assert frame["lower"][0] <= frame["upper"][0]
    assert frame["level"][0] == 0.9


@pytest.mark.parametrize("flags", [["--level", "1.5"], ["--pools", "0"], ["--eta", "0"]])
def test_ci_rejects_bad_settings(sample_csv, flags):
    assert claycop.main(["ci", str(sample_csv), *flags]) == 1


# ── experiment ──────────────────────────────────────────────

def test_experiment_with_json_plan(tmp_path):
    out = tmp_path / "results"
    argv = ["--quiet", "experiment", "--plan", QUICK_PLAN, "--mode", "fixed-point", "-o", str(out), "--save-plan"]
    assert claycop.main(argv) == 0
    assert len(pd.read_csv(out / "fixed_point_aggregate.csv")) == 1
    assert (out / "plan.yaml").exists()
    assert (out / "fixed_point_intervals.csv").exists()


def test_experiment_jobs_do_not_change_results(tmp_path):
    for jobs in ("1", "2"):
        argv = ["--quiet", "experiment", "--plan", QUICK_PLAN, "--mode", "both",
                "--jobs", jobs, "-o", str(tmp_path / jobs)]
        assert claycop.main(argv) == 0
    produced = sorted(p.relative_to(tmp_path / "1") for p in (tmp_path / "1").rglob("*.csv"))
    assert produced
    for rel in produced:
        assert (tmp_path / "1" / rel).read_bytes() == (tmp_path / "2" / rel).read_bytes(), rel


def test_experiment_dry_run(tmp_path, capsys):
    assert claycop.main(["experiment", "--dry-run", "-o", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "Plan Summary" in out
    assert "0.8, 1.7, 3, 5" in out
    assert not list(tmp_path.iterdir())


def test_experiment_missing_plan(tmp_path):
    assert claycop.main(["experiment", "--plan", str(tmp_path / "nope.yaml")]) == 1


@pytest.mark.parametrize("text", [
    "sizes: [1]\n", "- just\n- a list\n", "alphas: [0.8\n", "intervals: 5\n", "ai_config: [1, 2]\n",
])
def test_experiment_invalid_plan(tmp_path, text):
    plan = tmp_path / "plan.yaml"
    plan.write_text(text)
    assert claycop.main(["experiment", "--plan", str(plan), "-o", str(tmp_path / "out")]) == 1


# ── demo-sklar ──────────────────────────────────────────────

def test_demo_sklar(tmp_path, capsys):
    argv = ["--quiet", "demo-sklar", "-m", "300", "--seed", "42", "-o", str(tmp_path)]
    assert claycop.main(argv) == 0
    assert "kendall_distance\t" in capsys.readouterr().out
    sample = pd.read_csv(tmp_path / "sklar_sample.csv")
    assert list(sample.columns) == ["x1", "x2"]
    assert (sample["x1"] > 0).all()
    table = pd.read_csv(tmp_path / "kendall_ecdf.csv")
    assert list(table.columns) == ["t", "ecdf", "kendall_cdf"]
    assert len(table) == 100
