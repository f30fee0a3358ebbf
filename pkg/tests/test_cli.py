"""Command-line surface: exit codes, JSON output, reproducibility."""

import json
import subprocess
import sys

import pytest

CLI = [sys.executable, "-m", "opsplit.cli"]


def run_cli(*args, env=None, cwd=None):
    import os

    full_env = dict(os.environ)
    full_env.pop("OPSPLIT_SEED", None)
    if env:
        full_env.update(env)
    return subprocess.run(
        CLI + list(args), capture_output=True, text=True, env=full_env, cwd=cwd
    )


@pytest.fixture
def fb_instance(tmp_path):
    path = tmp_path / "fb.json"
    path.write_text(
        json.dumps(
            {
                "A": {"kind": "scaled_identity", "c": 2.0, "dim": 2},
                "B": {"kind": "scaled_identity", "c": -1.0, "dim": 2},
                "mu": 2.0,
                "omega": 1.0,
                "beta": 1.0,
                "case": "I",
                "x_star": [0.0, 0.0],
            }
        )
    )
    return path


@pytest.fixture
def dr_instance(tmp_path):
    path = tmp_path / "dr.json"
    path.write_text(
        json.dumps(
            {
                "A": {"kind": "subspace_normal", "basis": [[1.0, 0.0]], "mu": 2.0},
                "B": {"kind": "scaled_identity", "c": -1.0, "dim": 2},
                "mu": 2.0,
                "omega": 1.0,
            }
        )
    )
    return path


def test_compose_averaged_pair():
    r = run_cli("compose", "--class1", "averaged:0.5", "--class2", "averaged:0.5")
    assert r.returncode == 0
    out = json.loads(r.stdout)
    assert out["alpha"] == pytest.approx(1 / 3, abs=1e-15)
    assert out["beta"] == pytest.approx(2 / 3, abs=1e-15)


def test_compose_guard_rejection_prints_fallback():
    r = run_cli("compose", "--class1", "conic:1.7", "--class2", "conic:0.7")
    assert r.returncode == 2
    out = json.loads(r.stdout)
    assert out["fallback_lipschitz"] == pytest.approx(2.4)


def test_compose_nonexpansive_pair():
    r = run_cli("compose", "--class1", "lipschitz:1", "--class2", "lipschitz:1")
    assert r.returncode == 0
    out = json.loads(r.stdout)
    assert (out["alpha"], out["beta"]) == (0.0, 1.0)


def test_compose_chain_file(tmp_path):
    chain = tmp_path / "chain.json"
    chain.write_text(json.dumps([{"delta": 1.0, "alpha": 0.5}] * 3))
    r = run_cli("compose", "--chain", str(chain), "--r", "0")
    assert r.returncode == 0
    out = json.loads(r.stdout)
    assert out["result"]["alpha"] == pytest.approx(0.75, abs=1e-15)

    bad = tmp_path / "bad.json"
    bad.write_text(
        json.dumps(
            [
                {"delta": 1.0, "alpha": 0.25},
                {"delta": 1.0, "alpha": 3.25},
                {"delta": 1.0, "alpha": 0.75},
            ]
        )
    )
    r = run_cli("compose", "--chain", str(bad), "--r", "1")
    assert r.returncode == 2


def test_compose_parse_error_is_usage():
    r = run_cli("compose", "--class1", "averaged:1.5", "--class2", "averaged:0.5")
    assert r.returncode == 1
    r = run_cli("compose", "--class1", "gibberish", "--class2", "averaged:0.5")
    assert r.returncode == 1


def test_classify_output():
    r = run_cli("classify", "--alpha", "0.5", "--beta", "0.5")
    assert r.returncode == 0
    kinds = {l["kind"] for l in json.loads(r.stdout)["labels"]}
    assert {"averaged", "cocoercive", "lipschitz", "nonexpansive"} <= kinds


def test_solve_fb_tight_rate(tmp_path, fb_instance):
    log = tmp_path / "out.csv"
    r = run_cli(
        "solve-fb", "--instance", str(fb_instance), "--gamma", "0.2",
        "--x0", "1,0", "--log", str(log),
    )
    assert r.returncode == 0
    out = json.loads(r.stdout)
    assert out["rate"]["empirical_rate"] == pytest.approx(0.75, abs=1e-12)
    assert out["rate"]["certified_rate"] == pytest.approx(0.75, abs=1e-12)
    assert out["rate"]["satisfied"] and out["result"]["converged"]
    header = log.read_text().splitlines()[0]
    assert header == "k,step_norm,err_norm,shadow_gap"


def test_solve_dr_out_of_range_prints_interval(dr_instance):
    r = run_cli("solve-dr", "--instance", str(dr_instance), "--gamma", "0.3", "--x0", "0,1")
    assert r.returncode == 2
    out = json.loads(r.stdout)
    assert out["valid_interval"] == "]0.0, 0.25["


def test_solve_dr_forced_divergence(dr_instance):
    r = run_cli(
        "solve-dr", "--instance", str(dr_instance), "--gamma", "0.6",
        "--x0", "0,1", "--force", "--max-iter", "300",
    )
    assert r.returncode == 0
    out = json.loads(r.stdout)
    assert out["result"]["diverged"] and out["plan"] is None


def test_solve_dr_in_range_converges(dr_instance):
    r = run_cli("solve-dr", "--instance", str(dr_instance), "--gamma", "0.1", "--x0", "1,1")
    assert r.returncode == 0
    out = json.loads(r.stdout)
    assert out["result"]["converged"]
    assert out["plan"]["averaged_alpha"] == pytest.approx(0.625)


def test_verify_named_suite(tmp_path):
    report = tmp_path / "named.json"
    r = run_cli("verify", "--suite", "named", "--json", str(report))
    assert r.returncode == 0
    assert all(line.startswith("PASS") for line in r.stdout.strip().splitlines())
    cases = json.loads(report.read_text())["cases"]
    assert all(c["agree"] for c in cases) and len(cases) >= 9


def test_compose_scaled_conic_spec():
    r = run_cli("compose", "--class1", "scaled-conic:2:0.75", "--class2", "cocoercive:1.5")
    assert r.returncode == 0
    out = json.loads(r.stdout)
    # scaled averaged against cocoercive: kappa-theta route applies
    assert out["theorem"] in ("two-factor-bound", "scale-normalized-bound")


def test_verify_random_reproducible(tmp_path):
    out1 = tmp_path / "r1.json"
    out2 = tmp_path / "r2.json"
    r1 = run_cli("verify", "--suite", "random", "--seed", "7", "--count", "6",
                 "--json", str(out1))
    r2 = run_cli("verify", "--suite", "random", "--seed", "7", "--count", "6",
                 "--json", str(out2))
    assert r1.returncode == 0 and r2.returncode == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert json.loads(out1.read_text())["config"]["seed"] == 7


def test_seed_env_override(tmp_path):
    out = tmp_path / "r.json"
    r = run_cli("verify", "--suite", "random", "--seed", "7", "--count", "3",
                "--json", str(out), env={"OPSPLIT_SEED": "11"})
    assert r.returncode == 0
    assert json.loads(out.read_text())["config"]["seed"] == 11


def test_figure_hash_stable(tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    r1 = run_cli("figure", "--preset", "averaged-averaged-0.5-0.5", "--out", str(a),
                 "--resolution", "128")
    r2 = run_cli("figure", "--preset", "averaged-averaged-0.5-0.5", "--out", str(b),
                 "--resolution", "128")
    assert r1.returncode == 0 and r2.returncode == 0
    assert a.read_bytes() == b.read_bytes()


def test_figure_unknown_preset_is_usage():
    r = run_cli("figure", "--preset", "nope", "--out", "x.svg")
    assert r.returncode == 1


def test_affine_and_quadratic_instance_kinds(tmp_path):
    inst = tmp_path / "mixed.json"
    inst.write_text(
        json.dumps(
            {
                "A": {"kind": "affine", "matrix": [[2.0, 0.0], [0.0, 2.0]]},
                "B": {"kind": "quadratic", "matrix": [[-1.0, 0.0], [0.0, -1.0]]},
                "mu": 2.0,
                "omega": 1.0,
                "beta": 1.0,
                "case": "I",
            }
        )
    )
    r = run_cli("solve-fb", "--instance", str(inst), "--gamma", "0.2", "--x0", "1,0")
    assert r.returncode == 0
    out = json.loads(r.stdout)
    assert out["result"]["converged"]
    assert out["rate"]["empirical_rate"] == pytest.approx(0.75, abs=1e-12)


def test_unknown_instance_kind_is_usage(tmp_path):
    inst = tmp_path / "bad.json"
    inst.write_text(json.dumps({"A": {"kind": "mystery"}, "B": {}, "mu": 1.0}))
    r = run_cli("solve-fb", "--instance", str(inst), "--gamma", "0.1")
    assert r.returncode == 1


def test_replay_from_echoed_config(tmp_path, fb_instance):
    log1 = tmp_path / "a.csv"
    r = run_cli("solve-fb", "--instance", str(fb_instance), "--gamma", "0.2",
                "--x0", "1,0", "--log", str(log1))
    cfg = json.loads(r.stdout)["config"]
    log2 = tmp_path / "b.csv"
    r2 = run_cli(
        "solve-fb", "--instance", str(fb_instance),
        "--gamma", repr(cfg["gamma"]), "--x0", cfg["x0"],
        "--max-iter", str(cfg["max_iter"]), "--tol", repr(cfg["tol"]),
        "--log", str(log2),
    )
    assert json.loads(r2.stdout)["config"] == cfg
    assert log1.read_bytes() == log2.read_bytes()
