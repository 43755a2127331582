import csv
import json
import os
import subprocess

import pytest

CLI = os.environ.get("OBSTACLE_WALK_CLI")
pytestmark = pytest.mark.skipif(not CLI, reason="OBSTACLE_WALK_CLI not set")


def run(*args, cwd=None):
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, cwd=cwd)


@pytest.fixture
def env_file(tmp_path):
    path = tmp_path / "e.env"
    r = run("gen-env", "--d", 2, "--box", "-20:20,-20:20", "--p", 0.7, "--seed", 3,
            "--plant-ball", "0,0,6", "--out", path)
    assert r.returncode == 0, r.stderr
    return path


def test_gen_env_bundle(env_file):
    assert env_file.read_bytes().startswith(b"OBSWALK-ENV\n")


def test_eig_passes_and_reports(env_file, tmp_path):
    out = tmp_path / "eig.json"
    r = run("eig", "--env", env_file, "--domain-ball", "0,0,6", "--out", out)
    assert r.returncode == 0, r.stderr
    bundle = json.loads(out.read_text())
    assert bundle["status"] == "pass"
    assert bundle["format"] == "obstacle-walk-bundle"
    lam = bundle["steps"][0]["outputs"]["lambda1"]
    assert 0.9 < lam < 1.0


def test_solve_pam_csv(env_file, tmp_path):
    out = tmp_path / "p.csv"
    r = run("solve-pam", "--env", env_file, "--start", "0,0", "--t", 10, "--out", out)
    assert r.returncode == 0, r.stderr
    with out.open() as f:
        rows = list(csv.DictReader(f))
    assert rows
    assert "t" in rows[0]


def test_surgery_monotone(env_file, tmp_path):
    out = tmp_path / "s.json"
    r = run("surgery", "--env", env_file, "--op", "remove-ball", "--region", "0,0,10",
            "--domain-ball", "0,0,10", "--out", out)
    assert r.returncode == 0, r.stderr
    outputs = json.loads(out.read_text())["steps"][0]["outputs"]
    assert outputs["delta"] >= 0.0


def test_invariant_failure_exits_one():
    r = run("verify", "--suite", "identities", "--inject-corruption")
    assert r.returncode == 1
    assert "eigen-equation" in r.stdout + r.stderr


def test_bad_input_exits_two(env_file):
    assert run("verify", "--suite", "nonsense").returncode == 2
    assert run("eig", "--no-such-flag").returncode == 2
    assert run("eig", "--env", env_file, "--domain-ball", "0,0,6", "--tol", "-1").returncode == 2


def test_empty_pipeline(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"pipeline": []}))
    r = run("run", "--config", cfg)
    assert r.returncode == 0, r.stderr
    assert json.loads(r.stdout)["steps"] == []


def test_rerun_reproduces_checksums(env_file, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"pipeline": [
        {"command": "eig", "args": {"env": str(env_file), "domain-ball": "0,0,6"}},
        {"command": "profile-compare", "args": {"radii": "8,12", "m-factor": 8}},
    ]}))
    first = tmp_path / "b1.json"
    second = tmp_path / "b2.json"
    assert run("run", "--config", cfg, "--out", first).returncode == 0
    assert run("run", "--config", first, "--out", second).returncode == 0
    a = json.loads(first.read_text())
    b = json.loads(second.read_text())
    assert a["checksums"] == b["checksums"]
    assert [s["checksums"] for s in a["steps"]] == [s["checksums"] for s in b["steps"]]
    assert len(a["steps"]) == 2


def test_localize_with_explicit_rho(tmp_path):
    env = tmp_path / "big.env"
    assert run("gen-env", "--d", 2, "--box", "-60:60,-60:60", "--p", 0.6, "--seed", 5,
               "--plant-ball", "-10,7,12", "--out", env).returncode == 0
    out = tmp_path / "loc.json"
    r = run("localize", "--env", env, "--rho", 12, "--eps-exp", 0.485, "--delta-exp", 0.3, "--out", out)
    assert r.returncode == 0, r.stderr
    outputs = json.loads(out.read_text())["steps"][0]["outputs"]
    assert max(abs(a - b) for a, b in zip(outputs["center"], [-10, 7])) <= 2
    assert outputs["obstacle_count_in_ball"] == 0
    assert run("localize", "--env", env).returncode == 2
