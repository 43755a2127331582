import math

import numpy as np
import pytest

import obstacle_walk as ow


def test_environment_roundtrip(tmp_path):
    env = ow.sample_environment([-10, -10], [10, 10], 0.7, seed=4)
    path = tmp_path / "e.env"
    ow.save_environment(env, str(path))
    assert ow.load_environment(str(path)) == env
    assert ow.deserialize_environment(ow.serialize_environment(env)) == env
    mask = env.closed_mask()
    assert mask.shape == (21, 21)
    assert int(mask.sum()) == env.obstacle_count


def test_planted_ball_matches_lattice_ball():
    env = ow.environment_from_obstacles([-10, -10], [10, 10], [])
    env = env.with_added([[x, y] for x in range(-10, 11) for y in range(-10, 11)])
    planted = ow.plant_vacant_ball(env, [0, 0], 3.0)
    opened = 21 * 21 - planted.obstacle_count
    assert opened == sum(1 for x in range(-3, 4) for y in range(-3, 4) if x * x + y * y <= 9)


def test_principal_pair_of_a_segment():
    # path graph of n sites: lambda = cos(pi / (n + 1))
    dom = ow.Domain([[i] for i in range(10)])
    pair = ow.principal_pair(dom)
    assert pair["lambda1"] == pytest.approx(math.cos(math.pi / 11), abs=1e-12)
    assert pair["phi1"].sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(pair["phi1"] > 0)


def test_survival_matches_monte_carlo():
    env = ow.sample_environment([-15, -15], [15, 15], 0.75, seed=2)
    env = ow.plant_vacant_ball(env, [0, 0], 2.0)
    exact = ow.survival_probability(env, [0, 0], 12)
    mc = ow.sample_paths(env, [0, 0], 12, 20000, seed=9)
    assert abs(mc["estimate"] - exact) < 5 * mc["standard_error"]


def test_green_symmetry_and_capacity():
    dom = ow.ball_domain([0, 0], 6.0)
    g = ow.greens_function(dom, [[0, 0], [2, 1]], [[0, 0], [2, 1]])
    assert g[0, 1] == pytest.approx(g[1, 0], abs=1e-10)
    cap = ow.capacity([[0, 0, 0]], margins=[4, 8, 16])
    assert 0.6 < cap["capacity"] < 0.72


def test_invalid_input_raises_value_error():
    with pytest.raises(ValueError):
        ow.sample_environment([0, 0], [5], 0.5)


def test_verify_negative_control():
    report = ow.verify("identities", inject_corruption=True)
    assert not report["pass"]
    failed = [c for c in report["cases"] if not c["pass"]]
    assert [c["invariant"] for c in failed] == ["eigen-equation"]
