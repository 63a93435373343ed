import math

import pytest

import schrolab


def test_free_spectrum_matches_closed_form():
    n = 200
    d = schrolab.potential_diagonal("critical", 0.0, "gaussian", n, schrolab.SeedSpec(1, 0))
    assert d == [0.0] * n
    eigs = schrolab.eigenvalues_in_interval(d, -2.5, 2.5)
    exact = sorted(2 * math.cos(math.pi * k / (n + 1)) for k in range(1, n + 1))
    assert len(eigs) == n
    assert max(abs(a - b) for a, b in zip(eigs, exact)) < 1e-9
    assert schrolab.sturm_count(d, 0.0) == n // 2


def test_rescaled_eigenvalues_lattice_at_zero_noise():
    d = schrolab.potential_diagonal("critical", 0.0, "gaussian", 1000, schrolab.SeedSpec(1, 0))
    pts = schrolab.rescaled_eigenvalues(d, 1.0, 20.0)
    assert pts
    for p in pts:
        k = round(p / (2 * math.pi))
        # Band curvature moves the points by O(lambda^2 / n).
        assert abs(p - 2 * math.pi * k) < 0.1


def test_tapes_are_reproducible():
    a = schrolab.NoiseTape.make(schrolab.SeedSpec(3, 4), 0.01, 100)
    b = schrolab.NoiseTape.make(schrolab.SeedSpec(3, 4), 0.01, 100)
    assert a.channel("B2") == b.channel("B2")
    assert a.refined().steps == 200
    with pytest.raises(ValueError):
        a.channel("X")


def test_sch_points_zero_tape_is_lattice():
    tape = schrolab.NoiseTape.zero(1e-3, 1000)
    pts = schrolab.sample_sch_points(1.0, 0.0, 4 * math.pi, tape)
    assert len(pts) == 2
    assert abs(pts[0]) < 1e-3
    assert abs(pts[1] - 2 * math.pi) < 1e-3


def test_theta_density_normalized():
    assert abs(schrolab.theta_mass(0.0, 2 * math.pi, 1.0) - 1.0) < 1e-10


def test_run_and_replay(tmp_path):
    out = tmp_path / "run"
    res = schrolab.run_experiment("phase-marginal", paths=30, dt=1e-3, output_dir=str(out))
    assert res["manifest"]["experiment"] == "phase-marginal"
    assert {r["name"] for r in res["reports"]} >= {"phase-mean", "phase-variance"}
    assert "phase.csv" in res["data"]
    r1 = schrolab.replay(out, "tape:3")
    r2 = schrolab.replay(out, "tape:3", workers=1)
    assert r1["output"] == r2["output"] and r1["config_matches"]
    assert not schrolab.replay(out, "tape:3", dt=5e-4)["config_matches"]


def test_config_errors_name_the_key():
    with pytest.raises(schrolab.ConfigError, match="E"):
        schrolab.run_experiment("phase-marginal", E=2)
    assert schrolab.config_hash("gap", workers=1) == schrolab.config_hash("gap", workers=4)
    assert "gap" in schrolab.experiment_names()
