import json
import math

import numpy as np
import pytest

import bvmlab


def test_constant_medium_gives_constant_solution():
    # q = 2, f = 3, g = 1.5: u = 1.5 solves -lap u + q u = f with u = g on the boundary
    u = bvmlab.solve(8, np.full(49, 2.0), f=3.0, g=1.5)
    assert np.allclose(u, 1.5, atol=1e-10)


def test_A_spectrum_closed_form():
    lam = np.sort(bvmlab.eigenvalues_of_A(3))
    assert np.allclose(lam, [2.0, 4.0, 4.0, 6.0])


def test_jacobian_matches_differences():
    q = bvmlab.default_truth(4)
    J = bvmlab.jacobian(4, q)
    p = np.random.default_rng(1).standard_normal(q.size)
    eps = 1e-6
    fd = (bvmlab.solve(4, q + eps * p) - bvmlab.solve(4, q - eps * p)) / (2 * eps)
    assert np.linalg.norm(fd - J @ p) <= 1e-6 * np.linalg.norm(J @ p)
    report = bvmlab.spectral_report(J)
    assert report["d"] == 9
    assert report["asymmetry"] > 0


def test_out_of_box_medium_raises():
    with pytest.raises(ValueError):
        bvmlab.solve(3, np.array([1.0, 2.0, 50.0, 1.0]))


def test_growth_quantities():
    assert bvmlab.delta_n(4, 1e6) == pytest.approx(64 * math.log(4) / 1000, rel=1e-14)
    assert bvmlab.delta_n(2, 4, variant="general") == pytest.approx(math.sqrt(0.5) * 16 * math.log(2), rel=1e-14)
    assert bvmlab.K_of_d(4) == pytest.approx(4 * math.sqrt(4 * 2 * math.log(4)), rel=1e-14)


def test_ball_tail_against_chi_square():
    # chi-square with 2 degrees of freedom: P(|X|^2 > r^2) = exp(-r^2 / 2)
    assert bvmlab.gaussian_ball_tail(np.zeros(2), np.eye(2), math.sqrt(3.5)) == pytest.approx(math.exp(-1.75), rel=1e-6)


def test_posterior_round_trip_and_tv():
    post = bvmlab.Posterior.synthesize(3, 1e5, seed=9)
    assert post.dim == 4
    again = bvmlab.Posterior.from_json(post.to_json())
    assert np.array_equal(again.y, post.y)
    assert again.log_density(post.q0) == post.log_density(post.q0)
    approx = post.gaussian_approx()
    assert np.allclose(approx["cov"], approx["Sigma"] / 1e5)
    tv = post.tv(m=20000, seed=3)
    assert 0.0 <= tv["value"] <= 0.2
    assert tv["method"] == "importance"


def test_scalar_tv_methods_agree():
    post = bvmlab.Posterior.synthesize(2, 1e4, seed=3)
    g = post.tv("grid", cells=4000)
    i = post.tv("importance", m=200000, seed=4)
    assert abs(g["value"] - i["value"]) <= 3 * math.hypot(g["std_err"], i["std_err"])


def test_sweep(tmp_path):
    plan = {"N_list": [2, 3], "n_list": [1e3, 1e5], "seed": 4, "coverage_reps": 10, "chain_steps": 3000,
            "is_samples": 10000, "grid_cells": 400}
    out = bvmlab.run_sweep(plan, tmp_path / "sweep")
    assert out["failed_cells"] == 0
    assert len(out["records"]) == 4
    assert (tmp_path / "sweep" / "records.csv").exists()
    saved = json.loads((tmp_path / "sweep" / "records.json").read_text())
    assert [r["tv_estimate"] for r in saved["records"]] == [r["tv_estimate"] for r in out["records"]]
    assert bvmlab.run_sweep(plan, tmp_path / "sweep")["computed_cells"] == 0
