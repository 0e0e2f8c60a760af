"""Smoke tests for the python bindings."""

import json
import math

import numpy as np
import pytest

import bmfmc


def test_speedup_values():
    assert bmfmc.mf_speedup(4.5, 7000, 50) == pytest.approx(4.36, abs=5e-3)
    assert bmfmc.mf_speedup(10.0, 7000, 50) == pytest.approx(9.33, abs=5e-3)
    assert bmfmc.mf_speedup(28.0, 7000, 50) == pytest.approx(23.33, abs=5e-3)
    assert bmfmc.lf_speedup(6, 3) == pytest.approx(8.662, abs=1e-2)
    assert bmfmc.mc_standard_error(1.0, 10**4) == 0.01


def test_sampling_is_seeded():
    a = bmfmc.sample_scalar("normal", 0.0, 1.0, 1000, seed=7)
    b = bmfmc.sample_scalar("normal", 0.0, 1.0, 1000, seed=7)
    np.testing.assert_array_equal(a, b)
    assert abs(a.mean()) < 0.2


def test_gp_interpolates_smooth_data():
    x = np.linspace(0.0, 3.0, 15).reshape(-1, 1)
    y = np.sin(x[:, 0])
    model = bmfmc.gp_fit(x, y, mean_mode="zero", restarts=8, seed=42)
    mean, var, noise = bmfmc.gp_predict(model, x)
    assert np.max(np.abs(mean - y)) < 1e-3 * (y.max() - y.min())
    assert noise < 1e-4 * y.var()
    assert np.all(var >= 0.0)


def test_density_mean_integrates_to_one():
    rng = np.random.default_rng(3)
    z_train = rng.uniform(-2, 2, size=(20, 1))
    y_train = np.tanh(z_train[:, 0]) + 0.1 * rng.standard_normal(20)
    model = bmfmc.gp_make(1.0, 0.5, 0.01, z_train, y_train, mean_mode="zero")

    z_star = rng.uniform(-2, 2, size=(500, 1))
    grid = bmfmc.support_grid(-6.0, 6.0, 300)
    dens = bmfmc.density_mean(model, z_star, grid)
    integral = np.trapz(dens, grid)
    assert 0.995 < integral < 1.005

    var = bmfmc.density_variance(model, z_star[:100], grid,
                                 bmfmc.density_mean(model, z_star[:100], grid))
    assert np.all(var >= 0.0)


def test_kld_gaussian_closed_form():
    grid = np.linspace(-10, 10, 2001)
    p = np.exp(-0.5 * grid**2) / math.sqrt(2 * math.pi)
    q = np.exp(-0.5 * (grid - 0.5) ** 2) / math.sqrt(2 * math.pi)
    assert bmfmc.kld(grid, p, q) == pytest.approx(0.125, rel=0.02)


def test_kle_roundtrip():
    grid = np.linspace(0.0, 1.0, 40).reshape(-1, 1)
    amp = np.ones(40)
    cov = bmfmc.field_covariance(grid, np.zeros(40), amp, 0.2)
    basis = bmfmc.kle_fit_covariance(cov, np.zeros(40), threshold=1.0, max_order=40)
    rows = bmfmc.sample_field(grid, np.zeros(40), amp, 0.2, 10, seed=5)
    coeffs = bmfmc.kle_project(basis, rows)
    rec = bmfmc.kle_reconstruct(basis, coeffs)
    assert np.max(np.abs(rows - rec)) < 1e-6 * np.max(np.abs(rows))


def test_pipeline_end_to_end(tmp_path):
    config = {
        "seed": 13,
        "n_sample": 500,
        "n_train": 25,
        "n_gamma": 1,
        "n_gamma_plus": 3,
        "n_variance": 60,
        "support": {"points": 80, "margin_rel": 0.15},
        "model": {"source": "harness", "family": "hidden-bimodal", "knobs": {}},
        "reference": {"n_ref": 2000, "seed": 424242},
    }
    out_a = bmfmc.run_pipeline(json.dumps(config), str(tmp_path / "a"))
    assert out_a["hf_evals"] == 25
    integral = np.trapz(np.asarray(out_a["mean"]), np.asarray(out_a["support"]))
    assert 0.95 < integral < 1.01

    out_b = bmfmc.run_pipeline(json.dumps(config), str(tmp_path / "b"))
    np.testing.assert_array_equal(np.asarray(out_a["mean"]), np.asarray(out_b["mean"]))
    np.testing.assert_array_equal(np.asarray(out_a["variance"]),
                                  np.asarray(out_b["variance"]))


def test_usage_errors_surface_as_python_exceptions():
    with pytest.raises(ValueError):
        bmfmc.sample_scalar("uniform", 1.0, 1.0, 10, seed=1)
    with pytest.raises(ValueError):
        bmfmc.mc_standard_error(1.0, 0)
