import json

import numpy as np
import pytest

import mineica


def test_benchmark_shapes():
    b = mineica.benchmark(0)
    assert b["sources"].shape == (3, 2000)
    assert b["observations"].shape == (3, 2000)
    np.testing.assert_allclose(b["mixing"] @ b["sources"], b["observations"], atol=1e-12)


def test_whiten_identity_covariance():
    rng = np.random.default_rng(0)
    z = rng.normal(size=(256, 3)) @ np.array([[2.0, 0.3, 0.0], [0.0, 1.0, 0.5], [0.1, 0.0, 3.0]])
    y = mineica.whiten(z)
    cov = np.cov(y, rowvar=False, bias=True)
    assert np.abs(cov - np.eye(3)).max() < 1e-6
    assert np.abs(y.mean(axis=0)).max() < 1e-9


def test_fastica_recovers_benchmark():
    b = mineica.benchmark(1)
    r = mineica.fastica(b["observations"], 3, seed=1)
    assert r["converged"]
    assert mineica.matched_correlation(r["sources"], b["sources"])["mean"] > 0.9
    assert mineica.amari_index(r["unmixing"] @ b["mixing"]) < 0.05


def test_amari_and_mi_closed_forms():
    assert mineica.amari_index(np.ones((3, 3))) == pytest.approx(1.0)
    assert mineica.amari_index(np.eye(3)) == 0.0
    assert mineica.gaussian_mutual_information(0.0) == 0.0
    assert mineica.gaussian_mutual_information(0.5) == pytest.approx(-0.5 * np.log(0.75))


def test_short_training_run():
    b = mineica.benchmark(2)
    r = mineica.train(b["observations"], 3, seed=2, encoder_epochs=2)
    assert r["unmixing"].shape == (3, 3)
    assert r["trace"]["mine_steps"] == 14
    assert len(r["trace"]["loss_after_E"]) == 2


def test_gaussian_mi_estimate():
    r = mineica.estimate_gaussian_mi(0.5, samples=1000, epochs=50)
    assert np.isfinite(r["estimate"])
    assert len(r["trajectory"]) == 50


def test_gradcheck_suite_passes():
    results = dict(mineica.gradcheck())
    assert "whiten" in results
    assert max(results.values()) < 1e-4


def test_run_experiment(tmp_path):
    cfg = {"seed": 3, "encoder_epochs": 2, "samples": 200, "emit_plots": False}
    mine, fast = mineica.run_experiment(cfg, tmp_path)
    assert mine["method"] == "mine-ica"
    assert fast["method"] == "fastica"
    report = json.loads((tmp_path / "report.json").read_text())
    assert len(report) == 2


def test_bad_config_raises():
    with pytest.raises(ValueError):
        mineica.run_experiment({"no_such_key": 1})
