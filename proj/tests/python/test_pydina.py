import math

import numpy as np
import pytest

pydina = pytest.importorskip("pydina")


def test_simulate_shapes():
    d = pydina.simulate("gaussian", n=500, seed=2)
    assert d["x"].shape == (500, 5)
    assert d["w"].shape == (500,)
    assert d["y"].shape == (500,)
    assert d["beta"].shape == (6,)
    assert set(np.unique(d["w"])) <= {0, 1}


def test_simulate_cox_has_event_indicator():
    d = pydina.simulate("cox", n=500, seed=2)
    assert "delta" in d
    assert set(np.unique(d["delta"])) <= {0.0, 1.0}
    assert (d["y"] >= 0).all()


def test_fit_recovers_effect():
    d = pydina.simulate("poisson", n=8000, seed=11)
    beta = pydina.fit(d["x"], d["w"], d["y"], family="poisson", method="dina", seed=3)
    assert beta.shape == d["beta"].shape
    assert np.max(np.abs(beta - d["beta"])) < 0.15


def test_fit_is_deterministic():
    d = pydina.simulate("bernoulli", n=2000, seed=4)
    args = (d["x"], d["w"], d["y"])
    b1 = pydina.fit(*args, family="bernoulli", method="dina", seed=9)
    b2 = pydina.fit(*args, family="bernoulli", method="dina", seed=9)
    np.testing.assert_array_equal(b1, b2)


def test_all_methods_run():
    d = pydina.simulate("gaussian", n=1500, seed=6)
    for method in ["dina", "e", "se", "x", "pax"]:
        beta = pydina.fit(d["x"], d["w"], d["y"], family="gaussian", method=method)
        assert np.isfinite(beta).all()


def test_bootstrap_intervals_bracket_estimate():
    d = pydina.simulate("gaussian", n=1500, seed=8)
    out = pydina.bootstrap(d["x"], d["w"], d["y"], family="gaussian", B=30, seed=8)
    assert (out["ci_lo"] <= out["beta"]).all()
    assert (out["beta"] <= out["ci_hi"]).all()
    assert (out["se"] > 0).all()


def test_blend_weight_gaussian_equals_propensity():
    # equal-variance arms: the weighting leaves the propensity unchanged
    assert pydina.blend_weight("gaussian", 0.3, -1.0, 2.0) == pytest.approx(0.3)


def test_blend_weight_poisson_tilts_toward_higher_variance_arm():
    a = pydina.blend_weight("poisson", 0.5, 0.0, 1.0)
    assert a == pytest.approx(math.e / (1 + math.e))


def test_run_experiment_writes_csv(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "experiment = orthogonality\nfamily = poisson\nn_grid = 2000\nreps = 2\nseed = 5\n"
    )
    pydina.run_experiment(str(cfg), out=str(tmp_path / "out"))
    assert (tmp_path / "out" / "orthogonality.csv").is_file()
