"""Smoke tests for the python bindings."""

import math

import numpy as np
import pytest

import maada


def small_config(**overrides):
    config = maada.default_config()
    config.update(
        {"layer_sizes": [8], "epochs": 3, "batch_size": 16, "k": 5, "seed": 1}
    )
    config.update(overrides)
    return config


def test_version_and_prng_id():
    assert maada.__version__
    assert "mt19937_64" in maada.PRNG_ALGORITHM


def test_two_moons_shapes_balance_determinism():
    ds = maada.gen_two_moons(100, 0.1, 7)
    x = ds.x
    assert x.shape == (100, 2)
    labels = ds.labels
    assert sorted(set(labels)) == [0, 1]
    assert labels.count(0) == 50
    again = maada.gen_two_moons(100, 0.1, 7)
    np.testing.assert_array_equal(x, again.x)


def test_rotate_preserves_norms_and_drops_labels():
    ds = maada.gen_two_moons(40, 0.1, 3)
    turned = maada.rotate(ds, math.radians(30), retag="target", drop_labels=True)
    np.testing.assert_allclose(
        np.linalg.norm(ds.x, axis=1), np.linalg.norm(turned.x, axis=1), atol=1e-12
    )
    assert set(turned.labels) == {-1}
    assert set(turned.domains) == {"target"}


def test_csv_round_trip(tmp_path):
    ds = maada.gen_two_moons(25, 0.2, 9)
    path = str(tmp_path / "ds.csv")
    maada.save_csv(ds, path)
    back = maada.load_csv(path)
    np.testing.assert_array_equal(ds.x, back.x)
    assert back.labels == ds.labels


def test_predict_proba_rows_normalize():
    params = maada.init_mlp([2, 8, 2], seed=0)
    x = np.random.default_rng(0).normal(size=(10, 2))
    proba = maada.predict_proba(params, x)
    np.testing.assert_allclose(proba.sum(axis=1), np.ones(10), atol=1e-9)
    assert (proba >= 0).all()


def test_mmd_identity_and_closed_form():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(6, 3))
    assert abs(maada.mmd_rbf(a, a, 0.5)) < 1e-12
    d, sigma = 1.3, 0.7
    got = maada.mmd_rbf(np.zeros((1, 2)), np.array([[d, 0.0]]), sigma)
    expected = 2.0 * (1.0 - math.exp(-(d**2) / (2.0 * sigma**2)))
    assert abs(got - expected) < 1e-10


def test_geo_discrepancy_identity():
    ds = maada.gen_two_moons(80, 0.1, 2)
    geod = maada.geo_discrepancy(ds.x, ds.x, k=6, m=1)
    assert geod["supinf"] == 0.0
    assert geod["curvgap"] < 1e-9


def test_decompose_reconstructs():
    basis = np.array([[1.0], [0.0]])
    on, off = maada.decompose(np.array([3.0, 4.0]), basis)
    assert on == [3.0, 0.0]
    assert off == [0.0, 4.0]


def test_train_runs_and_is_deterministic():
    source = maada.gen_two_moons(64, 0.1, 1)
    target = maada.rotate(
        maada.gen_two_moons(64, 0.1, 2), math.radians(30), retag="target", drop_labels=True
    )
    params1, metrics1 = maada.train(small_config(), source, target)
    params2, metrics2 = maada.train(small_config(), source, target)

    records1, records2 = metrics1["records"], metrics2["records"]
    assert len(records1) == 3
    for r1, r2 in zip(records1, records2):
        for key in ("l_src", "l_adv", "l_cons", "l_align", "l_total", "source_accuracy"):
            assert r1[key] == r2[key]
        assert math.isfinite(r1["l_total"])

    accuracy, loss = maada.evaluate(params1, source)
    assert 0.0 <= accuracy <= 1.0
    assert loss >= 0.0


def test_bound_report_keys_and_lambda_star_gate():
    source = maada.gen_two_moons(60, 0.1, 4)
    oracle = maada.rotate(maada.gen_two_moons(60, 0.1, 5), 0.5, retag="target")
    target = maada.rotate(maada.gen_two_moons(60, 0.1, 5), 0.5, retag="target", drop_labels=True)
    params, _ = maada.train_erm(small_config(), source)

    report = maada.bound_report(params, source, target, config=small_config())
    for key in ("r_hat_s", "epsilon_c", "geod", "rhs_partial", "c_over_eps2n"):
        assert key in report
    assert "lambda_star_upper" not in report

    full = maada.bound_report(params, source, target, oracle, small_config())
    assert full["lambda_star_upper"] >= 0.0


def test_config_validation_raises():
    source = maada.gen_two_moons(40, 0.1, 1)
    target = maada.rotate(maada.gen_two_moons(40, 0.1, 2), 0.3, retag="target", drop_labels=True)
    with pytest.raises(ValueError):
        maada.train(small_config(learning_rate=-1.0), source, target)
    with pytest.raises(ValueError):
        maada.train(small_config(unknown_field=1), source, target)
