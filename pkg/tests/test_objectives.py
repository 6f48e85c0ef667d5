"""Oracle construction, dataset generation, and gradient consistency."""

import numpy as np
import pytest

from triggerstep.errors import InvalidObjectiveError
from triggerstep.objectives import (LogisticDataset, check_gradient,
                                    generate_dataset, lipschitz_estimate,
                                    load_dataset, make_logistic,
                                    make_quadratic, minimizer_oracle,
                                    save_dataset)


def test_quadratic_constants_exact():
    oracle = make_quadratic(np.array([0.01, 100.0]))
    assert oracle.mu == 2e-2
    assert oracle.lipschitz == 2e2
    assert oracle.n == 2
    assert np.all(oracle.minimizer == 0.0)


def test_quadratic_value_gradient():
    rng = np.random.default_rng(3)
    d = np.array([0.5, 3.0, 7.0])
    oracle = make_quadratic(d)
    for _ in range(20):
        x = rng.normal(size=3)
        assert oracle.value(x) == pytest.approx(float(np.sum(d * x * x)))
        assert np.allclose(oracle.gradient(x), 2.0 * d * x)
    # batch axis passes through
    xs = rng.normal(size=(5, 3))
    assert oracle.value_hook(xs).shape == (5,)
    assert oracle.gradient_hook(xs).shape == (5, 3)


def test_quadratic_rejects_bad_diag():
    with pytest.raises(InvalidObjectiveError):
        make_quadratic(np.array([1.0, -2.0]))
    with pytest.raises(InvalidObjectiveError):
        make_quadratic(np.array([[1.0, 2.0]]))


def test_dataset_roundtrip_and_determinism(tmp_path):
    ds = generate_dataset(7)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_dataset(ds, p1)
    save_dataset(generate_dataset(7), p2)
    assert p1.read_bytes() == p2.read_bytes()
    back = load_dataset(p1)
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.labels, ds.labels)
    assert back.seed == 7


def test_dataset_ranges_many_seeds():
    # feature range and label alphabet across a seed sweep
    for seed in range(10000):
        ds = generate_dataset(seed)
        assert np.all(np.abs(ds.features) <= 5.0)
        assert np.all(np.isin(ds.labels, (-1, 1)))


def test_dataset_validation():
    ds = generate_dataset(0)
    with pytest.raises(InvalidObjectiveError):
        LogisticDataset(features=ds.features[:5], labels=ds.labels[:5], seed=0)
    with pytest.raises(InvalidObjectiveError):
        LogisticDataset(features=np.full((10, 4), 6.0), labels=ds.labels, seed=0)
    bad_labels = ds.labels.copy()
    bad_labels[0] = 2
    with pytest.raises(InvalidObjectiveError):
        LogisticDataset(features=ds.features, labels=bad_labels, seed=0)


def test_logistic_oracle_constants():
    ds = generate_dataset(7)
    oracle = make_logistic(ds)
    assert oracle.mu == 1.0
    # direct eigenvalue oracle for the curvature bound
    lam = float(np.linalg.eigvalsh(ds.features.T @ ds.features).max())
    assert lipschitz_estimate(ds) == pytest.approx(1.0 + lam / 4.0, rel=1e-9)
    assert oracle.minimizer is not None
    assert float(np.linalg.norm(oracle.gradient(oracle.minimizer))) < 1e-8


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(11)
    quad = make_quadratic(np.array([0.01, 100.0]))
    logi = make_logistic(generate_dataset(7))
    for oracle in (quad, logi):
        for _ in range(10):
            x = rng.uniform(-10.0, 10.0, oracle.n)
            assert check_gradient(oracle, x) < 1e-5


def test_minimizer_oracle_quadratic():
    oracle = make_quadratic(np.array([0.5, 2.0]))
    x_star = minimizer_oracle(oracle, x0=np.array([3.0, -4.0]))
    assert np.linalg.norm(x_star) < 1e-10
