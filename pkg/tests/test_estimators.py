import numpy as np
import pytest

from phirm.estimators import (
    ExactEstimator,
    LinearEstimator,
    NoisyEstimator,
    QuantizedEstimator,
    estimate,
    make_estimator,
)
from phirm.links import PolynomialLink
from phirm.odp import ValidationError


def _rngs(n, base=0):
    return [np.random.default_rng(base + i) for i in range(n)]


def test_exact_is_an_independent_copy():
    est = ExactEstimator()
    r = np.array([[1.0, -2.0, 3.0]])
    out = estimate(est, r, 1)
    assert np.sum(np.abs(out - r)) == 0
    out[0, 0] = 99.0
    assert r[0, 0] == 1.0


def test_quantized_example():
    assert QuantizedEstimator(1.0)(np.array([0.4, 2.6]), 1).tolist() == [0.0, 3.0]


def test_quantized_matches_scalar_rounding():
    rng = np.random.default_rng(0)
    step = 0.3
    x = rng.uniform(-20, 20, 1000)
    out = QuantizedEstimator(step)(x, 1)
    oracle = [step * round(v / step) for v in x]
    assert np.allclose(out, oracle, rtol=0, atol=1e-12)
    assert np.all(np.abs(out - x) <= step / 2 + 1e-12)


def test_noise_is_bounded_and_uses_the_whole_range():
    est = NoisyEstimator(0.5)
    est.reset(_rngs(1), 4)
    exact = np.zeros((1, 4))
    errs = np.stack([est(exact, t) for t in range(25_000)]).ravel()
    assert errs.size == 10**5
    assert np.max(np.abs(errs)) <= 0.5
    assert errs.min() < -0.49 and errs.max() > 0.49
    assert abs(errs.mean()) < 0.01


def test_noise_blocking_matches_plain_draws():
    est = NoisyEstimator(2.0)
    est.reset(_rngs(3, 10), 5)
    got = np.stack([est(np.zeros((3, 5)), t) for t in range(600)])
    for i, g in enumerate(_rngs(3, 10)):
        want = np.stack([2.0 * (2.0 * g.random(5) - 1.0) for _ in range(600)])
        assert np.array_equal(got[:, i], want)


def test_noise_is_reproducible():
    def draw():
        est = NoisyEstimator(1.0)
        est.reset(_rngs(2, 5), 3)
        return np.stack([est(np.ones((2, 3)), t) for t in range(10)])

    assert draw().tobytes() == draw().tobytes()


def test_zero_noise_is_exact():
    est = NoisyEstimator(0.0)
    est.reset(_rngs(1), 3)
    r = np.array([[1.0, 2.0, 3.0]])
    assert np.array_equal(est(r, 1), r)


def test_linear_one_hot_reproduces_exact_regret():
    est = LinearEstimator()
    est.reset(_rngs(2), 4)
    rng = np.random.default_rng(1)
    for t in range(20):
        r = rng.normal(0, 10, (2, 4))
        assert np.allclose(est(r, t), r, rtol=0, atol=1e-12)


def test_linear_small_learning_rate_lags():
    est = LinearEstimator(learning_rate=0.5)
    est.reset(_rngs(1), 2)
    r = np.array([[4.0, -2.0]])
    assert np.allclose(est(r, 1), [[2.0, -1.0]])
    assert np.allclose(est(r, 2), [[3.0, -1.5]])


def test_low_rank_leaves_irreducible_error():
    est = LinearEstimator(rank=2)
    est.reset(_rngs(1), 5)
    f = est.features
    assert f.shape == (5, 2)
    assert np.linalg.norm(f, 2) == pytest.approx(1.0)
    r = np.array([[3.0, -1.0, 2.0, 0.5, -4.0]])
    for t in range(3000):
        out = est(r, t)
    # gradient descent on a fixed target converges to the least-squares fit
    coef, *_ = np.linalg.lstsq(f, r[0], rcond=None)
    assert np.allclose(out[0], f @ coef, atol=1e-6)
    assert np.sum(np.abs(out - r)) > 0.1


def test_link_error_is_finite_and_zero_when_exact():
    link = PolynomialLink(2)
    rng = np.random.default_rng(2)
    r = rng.normal(0, 5, (10, 6))
    for est in (ExactEstimator(), QuantizedEstimator(0.25), NoisyEstimator(1.0), LinearEstimator(rank=3)):
        est.reset(_rngs(10), 6)
        out = est(r, 1)
        err = np.sum(np.abs(link.apply(r) - link.apply(out)), axis=-1)
        assert np.all(np.isfinite(err))
        if isinstance(est, ExactEstimator):
            assert np.all(err == 0)


def test_factory_and_parameter_errors():
    assert isinstance(make_estimator("quantized", step=0.5), QuantizedEstimator)
    with pytest.raises(ValidationError):
        make_estimator("kalman")
    with pytest.raises(ValidationError):
        NoisyEstimator(-1.0)
    with pytest.raises(ValidationError):
        QuantizedEstimator(0.0)
    with pytest.raises(ValidationError):
        LinearEstimator(learning_rate=0.0)
    with pytest.raises(ValidationError):
        LinearEstimator(rank=0)
    est = LinearEstimator(features=np.eye(3))
    with pytest.raises(ValidationError):
        est.reset(_rngs(1), 4)
