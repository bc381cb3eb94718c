"""Regret estimators standing in for a function approximator.

Each estimator maps the exact cumulative regrets ``(runs, |Phi|)`` to an
estimate of the same shape. ``reset`` binds one generator per run; stateful
estimators keep per-run state from there on.
"""

from __future__ import annotations

import numpy as np

from .odp import ValidationError


class ExactEstimator:
    kind = "exact"

    def reset(self, rngs, size):
        pass

    def __call__(self, exact, t):
        return np.array(exact, dtype=float, copy=True)


class NoisyEstimator:
    """Adds independent ``Uniform[-scale, scale]`` noise to every entry."""

    kind = "noisy"

    def __init__(self, scale: float):
        if not (scale >= 0 and np.isfinite(scale)):
            raise ValidationError(f"noise scale must be >= 0, got {scale}")
        self.scale = float(scale)

    block = 256

    def reset(self, rngs, size):
        self.rngs = list(rngs)
        self.size = size
        self._buf = None
        self._pos = self.block

    def _refill(self):
        # draws are consumed in generator order, so blocking does not change them
        u = np.stack([g.random((self.block, self.size)) for g in self.rngs], axis=1)
        self._buf = self.scale * (2.0 * u - 1.0)
        self._pos = 0

    def __call__(self, exact, t):
        exact = np.asarray(exact, dtype=float)
        if self._pos >= self.block:
            self._refill()
        noise = self._buf[self._pos]
        self._pos += 1
        return exact + noise.reshape(exact.shape)


class QuantizedEstimator:
    """Rounds every entry to the nearest multiple of ``step`` (ties to even)."""

    kind = "quantized"

    def __init__(self, step: float):
        if not (step > 0 and np.isfinite(step)):
            raise ValidationError(f"quantization step must be > 0, got {step}")
        self.step = float(step)

    def reset(self, rngs, size):
        pass

    def __call__(self, exact, t):
        return self.step * np.round(np.asarray(exact, dtype=float) / self.step)


class LinearEstimator:
    """Online least squares over per-transformation features.

    The estimate is ``features @ w`` where ``w`` takes one gradient step on
    ``0.5 * ||exact - features @ w||^2`` per call. With the default one-hot
    features and ``learning_rate=1`` it reproduces the exact regrets. A
    ``rank`` below ``|Phi|`` swaps in a seeded random projection (scaled to
    unit spectral norm), which leaves an error the regressor cannot remove.
    """

    kind = "linear"

    def __init__(self, learning_rate: float = 1.0, rank: int | None = None,
                 features=None, projection_seed: int = 0):
        if not (learning_rate > 0 and np.isfinite(learning_rate)):
            raise ValidationError(f"learning_rate must be > 0, got {learning_rate}")
        if rank is not None and rank < 1:
            raise ValidationError(f"rank must be >= 1, got {rank}")
        self.learning_rate = float(learning_rate)
        self.rank = rank
        self.projection_seed = projection_seed
        self._given = None if features is None else np.asarray(features, dtype=float)

    def reset(self, rngs, size):
        if self._given is not None:
            if self._given.shape[0] != size:
                raise ValidationError(f"feature matrix has {self._given.shape[0]} rows, family has {size}")
            self.features = self._given
        elif self.rank is None or self.rank >= size:
            self.features = np.eye(size)
        else:
            proj = np.random.default_rng(self.projection_seed).standard_normal((size, self.rank))
            self.features = proj / np.linalg.norm(proj, 2)
        self.weights = np.zeros((len(rngs), self.features.shape[1]))

    def __call__(self, exact, t):
        exact = np.asarray(exact, dtype=float)
        resid = exact - self.weights @ self.features.T
        self.weights = self.weights + self.learning_rate * resid @ self.features
        return self.weights @ self.features.T


def make_estimator(kind: str, **params):
    kinds = {
        "exact": ExactEstimator,
        "noisy": NoisyEstimator,
        "quantized": QuantizedEstimator,
        "linear": LinearEstimator,
    }
    if kind not in kinds:
        raise ValidationError(f"unknown estimator kind {kind!r}")
    return kinds[kind](**params)


def estimate(estimator, exact, t):
    return estimator(exact, t)
