"""Exact and approximate (Phi, f)-regret-matching.

At each step the learner weights every transformation by the link applied to
its (estimated) cumulative regret, mixes the transformation matrices into a
column-stochastic operator, and plays a fixed point of that operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .estimators import ExactEstimator
from .odp import ValidationError
from .regret import regret_table
from .transforms import TransformationFamily

POWER_DAMPING = 0.99
POWER_MAX_ITER = 100_000


class SolverError(RuntimeError):
    pass


class DegenerateWeights(ValueError):
    """All weights are zero; the caller decides what to play."""


def assemble_operator(family: TransformationFamily, weights) -> np.ndarray:
    """``sum_k w_k [phi_k] / sum_k w_k``; ``weights`` may be batched ``(runs, |Phi|)``."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ValidationError("weights must be nonnegative")
    total = w.sum(axis=-1)
    if np.any(total <= 0):
        raise DegenerateWeights("weights sum to zero")
    m = family.matrices
    k, n, _ = m.shape
    op = (w @ m.reshape(k, n * n)).reshape(w.shape[:-1] + (n, n))
    return op / total[..., None, None]


def power_iteration(op, tol: float = 1e-10, max_iter: int = POWER_MAX_ITER) -> np.ndarray:
    """Damped power iteration from the uniform distribution for one operator."""
    op = np.asarray(op, dtype=float)
    n = op.shape[0]
    q = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        mq = op @ q
        if np.max(np.abs(mq - q)) <= tol:
            return q
        q = POWER_DAMPING * mq + (1.0 - POWER_DAMPING) * q
        q /= q.sum()
    raise SolverError(f"power iteration did not reach tolerance {tol} in {max_iter} iterations")


def lazy_limit(op, max_squarings: int = 64) -> np.ndarray:
    """Limit of the damped chain started at uniform, by repeated squaring.

    Same target as :func:`power_iteration` but reaches it to rounding error
    even when the chain mixes slowly.
    """
    op = np.asarray(op, dtype=float)
    n = op.shape[0]
    p = POWER_DAMPING * op + (1.0 - POWER_DAMPING) * np.eye(n)
    for _ in range(max_squarings):
        p2 = p @ p
        p2 /= p2.sum(axis=0, keepdims=True)
        if np.max(np.abs(p2 - p)) <= 1e-15:
            p = p2
            break
        p = p2
    q = p @ np.full(n, 1.0 / n)
    return q / q.sum()


def closed_classes(op) -> np.ndarray:
    """Number of closed communicating classes of each column-stochastic operator.

    Depends only on which entries are positive, so rescaling the weights
    never changes it. The fixed point is unique exactly when this is 1.
    """
    op = np.asarray(op, dtype=float)
    n = op.shape[-1]
    # reach[..., i, j]: j is reachable from i (column i is the move out of i)
    reach = (np.swapaxes(op, -1, -2) > 0) | np.eye(n, dtype=bool)
    for _ in range(max(1, int(np.ceil(np.log2(n))))):
        reach = np.einsum("...ij,...jk->...ik", reach.astype(np.int64), reach.astype(np.int64)) > 0
    back = np.swapaxes(reach, -1, -2)
    recurrent = np.all(~reach | back, axis=-1)
    earlier = np.tril(np.ones((n, n), dtype=bool), -1)
    first = recurrent & ~np.any(reach & earlier & recurrent[..., None, :], axis=-1)
    return first.sum(axis=-1)


def _clean(q):
    q = np.where(q < 0, 0.0, q)
    return q / q.sum(axis=-1, keepdims=True)


def _residual(op, q):
    return np.max(np.abs(np.einsum("...ij,...j->...i", op, q) - q), axis=-1)


def linear_fixed_point(op) -> np.ndarray:
    """Solve ``(M - I) q = 0`` with the last equation replaced by ``sum(q) = 1``.

    Returns NaNs for systems LAPACK reports as exactly singular.
    """
    op = np.asarray(op, dtype=float)
    n = op.shape[-1]
    system = op - np.eye(n)
    system[..., -1, :] = 1.0
    rhs = np.zeros(op.shape[:-1])
    rhs[..., -1] = 1.0
    try:
        return np.linalg.solve(system, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        if op.ndim == 2:
            return np.full(n, np.nan)
        return np.stack([linear_fixed_point(o) for o in op])


def fixed_point(op, tol: float = 1e-10) -> np.ndarray:
    """A distribution ``q`` with ``||M q - q||_inf <= tol``.

    Uses a dense linear solve when the fixed point is unique. Otherwise (or
    when the solve is numerically unusable) it takes the limit of damped power
    iteration from uniform (evaluated by :func:`lazy_limit`), which makes the
    choice deterministic and independent of the weights' scale; for the
    identity that choice is the uniform distribution.
    """
    op = np.asarray(op, dtype=float)
    single = op.ndim == 2
    ops = op[None] if single else op
    q = np.full(ops.shape[:-1], np.nan)
    unique = closed_classes(ops) == 1
    if np.any(unique):
        q[unique] = linear_fixed_point(ops[unique])
    bad = ~np.all(np.isfinite(q), axis=-1)
    bad |= np.any(q < -1e-9, axis=-1)
    ok = ~bad
    q[ok] = _clean(q[ok])
    bad[ok] = _residual(ops[ok], q[ok]) > tol
    for i in np.flatnonzero(bad):
        q[i] = lazy_limit(ops[i])
        if _residual(ops[i], q[i]) > tol:
            q[i] = power_iteration(ops[i], tol)
    return q[0] if single else q


@dataclass
class MatcherConfig:
    family: TransformationFamily
    link: object
    estimator: object = field(default_factory=ExactEstimator)
    fixed_point_tolerance: float = 1e-10
    degenerate_policy: str = "uniform"

    def __post_init__(self):
        if not (0 < self.fixed_point_tolerance <= 1e-4):
            raise ValidationError(f"fixed_point_tolerance must be in (0, 1e-4], got {self.fixed_point_tolerance}")
        if self.degenerate_policy != "uniform":
            raise ValidationError(f"unsupported degenerate policy {self.degenerate_policy!r}")


def step(config: MatcherConfig, exact_regret, estimated_regret):
    """Mixed actions for a batch of regret states, plus a per-run step trace.

    Plays the fixed point of the operator built from ``f(estimated)`` where
    those weights are not all zero, and uniform elsewhere.
    """
    exact_regret = np.asarray(exact_regret, dtype=float)
    estimated_regret = np.asarray(estimated_regret, dtype=float)
    single = exact_regret.ndim == 1
    if single:
        exact_regret, estimated_regret = exact_regret[None], estimated_regret[None]
    n = config.family.num_actions
    y, y_est = config.link.apply_pair(exact_regret, estimated_regret)

    q = np.full((y.shape[0], n), 1.0 / n)
    residual = np.zeros(y.shape[0])
    live = y_est.sum(axis=-1) > 0
    if np.any(live):
        op = assemble_operator(config.family, y_est[live])
        q[live] = fixed_point(op, config.fixed_point_tolerance)
        residual[live] = _residual(op, q[live])

    trace = {
        "regret": exact_regret,
        "regret_est": estimated_regret,
        "y": y,
        "y_est": y_est,
        "y_error": np.sum(np.abs(y - y_est), axis=-1),
        "residual": residual,
        "degenerate": ~live,
    }
    if single:
        return q[0], {k: v[0] for k, v in trace.items()}
    return q, trace


class RegretMatcher:
    """A (Phi, f)-regret-matching learner over a batch of independent runs."""

    def __init__(self, config: MatcherConfig):
        self.config = config
        self.num_actions = config.family.num_actions

    def reset(self, rngs):
        k = len(self.config.family)
        self.regret = np.zeros((len(rngs), k))
        self.t = 0
        self.config.estimator.reset(rngs, k)

    def play(self):
        est = self.config.estimator(self.regret, self.t)
        return step(self.config, self.regret, est)

    def observe(self, actions, rewards):
        table = regret_table(self.config.family, rewards)
        self.regret = self.regret + np.take_along_axis(
            table, np.asarray(actions)[:, None, None], axis=-1)[..., 0]
        self.t += 1
