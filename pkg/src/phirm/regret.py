"""Phi-regret: instantaneous, expected, and cumulative."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .odp import ValidationError, validate_mixed_action
from .transforms import TransformationFamily


def regret_table(family: TransformationFamily, rewards) -> np.ndarray:
    """Regret of every member against every action.

    ``table[..., k, a] = phi_k(a) . r - r[a]``. ``rewards`` may carry leading
    batch axes; the output then has shape ``batch + (|Phi|, n)``.
    """
    r = np.asarray(rewards, dtype=float)
    m = family.matrices  # (K, n, n), m[k, i, a] = phi_k(a)[i]
    k, n, _ = m.shape
    flat = m.transpose(1, 0, 2).reshape(n, k * n)
    table = (r @ flat).reshape(r.shape[:-1] + (k, n))
    return table - r[..., None, :]


def instantaneous_regret(family: TransformationFamily, action, rewards) -> np.ndarray:
    """The Phi-regret vector of having played ``action`` against ``rewards``."""
    table = regret_table(family, rewards)
    action = np.asarray(action)
    if np.any(action < 0) or np.any(action >= family.num_actions):
        raise ValidationError(f"action out of range: {action}")
    if table.ndim == 2:
        return table[:, int(action)]
    return np.take_along_axis(table, action[..., None, None], axis=-1)[..., 0]


def expected_regret(family: TransformationFamily, q, rewards) -> np.ndarray:
    """Exact expectation of the Phi-regret vector when the action is drawn from ``q``."""
    q = validate_mixed_action(q)
    return np.einsum("...ka,...a->...k", regret_table(family, rewards), q)


@dataclass(frozen=True)
class CumulativeRegret:
    values: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size: int, batch: tuple = ()) -> "CumulativeRegret":
        return cls(np.zeros(batch + (size,)), 0)


def accumulate(state: CumulativeRegret, inst) -> CumulativeRegret:
    inst = np.asarray(inst, dtype=float)
    if inst.shape != state.values.shape:
        raise ValidationError(f"regret vector shape {inst.shape} does not match state {state.values.shape}")
    return CumulativeRegret(state.values + inst, state.t + 1)


def realized_objective(state: CumulativeRegret):
    """``max_phi R_t^phi / t`` for one trajectory (or a batch of them)."""
    if state.t < 1:
        raise ValidationError("the objective is undefined at t = 0")
    return np.max(state.values, axis=-1) / state.t
