"""Regret bound evaluators and an online monitor for simulated runs.

The monitor logs, per run and step, the Blackwell inner product against its
allowance ``2U||Y - Y~||_1``, the running link-error sum measured with the
bound's own ``g``, the resulting bound on the average regret, and the Gordon
potential against its cumulative allowance.
"""

from __future__ import annotations

import numpy as np

from .links import ExponentialLink, PolynomialLink, triple_for
from .odp import ValidationError
from .regret import regret_table
from .transforms import TransformationFamily, maximal_activation

BLACKWELL_SLACK = 1e-8

COLUMNS = (
    "realized_objective",
    "blackwell_lhs",
    "blackwell_rhs",
    "g_error_sum",
    "theorem_rhs",
    "potential",
    "potential_bound",
)


def blackwell_check(y, q, rewards, reward_bound, y_est, family: TransformationFamily):
    """``(lhs, rhs, ok)`` with ``lhs = y . E_q[rho(a, r)]`` and ``rhs = 2U||y - y_est||_1``."""
    table = regret_table(family, rewards)
    exp_reg = np.einsum("...ka,...a->...k", table, np.asarray(q, dtype=float))
    lhs = np.sum(np.asarray(y) * exp_reg, axis=-1)
    rhs = 2.0 * reward_bound * np.sum(np.abs(np.asarray(y) - np.asarray(y_est)), axis=-1)
    return lhs, rhs, lhs <= rhs + BLACKWELL_SLACK


def _check_link(link):
    if not isinstance(link, (PolynomialLink, ExponentialLink)):
        raise ValidationError(f"no regret bound for link {link!r}")


def sup_gamma(link, reward_bound, mu, family_size=None, literal_p_le_2=False):
    """Worst-case curvature ``sup gamma(rho)`` over single-step regret vectors.

    Uses ``||rho||_p <= U mu^(1/p)`` for the polynomial cases and
    ``||rho||_inf <= U`` for the exponential one. ``literal_p_le_2`` multiplies
    the ``p <= 2`` constant by ``p - 1``; that variant is exposed for
    comparison only and is not a valid triple below ``p = 2``.
    """
    _check_link(link)
    u = float(reward_bound)
    if isinstance(link, ExponentialLink):
        return 0.5 * link.eta * u * u
    p = link.p
    if p > 2:
        return (p - 1) * u * u * mu ** (2.0 / p)
    c = u**p * mu
    return (p - 1) * c if literal_p_le_2 else c


def potential_at_zero(link, family_size):
    _check_link(link)
    if isinstance(link, ExponentialLink):
        return np.log(family_size) / link.eta
    return 0.0


def theorem_rhs(link, family: TransformationFamily, reward_bound, t, g_error_sum, mu=None):
    """Bound on ``E[max_phi R_t^phi] / t`` for approximate regret matching.

    ``g_error_sum`` is ``sum_{k<=t} ||g(R_{k-1}) - g(R~_{k-1})||_1`` with the
    bound's ``g``. Vectorised over ``t`` and ``g_error_sum``. ``mu`` may be
    passed to skip recomputing the family's maximal activation.
    """
    _check_link(link)
    t = np.asarray(t, dtype=float)
    err = np.asarray(g_error_sum, dtype=float)
    if np.any(t < 1):
        raise ValidationError("bounds need t >= 1")
    if np.any(err < 0):
        raise ValidationError("g_error_sum must be nonnegative")
    u = float(reward_bound)
    if mu is None:
        mu = maximal_activation(family)
    slack = 2.0 * u * err
    if isinstance(link, ExponentialLink):
        return (np.log(len(family)) / link.eta + slack) / t + 0.5 * link.eta * u * u
    p = link.p
    if p > 2:
        return np.sqrt(t * (p - 1) * u * u * mu ** (2.0 / p) + slack) / t
    return (t * u**p * mu + slack) ** (1.0 / p) / t


class BoundMonitor:
    """Online evaluator of the regret bounds over a batch of runs.

    Feed it the matcher's step trace through :func:`phirm.odp.run_odp`; it
    tracks the exact regret itself from the sampled actions.
    """

    def __init__(self, family: TransformationFamily, link, reward_bound: float):
        self.family = family
        self.link = link
        self.reward_bound = float(reward_bound)
        self.triple = triple_for(link)
        self.mu = maximal_activation(family)
        self.c_gamma = sup_gamma(link, reward_bound, self.mu, len(family))
        self.g0 = potential_at_zero(link, len(family))

    def start(self, n_runs, horizon):
        k = len(self.family)
        self.regret = np.zeros((n_runs, k))
        self.err_sum = np.zeros(n_runs)
        self.pot_bound = np.full(n_runs, self.g0, dtype=float)
        self.cols = {c: np.empty((horizon, n_runs)) for c in COLUMNS}
        self.cols["residual"] = np.zeros((horizon, n_runs))
        self.cols["y_sum"] = np.empty((horizon, n_runs))

    def update(self, t, q, actions, rewards, info):
        u = self.reward_bound
        r_prev = info["regret"]
        if np.max(np.abs(r_prev - self.regret)) > 1e-9 * max(1.0, t * u):
            raise RuntimeError("learner regret state drifted from the monitor's")
        y, y_est = info["y"], info["y_est"]

        table = regret_table(self.family, rewards)
        exp_reg = np.einsum("ska,sa->sk", table, q)
        lhs = np.sum(y * exp_reg, axis=-1)
        rhs = 2.0 * u * np.sum(np.abs(y - y_est), axis=-1)

        g_err = np.sum(np.abs(self.triple.g(r_prev) - self.triple.g(info["regret_est"])), axis=-1)
        self.err_sum = self.err_sum + g_err
        self.pot_bound = self.pot_bound + 2.0 * u * g_err + self.c_gamma
        self.regret = r_prev + np.take_along_axis(table, actions[:, None, None], axis=-1)[..., 0]

        i = t - 1
        c = self.cols
        c["realized_objective"][i] = self.regret.max(axis=-1) / t
        c["blackwell_lhs"][i] = lhs
        c["blackwell_rhs"][i] = rhs
        c["g_error_sum"][i] = self.err_sum
        c["theorem_rhs"][i] = theorem_rhs(self.link, self.family, u, t, self.err_sum, self.mu)
        c["potential"][i] = self.triple.G(self.regret)
        c["potential_bound"][i] = self.pot_bound
        if "residual" in info:
            c["residual"][i] = info["residual"]
        c["y_sum"][i] = y.sum(axis=-1)

    def columns(self):
        return self.cols


def potential_monitor(triple, regrets, potential_bound, tol=1e-6):
    """Seed-averaged Gordon check: ``mean G(R_t) <= mean bound_t + tol``.

    ``regrets`` is ``(T, runs, |Phi|)``; ``potential_bound`` is ``(T, runs)``.
    Returns ``(potential, bound, ok)`` as arrays over t.
    """
    pot = np.mean(triple.G(np.asarray(regrets)), axis=-1)
    bound = np.mean(np.asarray(potential_bound), axis=-1)
    return pot, bound, pot <= bound + tol


def seed_average(columns, link, family, reward_bound):
    """Mean of each column over runs, with the bound recomputed at the mean error sum.

    The bounds hold for the expected objective in terms of the expected error
    sum, so the mean error sum is the right argument here.
    """
    avg = {k: np.mean(v, axis=1) for k, v in columns.items()}
    t = np.arange(1, len(avg["g_error_sum"]) + 1)
    avg["theorem_rhs"] = theorem_rhs(link, family, reward_bound, t, avg["g_error_sum"])
    return avg
