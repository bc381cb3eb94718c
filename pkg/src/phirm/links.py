"""Link functions and their Gordon triples.

A link maps a cumulative regret vector to nonnegative weights over the
transformation family. Each link comes with a triple ``(G, g, gamma)``
satisfying ``G(x + y) <= G(x) + g(x) . y + gamma(y)``, which drives the regret
bounds in :mod:`phirm.bounds`. All functions act on the last axis and
broadcast over leading ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .odp import ValidationError

# exp() overflows just above 709
_EXP_CAP = 700.0


def _pos(x):
    return np.maximum(x, 0.0)


def _pnorm(x, p):
    return np.sum(np.abs(x) ** p, axis=-1) ** (1.0 / p)


@dataclass(frozen=True)
class PolynomialLink:
    """``f(x)_i = (x_i^+)^(p - 1)``; ``p = 2`` is classic regret matching."""

    p: float

    def __post_init__(self):
        if not (self.p > 1 and np.isfinite(self.p)):
            raise ValidationError(f"polynomial link needs p > 1, got {self.p}")

    def apply(self, x):
        return _pos(np.asarray(x, dtype=float)) ** (self.p - 1)

    def apply_pair(self, x, x_est):
        return self.apply(x), self.apply(x_est)

    def triple(self) -> "GordonTriple":
        return triple_for(self)


@dataclass(frozen=True)
class ExponentialLink:
    """``f(x)_i = exp(eta * x_i)``, i.e. Hedge when the family is EXT."""

    eta: float

    def __post_init__(self):
        if not (self.eta > 0 and np.isfinite(self.eta)):
            raise ValidationError(f"exponential link needs eta > 0, got {self.eta}")

    def apply(self, x, shift=None):
        """``exp(eta * x - shift)``.

        By default ``shift`` is zero unless the largest exponent would
        overflow, in which case all outputs are scaled down by a common factor.
        """
        z = self.eta * np.asarray(x, dtype=float)
        if shift is None:
            shift = _pos(np.max(z, axis=-1, keepdims=True) - _EXP_CAP)
        return np.exp(z - shift)

    def apply_pair(self, x, x_est):
        """Exact and estimated outputs scaled by one common factor.

        The factor makes the largest entry across both vectors equal to 1.
        Inner products and norm differences are then off by the same positive
        factor on both sides, which keeps every homogeneous inequality intact.
        """
        z, z_est = self.eta * np.asarray(x, dtype=float), self.eta * np.asarray(x_est, dtype=float)
        shift = np.maximum(np.max(z, axis=-1, keepdims=True), np.max(z_est, axis=-1, keepdims=True))
        return np.exp(z - shift), np.exp(z_est - shift)

    def triple(self) -> "GordonTriple":
        return triple_for(self)


Link = PolynomialLink | ExponentialLink


@dataclass(frozen=True)
class GordonTriple:
    G: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    gamma: Callable[[np.ndarray], np.ndarray]
    name: str = ""


def _logsumexp_potential(eta):
    def G(x):
        z = eta * np.asarray(x, dtype=float)
        m = np.max(z, axis=-1)
        return (m + np.log(np.sum(np.exp(z - m[..., None]), axis=-1))) / eta

    return G


def softmax(z):
    e = np.exp(z - np.max(z, axis=-1, keepdims=True))
    return e / np.sum(e, axis=-1, keepdims=True)


def triple_for(link) -> GordonTriple:
    """The triple used by the matching regret bound for ``link``.

    Polynomial ``p > 2``: ``G = ||x+||_p^2`` with curvature ``(p-1)||y||_p^2``.
    Polynomial ``1 < p <= 2``: ``G = ||x+||_p^p`` with curvature ``||y||_p^p``.
    Exponential: ``G = (1/eta) log sum exp(eta x)``, ``g`` the softmax and
    curvature ``(eta/2)||y||_inf^2``.
    """
    if isinstance(link, PolynomialLink):
        p = link.p
        if p > 2:
            def G(x):
                return _pnorm(_pos(np.asarray(x, dtype=float)), p) ** 2

            def g(x):
                xp = _pos(np.asarray(x, dtype=float))
                norm = _pnorm(xp, p)[..., None]
                with np.errstate(divide="ignore", invalid="ignore"):
                    out = 2.0 * xp ** (p - 1) / norm ** (p - 2)
                # g := 0 where ||x+||_p = 0
                return np.where(norm > 0, out, 0.0)

            def gamma(y):
                return (p - 1) * _pnorm(np.asarray(y, dtype=float), p) ** 2

            return GordonTriple(G, g, gamma, f"poly(p={p:g}) p>2")

        def G(x):
            return np.sum(_pos(np.asarray(x, dtype=float)) ** p, axis=-1)

        def g(x):
            return p * _pos(np.asarray(x, dtype=float)) ** (p - 1)

        def gamma(y):
            return np.sum(np.abs(np.asarray(y, dtype=float)) ** p, axis=-1)

        return GordonTriple(G, g, gamma, f"poly(p={p:g}) p<=2")

    if isinstance(link, ExponentialLink):
        eta = link.eta

        def g(x):
            return softmax(eta * np.asarray(x, dtype=float))

        def gamma(y):
            return 0.5 * eta * np.max(np.abs(np.asarray(y, dtype=float)), axis=-1) ** 2

        return GordonTriple(_logsumexp_potential(eta), g, gamma, f"exp(eta={eta:g})")

    raise ValidationError(f"unknown link {link!r}")


def link_apply(link, x) -> np.ndarray:
    return link.apply(x)


def check_gordon(triple: GordonTriple, x, y, slack: float = 1e-9):
    """Whether ``G(x + y) <= G(x) + g(x) . y + gamma(y) + slack``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lhs = triple.G(x + y)
    rhs = triple.G(x) + np.sum(triple.g(x) * y, axis=-1) + triple.gamma(y)
    return lhs <= rhs + slack
