"""Action transformations and the standard families built from them.

A transformation ``phi`` maps each action to a distribution over actions. It
is stored as a column-stochastic ``(n, n)`` matrix whose column ``a`` is
``phi(a)``, so the linear extension to mixed actions is a plain
matrix-vector product.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np

from .odp import ValidationError, validate_mixed_action

SWAP_MAX_ACTIONS = 6


class CapacityError(ValueError):
    """Requested family is too large to enumerate."""


class FamilyKind(str, enum.Enum):
    EXT = "ext"
    INT = "int"
    SWAP = "swap"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Transformation:
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"transformation must be square, got shape {m.shape}")
        if np.any(m < 0) or np.any(np.abs(m.sum(axis=0) - 1.0) > 1e-9):
            raise ValidationError("every column of a transformation must be a distribution")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def num_actions(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, action: int) -> np.ndarray:
        return self.matrix[:, action]

    def moves(self, action: int) -> bool:
        """True when ``phi(action)`` differs from the point mass on ``action``."""
        col = self.matrix[:, action]
        return not (col[action] == 1.0 and np.count_nonzero(col) == 1)

    @classmethod
    def from_map(cls, targets, label: str = "") -> "Transformation":
        """Pure transformation sending action ``a`` to ``targets[a]``."""
        n = len(targets)
        m = np.zeros((n, n))
        m[list(targets), np.arange(n)] = 1.0
        return cls(m, label)

    @classmethod
    def identity(cls, num_actions: int) -> "Transformation":
        return cls(np.eye(num_actions), "identity")


def apply_linear(phi: Transformation, q) -> np.ndarray:
    """The linear extension ``sum_a q(a) phi(a)``."""
    q = validate_mixed_action(q)
    if q.shape[0] != phi.num_actions:
        raise ValidationError(
            f"dimension mismatch: transformation over {phi.num_actions} actions, q has {q.shape[0]}"
        )
    return phi.matrix @ q


@dataclass(frozen=True)
class TransformationFamily:
    members: tuple
    kind: FamilyKind = FamilyKind.CUSTOM
    matrices: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValidationError("a transformation family needs at least one member")
        n = members[0].num_actions
        if any(m.num_actions != n for m in members):
            raise ValidationError("all members must act on the same action set")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "kind", FamilyKind(self.kind))
        stacked = np.stack([m.matrix for m in members])
        stacked.setflags(write=False)
        object.__setattr__(self, "matrices", stacked)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i) -> Transformation:
        return self.members[i]

    @property
    def num_actions(self) -> int:
        return self.members[0].num_actions

    def contains(self, phi: Transformation) -> bool:
        return any(np.array_equal(phi.matrix, m.matrix) for m in self.members)


def build_family(kind, num_actions: int) -> TransformationFamily:
    """Enumerate a named family in canonical order.

    EXT is ordered by target action. INT starts with the identity and then
    lists the reroutings ``a -> b`` (``a != b``) lexicographically. SWAP
    follows the base-``n`` numeral order of ``(phi(0), ..., phi(n-1))``.
    """
    kind = FamilyKind(kind)
    if num_actions < 2:
        raise ValidationError(f"num_actions must be >= 2, got {num_actions}")
    n = num_actions
    if kind is FamilyKind.EXT:
        members = [Transformation.from_map([y] * n, f"const->{y}") for y in range(n)]
    elif kind is FamilyKind.INT:
        members = [Transformation.identity(n)]
        for a, b in itertools.product(range(n), repeat=2):
            if a != b:
                targets = list(range(n))
                targets[a] = b
                members.append(Transformation.from_map(targets, f"{a}->{b}"))
    elif kind is FamilyKind.SWAP:
        if n > SWAP_MAX_ACTIONS:
            raise CapacityError(
                f"swap family over {n} actions has {n}**{n} members; limit is {SWAP_MAX_ACTIONS} actions"
            )
        members = [
            Transformation.from_map(targets, "swap" + "".join(map(str, targets)))
            for targets in itertools.product(range(n), repeat=n)
        ]
    else:
        raise ValidationError("custom families are built directly from a list of transformations")
    return TransformationFamily(tuple(members), kind)


def family_size(kind, num_actions: int) -> int:
    n = num_actions
    kind = FamilyKind(kind)
    if kind is FamilyKind.EXT:
        return n
    if kind is FamilyKind.INT:
        return n * n - n + 1
    if kind is FamilyKind.SWAP:
        return n**n
    raise ValidationError("custom families have no closed-form size")


def maximal_activation(family: TransformationFamily) -> int:
    """Largest number of members that move any single action."""
    if len(family) == 0:
        raise ValidationError("empty family")
    m = family.matrices
    n = family.num_actions
    idx = np.arange(n)
    # column a of member k is the point mass on a iff its diagonal entry is 1
    fixed = m[:, idx, idx] == 1.0
    return int((~fixed).sum(axis=0).max())
