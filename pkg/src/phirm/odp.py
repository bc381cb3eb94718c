"""Online decision problems: reward systems, the play loop, and adversaries.

Every run object here is batched over independent runs (one per seed) along
a leading axis, so a single call simulates all seeds of an experiment in
lock-step. Runs never share state: each seed owns its own generators, and the
result for a seed does not depend on which other seeds were run with it.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

PROB_ATOL = 1e-9


class ValidationError(ValueError):
    pass


class RewardRangeError(ValueError):
    pass


@dataclass(frozen=True)
class RewardSystem:
    num_actions: int
    reward_bound: float = 1.0

    def __post_init__(self):
        if int(self.num_actions) != self.num_actions or self.num_actions < 2:
            raise ValidationError(f"num_actions must be an integer >= 2, got {self.num_actions}")
        if not (self.reward_bound > 0 and np.isfinite(self.reward_bound)):
            raise ValidationError(f"reward_bound must be positive, got {self.reward_bound}")

    def check_rewards(self, rewards) -> np.ndarray:
        r = np.asarray(rewards, dtype=float)
        if r.shape[-1] != self.num_actions:
            raise ValidationError(f"reward vector has {r.shape[-1]} entries, expected {self.num_actions}")
        if not np.all((r >= 0) & (r <= self.reward_bound)):
            raise RewardRangeError(f"rewards must lie in [0, {self.reward_bound}], got {r}")
        return r


def validate_mixed_action(q) -> np.ndarray:
    """Return ``q`` as an array after checking it lies on the simplex."""
    q = np.asarray(q, dtype=float)
    if q.ndim == 0 or q.shape[-1] == 0:
        raise ValidationError("mixed action must be a non-empty vector")
    if not np.all(np.isfinite(q)) or np.any(q < 0):
        raise ValidationError(f"mixed action has negative or non-finite entries: {q}")
    if np.any(np.abs(q.sum(axis=-1) - 1.0) > PROB_ATOL):
        raise ValidationError(f"mixed action does not sum to 1: {q}")
    return q


def point_mass(action: int, num_actions: int) -> np.ndarray:
    q = np.zeros(num_actions)
    q[action] = 1.0
    return q


def uniform(num_actions: int) -> np.ndarray:
    return np.full(num_actions, 1.0 / num_actions)


def _draw(q: np.ndarray, u: float) -> int:
    i = int(np.searchsorted(np.cumsum(q), u, side="right"))
    if i >= q.shape[0]:
        # cdf[-1] rounded below u; fall back to the last action with mass
        i = int(np.flatnonzero(q > 0)[-1])
    return i


def sample_action(q, rng: np.random.Generator) -> int:
    """Draw an action index from ``q`` using one uniform from ``rng``."""
    q = validate_mixed_action(q)
    if q.ndim != 1:
        raise ValidationError("sample_action takes a single mixed action")
    return _draw(q, rng.random())


def sample_actions(q, rngs: Sequence[np.random.Generator]) -> np.ndarray:
    """Batched :func:`sample_action`: row ``i`` of ``q`` is drawn with ``rngs[i]``."""
    q = validate_mixed_action(q)
    u = np.array([g.random() for g in rngs])
    idx = np.sum(np.cumsum(q, axis=-1) <= u[:, None], axis=-1)
    for i in np.flatnonzero(idx >= q.shape[-1]):
        idx[i] = _draw(q[i], u[i])
    return idx.astype(np.int64)


@dataclass(frozen=True)
class RunStreams:
    """Independent generators for one seeded run."""

    sample: np.random.Generator
    adversary: np.random.Generator
    learner: np.random.Generator
    opponent: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "RunStreams":
        children = np.random.SeedSequence(int(seed)).spawn(4)
        return cls(*(np.random.default_rng(c) for c in children))


class History:
    """Append-only record of sampled actions and observed reward vectors."""

    def __init__(self):
        self._actions: list = []
        self._rewards: list = []

    def append(self, actions, rewards) -> None:
        self._actions.append(np.array(actions, copy=True))
        self._rewards.append(np.array(rewards, copy=True))

    def __len__(self) -> int:
        return len(self._actions)

    @property
    def actions(self) -> np.ndarray:
        return np.array(self._actions)

    @property
    def rewards(self) -> np.ndarray:
        return np.array(self._rewards)

    def steps(self, run: int = 0):
        """Per-run view as a list of ``(action, reward_vector)`` pairs."""
        return [(int(a[run]), r[run]) for a, r in zip(self._actions, self._rewards)]


class Learner(Protocol):
    num_actions: int

    def reset(self, rngs: Sequence[np.random.Generator]) -> None: ...

    def play(self) -> tuple[np.ndarray, dict]: ...

    def observe(self, actions: np.ndarray, rewards: np.ndarray) -> None: ...


class UniformLearner:
    """Ignores everything and plays the uniform distribution."""

    def __init__(self, num_actions: int):
        self.num_actions = num_actions
        self._n_runs = 0

    def reset(self, rngs):
        self._n_runs = len(rngs)

    def play(self):
        return np.full((self._n_runs, self.num_actions), 1.0 / self.num_actions), {}

    def observe(self, actions, rewards):
        pass


class Adversary(abc.ABC):
    """Produces reward vectors for a batch of runs.

    ``rewards(t)`` is called before the learner's step-``t`` action is sampled,
    and ``observe(actions)`` afterwards, so an adversary can adapt to past
    actions but never to the current one.
    """

    def __init__(self, reward_system: RewardSystem):
        self.reward_system = reward_system
        self.n_runs = 0

    def reset(self, rngs: Sequence[np.random.Generator]) -> None:
        self.n_runs = len(rngs)
        self.rngs = list(rngs)

    @abc.abstractmethod
    def rewards(self, t: int) -> np.ndarray: ...

    def observe(self, actions: np.ndarray) -> None:
        pass


class FixedSequence(Adversary):
    """Replays a fixed list of reward vectors, cycling when it runs out."""

    def __init__(self, reward_system, sequence):
        super().__init__(reward_system)
        seq = np.atleast_2d(np.asarray(sequence, dtype=float))
        if seq.shape[0] == 0:
            raise ValidationError("fixed sequence must contain at least one reward vector")
        self.sequence = reward_system.check_rewards(seq)

    def rewards(self, t):
        row = self.sequence[(t - 1) % len(self.sequence)]
        return np.broadcast_to(row, (self.n_runs, row.shape[0])).copy()


class IIDRandom(Adversary):
    """Each reward entry drawn uniformly from ``[0, U]`` with the run's generator."""

    def rewards(self, t):
        n, u = self.reward_system.num_actions, self.reward_system.reward_bound
        return np.array([g.uniform(0.0, u, size=n) for g in self.rngs])


class LeastPlayed(Adversary):
    """Puts reward ``U`` on the learner's least-played action so far (ties to the lowest index)."""

    def reset(self, rngs):
        super().reset(rngs)
        self.counts = np.zeros((self.n_runs, self.reward_system.num_actions), dtype=np.int64)

    def rewards(self, t):
        r = np.zeros(self.counts.shape)
        r[np.arange(self.n_runs), np.argmin(self.counts, axis=1)] = self.reward_system.reward_bound
        return r

    def observe(self, actions):
        self.counts[np.arange(self.n_runs), actions] += 1


@dataclass(frozen=True)
class MatchRecord:
    t: int
    q: np.ndarray
    action: int
    reward: np.ndarray
    y: np.ndarray | None = None
    y_est: np.ndarray | None = None
    blackwell_lhs: float | None = None
    blackwell_rhs: float | None = None
    theorem_rhs: float | None = None


@dataclass
class Trace:
    """Columnar trace of a batched run; arrays are indexed ``[t - 1, run, ...]``."""

    seeds: tuple
    q: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    info: dict = field(default_factory=dict)
    columns: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return self.actions.shape[0]

    def __len__(self) -> int:
        return self.horizon

    def record(self, run: int, t: int) -> MatchRecord:
        i = t - 1

        def col(name):
            c = self.columns.get(name)
            return None if c is None else float(c[i, run])

        def inf(name):
            c = self.info.get(name)
            return None if c is None else c[i, run]

        return MatchRecord(
            t=t,
            q=self.q[i, run],
            action=int(self.actions[i, run]),
            reward=self.rewards[i, run],
            y=inf("y"),
            y_est=inf("y_est"),
            blackwell_lhs=col("blackwell_lhs"),
            blackwell_rhs=col("blackwell_rhs"),
            theorem_rhs=col("theorem_rhs"),
        )

    def records(self, run: int = 0):
        return [self.record(run, t) for t in range(1, self.horizon + 1)]


class _Collector:
    def __init__(self, horizon):
        self.horizon = horizon
        self.store: dict = {}

    def put(self, t, name, value):
        arr = self.store.get(name)
        if arr is None:
            value = np.asarray(value)
            arr = self.store[name] = np.empty((self.horizon,) + value.shape, dtype=value.dtype)
        arr[t - 1] = value


def run_odp(learner, adversary: Adversary, horizon: int, seeds=(0,), monitor=None,
            keep_info: Sequence[str] = ("y", "y_est", "residual")) -> Trace:
    """Play ``learner`` against ``adversary`` for ``horizon`` steps, one run per seed.

    ``monitor`` (optional) gets ``start(n_runs, horizon)``, then
    ``update(t, q, actions, rewards, info)`` every step, and its ``columns()``
    end up on the returned trace.
    """
    if int(horizon) != horizon or horizon < 1:
        raise ValidationError(f"horizon must be a positive integer, got {horizon}")
    if learner.num_actions != adversary.reward_system.num_actions:
        raise ValidationError("learner and adversary disagree on the number of actions")
    seeds = tuple(int(s) for s in seeds)
    streams = [RunStreams.from_seed(s) for s in seeds]
    learner.reset([s.learner for s in streams])
    adversary.reset([s.adversary for s in streams])
    sample_rngs = [s.sample for s in streams]
    if monitor is not None:
        monitor.start(len(seeds), horizon)

    out = _Collector(horizon)
    for t in range(1, horizon + 1):
        q, info = learner.play()
        r = adversary.reward_system.check_rewards(adversary.rewards(t))
        a = sample_actions(q, sample_rngs)
        learner.observe(a, r)
        adversary.observe(a)
        if monitor is not None:
            monitor.update(t, q, a, r, info)
        out.put(t, "q", q)
        out.put(t, "a", a)
        out.put(t, "r", r)
        for name in keep_info:
            if name in info:
                out.put(t, "info:" + name, info[name])

    s = out.store
    info = {k[5:]: v for k, v in s.items() if k.startswith("info:")}
    return Trace(seeds, s["q"], s["a"], s["r"], info,
                 monitor.columns() if monitor is not None else {})
