"""Adversaries and two-player matrix games for driving regret matchers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .odp import (
    Adversary,
    FixedSequence,
    IIDRandom,
    LeastPlayed,
    RewardSystem,
    RunStreams,
    Trace,
    ValidationError,
    _Collector,
    sample_actions,
)


class Alternating(FixedSequence):
    """Reward ``U`` on action ``(t - 1) mod n`` and zero elsewhere."""

    def __init__(self, reward_system: RewardSystem):
        n = reward_system.num_actions
        super().__init__(reward_system, reward_system.reward_bound * np.eye(n))


ADVERSARY_KINDS = ("constant", "iid_random", "alternating", "adaptive_best_response")


def adversary_stream(kind: str, reward_system: RewardSystem, seed=None, rewards=None) -> Adversary:
    """Build a named adversary.

    ``constant`` repeats ``rewards`` (default: ``U`` on action 0). When
    ``seed`` is given the adversary is bound to a single run and can be
    queried directly.
    """
    if kind == "constant":
        if rewards is None:
            rewards = np.zeros(reward_system.num_actions)
            rewards[0] = reward_system.reward_bound
        adv = FixedSequence(reward_system, [rewards])
    elif kind == "iid_random":
        adv = IIDRandom(reward_system)
    elif kind == "alternating":
        adv = Alternating(reward_system)
    elif kind == "adaptive_best_response":
        adv = LeastPlayed(reward_system)
    else:
        raise ValidationError(f"unknown adversary kind {kind!r}; expected one of {ADVERSARY_KINDS}")
    if seed is not None:
        adv.reset([RunStreams.from_seed(seed).adversary])
    return adv


@dataclass(frozen=True)
class MatrixGame:
    """Payoffs ``payoffs[i][a1, a2]`` for players ``i = 0, 1``, all within ``[0, U]``."""

    payoffs: tuple
    reward_bound: float = 1.0
    normalization: tuple = ((1.0, 0.0), (1.0, 0.0))

    def __post_init__(self):
        p1, p2 = (np.array(p, dtype=float) for p in self.payoffs)
        if p1.ndim != 2 or p1.shape != p2.shape:
            raise ValidationError(f"payoff tables must be equal-shape matrices, got {p1.shape} and {p2.shape}")
        for p in (p1, p2):
            if np.any(p < 0) or np.any(p > self.reward_bound):
                raise ValidationError(f"payoffs must lie in [0, {self.reward_bound}]")
            p.setflags(write=False)
        object.__setattr__(self, "payoffs", (p1, p2))

    @property
    def shape(self):
        return self.payoffs[0].shape

    def reward_system(self, player: int) -> RewardSystem | None:
        n = self.shape[player]
        return RewardSystem(n, self.reward_bound) if n >= 2 else None

    @classmethod
    def from_raw(cls, p1, p2, reward_bound=1.0) -> "MatrixGame":
        """Rescale each player's table affinely into ``[0, U]`` when it falls outside.

        Tables already inside the range are kept as is. The ``(scale, offset)``
        pairs, with ``normalized = scale * raw + offset``, are kept on the game.
        """
        tables, norms = [], []
        for p in (np.asarray(p1, dtype=float), np.asarray(p2, dtype=float)):
            lo, hi = p.min(), p.max()
            if lo >= 0 and hi <= reward_bound:
                scale, offset = 1.0, 0.0
            elif hi > lo:
                scale = reward_bound / (hi - lo)
                offset = -lo * scale
            else:
                scale, offset = 0.0, 0.0
            tables.append(scale * p + offset)
            norms.append((scale, offset))
        return cls((tables[0], tables[1]), reward_bound, tuple(norms))


def parse_game(text: str, reward_bound: float = 1.0) -> MatrixGame:
    """Two whitespace-separated blocks (player 1 then player 2), rows = player-1 actions."""
    blocks, cur = [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            if cur:
                blocks.append(cur)
                cur = []
            continue
        try:
            cur.append([float(v) for v in line.split()])
        except ValueError:
            raise ValidationError(f"line {lineno}: non-numeric payoff entry") from None
    if cur:
        blocks.append(cur)
    if len(blocks) != 2:
        raise ValidationError(f"expected 2 payoff blocks, found {len(blocks)}")
    for b in blocks:
        if len({len(row) for row in b}) != 1:
            raise ValidationError("ragged payoff block")
    return MatrixGame.from_raw(blocks[0], blocks[1], reward_bound)


def load_game(path, reward_bound: float = 1.0) -> MatrixGame:
    with open(path) as fh:
        return parse_game(fh.read(), reward_bound)


def rock_paper_scissors() -> MatrixGame:
    """Win 1, tie 0.5, loss 0."""
    win = np.array([[0.5, 0.0, 1.0], [1.0, 0.5, 0.0], [0.0, 1.0, 0.5]])
    return MatrixGame((win, win.T))


@dataclass
class JointEmpirical:
    counts: np.ndarray
    t: int = 0

    @property
    def distribution(self) -> np.ndarray:
        return self.counts / self.t


def ce_gap(game: MatrixGame, joint: JointEmpirical) -> float:
    """Largest average gain from any single-player internal deviation ``a -> b``.

    Never negative since the null deviation is always available.
    """
    if joint.t < 1:
        raise ValidationError("joint distribution is empty")
    p = joint.distribution
    u1, u2 = game.payoffs
    # gain1[a, b] = sum_j p[a, j] * (u1[b, j] - u1[a, j])
    gain1 = p @ u1.T - np.sum(p * u1, axis=1)[:, None]
    gain2 = p.T @ u2 - np.sum(p * u2, axis=0)[:, None]
    return float(max(0.0, gain1.max(), gain2.max()))


@dataclass
class SelfPlayResult:
    traces: tuple
    joints: list
    checkpoints: dict = field(default_factory=dict)


class _Fixed:
    """Single-action player in a degenerate game."""

    num_actions = 1

    def reset(self, rngs):
        self.n = len(rngs)

    def play(self):
        return np.ones((self.n, 1)), {}

    def observe(self, actions, rewards):
        pass


def self_play(game: MatrixGame, player1, player2, horizon: int, seeds=(0,),
              monitors=(None, None), checkpoints=()):
    """Two learners play the game repeatedly; each sees the other as its adversary.

    Each player's reward vector at step ``t`` is its payoff row/column induced
    by the opponent's sampled action. Returns both traces plus one
    :class:`JointEmpirical` per seed at the horizon, and per-seed ones at the
    requested ``checkpoints``.
    """
    if int(horizon) != horizon or horizon < 1:
        raise ValidationError(f"horizon must be a positive integer, got {horizon}")
    n1, n2 = game.shape
    players = [player1 if player1 is not None else _Fixed(), player2 if player2 is not None else _Fixed()]
    if players[0].num_actions != n1 or players[1].num_actions != n2:
        raise ValidationError(
            f"game is {n1}x{n2} but players have {players[0].num_actions} and {players[1].num_actions} actions")
    seeds = tuple(int(s) for s in seeds)
    streams = [RunStreams.from_seed(s) for s in seeds]
    players[0].reset([s.learner for s in streams])
    players[1].reset([s.adversary for s in streams])
    rngs = ([s.sample for s in streams], [s.opponent for s in streams])
    for mon in monitors:
        if mon is not None:
            mon.start(len(seeds), horizon)

    u1, u2 = game.payoffs
    counts = np.zeros((len(seeds), n1, n2), dtype=np.int64)
    runs = np.arange(len(seeds))
    wanted = set(int(c) for c in checkpoints)
    snaps = {}
    out = (_Collector(horizon), _Collector(horizon))
    for t in range(1, horizon + 1):
        (q1, info1), (q2, info2) = players[0].play(), players[1].play()
        a1 = sample_actions(q1, rngs[0])
        a2 = sample_actions(q2, rngs[1])
        r1 = u1[:, a2].T
        r2 = u2[a1, :]
        players[0].observe(a1, r1)
        players[1].observe(a2, r2)
        counts[runs, a1, a2] += 1
        for mon, q, a, r, info, col in zip(monitors, (q1, q2), (a1, a2), (r1, r2), (info1, info2), out):
            if mon is not None:
                mon.update(t, q, a, r, info)
            col.put(t, "q", q)
            col.put(t, "a", a)
            col.put(t, "r", r)
            for name in ("y", "y_est", "residual"):
                if name in info:
                    col.put(t, "info:" + name, info[name])
        if t in wanted:
            snaps[t] = [JointEmpirical(counts[i].copy(), t) for i in runs]

    traces = []
    for mon, col in zip(monitors, out):
        s = col.store
        info = {k[5:]: v for k, v in s.items() if k.startswith("info:")}
        traces.append(Trace(seeds, s["q"], s["a"], s["r"], info, mon.columns() if mon is not None else {}))
    joints = [JointEmpirical(counts[i].copy(), horizon) for i in runs]
    return SelfPlayResult(tuple(traces), joints, snaps)
