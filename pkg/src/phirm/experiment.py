"""Turn an :class:`ExperimentConfig` into simulated runs."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .arena import adversary_stream, ce_gap, load_game, self_play
from .bounds import BoundMonitor
from .config import ExperimentConfig
from .estimators import make_estimator
from .links import ExponentialLink, PolynomialLink
from .matcher import MatcherConfig, RegretMatcher
from .odp import RewardSystem, run_odp
from .transforms import build_family


def make_link(cfg: ExperimentConfig):
    if cfg.link == "polynomial":
        return PolynomialLink(cfg.p)
    return ExponentialLink(cfg.eta)


def make_estimator_from(cfg: ExperimentConfig):
    if cfg.estimator == "noisy":
        return make_estimator("noisy", scale=cfg.noise_scale)
    if cfg.estimator == "quantized":
        return make_estimator("quantized", step=cfg.quant_step)
    if cfg.estimator == "linear":
        return make_estimator(
            "linear",
            learning_rate=cfg.learning_rate if cfg.learning_rate is not None else 1.0,
            rank=cfg.linear_rank,
            projection_seed=cfg.projection_seed or 0,
        )
    return make_estimator("exact")


def make_matcher(cfg: ExperimentConfig, num_actions: int):
    family = build_family(cfg.family, num_actions)
    link = make_link(cfg)
    matcher = RegretMatcher(MatcherConfig(family, link, make_estimator_from(cfg), cfg.fixed_point_tolerance))
    return matcher, BoundMonitor(family, link, cfg.reward_bound)


@dataclass
class PlayerResult:
    """Monitor columns ``(T, runs)`` for one player, in seed order."""

    family: object
    link: object
    columns: dict


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    players: list
    normalization: tuple | None = None
    ce_gaps: list = field(default_factory=list)


def resolve_game_path(cfg: ExperimentConfig, base_dir=None) -> Path:
    path = Path(cfg.game)
    if not path.is_absolute() and base_dir is not None:
        path = Path(base_dir) / path
    return path


def _run_chunk(cfg: ExperimentConfig, seeds, game_path):
    if game_path is None:
        rs = RewardSystem(cfg.num_actions, cfg.reward_bound)
        matcher, monitor = make_matcher(cfg, cfg.num_actions)
        adv = adversary_stream(cfg.adversary, rs, rewards=cfg.constant_reward)
        trace = run_odp(matcher, adv, cfg.horizon, seeds, monitor, keep_info=())
        return [trace.columns], None
    game = load_game(game_path, cfg.reward_bound)
    n1, n2 = game.shape
    p1, m1 = make_matcher(cfg, n1)
    p2, m2 = make_matcher(cfg, n2)
    res = self_play(game, p1, p2, cfg.horizon, seeds, monitors=(m1, m2))
    return [tr.columns for tr in res.traces], [ce_gap(game, j) for j in res.joints]


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, base_dir=None) -> ExperimentResult:
    """Simulate every seed in ``cfg``; seeds are split across ``jobs`` processes."""
    game_path = resolve_game_path(cfg, base_dir) if cfg.game is not None else None
    seeds = list(cfg.seeds)
    jobs = max(1, min(int(jobs), len(seeds)))
    chunks = [list(c) for c in np.array_split(seeds, jobs) if len(c)]
    if jobs == 1:
        parts = [_run_chunk(cfg, chunks[0], game_path)]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_chunk, [cfg] * len(chunks), chunks, [game_path] * len(chunks)))

    n_players = len(parts[0][0])
    merged = []
    for i in range(n_players):
        cols = {k: np.concatenate([p[0][i][k] for p in parts], axis=1) for k in parts[0][0][i]}
        merged.append(cols)

    link = make_link(cfg)
    if game_path is None:
        players = [PlayerResult(build_family(cfg.family, cfg.num_actions), link, merged[0])]
        return ExperimentResult(cfg, players)
    game = load_game(game_path, cfg.reward_bound)
    players = [PlayerResult(build_family(cfg.family, n), link, cols) for n, cols in zip(game.shape, merged)]
    gaps = [g for p in parts for g in p[1]]
    return ExperimentResult(cfg, players, game.normalization, gaps)
