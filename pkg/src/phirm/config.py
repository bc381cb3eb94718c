"""Flat ``key = value`` experiment configuration.

Recognised keys (``#`` starts a comment)::

    num_actions            int >= 2 (omit when a game is given)
    reward_bound           float > 0, default 1
    family                 ext | int | swap
    link                   polynomial | exponential
    p                      float > 1, polynomial link only
    eta                    float > 0, exponential link only
    estimator              exact | noisy | quantized | linear, default exact
    noise_scale            float >= 0, noisy only
    quant_step             float > 0, quantized only
    learning_rate          float > 0, linear only (default 1)
    linear_rank            int >= 1, linear only (default: one feature per transformation)
    projection_seed        int, linear only (default 0)
    adversary              constant | iid_random | alternating | adaptive_best_response
    constant_reward        comma-separated rewards, constant adversary only
    game                   path to a payoff file (self-play instead of an adversary)
    horizon                int >= 1
    seeds                  e.g. ``0-31`` or ``1,2,5``, default 0-31
    output_dir             default ``out``
    fixed_point_tolerance  float in (0, 1e-4], default 1e-10
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .arena import ADVERSARY_KINDS
from .transforms import SWAP_MAX_ACTIONS


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    family: str
    link: str
    horizon: int
    num_actions: int | None = None
    reward_bound: float = 1.0
    p: float | None = None
    eta: float | None = None
    estimator: str = "exact"
    noise_scale: float | None = None
    quant_step: float | None = None
    learning_rate: float | None = None
    linear_rank: int | None = None
    projection_seed: int | None = None
    adversary: str | None = None
    constant_reward: tuple | None = None
    game: str | None = None
    seeds: tuple = tuple(range(32))
    output_dir: str = "out"
    fixed_point_tolerance: float = 1e-10

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            lines.append(f"{f.name} = {_format(f.name, v)}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()


_INT = {"num_actions", "horizon", "linear_rank", "projection_seed"}
_FLOAT = {"reward_bound", "p", "eta", "noise_scale", "quant_step", "learning_rate", "fixed_point_tolerance"}
_STR = {"family", "link", "estimator", "adversary", "game", "output_dir"}
_KEYS = _INT | _FLOAT | _STR | {"constant_reward", "seeds"}


def _format(name, v):
    if name == "seeds":
        return _format_seeds(v)
    if name == "constant_reward":
        return ",".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _format_seeds(seeds):
    s = list(seeds)
    if len(s) > 1 and s == list(range(s[0], s[0] + len(s))):
        return f"{s[0]}-{s[-1]}"
    return ",".join(str(x) for x in s)


def _parse_seeds(text):
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = (int(x) for x in part.split("-", 1))
            if hi < lo:
                raise ValueError(f"empty seed range {part}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    if not out:
        raise ValueError("no seeds")
    if any(s < 0 for s in out):
        raise ValueError("seeds must be nonnegative")
    if len(set(out)) != len(out):
        raise ValueError("duplicate seeds")
    return tuple(out)


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    values, where = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key '{key}'")
        try:
            if key in _INT:
                values[key] = int(val)
            elif key in _FLOAT:
                values[key] = float(val)
            elif key == "seeds":
                values[key] = _parse_seeds(val)
            elif key == "constant_reward":
                values[key] = tuple(float(x) for x in val.split(","))
            else:
                values[key] = val
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {key}: cannot parse {val!r} ({exc})") from None
        where[key] = lineno
    for key in ("family", "link", "horizon"):
        if key not in values:
            raise ConfigError(f"{source}: missing required key '{key}'")
    cfg = ExperimentConfig(**values)
    _validate(cfg, lambda k: f"{source}:{where.get(k, 0)}: {k}")
    return cfg


def _validate(cfg: ExperimentConfig, at):
    def fail(key, msg):
        raise ConfigError(f"{at(key)}: {msg}")

    def forbid(key, why):
        if getattr(cfg, key) is not None:
            fail(key, f"not used {why}")

    if cfg.family not in ("ext", "int", "swap"):
        fail("family", f"must be ext, int or swap, got {cfg.family!r}")
    if not (cfg.reward_bound > 0 and np.isfinite(cfg.reward_bound)):
        fail("reward_bound", "must be > 0")
    if cfg.horizon < 1:
        fail("horizon", "must be >= 1")
    if not (0 < cfg.fixed_point_tolerance <= 1e-4):
        fail("fixed_point_tolerance", "must be in (0, 1e-4]")

    if cfg.link == "polynomial":
        if cfg.p is None:
            fail("link", "polynomial link needs 'p'")
        if not (cfg.p > 1 and np.isfinite(cfg.p)):
            fail("p", "must be > 1")
        forbid("eta", "with the polynomial link")
    elif cfg.link == "exponential":
        if cfg.eta is None:
            fail("link", "exponential link needs 'eta'")
        if not (cfg.eta > 0 and np.isfinite(cfg.eta)):
            fail("eta", "must be > 0")
        forbid("p", "with the exponential link")
    else:
        fail("link", f"must be polynomial or exponential, got {cfg.link!r}")

    est = cfg.estimator
    if est not in ("exact", "noisy", "quantized", "linear"):
        fail("estimator", f"unknown estimator {est!r}")
    if est == "noisy":
        if cfg.noise_scale is None:
            fail("estimator", "noisy estimator needs 'noise_scale'")
        if not (cfg.noise_scale >= 0 and np.isfinite(cfg.noise_scale)):
            fail("noise_scale", "must be >= 0")
    else:
        forbid("noise_scale", f"with the {est} estimator")
    if est == "quantized":
        if cfg.quant_step is None:
            fail("estimator", "quantized estimator needs 'quant_step'")
        if not (cfg.quant_step > 0 and np.isfinite(cfg.quant_step)):
            fail("quant_step", "must be > 0")
    else:
        forbid("quant_step", f"with the {est} estimator")
    if est == "linear":
        if cfg.learning_rate is not None and not (cfg.learning_rate > 0 and np.isfinite(cfg.learning_rate)):
            fail("learning_rate", "must be > 0")
        if cfg.linear_rank is not None and cfg.linear_rank < 1:
            fail("linear_rank", "must be >= 1")
    else:
        for k in ("learning_rate", "linear_rank", "projection_seed"):
            forbid(k, f"with the {est} estimator")

    if (cfg.game is None) == (cfg.adversary is None):
        fail("adversary", "give exactly one of 'adversary' or 'game'")
    if cfg.game is not None:
        forbid("num_actions", "with a game (the payoff file fixes the action counts)")
        forbid("constant_reward", "with a game")
    else:
        if cfg.num_actions is None:
            fail("num_actions", "required with an adversary")
        if cfg.num_actions < 2:
            fail("num_actions", "must be >= 2")
        if cfg.family == "swap" and cfg.num_actions > SWAP_MAX_ACTIONS:
            fail("family", f"swap family is limited to {SWAP_MAX_ACTIONS} actions")
        if cfg.adversary not in ADVERSARY_KINDS:
            fail("adversary", f"must be one of {', '.join(ADVERSARY_KINDS)}")
        if cfg.constant_reward is not None:
            if cfg.adversary != "constant":
                fail("constant_reward", "only used with the constant adversary")
            r = np.array(cfg.constant_reward)
            if len(r) != cfg.num_actions or np.any(r < 0) or np.any(r > cfg.reward_bound):
                fail("constant_reward", f"must be {cfg.num_actions} values in [0, {cfg.reward_bound}]")


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), str(path))
