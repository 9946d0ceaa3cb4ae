"""Two-player common-payoff matrix games used as desk-scale testbeds.

Both players receive ``s^T A p`` where ``A`` is symmetrised on construction,
so ``payoff(s, p) == payoff(p, s)`` and seat order never matters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Literal

import numpy as np

NoiseMode = Literal["exact", "bernoulli-episode"]


class DimensionMismatch(ValueError):
    pass


def validate_strategy(probs, actions: int | None = None) -> np.ndarray:
    """Return ``probs`` as a float array after checking it lies on the simplex."""
    s = np.asarray(probs, dtype=float)
    if s.ndim != 1:
        raise ValueError("strategy must be a 1-d probability vector")
    if actions is not None and s.shape[0] != actions:
        raise DimensionMismatch(f"strategy has {s.shape[0]} actions, game has {actions}")
    if np.any(s < 0) or abs(s.sum() - 1.0) > 1e-12:
        raise ValueError(f"not a probability vector: {s}")
    return s


def pure(action: int, actions: int) -> np.ndarray:
    s = np.zeros(actions)
    s[action] = 1.0
    return s


def uniform(actions: int) -> np.ndarray:
    return np.full(actions, 1.0 / actions)


@dataclass(frozen=True, eq=False)
class MatrixCoopGame:
    payoff_core: np.ndarray
    noise_mode: NoiseMode = "exact"
    episodes: int = 100

    def __post_init__(self):
        a = np.asarray(self.payoff_core, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"payoff core must be a non-empty square matrix, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("payoff core entries must be finite")
        if self.noise_mode not in ("exact", "bernoulli-episode"):
            raise ValueError(f"unknown noise mode {self.noise_mode!r}")
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        a = (a + a.T) / 2.0
        a.setflags(write=False)
        object.__setattr__(self, "payoff_core", a)

    @property
    def actions(self) -> int:
        return self.payoff_core.shape[0]

    def exact(self) -> "MatrixCoopGame":
        if self.noise_mode == "exact":
            return self
        return MatrixCoopGame(self.payoff_core, "exact", self.episodes)

    def to_dict(self) -> dict:
        return {
            "actions": self.actions,
            "payoff_core": self.payoff_core.tolist(),
            "noise_mode": self.noise_mode,
            "episodes": self.episodes,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "MatrixCoopGame":
        game = cls(
            np.array(obj["payoff_core"], dtype=float),
            obj.get("noise_mode", "exact"),
            int(obj.get("episodes", 100)),
        )
        if "actions" in obj and int(obj["actions"]) != game.actions:
            raise ValueError("'actions' does not match payoff_core size")
        return game

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "MatrixCoopGame":
        return cls.from_dict(json.loads(text))


def payoff(game: MatrixCoopGame, s, p, seed=None) -> float:
    """Expected (exact mode) or sampled-mean (noisy mode) common payoff.

    In ``bernoulli-episode`` mode each episode draws one joint action from
    ``s`` x ``p`` and scores ``A[a1, a2]``; the result is the mean over
    ``game.episodes`` episodes, reproducible for a fixed ``seed``.
    """
    s = validate_strategy(s, game.actions)
    p = validate_strategy(p, game.actions)
    if game.noise_mode == "exact":
        a = game.payoff_core
        # both orders summed so w(s, p) == w(p, s) bit for bit
        return float(0.5 * (s @ a @ p + p @ a @ s))
    rng = np.random.default_rng(seed)
    a1 = rng.choice(game.actions, size=game.episodes, p=s)
    a2 = rng.choice(game.actions, size=game.episodes, p=p)
    return float(game.payoff_core[a1, a2].mean())


def payoff_std(game: MatrixCoopGame, s, p) -> float:
    """Per-episode standard deviation of the sampled payoff under ``s`` x ``p``."""
    a = game.payoff_core
    mean = float(s @ a @ p)
    second = float(s @ (a * a) @ p)
    return float(np.sqrt(max(second - mean * mean, 0.0)))


def gen_convention_game(
    blocks: int,
    intra: float = 1.0,
    inter: float = 0.0,
    seed=None,
    block_size: int = 2,
    jitter: bool = True,
) -> MatrixCoopGame:
    """Block-structured coordination game.

    Actions are split into ``blocks`` groups of ``block_size``. Pairs within a
    group pay ``intra``, pairs across groups ``inter``. With ``jitter`` each
    entry gets seeded noise of magnitude below ``(intra - inter) / 10``, which
    never reorders within-block against cross-block payoffs.
    """
    if blocks < 2:
        raise ValueError("need at least two blocks")
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    if not intra > inter >= 0:
        raise ValueError("require intra > inter >= 0")
    m = blocks * block_size
    label = np.repeat(np.arange(blocks), block_size)
    a = np.where(label[:, None] == label[None, :], float(intra), float(inter))
    if jitter:
        bound = (intra - inter) / 10.0
        rng = np.random.default_rng(seed)
        # open interval keeps |noise| strictly below the bound
        noise = rng.uniform(-bound, bound, size=(m, m)) * (1 - 1e-9)
        a = a + (noise + noise.T) / 2.0
    return MatrixCoopGame(a)


def convention_block(game_actions: int, blocks: int) -> np.ndarray:
    """Block label of every action for a game built by :func:`gen_convention_game`."""
    return np.repeat(np.arange(blocks), game_actions // blocks)


def gen_dominant_game(m: int, bonus: float) -> MatrixCoopGame:
    """Identity game whose last action pays ``1 + bonus`` in self-coordination."""
    if m < 2:
        raise ValueError("need at least two actions")
    if bonus <= 0:
        raise ValueError("bonus must be positive")
    a = np.eye(m)
    a[m - 1, m - 1] = 1.0 + bonus
    return MatrixCoopGame(a)
