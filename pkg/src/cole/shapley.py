"""Graphic Shapley value and the cooperative-incompatibility distribution.

The coalition value of ``C`` is the expected unpopularity-weighted payoff of
two independent uniform draws from ``C``::

    v(C) = 1/|C|^2 * sum_{i,j in C} sigma(i) sigma(j) w(i, j)

where ``sigma = 1 / wpg`` is the inverse weighted PageRank of the game graph
(or, optionally, of the preference graph). Shapley values of this game are
then inverted into a sampling distribution that puts most mass on the
strategies contributing least.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np

from .graph import (
    DEFAULT_DAMPING,
    PayoffMatrix,
    TieRule,
    weighted_pagerank,
    weighted_pagerank_adjacency,
)

EXACT_LIMIT = 10
DEFAULT_SAMPLES = 10_000


class TooLarge(ValueError):
    """Exact Shapley enumeration requested above the configured size limit."""


@dataclass(frozen=True, eq=False)
class CharacteristicFunction:
    sigma: np.ndarray
    m: PayoffMatrix

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.shape != (self.m.n,):
            raise ValueError(f"sigma has shape {sigma.shape}, expected ({self.m.n},)")
        if np.any(sigma <= 0):
            raise ValueError("sigma must be strictly positive")
        object.__setattr__(self, "sigma", sigma)

    @property
    def n(self) -> int:
        return self.m.n

    @property
    def weighted(self) -> np.ndarray:
        """``B[i, j] = sigma(i) sigma(j) w(i, j)``."""
        return self.sigma[:, None] * self.m.w * self.sigma[None, :]


@dataclass(frozen=True, eq=False)
class ShapleyVector:
    sv: np.ndarray
    method: Literal["exact", "monte_carlo"]
    samples: int = 0
    seed: int | None = None
    stderr: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "sv": [float(x) for x in self.sv],
            "method": self.method,
            "samples": self.samples,
            "seed": self.seed,
        }


@dataclass(frozen=True, eq=False)
class IncompatibilityDistribution:
    phi: np.ndarray
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {"phi": [float(x) for x in self.phi], "degenerate": self.degenerate}


@dataclass(frozen=True)
class SolverConfig:
    damping: float = DEFAULT_DAMPING
    tol: float = 1e-12
    max_iter: int = 1000
    exact_limit: int = EXACT_LIMIT
    mc_samples: int = DEFAULT_SAMPLES
    seed: int = 0
    ties: TieRule = "lowest"
    # "game": complete game graph (self-loops dropped); "preference": argmax subgraph
    sigma_graph: Literal["game", "preference"] = "game"


def characteristic_value(cf: CharacteristicFunction, coalition: Iterable[int]) -> float:
    idx = np.fromiter(sorted(set(coalition)), dtype=int)
    if idx.size == 0:
        return 0.0
    if idx.min() < 0 or idx.max() >= cf.n:
        raise IndexError(f"coalition {idx.tolist()} outside 0..{cf.n - 1}")
    b = cf.weighted
    return float(b[np.ix_(idx, idx)].sum() / idx.size**2)


def coalition_values(cf: CharacteristicFunction) -> np.ndarray:
    """``v`` for every coalition, indexed by bitmask (bit ``i`` set = member ``i``)."""
    n = cf.n
    masks = np.arange(1 << n)
    members = ((masks[:, None] >> np.arange(n)) & 1).astype(float)
    b = cf.weighted
    totals = np.einsum("si,ij,sj->s", members, b, members)
    sizes = members.sum(axis=1)
    values = np.zeros(1 << n)
    values[1:] = totals[1:] / sizes[1:] ** 2
    return values


def exact_shapley(cf: CharacteristicFunction, limit: int = EXACT_LIMIT) -> ShapleyVector:
    """Exact Shapley values via the subset-weighted form of the permutation average.

    ``SV(i) = sum_{S not containing i} |S|! (n-|S|-1)! / n! * (v(S + i) - v(S))``
    """
    n = cf.n
    if n > limit:
        raise TooLarge(f"exact Shapley limited to n <= {limit}, got n = {n}")
    values = coalition_values(cf)
    masks = np.arange(1 << n)
    sizes = np.array([bin(s).count("1") for s in range(1 << n)])
    weight_by_size = np.array(
        [math.factorial(k) * math.factorial(n - k - 1) / math.factorial(n) for k in range(n)]
    )
    sv = np.zeros(n)
    for i in range(n):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        sv[i] = np.sum(weight_by_size[sizes[without]] * (values[without | bit] - values[without]))
    return ShapleyVector(sv, "exact")


def draw_permutations(n: int, samples: int, rng: np.random.Generator) -> np.ndarray:
    base = np.tile(np.arange(n), (samples, 1))
    return rng.permuted(base, axis=1)


def permutation_marginals(cf: CharacteristicFunction, perms: np.ndarray) -> np.ndarray:
    """Marginal contribution of every player in every permutation.

    Returns an array of shape ``(len(perms), n)`` where entry ``[r, i]`` is
    ``v(P_i + {i}) - v(P_i)`` for the predecessors ``P_i`` of ``i`` in
    permutation ``r``. The coalition double sum is updated incrementally.
    """
    perms = np.atleast_2d(np.asarray(perms, dtype=int))
    samples, n = perms.shape
    b = cf.weighted
    rows = np.arange(samples)
    member = np.zeros((samples, n))
    total = np.zeros(samples)
    prev_value = np.zeros(samples)
    out = np.zeros((samples, n))
    for pos in range(n):
        joiner = perms[:, pos]
        cross = np.einsum("sj,sj->s", b[joiner] + b[:, joiner].T, member)
        total = total + cross + b[joiner, joiner]
        member[rows, joiner] = 1.0
        value = total / (pos + 1) ** 2
        out[rows, joiner] = value - prev_value
        prev_value = value
    return out


def mc_shapley(
    cf: CharacteristicFunction, samples: int = DEFAULT_SAMPLES, seed=0
) -> ShapleyVector:
    """Monte Carlo permutation-sampling estimate of the Shapley vector.

    ``stderr`` holds the per-player standard error of the estimate, from the
    sample variance of the marginal contributions.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    perms = draw_permutations(cf.n, samples, rng)
    marg = permutation_marginals(cf, perms)
    sv = marg.mean(axis=0)
    if samples > 1:
        stderr = marg.std(axis=0, ddof=1) / math.sqrt(samples)
    else:
        stderr = np.full(cf.n, np.nan)
    return ShapleyVector(sv, "monte_carlo", samples, seed if isinstance(seed, int) else None, stderr)


def incompatibility_distribution(sv: ShapleyVector | np.ndarray) -> IncompatibilityDistribution:
    """Normalise and invert Shapley values into a sampling distribution.

    Values are first shifted so the minimum is at least zero. If they then
    sum to zero the uniform distribution is returned with ``degenerate`` set.
    """
    values = np.asarray(sv.sv if isinstance(sv, ShapleyVector) else sv, dtype=float)
    n = values.shape[0]
    if n < 2:
        raise ValueError("incompatibility distribution needs at least two strategies")
    shifted = values - min(values.min(), 0.0)
    total = shifted.sum()
    if total <= 0:
        return IncompatibilityDistribution(np.full(n, 1.0 / n), degenerate=True)
    share = shifted / total
    inverted = 1.0 - share
    return IncompatibilityDistribution(inverted / inverted.sum())


def unpopularity(m: PayoffMatrix, config: SolverConfig = SolverConfig()) -> np.ndarray:
    """``sigma = 1 / wpg`` on the graph selected by ``config.sigma_graph``.

    Every node of the complete game graph has the same degrees, so the game
    graph yields a constant sigma and ``v`` reduces to the mean pairwise
    payoff of the coalition (up to a constant factor).
    """
    if config.sigma_graph == "game":
        pr = weighted_pagerank_adjacency(np.ones((m.n, m.n)), config.damping, config.tol, config.max_iter)
    elif config.sigma_graph == "preference":
        pr = weighted_pagerank(m, config.damping, config.tol, config.max_iter, config.ties)
    else:
        raise ValueError(f"unknown sigma_graph {config.sigma_graph!r}")
    return 1.0 / pr.pr


def solve(
    m: PayoffMatrix, config: SolverConfig = SolverConfig()
) -> tuple[ShapleyVector, IncompatibilityDistribution]:
    """WPG -> sigma -> coalition game -> Shapley -> incompatibility distribution."""
    if m.n < 2:
        raise ValueError("solve needs at least two strategies")
    cf = CharacteristicFunction(unpopularity(m, config), m)
    if m.n <= config.exact_limit:
        shap = exact_shapley(cf, config.exact_limit)
    else:
        shap = mc_shapley(cf, config.mc_samples, config.seed)
    return shap, incompatibility_distribution(shap)


def solution_to_json(shap: ShapleyVector, phi: IncompatibilityDistribution, **extra) -> str:
    obj = shap.to_dict()
    obj["phi"] = [float(x) for x in phi.phi]
    obj["degenerate"] = phi.degenerate
    obj.update(extra)
    return json.dumps(obj, indent=2)


def solution_from_json(text: str) -> tuple[ShapleyVector, IncompatibilityDistribution]:
    obj = json.loads(text)
    shap = ShapleyVector(np.array(obj["sv"], dtype=float), obj["method"], int(obj["samples"]), obj.get("seed"))
    phi = IncompatibilityDistribution(np.array(obj["phi"], dtype=float), bool(obj.get("degenerate", False)))
    return shap, phi
