"""IPI-mixture objective, SUCG partner sampling and best-response oracles.

The objective of a candidate strategy ``s`` against the current population is

    J(s, phi) = E_{p ~ phi} w(s, p) + alpha * w(s, s)

i.e. a cooperative term against the incompatibility distribution plus a
self-play term.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .games import MatrixCoopGame, uniform
from .graph import PayoffMatrix, build_preference_graph, preference_centrality

SELF = -1  # partner slot meaning "play with yourself"

DEFAULT_ALPHA = 1.0
DEFAULT_C = 1.0
DEFAULT_K = 3


@dataclass
class Objective:
    alpha: float
    phi: np.ndarray
    payoff_fn: Callable[[np.ndarray, np.ndarray], float]
    partners: Sequence[np.ndarray]


@dataclass
class VisitCounter:
    counts: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "VisitCounter":
        return cls(np.zeros(n, dtype=np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def visit(self, i: int) -> None:
        self.counts[i] += 1


@dataclass
class OracleResult:
    strategy: np.ndarray
    objective_value: float
    eta_new: float
    rank: int
    accepted: bool
    trace: list = field(default_factory=list)
    start_value: float | None = None
    visits: list | None = None

    @property
    def improved(self) -> bool:
        return self.start_value is None or self.objective_value > self.start_value

    def to_dict(self) -> dict:
        return {
            "strategy": [float(x) for x in self.strategy],
            "objective_value": float(self.objective_value),
            "eta_new": float(self.eta_new),
            "rank": int(self.rank),
            "accepted": bool(self.accepted),
            "trace": [[int(t), float(v)] for t, v in self.trace],
        }


def objective_value(obj: Objective, s) -> float:
    s = np.asarray(s, dtype=float)
    coop = sum(float(f) * obj.payoff_fn(s, p) for f, p in zip(obj.phi, obj.partners) if f != 0)
    return coop + obj.alpha * obj.payoff_fn(s, s)


def sucg_weights(phi, visits: VisitCounter, c: float) -> np.ndarray:
    """Partner-sampling distribution with a visit-count exploration bonus.

    ``phi(u) + c * sqrt(sum_i N(i)) / (1 + N(u))``, renormalised to sum to one.
    """
    if c < 0:
        raise ValueError("exploration constant c must be >= 0")
    phi = np.asarray(phi, dtype=float)
    counts = np.asarray(visits.counts, dtype=float)
    if c == 0 or counts.sum() == 0:
        return phi.copy()
    raw = phi + c * np.sqrt(counts.sum()) / (1.0 + counts)
    return raw / raw.sum()


def sample_partners(phi, visits: VisitCounter, c: float, b: int, a: int, seed=None) -> list[int]:
    """``a`` self-play slots followed by ``b`` sequential SUCG draws.

    Weights are recomputed after every draw, and ``visits`` is updated in
    place. Self-play slots are marked with :data:`SELF`.
    """
    if a < 0 or b < 0 or a + b < 1:
        raise ValueError("need a, b >= 0 and a + b >= 1")
    rng = np.random.default_rng(seed)
    slots = [SELF] * a
    for _ in range(b):
        weights = sucg_weights(phi, visits, c)
        u = int(rng.choice(len(weights), p=weights))
        visits.visit(u)
        slots.append(u)
    return slots


def acceptance_test(eta_values, new_index: int, k: int) -> tuple[int, bool]:
    """Rank of the candidate by centrality (1 = best) and whether it is top ``k``.

    Ties count in the candidate's favour: only strictly smaller centralities
    push it down.
    """
    eta = np.asarray(eta_values, dtype=float)
    rank = 1 + int(np.sum(eta < eta[new_index]))
    return rank, rank <= k


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    n = v.shape[0]
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, n + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _mixture(population: Sequence[np.ndarray], phi) -> np.ndarray:
    return np.asarray(phi, dtype=float) @ np.asarray(population, dtype=float)


def bilinear_objective(game: MatrixCoopGame, population, phi, alpha: float):
    """Closed-form ``J`` for a bilinear game and its gradient."""
    a = game.payoff_core
    q = a @ _mixture(population, phi)

    def value(s):
        return float(s @ q + alpha * (s @ a @ s))

    def grad(s):
        return q + 2.0 * alpha * (a @ s)

    return value, grad


def score_candidate(game: MatrixCoopGame, population, candidate, k: int) -> tuple[float, int, bool]:
    """Centrality, rank and acceptance of ``candidate`` appended to ``population``."""
    members = np.vstack([np.asarray(population, dtype=float), candidate])
    m = PayoffMatrix(members @ game.payoff_core @ members.T)
    eta = preference_centrality(build_preference_graph(m))
    rank, accepted = acceptance_test(eta, m.n - 1, k)
    return float(eta[-1]), rank, accepted


def _projected_ascent(value, grad, start, lr, max_steps=500, tol=1e-13):
    s = start
    for _ in range(max_steps):
        nxt = project_simplex(s + lr * grad(s))
        if np.max(np.abs(nxt - s)) < tol:
            return nxt
        s = nxt
    return s


def oracle_exact(
    game: MatrixCoopGame,
    population,
    phi,
    alpha: float = DEFAULT_ALPHA,
    k: int = DEFAULT_K,
) -> OracleResult:
    """Best response to the IPI mixture over the action simplex.

    Every pure strategy is evaluated. With ``alpha > 0`` the objective is
    quadratic, so projected gradient ascent is also started from every
    vertex and kept only if it strictly beats the best vertex.
    """
    value, grad = bilinear_objective(game, population, phi, alpha)
    m = game.actions
    vertex_values = [value(np.eye(m)[i]) for i in range(m)]
    best_i = int(np.argmax(vertex_values))
    best = np.eye(m)[best_i]
    best_value = vertex_values[best_i]
    trace = [(0, best_value)]
    if alpha > 0:
        lipschitz = 2.0 * alpha * np.linalg.norm(game.payoff_core, 2)
        lr = 1.0 / lipschitz if lipschitz > 0 else 1.0
        for i in range(m):
            cand = _projected_ascent(value, grad, np.eye(m)[i], lr)
            cand_value = value(cand)
            if cand_value > best_value + 1e-12:
                best, best_value = cand, cand_value
        trace.append((1, best_value))
    eta, rank, accepted = score_candidate(game, population, best, k)
    return OracleResult(best, best_value, eta, rank, accepted, trace)


def oracle_local(
    game: MatrixCoopGame,
    population,
    phi,
    alpha: float = DEFAULT_ALPHA,
    steps: int = 10,
    step_size: float = 1.0,
    seed=None,
    *,
    c: float = DEFAULT_C,
    a: int = 1,
    b: int = 3,
    k: int = DEFAULT_K,
    explore: float = 0.1,
    start=None,
) -> OracleResult:
    """Multiplicative-weights ascent from the newest member.

    Each step draws ``a`` self-play slots and ``b`` SUCG partners, and moves
    along the sampled-data gradient estimate. The iterate runs freely but the
    returned strategy is the best one seen under the closed-form objective,
    starting from the unperturbed start point, so the result never scores
    below it. ``explore`` mixes the start with the uniform strategy so mass
    can leave the support of a pure start.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    rng = np.random.default_rng(seed)
    population = np.asarray(population, dtype=float)
    value, _ = bilinear_objective(game, population, phi, alpha)
    A = game.payoff_core
    s0 = population[-1] if start is None else np.asarray(start, dtype=float)
    current, current_value = s0, value(s0)
    start_value = current_value
    x = (1.0 - explore) * s0 + explore * uniform(game.actions)
    visits = VisitCounter.zeros(len(population))
    trace = [(0, current_value)]
    for step in range(1, steps + 1):
        slots = sample_partners(phi, visits, c, b, a, rng)
        g = np.zeros(game.actions)
        for slot in slots:
            g += 2.0 * alpha * (A @ x) if slot == SELF else A @ population[slot]
        g /= len(slots)
        logits = np.log(np.maximum(x, 1e-300)) + step_size * g
        x = np.exp(logits - logits.max())
        x /= x.sum()
        x_value = value(x)
        if x_value > current_value:
            current, current_value = x.copy(), x_value
        trace.append((step, current_value))
    eta, rank, accepted = score_candidate(game, population, current, k)
    return OracleResult(
        current, current_value, eta, rank, accepted, trace, start_value, visits.counts.tolist()
    )
