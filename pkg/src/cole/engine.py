"""The generation loop that grows a population one strategy at a time.

Each generation: complete the payoff matrix, solve for the incompatibility
distribution, train a candidate with an oracle, then add it to the
population (evicting an early member when over capacity).

All randomness for generation ``t`` is derived from ``(seed, t)``, so a run
resumed from a checkpoint replays exactly what an uninterrupted run would.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Iterable, Literal

import numpy as np

from .games import MatrixCoopGame, payoff, uniform
from .graph import PayoffMatrix, TieRule, build_preference_graph, preference_centrality
from .shapley import (
    DEFAULT_SAMPLES,
    EXACT_LIMIT,
    IncompatibilityDistribution,
    ShapleyVector,
    SolverConfig,
    solve,
)
from .trainer import (
    DEFAULT_ALPHA,
    DEFAULT_C,
    DEFAULT_K,
    OracleResult,
    VisitCounter,
    acceptance_test,
    oracle_exact,
    oracle_local,
)

CHECKPOINT_VERSION = 1

# stream tags for per-generation seed derivation
_SOLVER, _ORACLE, _EVICT = 1, 2, 3


class CheckpointVersionError(ValueError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    alpha: float = DEFAULT_ALPHA
    c: float = DEFAULT_C
    k: int = DEFAULT_K
    a: int = 1
    b: int = 3
    mc_samples: int = DEFAULT_SAMPLES
    exact_limit: int = EXACT_LIMIT
    damping: float = 0.85
    cap: int = 50
    evict_window: int = 10
    oracle: Literal["exact", "local"] = "exact"
    local_steps: int = 10
    local_step_size: float = 1.0
    local_explore: float = 0.1
    ties: TieRule = "lowest"

    def __post_init__(self):
        if self.a < 0 or self.b < 0 or self.a + self.b < 1:
            raise ValueError("ratio a:b needs a, b >= 0 and a + b >= 1")
        if self.alpha < 0 or self.c < 0:
            raise ValueError("alpha and c must be >= 0")
        if self.k < 1 or self.mc_samples < 1 or self.local_steps < 1:
            raise ValueError("k, mc_samples and local_steps must be >= 1")
        if self.cap < 2 or self.evict_window < 1:
            raise ValueError("cap must be >= 2 and evict_window >= 1")
        if not 0 < self.damping < 1:
            raise ValueError("damping must lie in (0, 1)")
        if self.oracle not in ("exact", "local"):
            raise ValueError(f"unknown oracle {self.oracle!r}")


@dataclass
class Population:
    members: list
    payoff: PayoffMatrix
    ids: list
    visits: VisitCounter
    cap: int = 50
    evict_window: int = 10
    next_id: int = 0
    generation: int = 0

    @classmethod
    def initial(cls, game: MatrixCoopGame, cap=50, evict_window=10, seed=0) -> "Population":
        """A single uniform mixed strategy."""
        s = uniform(game.actions)
        w = np.array([[_pair_payoff(game, s, s, seed, 0, 0)]])
        return cls([s], PayoffMatrix(w, symmetric=True), [0], VisitCounter.zeros(1), cap, evict_window, 1, 0)

    @property
    def n(self) -> int:
        return len(self.members)


@dataclass
class GenerationRecord:
    generation: int
    member_id: int
    payoff_snapshot_ref: str
    payoff_row: list
    shapley: ShapleyVector
    phi: IncompatibilityDistribution
    oracle: OracleResult
    eta_history_row: list
    preference_targets: list
    evicted: int | None
    rng_state: list

    def to_dict(self) -> dict:
        return {
            "generation": self.generation,
            "member_id": self.member_id,
            "payoff_snapshot_ref": self.payoff_snapshot_ref,
            "payoff_row": [float(x) for x in self.payoff_row],
            "shapley": self.shapley.to_dict(),
            "phi": [float(x) for x in self.phi.phi],
            "phi_degenerate": self.phi.degenerate,
            "oracle": self.oracle.to_dict(),
            "improved": self.oracle.improved,
            "eta_history_row": [float(x) for x in self.eta_history_row],
            "preference_targets": [int(x) for x in self.preference_targets],
            "evicted": self.evicted,
            "rng_state": list(self.rng_state),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, obj: dict) -> "GenerationRecord":
        sh = obj["shapley"]
        orc = obj["oracle"]
        return cls(
            generation=obj["generation"],
            member_id=obj["member_id"],
            payoff_snapshot_ref=obj["payoff_snapshot_ref"],
            payoff_row=obj["payoff_row"],
            shapley=ShapleyVector(np.array(sh["sv"]), sh["method"], sh["samples"], sh["seed"]),
            phi=IncompatibilityDistribution(np.array(obj["phi"]), obj["phi_degenerate"]),
            oracle=OracleResult(
                np.array(orc["strategy"]),
                orc["objective_value"],
                orc["eta_new"],
                orc["rank"],
                orc["accepted"],
                [tuple(t) for t in orc["trace"]],
            ),
            eta_history_row=obj["eta_history_row"],
            preference_targets=obj["preference_targets"],
            evicted=obj["evicted"],
            rng_state=obj["rng_state"],
        )


@dataclass
class ConvergenceDiagnostics:
    eta_sequence: list
    ratio_sequence: list
    converged_at: int | None
    centrality_consistent: bool
    improvements: list = field(default_factory=list)


def payoff_hash(m: PayoffMatrix) -> str:
    h = hashlib.sha256()
    h.update(np.asarray(m.w.shape, dtype=np.int64).tobytes())
    h.update(np.ascontiguousarray(m.w, dtype="<f8").tobytes())
    return h.hexdigest()


def derive_seed(*material: int) -> int:
    return int(np.random.SeedSequence([int(x) for x in material]).generate_state(1, np.uint64)[0])


def _pair_payoff(game: MatrixCoopGame, s, p, seed: int, id_a: int, id_b: int) -> float:
    if game.noise_mode == "exact":
        return payoff(game, s, p)
    lo, hi = sorted((id_a, id_b))
    return payoff(game, s, p, seed=[seed, lo, hi])


def simulate_payoffs(
    pop: Population, new_strategy, game: MatrixCoopGame, seed: int = 0, new_id: int | None = None
) -> PayoffMatrix:
    """Payoff matrix of ``pop`` extended by one row and column for ``new_strategy``.

    Common-payoff games are seat-symmetric, so each unordered pair is
    evaluated once and mirrored. Noisy games seed every pair from
    ``(seed, id_lo, id_hi)``, which makes entries independent of the order
    they are filled in.
    """
    new_id = pop.next_id if new_id is None else new_id
    n = pop.n
    row = np.empty(n + 1)
    for j, (member, mid) in enumerate(zip(pop.members, pop.ids)):
        row[j] = _pair_payoff(game, new_strategy, member, seed, new_id, mid)
    row[n] = _pair_payoff(game, new_strategy, new_strategy, seed, new_id, new_id)
    w = np.empty((n + 1, n + 1))
    w[:n, :n] = pop.payoff.w
    w[n, :] = row
    w[:, n] = row
    return PayoffMatrix(w, symmetric=True)


def evict(pop: Population, rng=None) -> int | None:
    """Drop one random member among the earliest ``evict_window`` when over cap.

    The window never reaches the newest member. Returns the evicted member id.
    """
    if pop.n <= pop.cap:
        return None
    rng = np.random.default_rng(rng)
    window = min(pop.evict_window, pop.n - 1)
    idx = int(rng.integers(window))
    keep = [i for i in range(pop.n) if i != idx]
    evicted = pop.ids[idx]
    pop.members = [pop.members[i] for i in keep]
    pop.ids = [pop.ids[i] for i in keep]
    pop.payoff = PayoffMatrix(pop.payoff.w[np.ix_(keep, keep)], symmetric=pop.payoff.symmetric)
    pop.visits = VisitCounter(pop.visits.counts[keep].copy())
    return evicted


def run_generation(
    pop: Population, game: MatrixCoopGame, config: EngineConfig, seed: int
) -> GenerationRecord:
    """Advance ``pop`` by one generation in place and return its record."""
    if pop.n < 1:
        raise ValueError("population is empty")
    if pop.payoff.n != pop.n:
        raise ValueError("payoff matrix is out of sync with the population")
    gen = pop.generation + 1

    # solve
    if pop.n >= 2:
        solver = SolverConfig(
            damping=config.damping,
            exact_limit=config.exact_limit,
            mc_samples=config.mc_samples,
            seed=derive_seed(seed, gen, _SOLVER),
            ties=config.ties,
        )
        shap, phi = solve(pop.payoff, solver)
    else:
        shap = ShapleyVector(np.array([pop.payoff.w[0, 0]]), "exact")
        phi = IncompatibilityDistribution(np.array([1.0]))

    # train
    if config.oracle == "exact":
        result = oracle_exact(game, pop.members, phi.phi, config.alpha, config.k)
        visits = VisitCounter.zeros(pop.n)
    else:
        result = oracle_local(
            game,
            pop.members,
            phi.phi,
            config.alpha,
            config.local_steps,
            config.local_step_size,
            derive_seed(seed, gen, _ORACLE),
            c=config.c,
            a=config.a,
            b=config.b,
            k=config.k,
            explore=config.local_explore,
        )
        visits = VisitCounter(np.array(result.visits, dtype=np.int64))

    # expand
    new_id = pop.next_id
    expanded = simulate_payoffs(pop, result.strategy, game, seed, new_id)
    pg = build_preference_graph(expanded, config.ties)
    eta = preference_centrality(pg)
    rank, accepted = acceptance_test(eta, expanded.n - 1, config.k)
    result = replace(result, eta_new=float(eta[-1]), rank=rank, accepted=accepted)

    pop.members = pop.members + [np.asarray(result.strategy, dtype=float)]
    pop.ids = pop.ids + [new_id]
    pop.payoff = expanded
    pop.visits = VisitCounter(np.append(visits.counts, 0))
    pop.next_id = new_id + 1
    pop.generation = gen
    evicted = evict(pop, derive_seed(seed, gen, _EVICT))

    return GenerationRecord(
        generation=gen,
        member_id=new_id,
        payoff_snapshot_ref=payoff_hash(expanded),
        payoff_row=expanded.w[-1].tolist(),
        shapley=shap,
        phi=phi,
        oracle=result,
        eta_history_row=eta.tolist(),
        preference_targets=pg.out_edge.tolist(),
        evicted=evicted,
        rng_state=[int(seed), gen],
    )


def diagnostics(records: Iterable[GenerationRecord]) -> ConvergenceDiagnostics:
    """Centrality trajectory of the newest strategy across generations.

    Also recounts the newest strategy's in-degree from the stored preference
    edges and checks ``eta = 1 - indeg / (n - 1)`` for every record.
    """
    records = list(records)
    if len(records) < 2:
        raise ValueError("diagnostics need at least two generation records")
    etas = [float(r.oracle.eta_new) for r in records]
    ratios = [etas[t + 1] / etas[t] if etas[t] > 0 else None for t in range(len(etas) - 1)]
    converged_at = next((r.generation for r, e in zip(records, etas) if e == 0.0), None)
    consistent = True
    for r, e in zip(records, etas):
        targets = list(r.preference_targets)
        n = len(targets)
        new = n - 1
        indeg = sum(1 for t in targets if t == new)
        if e != 1.0 - indeg / (n - 1):
            consistent = False
    improvements = [r.oracle.improved for r in records]
    return ConvergenceDiagnostics(etas, ratios, converged_at, consistent, improvements)


class Engine:
    """Owns one population and its seed; runs generations sequentially."""

    def __init__(
        self,
        game: MatrixCoopGame,
        config: EngineConfig = EngineConfig(),
        seed: int = 0,
        population: Population | None = None,
    ):
        self.game = game
        self.config = config
        self.seed = int(seed)
        self.population = population or Population.initial(
            game, config.cap, config.evict_window, self.seed
        )

    def step(self) -> GenerationRecord:
        return run_generation(self.population, self.game, self.config, self.seed)

    def run(self, generations: int, callback: Callable[[GenerationRecord], None] | None = None):
        records = []
        for _ in range(generations):
            rec = self.step()
            if callback is not None:
                callback(rec)
            records.append(rec)
        return records

    def checkpoint(self, **extra) -> dict:
        pop = self.population
        obj = {
            "format_version": CHECKPOINT_VERSION,
            "seed": self.seed,
            "generation": pop.generation,
            "next_id": pop.next_id,
            "ids": list(pop.ids),
            "members": [[float(x) for x in s] for s in pop.members],
            "payoff": pop.payoff.w.tolist(),
            "visits": pop.visits.counts.tolist(),
            "rng_state": [self.seed, pop.generation],
            "engine": asdict(self.config),
            "game": self.game.to_dict(),
        }
        obj.update(extra)
        return obj

    @classmethod
    def from_checkpoint(cls, obj: dict) -> "Engine":
        version = obj.get("format_version")
        if version != CHECKPOINT_VERSION:
            raise CheckpointVersionError(
                f"checkpoint format {version!r} is not supported (expected {CHECKPOINT_VERSION})"
            )
        config = EngineConfig(**obj["engine"])
        game = MatrixCoopGame.from_dict(obj["game"])
        pop = Population(
            members=[np.array(s, dtype=float) for s in obj["members"]],
            payoff=PayoffMatrix(np.array(obj["payoff"], dtype=float), symmetric=True),
            ids=[int(i) for i in obj["ids"]],
            visits=VisitCounter(np.array(obj["visits"], dtype=np.int64)),
            cap=config.cap,
            evict_window=config.evict_window,
            next_id=int(obj["next_id"]),
            generation=int(obj["generation"]),
        )
        return cls(game, config, int(obj["seed"]), pop)
