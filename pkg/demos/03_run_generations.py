"""
Growing a population generation by generation
==============================================

On a game with one clearly best convention the loop finds it quickly, and from
then on every member prefers to play with it (centrality 0).
"""

from cole.engine import Engine, EngineConfig, diagnostics
from cole.games import gen_convention_game, gen_dominant_game

game = gen_dominant_game(4, bonus=1.0)
engine = Engine(game, EngineConfig(oracle="exact", alpha=1.0, k=3), seed=0)
records = engine.run(5)
for r in records:
    print(r.generation, r.oracle.strategy.round(3), "eta_new =", r.oracle.eta_new, "accepted =", r.oracle.accepted)

diag = diagnostics(records)
print("converged at generation", diag.converged_at)

# The approximate oracle follows sampled partners instead of solving exactly.
# A small cap forces evictions of early members.
game = gen_convention_game(blocks=3, seed=1)
config = EngineConfig(oracle="local", a=1, b=3, cap=5, evict_window=3)
engine = Engine(game, config, seed=7)
for r in engine.run(8):
    print(r.generation, "eta_new =", round(r.oracle.eta_new, 3), "evicted:", r.evicted)
print("ids kept:", engine.population.ids)

# A checkpoint resumes to exactly the same stream.
resumed = Engine.from_checkpoint(engine.checkpoint())
print("next generation after resume:", resumed.step().generation)
