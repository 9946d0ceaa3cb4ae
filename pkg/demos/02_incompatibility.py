"""
Which partner should the next strategy train with?
==================================================

Graphic Shapley values measure how much each strategy adds to the whole
population's cooperation. The incompatibility distribution turns them around,
putting the most mass on the strategy the population works worst with.
"""

import numpy as np

from cole.games import gen_convention_game, pure
from cole.graph import PayoffMatrix
from cole.shapley import solve

# Actions {0, 1} form one convention and {2, 3} another. Three members play
# the first convention; one specialist plays the second.
game = gen_convention_game(blocks=2, jitter=False)
members = np.array([pure(0, 4), pure(2, 4), pure(1, 4), [0.5, 0.5, 0.0, 0.0]])
w = members @ game.payoff_core @ members.T
print(w)

shap, phi = solve(PayoffMatrix(w))
print("Shapley values:", shap.sv.round(4), f"({shap.method})")
print("incompatibility distribution:", phi.phi.round(4))
print("most-needed partner:", int(np.argmax(phi.phi)))

# Partner draws add an exploration bonus for rarely used members.
from cole.trainer import VisitCounter, sample_partners

visits = VisitCounter.zeros(len(members))
print("slots (-1 = self-play):", sample_partners(phi.phi, visits, c=1.0, b=3, a=1, seed=0))
print("visits:", visits.counts)
