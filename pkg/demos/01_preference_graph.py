"""
Reading a learning process through its preference graph
=========================================================

Each strategy points at the partner it scores best with. A strategy nobody
points at has centrality 1, a strategy everybody points at has centrality 0.
"""

import numpy as np

from cole.graph import PayoffMatrix, build_preference_graph, centrality_history, weighted_pagerank

# Four strategies in the order they were trained. The last two improve the
# average payoff, yet each of them prefers someone else and nobody prefers them.
w = np.array(
    [
        [1.0, 3.0, 2.0, 2.0],
        [3.0, 1.0, 2.0, 2.0],
        [2.0, 2.0, 6.0, 1.5],
        [2.0, 2.0, 1.5, 8.0],
    ]
)
m = PayoffMatrix(w)

print("mean payoff per strategy:", w.mean(axis=1))
print("best partner per strategy:", build_preference_graph(m).out_edge)

# Row t holds the centralities within the first t strategies.
hist = centrality_history(m)
for row in hist:
    print(" ".join("-" if np.isnan(x) else f"{x:.3f}" for x in row))

# Weighted PageRank gives a graded popularity score on the same graph.
print("weighted PageRank:", weighted_pagerank(m).pr.round(4))
