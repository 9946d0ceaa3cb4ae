"""Graphic-form games, preference graphs and their centralities.

A population of ``n`` strategies is summarised by its payoff matrix ``w``
where ``w[i, j]`` is the mean cooperative return of ``i`` playing with ``j``.
Read as a complete directed weighted graph this is the *game graph*; keeping
only each node's best out-edge (self-loops excluded) gives the *preference
graph*, on which in-degree centrality and weighted PageRank are computed.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

TieRule = Literal["lowest", "highest"]
TIE_RULES = ("lowest", "highest")

DEFAULT_DAMPING = 0.85


class SingletonGraph(ValueError):
    """Raised when a preference graph is requested for fewer than two nodes."""


class OutOfRange(ValueError):
    """Raised when a prefix length exceeds the population size."""


class NoConvergence(RuntimeError):
    """Power iteration did not reach the requested tolerance.

    The last iterate and its residual are kept on the exception so callers
    can inspect how far off it was.
    """

    def __init__(self, message: str, pr: np.ndarray, residual: float, iterations: int):
        super().__init__(message)
        self.pr = pr
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True, eq=False)
class PayoffMatrix:
    """Empirical payoff table of a population.

    Rows index the head strategy, columns its partner. The diagonal holds
    self-play returns.
    """

    w: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        w = np.array(self.w, dtype=float, copy=True)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"payoff matrix must be square, got shape {w.shape}")
        if w.shape[0] < 1:
            raise ValueError("payoff matrix needs at least one strategy")
        if not np.all(np.isfinite(w)):
            raise ValueError("payoff matrix entries must be finite")
        if self.symmetric and np.max(np.abs(w - w.T)) > 1e-9:
            raise ValueError("payoff matrix flagged symmetric but w != w.T")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return self.w.shape[0]

    def prefix(self, size: int) -> "PayoffMatrix":
        return PayoffMatrix(self.w[:size, :size], symmetric=self.symmetric)

    def __eq__(self, other):
        if not isinstance(other, PayoffMatrix):
            return NotImplemented
        return self.w.shape == other.w.shape and bool(np.array_equal(self.w, other.w))

    # -- serialisation -----------------------------------------------------

    def to_csv(self) -> str:
        lines = [f"n={self.n}"]
        lines += [",".join(format_float(x) for x in row) for row in self.w]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str, symmetric: bool = False) -> "PayoffMatrix":
        rows = [line.strip() for line in text.strip().splitlines() if line.strip()]
        if not rows or not rows[0].startswith("n="):
            raise ValueError("payoff CSV must start with an 'n=<count>' header")
        try:
            n = int(rows[0][2:])
        except ValueError as exc:
            raise ValueError(f"bad header {rows[0]!r}") from exc
        body = rows[1:]
        if len(body) != n:
            raise ValueError(f"header says n={n} but found {len(body)} rows")
        w = []
        for row in body:
            values = [float(x) for x in row.split(",")]
            if len(values) != n:
                raise ValueError(f"expected {n} values per row, got {len(values)}")
            w.append(values)
        return cls(np.array(w, dtype=float), symmetric=symmetric)

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "w": self.w.tolist()})

    @classmethod
    def from_json(cls, text: str, symmetric: bool = False) -> "PayoffMatrix":
        obj = json.loads(text)
        m = cls(np.array(obj["w"], dtype=float), symmetric=symmetric)
        if m.n != int(obj["n"]):
            raise ValueError(f"n={obj['n']} does not match matrix of size {m.n}")
        return m


@dataclass(frozen=True, eq=False)
class PreferenceGraph:
    """Each node keeps exactly one out-edge, to its best partner."""

    out_edge: np.ndarray

    @property
    def n(self) -> int:
        return len(self.out_edge)

    def in_degree(self) -> np.ndarray:
        return np.bincount(self.out_edge, minlength=self.n)

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n, self.n))
        adj[np.arange(self.n), self.out_edge] = 1.0
        return adj


@dataclass(frozen=True)
class PageRankVector:
    pr: np.ndarray
    damping: float
    residual: float
    iterations: int


def format_float(x: float) -> str:
    """Shortest round-trip decimal form; NaN becomes an empty field."""
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x)


def _check_tie_rule(ties: str) -> None:
    if ties not in TIE_RULES:
        raise ValueError(f"unknown tie rule {ties!r}, expected one of {TIE_RULES}")


def build_preference_graph(m: PayoffMatrix, ties: TieRule = "lowest") -> PreferenceGraph:
    _check_tie_rule(ties)
    n = m.n
    if n < 2:
        raise SingletonGraph("preference graph needs at least two strategies")
    w = np.array(m.w)
    np.fill_diagonal(w, -np.inf)
    if ties == "lowest":
        targets = np.argmax(w, axis=1)
    else:
        targets = n - 1 - np.argmax(w[:, ::-1], axis=1)
    targets = targets.astype(int)
    targets.setflags(write=False)
    return PreferenceGraph(targets)


def sub_preference_graph(
    m: PayoffMatrix, prefix_len: int, ties: TieRule = "lowest"
) -> PreferenceGraph:
    """Preference graph of the first ``prefix_len`` generation-ordered strategies."""
    if prefix_len < 2:
        raise SingletonGraph("prefix must contain at least two strategies")
    if prefix_len > m.n:
        raise OutOfRange(f"prefix {prefix_len} exceeds population of {m.n}")
    return build_preference_graph(m.prefix(prefix_len), ties)


def preference_centrality(pg: PreferenceGraph) -> np.ndarray:
    """In-degree preference centrality ``1 - indeg / (n - 1)``.

    Zero marks a strategy every other strategy prefers as partner; one marks
    a strategy nobody prefers.
    """
    if pg.n < 2:
        raise SingletonGraph("centrality needs at least two strategies")
    return 1.0 - pg.in_degree() / (pg.n - 1)


def centrality_history(m: PayoffMatrix, ties: TieRule = "lowest") -> np.ndarray:
    """Lower-triangular matrix of centralities over growing prefixes.

    Row ``t - 2`` holds the centrality of the sub-preference graph of the
    first ``t`` strategies, for ``t = 2..n``; undefined cells are NaN.
    """
    if m.n < 2:
        raise SingletonGraph("history needs at least two strategies")
    hist = np.full((m.n - 1, m.n), np.nan)
    for t in range(2, m.n + 1):
        hist[t - 2, :t] = preference_centrality(sub_preference_graph(m, t, ties))
    return hist


def wpg_weights(adjacency: np.ndarray) -> np.ndarray:
    """Link weights ``W[v, u] = W_in(v, u) * W_out(v, u)`` of weighted PageRank.

    ``W_in(v, u) = I_u / sum_{p in R(v)} I_p`` and likewise for out-degrees,
    where ``R(v)`` are the nodes ``v`` links to. A zero out-degree is
    replaced by one so the out term stays defined.
    """
    adj = (np.asarray(adjacency) != 0).astype(float)
    np.fill_diagonal(adj, 0.0)
    indeg = adj.sum(axis=0)
    outdeg = adj.sum(axis=1)
    outdeg = np.where(outdeg == 0, 1.0, outdeg)
    in_norm = adj @ indeg
    out_norm = adj @ outdeg
    safe_in = np.where(in_norm > 0, in_norm, 1.0)
    safe_out = np.where(out_norm > 0, out_norm, 1.0)
    return adj * np.outer(1.0 / safe_in, indeg) * np.outer(1.0 / safe_out, outdeg)


def weighted_pagerank_adjacency(
    adjacency: np.ndarray,
    damping: float = DEFAULT_DAMPING,
    tol: float = 1e-12,
    max_iter: int = 1000,
) -> PageRankVector:
    """Weighted PageRank by fixed-point iteration on an arbitrary digraph."""
    if not 0.0 < damping < 1.0:
        raise ValueError("damping must lie in (0, 1)")
    if tol <= 0:
        raise ValueError("tol must be positive")
    weights = wpg_weights(adjacency)
    n = weights.shape[0]
    pr = np.ones(n)
    residual = math.inf
    for it in range(1, max_iter + 1):
        new = (1.0 - damping) + damping * (weights.T @ pr)
        residual = float(np.max(np.abs(new - pr)))
        pr = new
        if residual <= tol:
            return PageRankVector(pr, damping, residual, it)
    raise NoConvergence(
        f"weighted PageRank residual {residual:.3e} > {tol:.3e} after {max_iter} iterations",
        pr,
        residual,
        max_iter,
    )


def weighted_pagerank(
    m: PayoffMatrix,
    damping: float = DEFAULT_DAMPING,
    tol: float = 1e-12,
    max_iter: int = 1000,
    ties: TieRule = "lowest",
) -> PageRankVector:
    """Weighted PageRank of the preference graph built from ``m``."""
    pg = build_preference_graph(m, ties)
    return weighted_pagerank_adjacency(pg.adjacency(), damping, tol, max_iter)


# -- CSV exports ----------------------------------------------------------


def history_to_csv(hist: np.ndarray) -> str:
    """Rows are prefix lengths (column 0), NaN cells become empty fields."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    n = hist.shape[1]
    writer.writerow(["generation"] + [str(j) for j in range(n)])
    for r, row in enumerate(hist):
        writer.writerow([str(r + 2)] + [format_float(x) for x in row])
    return buf.getvalue()


def history_from_csv(text: str) -> np.ndarray:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][0] != "generation":
        raise ValueError("history CSV must start with a 'generation' header")
    body = rows[1:]
    n = len(rows[0]) - 1
    hist = np.full((len(body), n), np.nan)
    for r, row in enumerate(body):
        for j, cell in enumerate(row[1:]):
            if cell != "":
                hist[r, j] = float(cell)
    return hist


def centrality_to_csv(eta: Sequence[float], generation: int) -> str:
    eta = list(eta)
    header = ["generation"] + [str(j) for j in range(len(eta))]
    return ",".join(header) + "\n" + ",".join([str(generation)] + [format_float(x) for x in eta]) + "\n"


def preference_edges_to_csv(m: PayoffMatrix, pg: PreferenceGraph) -> str:
    lines = ["node,target,weight"]
    for i, j in enumerate(pg.out_edge):
        lines.append(f"{i},{int(j)},{format_float(m.w[i, j])}")
    return "\n".join(lines) + "\n"


def wpg_to_csv(pr: PageRankVector) -> str:
    lines = ["node,wpg,sigma"]
    for i, x in enumerate(pr.pr):
        lines.append(f"{i},{format_float(x)},{format_float(1.0 / x)}")
    return "\n".join(lines) + "\n"
