"""Reference node-immunization policies to compare shaping against.

Every policy ranks nodes, fully immunizes the top floor(k), and puts the
fractional remainder k - floor(k) on the next-ranked node, so the budget
is spent exactly.  Ties in scores go to the smaller node index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .graph import Graph, HazardMatrix
from .shaping import ActionAllocation
from .spectral import hazard_radius

__all__ = [
    "BaselinePolicy",
    "rand_policy",
    "degree_policy",
    "wdegree_policy",
    "netshield_policy",
]


@dataclass
class BaselinePolicy:
    name: str
    allocation: ActionAllocation


def _ranked_allocation(order: np.ndarray, n: int, k: float) -> ActionAllocation:
    values = np.zeros(n)
    whole = min(int(math.floor(k)), n)
    values[order[:whole]] = 1.0
    frac = k - whole
    if frac > 0.0 and whole < n:
        values[order[whole]] = frac
    return ActionAllocation("node", values)


def _check_budget(n: int, k: float) -> float:
    if not np.isfinite(k) or k < 0.0:
        raise DomainError(f"budget must be finite and >= 0, got {k}")
    return min(k, float(n))


def rand_policy(graph: Graph, k: float, seed: int = 0) -> BaselinePolicy:
    """Uniformly random node choice without replacement."""
    k = _check_budget(graph.n, k)
    order = np.random.default_rng(seed).permutation(graph.n)
    return BaselinePolicy("rand", _ranked_allocation(order, graph.n, k))


def degree_policy(graph: Graph, k: float) -> BaselinePolicy:
    """Highest out-degree first."""
    k = _check_budget(graph.n, k)
    order = np.argsort(-graph.out_degree(), kind="stable")
    return BaselinePolicy("degree", _ranked_allocation(order, graph.n, k))


def wdegree_policy(h: HazardMatrix, k: float) -> BaselinePolicy:
    """Largest total outgoing hazard first."""
    g = h.graph
    k = _check_budget(g.n, k)
    strength = np.bincount(g.src, weights=h.values, minlength=g.n)
    order = np.argsort(-strength, kind="stable")
    return BaselinePolicy("wdegree", _ranked_allocation(order, g.n, k))


def netshield_policy(graph: Graph, k: float) -> BaselinePolicy:
    """Greedy eigen-drop heuristic on the symmetrized adjacency.

    Picks nodes maximizing the shield value
    Sv(S) = sum_{i in S} 2 lambda u_i^2 - sum_{i,j in S} A_ij u_i u_j
    with (lambda, u) the leading eigenpair of (A + A^T)/2, one node at a
    time; each pick v adds 2 lambda u_v^2 - 2 sum_{j in S} A_vj u_j u_v.
    """
    n = graph.n
    k = _check_budget(n, k)
    ones = HazardMatrix(graph, np.ones(graph.num_edges))
    res = hazard_radius(ones)
    lam, u = res.rho, res.u
    base = 2.0 * lam * u * u
    b = np.zeros(n)  # b[v] = sum_{j in S} A_vj u_j on the symmetrized A
    order = np.empty(n, dtype=np.int64)
    taken = np.zeros(n, dtype=bool)
    picks = min(n, int(math.floor(k)) + (1 if k > math.floor(k) else 0))
    for i in range(picks):
        score = np.where(taken, -np.inf, base - 2.0 * b * u)
        s = int(np.argmax(score))
        order[i] = s
        taken[s] = True
        # column s of (A + A^T)/2: each incident directed edge adds 1/2
        lo, hi = graph.indptr[s], graph.indptr[s + 1]
        np.add.at(b, graph.nbr[lo:hi], 0.5 * u[s])
        incoming = graph.src[graph.dst == s]
        np.add.at(b, incoming, 0.5 * u[s])
    order[picks:] = np.flatnonzero(~taken)
    return BaselinePolicy("netshield", _ranked_allocation(order, n, k))
