"""Shared fixtures and independent oracle helpers.

Everything here deliberately avoids the package's own traversal and
spectral code: reachability is a dict-and-set BFS, spectra come from
numpy's dense eigensolver, and exact influence enumerates live-edge
outcomes directly.  Tests compare the fast implementations against these
slow-but-obvious routes.
"""

from __future__ import annotations

import numpy as np
import pytest

from netshape import Graph, HazardMatrix, ProbabilityMatrix


# ----------------------- graph generators -----------------------


def random_graph(rng: np.random.Generator, n: int, avg_out: float) -> Graph:
    """Sparse directed graph: ~n*avg_out edges, deduplicated, no self-loops."""
    m = max(1, int(round(n * avg_out)))
    src = rng.integers(0, n, size=3 * m)
    dst = rng.integers(0, n, size=3 * m)
    ok = src != dst
    key = src[ok] * n + dst[ok]
    _, first = np.unique(key, return_index=True)
    keep = np.sort(first)[:m]
    src, dst = src[ok][keep], dst[ok][keep]
    if src.size == 0:
        # fall back to a single edge so the graph is never degenerate
        src, dst = np.array([0]), np.array([1 % n if n > 1 else 0])
        if n == 1:
            raise ValueError("need n >= 2")
    return Graph(n, src, dst)


def heavy_tailed_graph(rng: np.random.Generator, n: int,
                       target_edges: int) -> Graph:
    """Directed graph with power-law-ish out-degrees and uniform targets."""
    weights = (np.arange(n) + 1.0) ** -0.7
    weights /= weights.sum()
    src = rng.choice(n, size=2 * target_edges, p=weights)
    dst = rng.integers(0, n, size=2 * target_edges)
    ok = src != dst
    key = src[ok] * n + dst[ok]
    _, first = np.unique(key, return_index=True)
    keep = np.sort(first)[:target_edges]
    return Graph(n, src[ok][keep], dst[ok][keep])


# ----------------------- spectral oracles -----------------------


def dense_sym(h: HazardMatrix) -> np.ndarray:
    """Dense (H + H^T)/2 for small-graph eigensolver comparisons."""
    g = h.graph
    m = np.zeros((g.n, g.n))
    np.add.at(m, (g.src, g.dst), h.values)
    return 0.5 * (m + m.T)


def dense_radius(h: HazardMatrix) -> float:
    """Largest eigenvalue of the symmetrization via numpy's eigensolver."""
    return float(np.linalg.eigvalsh(dense_sym(h)).max())


def scale_hazard(h: HazardMatrix, rho_target: float) -> HazardMatrix:
    """Rescale hazards so the dense-oracle radius equals rho_target."""
    rho = dense_radius(h)
    return HazardMatrix(h.graph, h.values * (rho_target / rho))


# ----------------------- reachability oracles -----------------------


def brute_reach(n: int, edges, seeds) -> set[int]:
    """Plain BFS over a python adjacency dict; no package code involved."""
    adj: dict[int, list[int]] = {}
    for u, v in edges:
        adj.setdefault(int(u), []).append(int(v))
    seen = set(int(s) for s in seeds)
    frontier = list(seen)
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    return seen


def brute_sccs(n: int, edges) -> list[set[int]]:
    """All strongly connected components by pairwise mutual reachability."""
    reach = [brute_reach(n, edges, [v]) for v in range(n)]
    comps: list[set[int]] = []
    assigned = set()
    for v in range(n):
        if v in assigned:
            continue
        comp = {w for w in reach[v] if v in reach[w]}
        comps.append(comp)
        assigned |= comp
    return comps


# ----------------------- exact influence -----------------------

_MAX_ENUM_EDGES = 18


def _outcome_tables(p: ProbabilityMatrix):
    """All 2^E live-edge outcomes: per-outcome probability and closure.

    Returns (prob, reach) with prob of shape (2^E,) and reach of shape
    (2^E, n, n) boolean, reach[o, v, w] marking w reachable from v in
    outcome o.  Exponential, so callers keep E <= 18.
    """
    g = p.graph
    e = g.num_edges
    if e > _MAX_ENUM_EDGES:
        raise ValueError(f"enumeration limited to {_MAX_ENUM_EDGES} edges")
    n = g.n
    outcomes = np.arange(1 << e, dtype=np.uint32)
    bits = (outcomes[:, None] >> np.arange(e)[None, :]) & 1
    live = bits.astype(bool)
    prob = np.where(live, p.values[None, :], 1.0 - p.values[None, :]).prod(axis=1)
    adj = np.zeros((outcomes.size, n, n), dtype=bool)
    for ei in range(e):
        adj[live[:, ei], g.src[ei], g.dst[ei]] = True
    reach = np.broadcast_to(np.eye(n, dtype=bool), adj.shape).copy()
    while True:
        grown = reach | (np.matmul(reach.astype(np.uint8),
                                   adj.astype(np.uint8)) > 0)
        if np.array_equal(grown, reach):
            break
        reach = grown
    return prob, reach


def exact_single_influences(p: ProbabilityMatrix) -> np.ndarray:
    """Exact influence sigma({v}) for every node v, by full enumeration."""
    prob, reach = _outcome_tables(p)
    sizes = reach.sum(axis=2)
    return prob @ sizes


def exact_set_influence(p: ProbabilityMatrix, s0) -> float:
    """Exact influence of a seed set, by full enumeration."""
    prob, reach = _outcome_tables(p)
    seeds = np.asarray(list(s0), dtype=np.int64)
    union = reach[:, seeds, :].any(axis=1)
    return float(prob @ union.sum(axis=1))


# ----------------------- projection oracles -----------------------


def projection_objective(delta, y, x) -> float:
    return float(np.sum((np.asarray(x) * delta - y) ** 2))


def qp_projection_oracle(delta, y, k) -> np.ndarray:
    """Solve the box-plus-L1 projection as an explicit QP (cvxpy)."""
    import cvxpy as cp

    x = cp.Variable(delta.size)
    problem = cp.Problem(
        cp.Minimize(cp.sum_squares(cp.multiply(delta, x) - y)),
        [x >= 0, x <= 1, cp.sum(x) <= k])
    problem.solve(solver=cp.CLARABEL)
    assert problem.status == "optimal"
    return np.asarray(x.value).reshape(-1)


def grid_projection_objective(delta, y, k, step=0.02) -> float:
    """Best objective over a dense feasible grid; m <= 3 only."""
    m = delta.size
    assert m <= 3
    axis = np.arange(0.0, 1.0 + step / 2, step)
    grids = np.meshgrid(*([axis] * m), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    pts = pts[pts.sum(axis=1) <= k + 1e-12]
    vals = ((pts * delta[None, :] - y[None, :]) ** 2).sum(axis=1)
    return float(vals.min())


# ----------------------- fixtures -----------------------


@pytest.fixture
def star_graph() -> Graph:
    """Hub 0 with bidirected edges to leaves 1..3."""
    src = np.array([0, 0, 0, 1, 2, 3])
    dst = np.array([1, 2, 3, 0, 0, 0])
    return Graph(4, src, dst)


@pytest.fixture
def chain_graph() -> Graph:
    """0 -> 1 -> 2."""
    return Graph(3, np.array([0, 1]), np.array([1, 2]))
