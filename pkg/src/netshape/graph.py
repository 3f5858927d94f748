"""Directed graphs with per-edge hazard or transmission-probability values.

Edges carry dense stable indices 0..E-1 in input order (after removing
duplicates), so per-edge vectors line up with the edge list everywhere in
the package.  Adjacency is also kept in CSR form for O(E) traversals.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DomainError, ParseError

__all__ = [
    "Graph",
    "HazardMatrix",
    "ProbabilityMatrix",
    "LoadedGraph",
    "load_edge_list",
    "assign_trivalency",
    "normalized_probabilities",
    "hazard_from_probabilities",
    "probabilities_from_hazard",
    "sir_hazard",
    "largest_scc",
    "induced_subgraph",
    "read_hazard_tsv",
    "write_hazard_tsv",
]

HAZARD_MAGIC = "# netshape-hazard v1"


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


class Graph:
    """Directed graph with n nodes and E deduplicated edges, no self-loops.

    Parameters
    ----------
    n : int
        Node count; node ids are 0..n-1.
    src, dst : array_like of int
        Edge endpoints in stable input order.  Edge e is src[e] -> dst[e].

    Attributes
    ----------
    indptr, nbr, eid : ndarray
        CSR view grouped by source node: the out-edges of node i are the
        CSR slots indptr[i]:indptr[i+1]; nbr holds their targets and eid
        maps each slot back to the stable edge index.
    """

    def __init__(self, n: int, src, dst):
        if n < 1:
            raise DomainError(f"node count must be positive, got {n}")
        src = np.ascontiguousarray(src, dtype=np.int64)
        dst = np.ascontiguousarray(dst, dtype=np.int64)
        if src.shape != dst.shape or src.ndim != 1:
            raise DomainError("src and dst must be 1-d arrays of equal length")
        if src.size:
            if src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n:
                raise DomainError("edge endpoint outside 0..n-1")
            if (src == dst).any():
                raise DomainError("self-loops are not allowed")
            key = src * n + dst
            if np.unique(key).size != key.size:
                raise DomainError("duplicate edges are not allowed")
        self.n = int(n)
        self.src = _readonly(src)
        self.dst = _readonly(dst)
        # CSR by source; stable argsort keeps input order within a row.
        order = np.argsort(src, kind="stable")
        self.indptr = _readonly(np.concatenate(
            [[0], np.cumsum(np.bincount(src, minlength=n))]).astype(np.int64))
        self.nbr = _readonly(dst[order])
        self.eid = _readonly(order)

    @property
    def num_edges(self) -> int:
        return self.src.size

    def out_degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def in_degree(self) -> np.ndarray:
        return np.bincount(self.dst, minlength=self.n)

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n == other.n
                and np.array_equal(self.src, other.src)
                and np.array_equal(self.dst, other.dst))

    def __hash__(self):
        return hash((self.n, self.num_edges))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, E={self.num_edges})"


class _EdgeValues:
    """Per-edge value vector tied to a graph; subclasses set the domain."""

    _kind = "value"

    def __init__(self, graph: Graph, values):
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.shape != (graph.num_edges,):
            raise DomainError(
                f"expected {graph.num_edges} {self._kind}s, got shape {values.shape}")
        if values.size and not np.isfinite(values).all():
            raise DomainError(f"non-finite {self._kind}")
        self._validate(values)
        self.graph = graph
        self.values = _readonly(values)

    def _validate(self, values: np.ndarray) -> None:
        raise NotImplementedError

    def __eq__(self, other) -> bool:
        if not isinstance(other, type(self)):
            return NotImplemented
        return self.graph == other.graph and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((type(self).__name__, self.graph.n, self.graph.num_edges))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(n={self.graph.n}, E={self.graph.num_edges})"


class HazardMatrix(_EdgeValues):
    """Integrated transmission hazards H_ij >= 0 supported on the edge set.

    Entry e holds the integral over time of the hazard profile of edge e,
    which is all the spectral machinery needs; entries may be zero.
    """

    _kind = "hazard"

    def _validate(self, values: np.ndarray) -> None:
        if values.size and values.min() < 0.0:
            raise DomainError("hazards must be nonnegative")


class ProbabilityMatrix(_EdgeValues):
    """Per-edge transmission probabilities in [0, 1]."""

    _kind = "probability"

    def _validate(self, values: np.ndarray) -> None:
        if values.size and (values.min() < 0.0 or values.max() > 1.0):
            raise DomainError("probabilities must lie in [0, 1]")


@dataclass
class LoadedGraph:
    """Result of parsing an edge list.

    weights is None for unweighted input; skipped counts self-loop lines
    that were dropped with a warning.
    """

    graph: Graph
    weights: np.ndarray | None
    skipped: int


def _iter_lines(source) -> Iterable[str]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            yield from io.TextIOWrapper(fh, encoding="utf-8")
    else:
        for line in source:
            yield line.decode("utf-8") if isinstance(line, bytes) else line


def load_edge_list(source: str | os.PathLike | IO, weighted: bool = False,
                   symmetrize: bool = False) -> LoadedGraph:
    """Parse a whitespace-delimited edge list.

    Lines are ``src dst`` (or ``src dst weight`` when weighted); ``#``
    starts a comment line and blank lines are ignored.  Self-loops are
    skipped and counted in the result; duplicate edges keep the first
    occurrence.  With symmetrize=True every input edge also contributes
    its reverse, which turns an undirected list into two directed entries
    per pair.  Node count is inferred from the largest id seen.

    Raises
    ------
    ParseError
        Malformed line, with its 1-based line number.
    DomainError
        Negative weight, or no usable edges.
    """
    srcs: list[int] = []
    dsts: list[int] = []
    wts: list[float] = []
    skipped = 0
    max_id = -1
    want = 3 if weighted else 2
    for lineno, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != want:
            raise ParseError(f"expected {want} fields, got {len(parts)}", lineno)
        try:
            u = int(parts[0])
            v = int(parts[1])
        except ValueError:
            raise ParseError(f"bad node id in {parts[:2]}", lineno) from None
        if u < 0 or v < 0:
            raise ParseError(f"negative node id in {parts[:2]}", lineno)
        w = 0.0
        if weighted:
            try:
                w = float(parts[2])
            except ValueError:
                raise ParseError(f"bad weight {parts[2]!r}", lineno) from None
            if not np.isfinite(w) or w < 0.0:
                raise DomainError(f"line {lineno}: weight must be finite and >= 0, got {w}")
        max_id = max(max_id, u, v)
        if u == v:
            skipped += 1
            continue
        srcs.append(u)
        dsts.append(v)
        if weighted:
            wts.append(w)
        if symmetrize:
            srcs.append(v)
            dsts.append(u)
            if weighted:
                wts.append(w)
    if max_id < 0:
        raise DomainError("edge list contains no edges")
    n = max_id + 1
    src = np.asarray(srcs, dtype=np.int64)
    dst = np.asarray(dsts, dtype=np.int64)
    # First occurrence wins; stable edge order follows the input.
    key = src * n + dst
    _, first = np.unique(key, return_index=True)
    keep = np.sort(first)
    graph = Graph(n, src[keep], dst[keep])
    weights = np.asarray(wts, dtype=np.float64)[keep] if weighted else None
    return LoadedGraph(graph, weights, skipped)


def assign_trivalency(graph: Graph, levels, seed: int) -> ProbabilityMatrix:
    """Assign each edge one of the given probability levels uniformly.

    Classic trivalency weighting: levels is a small set of constants, for
    example (0.0001, 0.001, 0.01).  Repeated constants are kept as given,
    so a repeated level doubles its chance of being drawn.  Deterministic
    for a fixed seed.
    """
    levels = np.asarray(levels, dtype=np.float64)
    if levels.ndim != 1 or levels.size < 1:
        raise DomainError("levels must be a non-empty 1-d sequence")
    if (levels <= 0.0).any() or (levels >= 1.0).any():
        raise DomainError("levels must lie strictly inside (0, 1)")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, levels.size, size=graph.num_edges)
    return ProbabilityMatrix(graph, levels[idx])


def normalized_probabilities(graph: Graph, weights,
                             margin: float = 1e-6) -> ProbabilityMatrix:
    """Min-max normalize raw edge weights into (0, 1) transmission probabilities.

    The affine map sends the observed [min, max] onto [margin, 1 - margin];
    the margin keeps probabilities away from the endpoints, where 0 would
    erase the edge and 1 would need an infinite hazard.  Equal weights all
    map to 0.5.
    """
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if weights.shape != (graph.num_edges,):
        raise DomainError("one weight per edge required")
    if weights.size == 0:
        return ProbabilityMatrix(graph, weights)
    if not np.isfinite(weights).all() or weights.min() < 0.0:
        raise DomainError("weights must be finite and >= 0")
    if not 0.0 < margin < 0.5:
        raise DomainError("margin must lie in (0, 0.5)")
    lo, hi = weights.min(), weights.max()
    if hi == lo:
        p = np.full_like(weights, 0.5)
    else:
        p = margin + (1.0 - 2.0 * margin) * (weights - lo) / (hi - lo)
    return ProbabilityMatrix(graph, p)


def hazard_from_probabilities(p: ProbabilityMatrix) -> HazardMatrix:
    """Integrated hazards H = -ln(1 - p), edgewise.

    A constant-rate edge with integrated hazard H transmits with
    probability 1 - exp(-H), so this is the exact inverse bridge.
    Probability 1 has no finite hazard and is rejected.
    """
    if p.values.size and p.values.max() >= 1.0:
        raise DomainError("probability 1 edges have no finite hazard")
    return HazardMatrix(p.graph, -np.log1p(-p.values))


def probabilities_from_hazard(h: HazardMatrix) -> ProbabilityMatrix:
    """Live-edge probabilities p = 1 - exp(-H), edgewise."""
    return ProbabilityMatrix(h.graph, -np.expm1(-h.values))


def sir_hazard(graph: Graph, beta: float, delta: float) -> HazardMatrix:
    """Integrated hazards of an SIR process on the graph.

    With infection rate beta per contact and recovery rate delta, the
    integrated hazard of every edge is ln(1 + beta/delta).
    """
    if not (np.isfinite(beta) and beta >= 0.0):
        raise DomainError(f"beta must be finite and >= 0, got {beta}")
    if not (np.isfinite(delta) and delta > 0.0):
        raise DomainError(f"delta must be finite and > 0, got {delta}")
    value = np.log1p(beta / delta)
    return HazardMatrix(graph, np.full(graph.num_edges, value))


def _adjacency(graph: Graph) -> csr_matrix:
    data = np.ones(graph.num_edges, dtype=np.int8)
    return csr_matrix((data, (graph.src, graph.dst)), shape=(graph.n, graph.n))


def largest_scc(graph: Graph) -> np.ndarray:
    """Node ids of the largest strongly connected component, sorted.

    Ties between equal-sized components go to the one containing the
    smallest node id.
    """
    if graph.num_edges == 0:
        return np.array([0], dtype=np.int64)
    _, labels = connected_components(_adjacency(graph), connection="strong")
    sizes = np.bincount(labels)
    best = sizes.max()
    # argmax over first positions picks the component of the smallest node id
    winners = np.flatnonzero(sizes == best)
    first_node = np.array([np.argmax(labels == w) for w in winners])
    label = winners[np.argmin(first_node)]
    return np.flatnonzero(labels == label).astype(np.int64)


def induced_subgraph(graph: Graph, nodes) -> tuple[Graph, np.ndarray]:
    """Subgraph induced by the given nodes, relabeled 0..len(nodes)-1.

    Nodes keep their relative order from the sorted id list.  Returns the
    subgraph and the stable indices of the surviving edges in the parent.
    """
    nodes = np.unique(np.asarray(nodes, dtype=np.int64))
    if nodes.size == 0:
        raise DomainError("node set must be non-empty")
    if nodes.min() < 0 or nodes.max() >= graph.n:
        raise DomainError("node id outside parent graph")
    relabel = np.full(graph.n, -1, dtype=np.int64)
    relabel[nodes] = np.arange(nodes.size)
    keep = (relabel[graph.src] >= 0) & (relabel[graph.dst] >= 0)
    edge_ids = np.flatnonzero(keep)
    sub = Graph(nodes.size, relabel[graph.src[keep]], relabel[graph.dst[keep]])
    return sub, edge_ids


def write_hazard_tsv(h: HazardMatrix, path: str | os.PathLike) -> None:
    """Write a hazard matrix as TSV rows ``src dst value`` with a magic header."""
    g = h.graph
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{HAZARD_MAGIC} n={g.n}\n")
        for s, d, v in zip(g.src, g.dst, h.values):
            fh.write(f"{s}\t{d}\t{float(v)!r}\n")


def read_hazard_tsv(source: str | os.PathLike | IO) -> HazardMatrix:
    """Read a hazard matrix written by :func:`write_hazard_tsv`."""
    lines = _iter_lines(source)
    try:
        header = next(iter(lines))
    except StopIteration:
        raise ParseError("empty hazard file", 1) from None
    header = header.strip()
    if not header.startswith(HAZARD_MAGIC):
        raise ParseError(f"missing magic header {HAZARD_MAGIC!r}", 1)
    try:
        n = int(header.split("n=", 1)[1])
    except (IndexError, ValueError):
        raise ParseError("header lacks n=<node count>", 1) from None
    srcs, dsts, vals = [], [], []
    for lineno, raw in enumerate(lines, start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"expected 3 fields, got {len(parts)}", lineno)
        try:
            srcs.append(int(parts[0]))
            dsts.append(int(parts[1]))
            vals.append(float(parts[2]))
        except ValueError:
            raise ParseError(f"bad row {parts}", lineno) from None
    graph = Graph(n, np.asarray(srcs, dtype=np.int64), np.asarray(dsts, dtype=np.int64))
    return HazardMatrix(graph, np.asarray(vals, dtype=np.float64))
