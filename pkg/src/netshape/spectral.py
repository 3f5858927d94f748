"""Hazard radius, its subgradient factor, and the spectral influence bound.

The hazard radius of an integrated-hazard matrix H is the largest
eigenvalue of the symmetrization (H + H^T)/2.  Everything here works on
edge lists only; no dense n-by-n matrix is ever materialized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError
from .graph import Graph, HazardMatrix

__all__ = [
    "RadiusResult",
    "InfluenceBound",
    "hazard_radius",
    "radius_subgradient",
    "influence_upper_bound",
    "sym_matvec",
    "sym_row_sums",
]

# Fixed-seed start noise keeps every call deterministic while breaking the
# measure-zero case of an all-ones vector orthogonal to the leading space.
_START_NOISE_SEED = 0x5EED


def sym_matvec(graph: Graph, values: np.ndarray, u: np.ndarray) -> np.ndarray:
    """y = (H + H^T)/2 @ u for H supported on the graph's edges, O(E)."""
    wu = values * u[graph.dst]
    wv = values * u[graph.src]
    return 0.5 * (np.bincount(graph.src, weights=wu, minlength=graph.n)
                  + np.bincount(graph.dst, weights=wv, minlength=graph.n))


def sym_row_sums(graph: Graph, values: np.ndarray) -> np.ndarray:
    """Row sums of the symmetrized matrix (H + H^T)/2."""
    return 0.5 * (np.bincount(graph.src, weights=values, minlength=graph.n)
                  + np.bincount(graph.dst, weights=values, minlength=graph.n))


@dataclass
class RadiusResult:
    """Leading eigenpair of the symmetrized hazard matrix.

    rho is the Rayleigh quotient of u, so rho <= true radius always holds
    and the convexity certificate rho + <u u^T, M' - M> <= rho(M') is exact
    up to the eigensolver tolerance on M'.
    """

    rho: float
    u: np.ndarray
    iterations: int
    residual: float


def hazard_radius(h: HazardMatrix, tol: float = 1e-9,
                  max_iter: int | None = None,
                  v0: np.ndarray | None = None) -> RadiusResult:
    """Largest eigenvalue and eigenvector of (H + H^T)/2 by power iteration.

    Iterates on the shifted matrix M + c I with c the maximum symmetrized
    row sum, which makes the target eigenvalue strictly dominant even for
    bipartite-like spectra (eigenvalues +-lambda).  Convergence is declared
    on the residual ||M u - rho u||_2 <= tol.  Each step costs O(E).

    Parameters
    ----------
    h : HazardMatrix
    tol : float
        Residual tolerance.
    max_iter : int, optional
        Defaults to 10 n + 1000.
    v0 : ndarray, optional
        Warm-start vector, e.g. the eigenvector of a nearby matrix.

    Raises
    ------
    ConvergenceError
        If the residual does not reach tol; carries the last iterate.
    """
    g = h.graph
    n = g.n
    if not (np.isfinite(tol) and tol > 0.0):
        raise DomainError(f"tol must be positive, got {tol}")
    if max_iter is None:
        max_iter = 10 * n + 1000
    if v0 is not None:
        u = np.ascontiguousarray(v0, dtype=np.float64)
        if u.shape != (n,):
            raise DomainError(f"v0 must have shape ({n},)")
        norm = np.linalg.norm(u)
        if norm == 0.0 or not np.isfinite(norm):
            raise DomainError("v0 must be non-zero and finite")
        u = u / norm
    else:
        noise = np.random.default_rng(_START_NOISE_SEED).uniform(size=n)
        u = np.full(n, 1.0 / np.sqrt(n)) + 1e-6 * noise
        u /= np.linalg.norm(u)
    row_sums = sym_row_sums(g, h.values)
    shift = float(row_sums.max()) if n else 0.0
    rho = 0.0
    residual = np.inf
    for it in range(1, max_iter + 1):
        w = sym_matvec(g, h.values, u)
        rho = float(u @ w)
        residual = float(np.linalg.norm(w - rho * u))
        if residual <= tol:
            # nonnegative symmetric matrices obey rho <= max row sum
            assert rho <= shift + 1e-9 + 1e-9 * shift
            return RadiusResult(rho=rho, u=u, iterations=it, residual=residual)
        u_next = w + shift * u
        norm = np.linalg.norm(u_next)
        if norm == 0.0:
            raise ConvergenceError("iterate collapsed to zero", it, last_iterate=u)
        u = u_next / norm
    raise ConvergenceError(
        f"power iteration residual {residual:.3e} above tol {tol:.3e} "
        f"after {max_iter} iterations", max_iter, last_iterate=u)


def radius_subgradient(result: RadiusResult) -> np.ndarray:
    """Factor u of the subgradient u u^T of the hazard radius.

    The radius is a max of linear functions M -> x^T (M + M^T)/2 x over
    unit vectors x, so the outer product of the leading eigenvector is a
    subgradient.  Only the factor is returned; evaluate u[i]*u[j] on edges
    instead of forming the dense outer product.
    """
    return result.u


@dataclass
class InfluenceBound:
    """Spectral ceiling on expected cascade size.

    gamma is the reachable fraction of the n - n0 non-seed nodes; bound is
    n0 + gamma * (n - n0).
    """

    gamma: float
    bound: float


def influence_upper_bound(rho: float, n: int, n0: int,
                          tol: float = 1e-10) -> InfluenceBound:
    """Upper bound on the influence of any n0-node seed set.

    gamma in [0, 1] is the unique root of

        gamma - 1 + exp(-rho * gamma - rho * n0 / (gamma * (n - n0))) = 0,

    found by bisection on [1e-15, 1] with at most 200 halvings; the
    returned gamma satisfies |equation residual| <= tol.  rho = 0 gives
    gamma = 0 and bound = n0 (no spread beyond the seeds).
    """
    if not np.isfinite(rho) or rho < 0.0:
        raise DomainError(f"rho must be finite and >= 0, got {rho}")
    if n < 1 or n0 < 1 or n0 > n:
        raise DomainError(f"need 1 <= n0 <= n, got n0={n0}, n={n}")
    if rho == 0.0 or n0 == n:
        return InfluenceBound(gamma=0.0, bound=float(n0))

    free = n - n0

    def f(gamma: float) -> float:
        return gamma - 1.0 + np.exp(-rho * gamma - rho * n0 / (gamma * free))

    lo, hi = 1e-15, 1.0
    # f(lo) ~ -1 and f(1) >= 0, so the bracket is valid for any rho > 0
    gamma = hi
    for _ in range(200):
        gamma = 0.5 * (lo + hi)
        val = f(gamma)
        if abs(val) <= tol:
            break
        if val < 0.0:
            lo = gamma
        else:
            hi = gamma
    if abs(f(gamma)) > tol:
        raise ConvergenceError(
            f"bisection residual {f(gamma):.3e} above {tol:.3e}", 200,
            last_iterate=gamma)
    return InfluenceBound(gamma=float(gamma), bound=float(n0 + gamma * free))
