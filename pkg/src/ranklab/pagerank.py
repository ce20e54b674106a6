"""Generalized PageRank by truncated power series.

Scale-free ranks solve ``R = R M + Q`` with ``M[j, i] = zeta_j / D_j^-`` for
every edge j -> i.  Each row of M sums to |zeta_j| <= c, so the series
``sum_k Q M^k`` converges geometrically and its L1 remainder after k terms is
at most ``||Q||_1 c^(k+1) / (1 - c)``.  That bound fixes the truncation depth
up front.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graphs import Digraph


@dataclass(frozen=True)
class RankVector:
    values: np.ndarray
    depth_used: int
    tail_bound: float
    # L1 norms of successive iterate differences, ||R^(k) - R^(k-1)||_1
    increments: tuple = ()

    def __len__(self) -> int:
        return len(self.values)


def truncation_depth(eps: float, c: float, mean_abs_q: float, n: int) -> int:
    """Smallest k >= 0 with n * mean_abs_q * c**(k+1) / (1-c) <= eps."""
    if not (0 < c < 1) or eps <= 0:
        raise ValueError("need 0 < c < 1 and eps > 0")
    scale = n * mean_abs_q / (1 - c)
    if scale <= 0:
        return 0

    def bound(k):
        return scale * c ** (k + 1)

    k = max(0, math.ceil(math.log(eps / scale) / math.log(c)) - 1)
    # the closed form can be off by one either way in floating point
    while bound(k) > eps:
        k += 1
    while k > 0 and bound(k - 1) <= eps:
        k -= 1
    return k


def transition_matrix(g: Digraph, zeta) -> sp.csr_matrix:
    """Sparse M with M[j, i] = zeta_j / D_j^- on each edge j -> i."""
    zeta = np.asarray(zeta, dtype=np.float64)
    src = g.sources()
    w = zeta[src] / g.out_deg[src]
    return sp.csr_matrix((w, g.indices, g.indptr), shape=(g.n, g.n))


def solve_pagerank(g: Digraph, q, zeta, c: float, eps: float = 0.01) -> RankVector:
    """Truncated series R^(k) = Q + R^(k-1) M with a certified L1 tail bound <= eps.

    The contraction factor used in the bound is the largest |zeta_j| over
    vertices that have out-edges (never above `c`).  Dangling vertices pass no
    rank on, so total mass is not conserved.
    """
    q = np.asarray(q, dtype=np.float64)
    zeta = np.asarray(zeta, dtype=np.float64)
    if not (0 < c < 1):
        raise ValueError(f"damping c must lie in (0, 1), got {c}")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if len(q) != g.n or len(zeta) != g.n:
        raise ValueError(f"q and zeta must have length n={g.n}")
    if np.any(np.abs(zeta) > c):
        raise ValueError("need |zeta_i| <= c for all i")

    active = g.out_deg > 0
    c_eff = float(np.max(np.abs(zeta[active]))) if active.any() else 0.0
    q_l1 = float(np.abs(q).sum())
    if c_eff == 0.0 or q_l1 == 0.0:
        return RankVector(q.copy(), 0, 0.0, ())
    k = truncation_depth(eps, c_eff, q_l1 / g.n, g.n)
    mt = transition_matrix(g, zeta).T.tocsr()
    r = q.copy()
    increments = []
    for _ in range(k):
        r_new = q + mt @ r
        increments.append(float(np.abs(r_new - r).sum()))
        r = r_new
    tail = q_l1 * c_eff ** (k + 1) / (1 - c_eff)
    return RankVector(r, k, tail, tuple(increments))


def series_rank(g: Digraph, q, zeta, k: int) -> np.ndarray:
    """Exactly k terms past the first: sum_{i<=k} Q M^i."""
    q = np.asarray(q, dtype=np.float64)
    mt = transition_matrix(g, zeta).T.tocsr()
    r = q.copy()
    for _ in range(k):
        r = q + mt @ r
    return r


def dense_pagerank(g: Digraph, q, zeta) -> np.ndarray:
    """Direct solve of R (I - M) = Q; O(n^3), for small graphs."""
    m = transition_matrix(g, zeta).toarray()
    return np.linalg.solve((np.eye(g.n) - m).T, np.asarray(q, dtype=np.float64))


def rank_of(r: RankVector, v: int) -> float:
    if not (0 <= v < len(r.values)):
        raise IndexError(f"vertex {v} out of range for {len(r.values)} ranks")
    return float(r.values[v])


def ranks_to_csv(r: RankVector) -> str:
    lines = ["vertex,rank"]
    lines.extend(f"{v + 1},{x:.17g}" for v, x in enumerate(r.values.tolist()))
    return "\n".join(lines) + "\n"
