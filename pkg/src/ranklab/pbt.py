"""Poisson branching tree (PBT), its root rank, and the graph/tree coupling.

Conventions for a type sample with ``L_n = L+ + L-`` (the realized theta*n):

* a node of type s has Poisson(L- W+_s / L_n) children;
* each child has type j with probability W-_j / L-;
* each node carries a mark D with D - 1 ~ Poisson(W-_s L+ / L_n).

`coupled_exploration` instead builds the tree pair by pair from the same
uniforms U_ij that drive the breadth-first in-component exploration of the
graph, and reports the first step at which the two disagree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import graphs
from .model import ModelKind, TypeSample

BREAK_REASONS = ("cycle-edge", "self-loop", "bernoulli-poisson-mismatch",
                 "extra-poisson-star", "none")


@dataclass
class PbtNode:
    type_index: int
    mark: int
    children: list["PbtNode"] = field(default_factory=list)

    def size(self) -> int:
        total, stack = 0, [self]
        while stack:
            node = stack.pop()
            total += 1
            stack.extend(node.children)
        return total

    def generation_types(self, depth: int) -> list[int]:
        level = [self]
        for _ in range(depth):
            level = [c for node in level for c in node.children]
        return [node.type_index for node in level]

    def generation_sizes(self) -> list[int]:
        sizes, level = [], [self]
        while level:
            sizes.append(len(level))
            level = [c for node in level for c in node.children]
        return sizes


# ---------------------------------------------------------------------------
# Independent PBT
# ---------------------------------------------------------------------------

def offspring_means(types: TypeSample) -> np.ndarray:
    """Mean number of children per node type, L- W+ / L_n."""
    if types.l_n == 0:
        return np.zeros(types.n)
    return types.l_minus * types.w_plus / types.l_n


def mark_means(types: TypeSample) -> np.ndarray:
    """Mean of D - 1 per node type, W- L+ / L_n."""
    if types.l_n == 0:
        return np.zeros(types.n)
    return types.w_minus * types.l_plus / types.l_n


def sample_pbt(types: TypeSample, depth: int, rng: np.random.Generator) -> PbtNode:
    """PBT grown to `depth` generations below a uniformly chosen root.

    Children counts come from the summed Poisson mean and child types are
    drawn i.i.d. proportional to W-, which has the same law as drawing one
    Poisson count per (parent, child type) pair.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    n = types.n
    off, marks = offspring_means(types), mark_means(types)
    cdf = np.cumsum(types.w_minus)
    root_type = int(rng.integers(n))
    root = PbtNode(root_type, 1 + int(rng.poisson(marks[root_type])))
    level = [root]
    for _ in range(depth):
        if not level:
            break
        parent_types = np.array([node.type_index for node in level])
        counts = rng.poisson(off[parent_types])
        total = int(counts.sum())
        if total == 0:
            break
        child_types = np.searchsorted(cdf, rng.random(total) * cdf[-1], side="right")
        child_types = np.minimum(child_types, n - 1)
        child_marks = 1 + rng.poisson(marks[child_types])
        nxt = []
        pos = 0
        for node, cnt in zip(level, counts.tolist()):
            for s, d in zip(child_types[pos:pos + cnt].tolist(), child_marks[pos:pos + cnt].tolist()):
                child = PbtNode(s, d)
                node.children.append(child)
                nxt.append(child)
            pos += cnt
        level = nxt
    return root


def pbt_rank(root: PbtNode, types: TypeSample, depth: int) -> float:
    """Root rank R^(depth) of the recursion R_i = Q_i + sum_j zeta_j / D_j * R_j, R^(0) = 0.

    The root's own weight is never used.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    q, zeta = types.q, types.zeta

    def rank(node: PbtNode, k: int) -> float:
        if k == 0:
            return 0.0
        r = float(q[node.type_index])
        if k > 1:
            for child in node.children:
                r += zeta[child.type_index] / child.mark * rank(child, k - 1)
        return r

    return rank(root, depth)


# ---------------------------------------------------------------------------
# Poisson utilities
# ---------------------------------------------------------------------------

def poisson_quantile(u, mean):
    """Generalized inverse G^-1(u) = min{k : P(Pois(mean) <= k) >= u}, elementwise.

    Sequential accumulation of pmf(k+1) = pmf(k) * mean / (k+1); intended for
    the small means that occur per vertex pair.
    """
    u, mean = np.broadcast_arrays(np.asarray(u, dtype=np.float64),
                                  np.asarray(mean, dtype=np.float64))
    shape = u.shape
    u, mean = u.ravel(), mean.ravel()
    k = np.zeros(len(u), dtype=np.int64)
    pmf = np.exp(-mean)
    cdf = pmf.copy()
    idx = np.nonzero(cdf < u)[0]
    # cdf can stall just below u in floating point; cap the walk far in the tail
    cap = mean + 40 * np.sqrt(mean) + 60
    while len(idx):
        k[idx] += 1
        pmf[idx] *= mean[idx] / k[idx]
        cdf[idx] += pmf[idx]
        keep = (cdf[idx] < u[idx]) & (pmf[idx] > 0) & (k[idx] < cap[idx])
        idx = idx[keep]
    return k.reshape(shape)


def poisson_tv_bound(lam: float, mu: float) -> tuple[float, float]:
    """The two bounds of a Poisson(lam) vs Poisson(mu) comparison.

    The first bounds sum_k |P(X = k) - P(Y = k)|; the second equals
    |lam - mu| + min(lam, mu) times the first.
    """
    if lam < 0 or mu < 0:
        raise ValueError("Poisson means must be nonnegative")
    d = abs(lam - mu)
    first = min(2.0, 3 * d * (lam + mu + 1))
    return first, d + min(lam, mu) * first


def coupling_exponent(mu: float, alpha_plus: float) -> float:
    """Constant b of the horizon k_n = b log n.

    The moment exponent delta is taken 1% inside min(1, alpha+ - 1), the
    phi decay exponent as 0.99 delta / (1 + delta), and b 1% inside
    min{delta/2, eta, delta/2} / (2 log mu).  b = 1 when mu <= 1.
    """
    if mu <= 1:
        return 1.0
    delta = 0.99 * min(1.0, alpha_plus - 1)
    if delta <= 0:
        raise ValueError("need alpha+ > 1")
    eta = 0.99 * delta / (1 + delta)
    return 0.99 * min(delta / 2, eta, delta / 2) / (2 * math.log(mu))


def coupling_horizon(n: int, b: float) -> int:
    return int(math.floor(b * math.log(n)))


# ---------------------------------------------------------------------------
# Coupled exploration
# ---------------------------------------------------------------------------

class SharedUniforms:
    """Lazily revealed i.i.d. uniforms U_ij, one per ordered pair.

    Rows and columns are drawn as whole vectors on first use.  A new vector
    copies every entry already fixed by a revealed crossing row or column, so
    each U_ij has a single value however it is reached.
    """

    def __init__(self, n: int, rng: np.random.Generator):
        self.n = n
        self.rng = rng
        self.rows: dict[int, np.ndarray] = {}
        self.cols: dict[int, np.ndarray] = {}

    def row(self, i: int) -> np.ndarray:
        if i not in self.rows:
            u = self.rng.random(self.n)
            for j, col in self.cols.items():
                u[j] = col[i]
            self.rows[i] = u
        return self.rows[i]

    def col(self, j: int) -> np.ndarray:
        if j not in self.cols:
            u = self.rng.random(self.n)
            for i, row in self.rows.items():
                u[i] = row[j]
            self.cols[j] = u
        return self.cols[j]

    def full(self, rng: np.random.Generator) -> np.ndarray:
        """n x n matrix of all uniforms, filling unrevealed pairs from `rng`."""
        u = rng.random((self.n, self.n))
        for j, col in self.cols.items():
            u[:, j] = col
        for i, row in self.rows.items():
            u[i, :] = row
        return u


@dataclass
class CouplingReport:
    tau: int | None  # None means the coupling survived the horizon
    horizon: int
    break_reason: str
    root: int
    tree: PbtNode | None = None  # coupled tree, kept only when it survived
    uniforms: SharedUniforms | None = field(default=None, repr=False)

    @property
    def survived(self) -> bool:
        return self.tau is None

    def csv_row(self, seed: int) -> str:
        tau = "survived" if self.tau is None else str(self.tau)
        return f"{seed},{tau},{self.horizon},{self.break_reason}"


_NONE, _ACTIVE, _INACTIVE, _DEAD = 0, 1, 2, 3


class _Broken(Exception):
    def __init__(self, reason: str):
        self.reason = reason


def coupled_exploration(model: ModelKind, types: TypeSample, horizon: int,
                        rng: np.random.Generator) -> CouplingReport:
    """Explore the in-component of a uniform vertex and grow the PBT on shared uniforms.

    Graph edges are X_ij = 1(U_ij > 1 - p_ij) and tree counts are
    Z_ij = G_ij^-1(U_ij) with G_ij the Poisson(q_ij) law, q_ij = W-_i W+_j / L_n.
    Independent star draws Z*_ij ~ Poisson(q_ij) stand in for pairs whose
    uniform was already consumed by the graph.  As long as the two agree every
    graph vertex appears once in the tree and the tree's marks equal the
    graph's out-degrees; the run stops at the first disagreement:

    * ``bernoulli-poisson-mismatch``: X_ij != Z_ij for a pair read from U;
    * ``cycle-edge``: an explored vertex has an in-edge from a vertex that
      already carries a label (the tree would repeat that type);
    * ``self-loop``: Z_ii >= 1 (or Z*_ii >= 1 for the root);
    * ``extra-poisson-star``: a star draw Z*_jt >= 1 for t = j, t = the
      discovering vertex, or t already dead.
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    n = types.n
    if n < 2:
        raise ValueError("need n >= 2")
    u_rng, star_rng = rng.spawn(2)
    wp, wm, l_n = types.w_plus, types.w_minus, types.l_n
    code, lam = model.code, model.lam
    uniforms = SharedUniforms(n, u_rng)
    idx = np.arange(n)

    def q_of(x):
        return x / l_n if l_n > 0 else np.zeros_like(x)

    def row_xz(i):
        u = uniforms.row(i)
        x_prod = wm[i] * wp
        p = graphs._kernel(code, x_prod, l_n, lam, n)
        return u > 1 - p, poisson_quantile(u, q_of(x_prod)), x_prod

    def col_xz(i):
        u = uniforms.col(i)
        x_prod = wm * wp[i]
        p = graphs._kernel(code, x_prod, l_n, lam, n)
        return u > 1 - p, poisson_quantile(u, q_of(x_prod))

    labels = np.zeros(n, dtype=np.int8)
    root = int(u_rng.integers(n))
    report = CouplingReport(None, horizon, "none", root, uniforms=uniforms)

    def fail(step, reason):
        report.tau, report.break_reason = step, reason
        return report

    # step 0: out-edges of the root
    x, z, x_prod = row_xz(root)
    others = idx != root
    if np.any(x[others] != z[others]):
        return fail(0, "bernoulli-poisson-mismatch")
    z_star_root = int(star_rng.poisson(q_of(x_prod[root])))
    if z_star_root >= 1:
        return fail(0, "self-loop")
    labels[root] = _ACTIVE
    labels[x & others] = _INACTIVE
    tree = PbtNode(root, 1 + z_star_root + int(z[others].sum()))
    active = [(root, tree)]

    for step in range(1, horizon + 1):
        new_active = []
        try:
            for i, node in active:
                _explore_vertex(i, node, step, col_xz, row_xz, q_of, labels, star_rng,
                                new_active, idx)
                labels[i] = _DEAD
        except _Broken as exc:
            return fail(step, exc.reason)
        # tree generation equals the graph's active set, vertex for vertex
        assert [node.type_index for _, node in new_active] == [j for j, _ in new_active]
        assert tree.generation_types(step) == [j for j, _ in new_active]
        active = new_active
        if not active:
            break
    report.tree = tree
    return report


def _explore_vertex(i, node, step, col_xz, row_xz, q_of, labels, star_rng, new_active, idx):
    x, z = col_xz(i)  # X_ji, Z_ji for all j
    cand = np.nonzero(((x == 1) | (z > 0)) & (idx != i))[0]
    for j in cand.tolist():
        if x[j] != z[j]:
            raise _Broken("bernoulli-poisson-mismatch")
        if labels[j] != _NONE:
            raise _Broken("cycle-edge")
        labels[j] = _ACTIVE
        xr, zr, x_prod = row_xz(j)  # X_jt, Z_jt for all t
        dead = labels == _DEAD
        open_t = (idx != j) & (idx != i) & ~dead
        if np.any(xr[open_t] != zr[open_t]):
            raise _Broken("bernoulli-poisson-mismatch")
        # j had no label, so none of its edges into dead vertices was realized
        assert not np.any(xr[dead])
        star_t = np.concatenate(([j, i], np.nonzero(dead)[0]))
        stars = star_rng.poisson(q_of(x_prod[star_t]))
        if np.any(stars >= 1):
            raise _Broken("extra-poisson-star")
        out = np.nonzero(xr & open_t)[0]
        # an out-neighbor that already carries a label keeps it; the tree just
        # holds one more inactive copy of that type
        labels[out[labels[out] == _NONE]] = _INACTIVE
        mark = 1 + int(zr[open_t].sum()) + int(stars.sum())
        assert mark == 1 + len(out)  # tree mark == graph out-degree
        child = PbtNode(j, mark)
        node.children.append(child)
        new_active.append((j, child))
    # Z_ii from the diagonal uniform U_ii; the graph has no self-loops
    if z[i] >= 1:
        raise _Broken("self-loop")
