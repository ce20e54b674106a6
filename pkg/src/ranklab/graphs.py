"""Edge probabilities of the rank-1 inhomogeneous digraph models and samplers.

Vertices are 0-based in the Python API; the edge-list text format is 1-based.
An edge ``(i, j)`` points from ``i`` to ``j`` and its probability depends on
``w_minus[i] * w_plus[j]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from .model import ModelKind, TypeSample

_ER, _CL, _GRG, _NR = range(4)


# ---------------------------------------------------------------------------
# Edge probabilities and phi
# ---------------------------------------------------------------------------

def _kernel(code: int, x, l_n: float, lam: float | None, n: int):
    x = np.asarray(x, dtype=np.float64)
    if code == _ER:
        return np.full(x.shape, lam / (2 * n))
    if l_n == 0:
        return np.zeros(x.shape)
    if code == _CL:
        return np.minimum(x / l_n, 1.0)
    if code == _GRG:
        return x / (l_n + x)
    return -np.expm1(-x / l_n)


def _check_pair(i: int, j: int, n: int) -> None:
    if i == j:
        raise ValueError(f"no self-loops: i == j == {i}")
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"vertex pair ({i}, {j}) out of range for n={n}")


def edge_prob(model: ModelKind, i: int, j: int, types: TypeSample) -> float:
    """Probability that the edge i -> j is present, given the types."""
    _check_pair(i, j, types.n)
    x = types.w_minus[i] * types.w_plus[j]
    return float(_kernel(model.code, x, types.l_n, model.lam, types.n))


def edge_prob_row(model: ModelKind, i: int, types: TypeSample) -> np.ndarray:
    """Probabilities of i -> j for all j, with the diagonal entry set to 0."""
    p = _kernel(model.code, types.w_minus[i] * types.w_plus, types.l_n, model.lam, types.n)
    p[i] = 0.0
    return p


def edge_prob_col(model: ModelKind, j: int, types: TypeSample) -> np.ndarray:
    """Probabilities of i -> j for all i, with the diagonal entry set to 0."""
    p = _kernel(model.code, types.w_minus * types.w_plus[j], types.l_n, model.lam, types.n)
    p[j] = 0.0
    return p


def edge_prob_matrix(model: ModelKind, types: TypeSample) -> np.ndarray:
    x = np.outer(types.w_minus, types.w_plus)
    p = _kernel(model.code, x, types.l_n, model.lam, types.n)
    np.fill_diagonal(p, 0.0)
    return p


def _phi(code: int, x, l_n: float, theta_n: float):
    x = np.asarray(x, dtype=np.float64)
    if code == _ER:
        return np.zeros(x.shape)
    if code == _CL:
        return np.full(x.shape, theta_n / l_n - 1)
    if code == _GRG:
        return theta_n / (l_n + x) - 1
    with np.errstate(invalid="ignore", divide="ignore"):
        out = -np.expm1(-x / l_n) * theta_n / x - 1
    # continuous extension at x = 0
    return np.where(x > 0, out, theta_n / l_n - 1)


def phi(model: ModelKind, i: int, j: int, types: TypeSample, theta: float | None = None) -> float:
    """Correction term phi_ij(n) such that p_ij = min(1, q_ij (1 + phi_ij)).

    Here q_ij = w_minus[i] w_plus[j] / (theta n).  `theta` defaults to the
    realized theta_hat; pass the population value to study the decay of phi.
    """
    _check_pair(i, j, types.n)
    theta = types.theta_hat if theta is None else theta
    x = types.w_minus[i] * types.w_plus[j]
    return float(_phi(model.code, x, types.l_n, theta * types.n))


def phi_max_stat(model: ModelKind, types: TypeSample, theta: float | None = None,
                 vertex: int = 0, full: bool = False) -> tuple[float, float]:
    """(max_j |phi_{vj}|, max_j |phi_{jv}|) for v = `vertex`.

    With ``full=True`` the two maxima are taken over every vertex v as well
    (O(n^2); meant for small n).
    """
    n = types.n
    if n < 2:
        raise ValueError("need n >= 2")
    theta_n = (types.theta_hat if theta is None else theta) * n
    if full:
        f = np.abs(_phi(model.code, np.outer(types.w_minus, types.w_plus), types.l_n, theta_n))
        np.fill_diagonal(f, 0.0)
        return float(f.max()), float(f.max())
    mask = np.arange(n) != vertex
    row = _phi(model.code, types.w_minus[vertex] * types.w_plus[mask], types.l_n, theta_n)
    col = _phi(model.code, types.w_minus[mask] * types.w_plus[vertex], types.l_n, theta_n)
    return float(np.max(np.abs(row))), float(np.max(np.abs(col)))


# ---------------------------------------------------------------------------
# Digraph
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Digraph:
    """Simple digraph stored as sorted out-adjacency (CSR) arrays."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    in_deg: np.ndarray
    out_deg: np.ndarray

    @classmethod
    def from_edges(cls, n: int, src, dst) -> "Digraph":
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        if src.shape != dst.shape:
            raise ValueError("src and dst must have equal length")
        if len(src) and (src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n):
            raise ValueError("vertex index out of range")
        if np.any(src == dst):
            raise ValueError("self-loops are not allowed")
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        if len(src) > 1 and np.any((src[1:] == src[:-1]) & (dst[1:] == dst[:-1])):
            raise ValueError("duplicate edges are not allowed")
        out_deg = np.bincount(src, minlength=n).astype(np.int64)
        in_deg = np.bincount(dst, minlength=n).astype(np.int64)
        indptr = np.concatenate(([0], np.cumsum(out_deg))).astype(np.int64)
        for a in (indptr, dst, in_deg, out_deg):
            a.flags.writeable = False
        return cls(n, indptr, dst, in_deg, out_deg)

    @classmethod
    def empty(cls, n: int) -> "Digraph":
        return cls.from_edges(n, [], [])

    @property
    def m(self) -> int:
        return len(self.indices)

    def out_adj(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def sources(self) -> np.ndarray:
        return np.repeat(np.arange(self.n), self.out_deg)

    def edges(self) -> np.ndarray:
        """(m, 2) array of edges in ascending (i, j) order."""
        return np.column_stack((self.sources(), self.indices))

    def has_edge(self, i: int, j: int) -> bool:
        adj = self.out_adj(i)
        k = np.searchsorted(adj, j)
        return bool(k < len(adj) and adj[k] == j)

    def write_edgelist(self, path) -> None:
        Path(path).write_text(self.to_edgelist())

    def to_edgelist(self) -> str:
        lines = [f"{self.n} {self.m}"]
        lines.extend(f"{i + 1} {j + 1}" for i, j in self.edges().tolist())
        return "\n".join(lines) + "\n"

    @classmethod
    def read_edgelist(cls, path) -> "Digraph":
        text = Path(path).read_text().splitlines()
        if not text:
            raise ValueError(f"{path}: empty edge list")
        try:
            n, m = map(int, text[0].split())
            pairs = [tuple(map(int, line.split())) for line in text[1:] if line.strip()]
        except ValueError as exc:
            raise ValueError(f"{path}: malformed edge list: {exc}") from exc
        if len(pairs) != m:
            raise ValueError(f"{path}: header declares {m} edges, found {len(pairs)}")
        arr = np.array(pairs, dtype=np.int64).reshape(-1, 2) - 1
        return cls.from_edges(n, arr[:, 0], arr[:, 1])

    def __eq__(self, other) -> bool:
        return (isinstance(other, Digraph) and self.n == other.n
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))


def degrees(g: Digraph) -> tuple[np.ndarray, np.ndarray]:
    """(in-degrees, out-degrees)."""
    return g.in_deg, g.out_deg


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------

_NAIVE_BLOCK = 2**22  # uniforms per block


def _naive_edges(model: ModelKind, types: TypeSample, rng: np.random.Generator):
    n = types.n
    rows = max(1, _NAIVE_BLOCK // n)
    src, dst = [], []
    for start in range(0, n, rows):
        stop = min(n, start + rows)
        x = np.outer(types.w_minus[start:stop], types.w_plus)
        p = _kernel(model.code, x, types.l_n, model.lam, n)
        hit = rng.random(p.shape) < p
        r = np.arange(stop - start)
        hit[r, r + start] = False
        i, j = np.nonzero(hit)
        src.append(i + start)
        dst.append(j)
    return np.concatenate(src), np.concatenate(dst)


@numba.njit(cache=True)
def _prob_nb(code, x, l_n, lam, n):
    if code == _ER:
        return lam / (2.0 * n)
    if l_n == 0.0:
        return 0.0
    if code == _CL:
        return min(x / l_n, 1.0)
    if code == _GRG:
        return x / (l_n + x)
    return -math.expm1(-x / l_n)


@numba.njit(cache=True)
def _skip_edges_nb(code, w_minus, w_plus_sorted, order, l_n, lam, rng):
    n = len(w_minus)
    cap = 16 + 2 * n
    src = np.empty(cap, np.int64)
    dst = np.empty(cap, np.int64)
    m = 0
    for i in range(n):
        wi = w_minus[i]
        pos = 0
        bound = _prob_nb(code, wi * w_plus_sorted[0], l_n, lam, n)
        while pos < n and bound > 0.0:
            if bound < 1.0:
                u = 1.0 - rng.random()
                skip = math.floor(math.log(u) / math.log1p(-bound))
                if skip >= n - pos:
                    break
                pos += int(skip)
            j = order[pos]
            p = _prob_nb(code, wi * w_plus_sorted[pos], l_n, lam, n)
            if rng.random() < p / bound and j != i:
                if m == cap:
                    cap *= 2
                    src2 = np.empty(cap, np.int64)
                    dst2 = np.empty(cap, np.int64)
                    src2[:m] = src[:m]
                    dst2[:m] = dst[:m]
                    src, dst = src2, dst2
                src[m] = i
                dst[m] = j
                m += 1
            # targets are sorted by w_plus descending, so p bounds every later target
            bound = p
            pos += 1
    return src[:m], dst[:m]


def _fast_edges(model: ModelKind, types: TypeSample, rng: np.random.Generator):
    order = np.argsort(-types.w_plus, kind="stable")
    lam = 0.0 if model.lam is None else float(model.lam)
    return _skip_edges_nb(model.code, types.w_minus, types.w_plus[order], order,
                          float(types.l_n), lam, rng)


def sample_edges(model: ModelKind, types: TypeSample, rng: np.random.Generator,
                 method: str = "fast") -> tuple[np.ndarray, np.ndarray]:
    """Unsorted (src, dst) arrays of one independent-edge realization."""
    if types.n < 2:
        raise ValueError("need n >= 2")
    if method == "naive":
        return _naive_edges(model, types, rng)
    if method == "fast":
        return _fast_edges(model, types, rng)
    raise ValueError(f"unknown sampling method {method!r}")


def sample_digraph(model: ModelKind, types: TypeSample, rng: np.random.Generator,
                   method: str = "fast") -> Digraph:
    """Sample a digraph where each i -> j (i != j) is present independently.

    ``naive`` flips one coin per ordered pair (O(n^2)); ``fast`` visits targets
    in decreasing w_plus order, skips geometrically under the current
    probability bound and thins each proposal, costing O(n + m).  Both draw
    from the same law.
    """
    src, dst = sample_edges(model, types, rng, method)
    return Digraph.from_edges(types.n, src, dst)
