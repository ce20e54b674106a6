"""Distribution comparison statistics for rank samples."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.stats

SOURCES = ("graph", "tree", "sfpe")


@dataclass(frozen=True)
class RankSample:
    values: np.ndarray
    source: str = "graph"
    n_graph: int | None = None
    seed: int = 0

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 1 or len(v) == 0:
            raise ValueError("a rank sample needs at least one value")
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.values)


def _values(s) -> np.ndarray:
    return s.values if isinstance(s, RankSample) else np.asarray(s, dtype=np.float64)


def ecdf(s, x):
    """Fraction of values <= x (right-continuous); x may be an array."""
    v = np.sort(_values(s))
    out = np.searchsorted(v, x, side="right") / len(v)
    return float(out) if np.ndim(out) == 0 else out


def ks_distance(a, b) -> float:
    """sup_x |F_a(x) - F_b(x)| over the pooled jump points."""
    return float(scipy.stats.ks_2samp(_values(a), _values(b)).statistic)


def ks_critical_value(n: int, m: int, level: float = 0.01) -> float:
    """Asymptotic two-sample critical value c(level) sqrt((n + m) / (n m))."""
    c = math.sqrt(-0.5 * math.log(level / 2))
    return c * math.sqrt((n + m) / (n * m))


def wasserstein1(a, b) -> float:
    """Integral of |F_a - F_b| d x, exact for any pair of sample sizes."""
    return float(scipy.stats.wasserstein_distance(_values(a), _values(b)))


def default_hill_k(size: int) -> int:
    return int(math.floor(size ** 0.6))


def hill_tail_index(s, k_upper: int | None = None) -> float:
    """Hill estimate from the k largest order statistics relative to the (k+1)-th."""
    v = np.sort(_values(s))[::-1]
    k = default_hill_k(len(v)) if k_upper is None else int(k_upper)
    if k < 10 or k >= len(v):
        raise ValueError(f"need 10 <= k_upper < sample size, got k={k}, size={len(v)}")
    top = v[:k + 1]
    if top[-1] <= 0:
        raise ValueError("Hill estimator needs positive values among the top k+1")
    mean_log = float(np.mean(np.log(top[:k] / top[k])))
    if mean_log == 0:
        raise ValueError("degenerate sample: the top order statistics are all equal")
    return 1.0 / mean_log


def tail_points(s, grid) -> list[tuple[float, float]]:
    """(log10 x, log10 P(R > x)) on the grid, skipping points with no exceedances."""
    v = np.sort(_values(s))
    out = []
    for x in np.asarray(grid, dtype=np.float64).tolist():
        exceed = len(v) - np.searchsorted(v, x, side="right")
        if exceed > 0 and x > 0:
            out.append((math.log10(x), math.log10(exceed / len(v))))
    return out


def tail_points_csv(points) -> str:
    lines = ["log10x,log10p"]
    lines.extend(f"{x:.17g},{p:.17g}" for x, p in points)
    return "\n".join(lines) + "\n"


def loglog_slope(points) -> float:
    """Least-squares slope of log10 p against log10 x."""
    if len(points) < 2:
        raise ValueError("need at least two tail points")
    x, y = np.array(points).T
    return float(np.polyfit(x, y, 1)[0])
