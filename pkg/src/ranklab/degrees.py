"""Mixed Poisson degree laws and their empirical validation.

The limiting in-degree of a uniformly chosen vertex is mixed Poisson with
mixing variable ``E[W-] / theta * W+`` (and symmetrically for the out-degree).
For a Pareto base the integral over w is mapped onto (0, 1] by
``w = sigma * t**(-1/alpha)``, which is exact, so no tail truncation of the
mixing law is needed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special, stats

from .errors import QuadratureError
from .model import Constant, EmpiricalList, ExperimentConfig, ParetoSpec, WeightLaw


@dataclass(frozen=True)
class MixingLaw:
    """Mixed Poisson law with mixing variable ``rate_factor * X``, X ~ base."""

    base: WeightLaw
    rate_factor: float

    def __post_init__(self):
        if not self.rate_factor >= 0:
            raise ValueError("rate_factor must be nonnegative")

    def mean(self) -> float:
        return self.rate_factor * self.base.mean() if self.rate_factor else 0.0


@dataclass(frozen=True)
class QuadConfig:
    epsabs: float = 1e-10
    limit: int = 200


_DEFAULT_QUAD = QuadConfig()


def mixing_law(config: ExperimentConfig, side: str = "in") -> MixingLaw:
    """Limit in- or out-degree law implied by the configured weight laws."""
    mp, mm = config.w_plus_law.mean(), config.w_minus_law.mean()
    theta = mp + mm
    if side == "in":
        return MixingLaw(config.w_plus_law, mm / theta)
    if side == "out":
        return MixingLaw(config.w_minus_law, mp / theta)
    raise ValueError(f"side must be 'in' or 'out', got {side!r}")


def _quad(f, quad: QuadConfig, points=None) -> float:
    # Target a hundredth of the tolerance: errors at exactly epsabs share a
    # sign across neighboring k and would add up over a pmf table.
    val, err, info = integrate.quad(f, 0.0, 1.0, epsabs=quad.epsabs / 100, epsrel=0.0,
                                    limit=quad.limit, points=points, full_output=1)[:3]
    if err > quad.epsabs:
        raise QuadratureError("mixed Poisson quadrature did not converge", err)
    return val


_PEAK_OFFSETS = (-8, -4, -2, -1, 0, 1, 2, 4, 8)


def pareto_expectation(spec: ParetoSpec, g, quad: QuadConfig = _DEFAULT_QUAD, peak=None) -> float:
    """E[g(W)] for W ~ spec, integrating over t = (scale / W)**shape in (0, 1].

    `peak` is an optional ``(center, width)`` pair in w-space where g
    concentrates.  Breakpoints spread over that window keep the adaptive
    routine from stepping over a narrow bump, which it otherwise can do while
    still reporting a tiny error estimate.
    """
    a = 1.0 / spec.shape
    points = None
    if peak is not None:
        center, width = peak
        w = [center + j * width for j in _PEAK_OFFSETS]
        ts = {(spec.scale / x) ** spec.shape for x in w if x > spec.scale}
        # the Poisson tail below the window can still hug the last breakpoint
        t = max(ts, default=1.0) * 4
        while t < 1:
            ts.add(t)
            t *= 4
        points = sorted(ts) or None
    return _quad(lambda t: g(spec.scale * t ** -a) if t > 0 else 0.0, quad, points)


def law_expectation(law: WeightLaw, g, quad: QuadConfig = _DEFAULT_QUAD, peak=None) -> float:
    """E[g(W)] for any supported weight law."""
    if isinstance(law, Constant):
        return float(g(law.value))
    if isinstance(law, EmpiricalList):
        return float(np.mean([g(v) for v in law.values]))
    return pareto_expectation(law, g, quad, peak)


def _peak(k: int, lam: float):
    # Poisson(lam * w) mass at k concentrates where lam * w = k +- sqrt(k)
    if lam <= 0 or k <= 0:
        return None
    return k / lam, math.sqrt(k) / lam


def _pois_pmf(k: int, m: float) -> float:
    if m == 0:
        return 1.0 if k == 0 else 0.0
    return math.exp(k * math.log(m) - m - math.lgamma(k + 1))


def mixed_poisson_pmf(k: int, law: MixingLaw, quad: QuadConfig = _DEFAULT_QUAD) -> float:
    if k < 0:
        raise ValueError("k must be nonnegative")
    lam = law.rate_factor
    peak = _peak(k, lam)
    return law_expectation(law.base, lambda w: _pois_pmf(k, lam * w), quad, peak)


def mixed_poisson_sf(k: int, law: MixingLaw, quad: QuadConfig = _DEFAULT_QUAD) -> float:
    """P(Z > k); equals 1 for k < 0."""
    if k < 0:
        return 1.0
    lam = law.rate_factor
    peak = _peak(k, lam)
    return law_expectation(law.base, lambda w: float(special.pdtrc(k, lam * w)), quad, peak)


def mixed_poisson_tail_mean(k: int, law: MixingLaw, quad: QuadConfig = _DEFAULT_QUAD) -> float:
    """E[Z; Z > k]."""
    lam = law.rate_factor
    if lam == 0:
        return 0.0
    # E[X; X > k] = m * P(X >= k) = m * P(X > k - 1)
    peak = _peak(k, lam)
    return law_expectation(
        law.base, lambda w: lam * w * (1.0 if k == 0 else float(special.pdtrc(k - 1, lam * w))),
        quad, peak)


def mixed_poisson_table(law: MixingLaw, kmax: int | None = None, mass: float = 1 - 1e-8,
                        kmax_cap: int = 100_000,
                        quad: QuadConfig = _DEFAULT_QUAD) -> np.ndarray:
    """pmf(0..K): up to `kmax` if given, else until the cumulative mass reaches `mass`.

    The adaptive cutoff stops at `kmax_cap` for very heavy tails.
    """
    if isinstance(law.base, Constant) and kmax is not None:
        return stats.poisson.pmf(np.arange(kmax + 1), law.rate_factor * law.base.value)
    out = []
    cum = 0.0
    k = 0
    while True:
        p = mixed_poisson_pmf(k, law, quad)
        out.append(p)
        cum += p
        if kmax is not None:
            if k >= kmax:
                break
        elif cum >= mass or k >= kmax_cap:
            break
        k += 1
    return np.array(out)


def degree_mean(w_plus_law: WeightLaw, w_minus_law: WeightLaw, theta: float | None = None) -> float:
    """E[W+] E[W-] / theta; infinite when either mean is."""
    mp, mm = w_plus_law.mean(), w_minus_law.mean()
    if math.isinf(mp) or math.isinf(mm):
        return math.inf
    theta = mp + mm if theta is None else theta
    return mp * mm / theta


# ---------------------------------------------------------------------------
# Empirical fit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitReport:
    side: str
    empirical: np.ndarray  # pooled pmf over k = 0..kmax
    theoretical: np.ndarray
    theoretical_tail: float  # P(Z > kmax)
    tv: float
    mean: float
    mean_se: float
    mean_theory: float
    replications: int

    def z_score(self) -> float:
        if self.mean_se == 0:
            return 0.0 if self.mean == self.mean_theory else math.inf
        return (self.mean - self.mean_theory) / self.mean_se

    def to_csv(self) -> str:
        lines = ["k,empirical,theoretical"]
        lines.extend(f"{k},{e:.17g},{t:.17g}"
                     for k, (e, t) in enumerate(zip(self.empirical.tolist(), self.theoretical.tolist())))
        return "\n".join(lines) + "\n"


def empirical_degree_fit(graphs, side: str, law: MixingLaw,
                         quad: QuadConfig = _DEFAULT_QUAD) -> FitReport:
    """Compare pooled degrees of `graphs` with the mixed Poisson `law`.

    The standard error of the mean uses per-graph mean degrees as the
    independent units; with a single graph it falls back to vertex-level
    spread.  The total variation distance counts the theoretical mass beyond
    the largest observed degree.
    """
    graphs = list(graphs)
    if not graphs:
        raise ValueError("need at least one graph")
    if side not in ("in", "out"):
        raise ValueError(f"side must be 'in' or 'out', got {side!r}")
    degs = [g.in_deg if side == "in" else g.out_deg for g in graphs]
    pooled = np.concatenate(degs)
    kmax = int(pooled.max())
    emp = np.bincount(pooled, minlength=kmax + 1) / len(pooled)
    theo = mixed_poisson_table(law, kmax=kmax, quad=quad)
    tail = max(0.0, mixed_poisson_sf(kmax, law, quad))
    tv = 0.5 * (float(np.abs(emp - theo).sum()) + tail)
    if len(graphs) > 1:
        means = np.array([d.mean() for d in degs])
        se = float(means.std(ddof=1) / math.sqrt(len(means)))
    else:
        se = float(pooled.std(ddof=1) / math.sqrt(len(pooled))) if len(pooled) > 1 else 0.0
    return FitReport(side, emp, theo, tail, tv, float(pooled.mean()), se, law.mean(), len(graphs))


def degree_correlation(graphs) -> tuple[float, float]:
    """Correlation of (in, out) degree of vertex 0 across graphs, with its approximate SE."""
    d_in = np.array([g.in_deg[0] for g in graphs], dtype=float)
    d_out = np.array([g.out_deg[0] for g in graphs], dtype=float)
    r = float(np.corrcoef(d_in, d_out)[0, 1])
    return r, 1.0 / math.sqrt(len(graphs))

