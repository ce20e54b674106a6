"""Limit laws of the rank recursion and Population Dynamics.

The limit rank solves ``R = sum_{i<=N} C_i R_i + Q`` in distribution with

* N mixed Poisson with mixing variable E[W-] W+ / theta, drawn jointly with Q;
* C = zeta / (Y + 1), Y mixed Poisson with mixing variable E[W+] U / theta,
  where U has the size-biased law of W-, ``P(U in dx) = x P(W- in dx) / E[W-]``.

For W- ~ Pareto(beta, sigma) the size-biased law is Pareto(beta - 1, sigma).
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .degrees import MixingLaw, QuadConfig, law_expectation, mixed_poisson_sf
from .errors import AsymptoteUndefined, ConfigError
from .model import Constant, EmpiricalList, ExperimentConfig, ParetoSpec, WeightLaw


@dataclass(frozen=True)
class WeightedList:
    """Categorical law on `values` with probabilities proportional to `weights`."""

    values: tuple
    weights: tuple

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        p = np.asarray(self.weights) / sum(self.weights)
        return np.asarray(self.values)[rng.choice(len(self.values), size=size, p=p)]

    def mean(self) -> float:
        return float(np.dot(self.values, self.weights) / sum(self.weights))


def size_biased(law: WeightLaw):
    """Law of U with P(U in dx) = x P(W in dx) / E[W]."""
    if isinstance(law, Constant):
        if law.value <= 0:
            raise ConfigError("size-biasing needs E[W-] > 0")
        return law
    if isinstance(law, ParetoSpec):
        if law.shape <= 1:
            raise ConfigError("size-biasing a Pareto law needs shape > 1")
        return ParetoSpec(law.shape - 1, law.scale)
    if isinstance(law, EmpiricalList):
        if sum(law.values) <= 0:
            raise ConfigError("size-biasing needs E[W-] > 0")
        return WeightedList(law.values, law.values)
    raise ConfigError(f"no size-bias sampler for {law!r}")


def _expect(law, g, quad: QuadConfig) -> float:
    if isinstance(law, WeightedList):
        w = np.asarray(law.weights) / sum(law.weights)
        return float(sum(wi * g(v) for v, wi in zip(law.values, w)))
    return law_expectation(law, g, quad)


@dataclass(frozen=True)
class LimitLaws:
    w_plus_law: WeightLaw
    w_minus_law: WeightLaw
    q_law: WeightLaw
    zeta_law: WeightLaw
    c: float

    def __post_init__(self):
        if not (0 <= self.c < 1):
            raise ConfigError("damping c must lie in [0, 1)")
        if not (self.mean_w_plus < math.inf and self.mean_w_minus < math.inf):
            raise ConfigError("the limit laws need finite E[W+] and E[W-]")
        if self.theta <= 0:
            raise ConfigError("theta = E[W+] + E[W-] must be positive")

    @classmethod
    def from_config(cls, config: ExperimentConfig) -> "LimitLaws":
        return cls(config.w_plus_law, config.w_minus_law, config.q_law, config.zeta_law, config.c)

    @property
    def mean_w_plus(self) -> float:
        return self.w_plus_law.mean()

    @property
    def mean_w_minus(self) -> float:
        return self.w_minus_law.mean()

    @property
    def theta(self) -> float:
        return self.mean_w_plus + self.mean_w_minus

    @property
    def n_law(self) -> MixingLaw:
        return MixingLaw(self.w_plus_law, self.mean_w_minus / self.theta)

    @property
    def mean_n(self) -> float:
        return self.mean_w_plus * self.mean_w_minus / self.theta

    @property
    def y_rate(self) -> float:
        return self.mean_w_plus / self.theta

    @property
    def mean_q(self) -> float:
        return self.q_law.mean()

    @property
    def alpha(self) -> float:
        """Tail index of W+, the exponent of the rank tail."""
        if not isinstance(self.w_plus_law, ParetoSpec):
            raise ConfigError("the tail index is defined for a Pareto W+ only")
        return self.w_plus_law.shape


def sample_limit_N(laws: LimitLaws, rng: np.random.Generator, size: int) -> np.ndarray:
    w = laws.w_plus_law.sample(rng, size)
    return rng.poisson(laws.n_law.rate_factor * w)


def sample_limit_NQ(laws: LimitLaws, rng: np.random.Generator, size: int):
    """(N, Q) pairs; W+ comes from its original law, not a size-biased one."""
    n = sample_limit_N(laws, rng, size)
    return n, laws.q_law.sample(rng, size)


def sample_size_biased_w_minus(laws: LimitLaws, rng: np.random.Generator, size: int) -> np.ndarray:
    return size_biased(laws.w_minus_law).sample(rng, size)


def sample_limit_C(laws: LimitLaws, rng: np.random.Generator, size: int) -> np.ndarray:
    u = sample_size_biased_w_minus(laws, rng, size)
    y = rng.poisson(laws.y_rate * u)
    return laws.zeta_law.sample(rng, size) / (y + 1)


@dataclass(frozen=True)
class PopDynPool:
    samples: np.ndarray
    depth: int

    def mean(self) -> float:
        return float(self.samples.mean())

    def to_csv(self, seed: int) -> str:
        lines = [f"# k={self.depth} m={len(self.samples)} seed={seed}"]
        lines.extend(f"{x:.17g}" for x in self.samples.tolist())
        return "\n".join(lines) + "\n"


def population_dynamics(laws: LimitLaws, k: int, m: int, rng: np.random.Generator) -> PopDynPool:
    """Pool of m approximate draws of R^(k), starting from R^(0) = 0.

    Each generation builds a new pool from the previous one only: every new
    entry is Q + sum_{i<=N} C_i R*_i, with the R*_i resampled with
    replacement from the previous pool.
    """
    if k < 0 or m < 1:
        raise ValueError("need k >= 0 and m >= 1")
    pool = np.zeros(m)
    owners = np.arange(m)
    for _ in range(k):
        n, q = sample_limit_NQ(laws, rng, m)
        total = int(n.sum())
        c = sample_limit_C(laws, rng, total)
        picks = pool[rng.integers(0, m, size=total)]
        pool = q + np.bincount(np.repeat(owners, n), weights=c * picks, minlength=m)
    return PopDynPool(pool, k)


# ---------------------------------------------------------------------------
# rho, rho_alpha and the tail asymptote
# ---------------------------------------------------------------------------

def _inv_power_poisson(lam: float, alpha: float) -> float:
    """E[(Y + 1)^(-alpha)] for Y ~ Poisson(lam), summed over lam +- 12 sqrt(lam) + 30."""
    if lam == 0:
        return 1.0
    r = 12 * math.sqrt(lam) + 30
    lo, hi = max(0, int(lam - r)), int(lam + r) + 1
    k = np.arange(lo, hi + 1)
    logp = k * math.log(lam) - lam - special.gammaln(k + 1)
    # mass left out on both sides is below 1e-30 for this window
    return float(np.sum(np.exp(logp - alpha * np.log1p(k))))


def rho_and_rho_alpha(laws: LimitLaws, alpha: float,
                      quad: QuadConfig = QuadConfig()) -> tuple[float, float]:
    """rho = E[N] E[C] and rho_alpha = E[N] E[|C|^alpha].

    rho = E[zeta] E[1 - exp(-E[W+] W- / theta)]; the series for E[|C|^alpha]
    is summed inside the quadrature over the size-biased W-.
    """
    if alpha <= 0:
        raise ValueError("rho_alpha needs alpha > 0")
    if laws.c == 0:
        return 0.0, 0.0
    a = laws.y_rate
    zeta_mean = laws.zeta_law.mean()
    zeta_abs_alpha = _expect(laws.zeta_law, lambda z: abs(z) ** alpha, quad)
    rho = zeta_mean * _expect(laws.w_minus_law, lambda w: -math.expm1(-a * w), quad)
    u_law = size_biased(laws.w_minus_law)
    series = _expect(u_law, lambda u: _inv_power_poisson(a * u, alpha), quad)
    return rho, laws.mean_n * zeta_abs_alpha * series


@functools.lru_cache(maxsize=64)
def _prefactor(laws: LimitLaws, alpha: float) -> float:
    rho, rho_alpha = rho_and_rho_alpha(laws, alpha)
    if rho_alpha >= 1:
        raise AsymptoteUndefined(f"asymptote undefined: rho_alpha = {rho_alpha:.6g} >= 1")
    mean_c = rho / laws.mean_n
    return (laws.mean_q * mean_c) ** alpha / ((1 - rho) ** alpha * (1 - rho_alpha))


def tail_prefactor(laws: LimitLaws, alpha: float | None = None) -> float:
    """(E[Q] E[C])^alpha / ((1 - rho)^alpha (1 - rho_alpha))."""
    return _prefactor(laws, laws.alpha if alpha is None else float(alpha))


def tail_asymptote(x: float, laws: LimitLaws, alpha: float | None = None) -> float:
    """Prefactor times P(N > x); P(N > x) = 1 for x < 0."""
    pref = tail_prefactor(laws, alpha)
    return pref * mixed_poisson_sf(int(math.floor(x)), laws.n_law)
