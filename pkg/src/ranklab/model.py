"""Weight laws, vertex types, experiment configuration and RNG streams.

Every random quantity in the package is drawn from a `numpy.random.Generator`
obtained through `replication_rng`, so a run is a pure function of
``(config, seed)``.  Replication ``r`` of an experiment always uses the stream
derived from ``(seed, r)``; replications can therefore be computed in any
order or in parallel without changing their values.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

import numpy as np

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import tomli_w

U64_MAX = 2**64 - 1


# ---------------------------------------------------------------------------
# RNG streams
# ---------------------------------------------------------------------------

def derive_seed(seed: int, replication: int) -> int:
    """Unsigned 64-bit seed of replication `replication` under master `seed`."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replication,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def replication_rng(seed: int, replication: int = 0) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, replication))


# ---------------------------------------------------------------------------
# Laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    value: float

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, float(self.value))

    def mean(self) -> float:
        return float(self.value)

    def to_dict(self) -> dict:
        return {"kind": "constant", "value": float(self.value)}


@dataclass(frozen=True)
class ParetoSpec:
    """Pareto law with P(W > x) = (scale / x) ** shape for x >= scale."""

    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ConfigError(f"Pareto parameters must be positive, got {self}")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return pareto_sample(self, rng, size)

    def mean(self) -> float:
        return pareto_mean(self)

    def to_dict(self) -> dict:
        return {"kind": "pareto", "shape": float(self.shape), "scale": float(self.scale)}


@dataclass(frozen=True)
class EmpiricalList:
    """Uniform draw from a fixed finite list of values."""

    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise ConfigError("EmpiricalList needs at least one value")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        vals = np.asarray(self.values)
        return vals[rng.integers(0, len(vals), size=size)]

    def mean(self) -> float:
        return float(np.mean(self.values))

    def to_dict(self) -> dict:
        return {"kind": "empirical", "values": list(self.values)}


WeightLaw = Union[Constant, ParetoSpec, EmpiricalList]


def pareto_from_uniform(spec: ParetoSpec, u):
    """Inverse-CDF map of u in (0, 1] onto the Pareto law; u = 1 gives the scale."""
    return spec.scale * np.power(u, -1.0 / spec.shape)


def pareto_sample(spec: ParetoSpec, rng: np.random.Generator, size=None):
    u = 1.0 - rng.random(size)  # (0, 1]
    out = pareto_from_uniform(spec, u)
    return float(out) if size is None else out


def pareto_mean(spec: ParetoSpec) -> float:
    """Mean of the law, or ``math.inf`` when shape <= 1."""
    if spec.shape <= 1:
        return math.inf
    return spec.shape * spec.scale / (spec.shape - 1)


def law_from_dict(d: dict) -> WeightLaw:
    try:
        kind = d["kind"]
        if kind == "constant":
            return Constant(float(d["value"]))
        if kind == "pareto":
            return ParetoSpec(float(d["shape"]), float(d["scale"]))
        if kind == "empirical":
            return EmpiricalList(tuple(d["values"]))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed law {d!r}: {exc}") from exc
    raise ConfigError(f"unknown law kind {kind!r}")


def _check_nonnegative(law: WeightLaw, name: str) -> None:
    if isinstance(law, Constant) and law.value < 0:
        raise ConfigError(f"{name} must be nonnegative")
    if isinstance(law, EmpiricalList) and min(law.values) < 0:
        raise ConfigError(f"{name} must be nonnegative")


# ---------------------------------------------------------------------------
# Models and configuration
# ---------------------------------------------------------------------------

MODEL_NAMES = ("erdos_renyi", "chung_lu", "generalized_random_graph", "norros_reittu")
_ALIASES = {"er": "erdos_renyi", "cl": "chung_lu", "grg": "generalized_random_graph",
            "nr": "norros_reittu"}


@dataclass(frozen=True)
class ModelKind:
    name: str
    lam: float | None = None

    def __post_init__(self):
        name = _ALIASES.get(self.name, self.name)
        object.__setattr__(self, "name", name)
        if name not in MODEL_NAMES:
            raise ConfigError(f"unknown model {self.name!r}; expected one of {MODEL_NAMES}")
        if name == "erdos_renyi":
            if self.lam is None or not self.lam > 0:
                raise ConfigError("ErdosRenyi needs lam > 0")
        elif self.lam is not None:
            raise ConfigError(f"lam only applies to erdos_renyi, not {name}")

    @classmethod
    def erdos_renyi(cls, lam: float) -> "ModelKind":
        return cls("erdos_renyi", float(lam))

    @property
    def code(self) -> int:
        return MODEL_NAMES.index(self.name)

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"kind": self.name}
        if self.lam is not None:
            d["lam"] = self.lam
        return d


CHUNG_LU = ModelKind("chung_lu")
GRG = ModelKind("generalized_random_graph")
NORROS_REITTU = ModelKind("norros_reittu")
WEIGHTED_MODELS = (GRG, CHUNG_LU, NORROS_REITTU)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: graph size, model, type laws, damping, seed, replications.

    `q_law` and `zeta_law` default to the original PageRank choice
    Q = 1 - c, zeta = c.  For Erdos-Renyi the weight laws are forced to the
    constant lam.
    """

    n: int
    model: ModelKind
    w_plus_law: WeightLaw | None = None
    w_minus_law: WeightLaw | None = None
    q_law: WeightLaw | None = None
    zeta_law: WeightLaw | None = None
    c: float = 0.85
    seed: int = 0
    replications: int = 1

    def __post_init__(self):
        if not (0 < self.c < 1):
            raise ConfigError(f"damping c must lie in (0, 1), got {self.c}")
        if self.n < 2:
            raise ConfigError(f"n must be >= 2, got {self.n}")
        if not (0 <= self.seed <= U64_MAX):
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.replications < 1:
            raise ConfigError("replications must be positive")
        if self.model.name == "erdos_renyi":
            object.__setattr__(self, "w_plus_law", Constant(self.model.lam))
            object.__setattr__(self, "w_minus_law", Constant(self.model.lam))
        elif self.w_plus_law is None or self.w_minus_law is None:
            raise ConfigError(f"model {self.model.name} needs w_plus_law and w_minus_law")
        _check_nonnegative(self.w_plus_law, "w_plus_law")
        _check_nonnegative(self.w_minus_law, "w_minus_law")
        if self.q_law is None:
            object.__setattr__(self, "q_law", Constant(1.0 - self.c))
        if self.zeta_law is None:
            object.__setattr__(self, "zeta_law", Constant(self.c))
        zmax = _abs_bound(self.zeta_law)
        if zmax is None or zmax > self.c:
            raise ConfigError("zeta_law must satisfy |zeta| <= c almost surely")

    def replace(self, **changes) -> "ExperimentConfig":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(changes)
        return ExperimentConfig(**d)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "model": self.model.to_dict(),
            "w_plus_law": self.w_plus_law.to_dict(),
            "w_minus_law": self.w_minus_law.to_dict(),
            "q_law": self.q_law.to_dict(),
            "zeta_law": self.zeta_law.to_dict(),
            "c": self.c,
            "seed": self.seed,
            "replications": self.replications,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            model = d["model"]
            if isinstance(model, str):
                model = ModelKind(model)
            else:
                model = ModelKind(model["kind"], model.get("lam"))
            laws = {k: law_from_dict(d[k]) for k in ("w_plus_law", "w_minus_law", "q_law", "zeta_law")
                    if k in d}
            return cls(n=int(d["n"]), model=model, c=float(d.get("c", 0.85)),
                       seed=int(d.get("seed", 0)), replications=int(d.get("replications", 1)),
                       **laws)
        except KeyError as exc:
            raise ConfigError(f"missing config field {exc}") from exc

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def from_toml(cls, text: str) -> "ExperimentConfig":
        try:
            return cls.from_dict(tomllib.loads(text))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML: {exc}") from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_toml(Path(path).read_text())


def _abs_bound(law: WeightLaw) -> float | None:
    if isinstance(law, Constant):
        return abs(law.value)
    if isinstance(law, EmpiricalList):
        return max(abs(v) for v in law.values)
    return None  # Pareto is unbounded


# ---------------------------------------------------------------------------
# Type sequences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TypeVector:
    w_plus: float
    w_minus: float
    q: float
    zeta: float


def _seqsum(x: np.ndarray) -> float:
    # cumulative sum is strictly left-to-right, unlike np.sum's pairwise reduction
    return float(np.cumsum(x)[-1]) if len(x) else 0.0


@dataclass(frozen=True)
class TypeSample:
    """Realized types of vertices 0..n-1 with cached aggregates.

    Finite-n quantities use the realized ``theta_hat * n = l_n``;
    ``mu_n = sum(w_plus * w_minus) / l_n`` and so on.
    """

    w_plus: np.ndarray
    w_minus: np.ndarray
    q: np.ndarray
    zeta: np.ndarray
    l_plus: float = field(init=False)
    l_minus: float = field(init=False)
    theta_hat: float = field(init=False)
    mu_n: float = field(init=False)
    s2_minus: float = field(init=False)

    def __post_init__(self):
        arrays = {}
        for name in ("w_plus", "w_minus", "q", "zeta"):
            a = np.array(getattr(self, name), dtype=np.float64)
            a.flags.writeable = False
            arrays[name] = a
            object.__setattr__(self, name, a)
        n = len(arrays["w_plus"])
        if n < 1 or any(len(a) != n for a in arrays.values()):
            raise ValueError("type arrays must be nonempty and of equal length")
        wp, wm = arrays["w_plus"], arrays["w_minus"]
        lp, lm = _seqsum(wp), _seqsum(wm)
        object.__setattr__(self, "l_plus", lp)
        object.__setattr__(self, "l_minus", lm)
        object.__setattr__(self, "theta_hat", (lp + lm) / n)
        ln = lp + lm
        object.__setattr__(self, "mu_n", _seqsum(wp * wm) / ln if ln > 0 else 0.0)
        object.__setattr__(self, "s2_minus", _seqsum(wm * wm))

    @property
    def n(self) -> int:
        return len(self.w_plus)

    def __len__(self) -> int:
        return self.n

    @property
    def l_n(self) -> float:
        return self.l_plus + self.l_minus

    @property
    def nu_n(self) -> float:
        """Mean offspring of the tree root, L+ L- / (theta n^2)."""
        return self.l_plus * self.l_minus / (self.l_n * self.n) if self.l_n > 0 else 0.0

    @property
    def lambda_n(self) -> float:
        """Mean of mark - 1 for a non-root tree node."""
        if self.l_n == 0 or self.l_minus == 0:
            return 0.0
        return self.l_plus * self.s2_minus / (self.l_n * self.l_minus)

    @property
    def vectors(self) -> list[TypeVector]:
        return [TypeVector(*map(float, t)) for t in zip(self.w_plus, self.w_minus, self.q, self.zeta)]

    def empirical_joint_cdf(self, u: float, v: float) -> float:
        return float(np.mean((self.w_plus <= u) & (self.w_minus <= v)))

    @classmethod
    def from_vectors(cls, vectors) -> "TypeSample":
        cols = list(zip(*[(t.w_plus, t.w_minus, t.q, t.zeta) for t in vectors]))
        return cls(*[np.array(c) for c in cols])


def sample_types(config: ExperimentConfig, rng: np.random.Generator,
                 n: int | None = None) -> TypeSample:
    """Draw i.i.d. type vectors (``config.n`` of them unless `n` is given).

    (W+, Q) and (W-, zeta) come from two separate child streams of `rng`, which
    makes the two pairs independent by construction.
    """
    plus_rng, minus_rng = rng.spawn(2)
    n = config.n if n is None else n
    w_plus = config.w_plus_law.sample(plus_rng, n)
    q = config.q_law.sample(plus_rng, n)
    w_minus = config.w_minus_law.sample(minus_rng, n)
    zeta = config.zeta_law.sample(minus_rng, n)
    return TypeSample(w_plus, w_minus, q, zeta)
