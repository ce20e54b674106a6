"""Command-line batch runner.  Every command writes plain CSV (or an edge list).

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O or
input-format error.  ``RANKLAB_THREADS`` caps the number of worker processes
used for replications; output never depends on it.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .errors import ConfigError, InputFormatError, NumericError
from .graphs import sample_digraph
from .model import ExperimentConfig, ModelKind, replication_rng, derive_seed, sample_types
from .pagerank import ranks_to_csv, solve_pagerank
from .pbt import coupled_exploration, coupling_exponent, coupling_horizon
from .presets import PRESETS, get_preset
from .sfpe import LimitLaws, population_dynamics
from .stats import (default_hill_k, hill_tail_index, ks_distance, tail_points,
                    tail_points_csv, wasserstein1)

log = logging.getLogger("ranklab")

CHECKPOINT = 100
DEPENDENCE_CAVEAT = ("# all n ranks come from one graph; ranks of neighboring vertices "
                     "are in general highly dependent")


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def worker_count() -> int:
    env = os.environ.get("RANKLAB_THREADS")
    cpus = os.cpu_count() or 1
    if env is None:
        return cpus
    try:
        k = int(env)
    except ValueError:
        raise ConfigError(f"RANKLAB_THREADS must be an integer, got {env!r}") from None
    if k < 1:
        raise ConfigError("RANKLAB_THREADS must be >= 1")
    return k


def resolve_config(args) -> ExperimentConfig:
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.config:
        cfg = ExperimentConfig.load(args.config)
    elif args.preset:
        prm = get_preset(args.preset)
        cfg = prm.config()
    else:
        raise ConfigError("one of --config or --preset is required")
    changes = {}
    if getattr(args, "model", None):
        changes["model"] = ModelKind(args.model)
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "reps", None) is not None:
        changes["replications"] = args.reps
    if getattr(args, "n", None) is not None:
        changes["n"] = args.n
    if changes.get("model") is not None and changes["model"].name == "erdos_renyi":
        raise ConfigError("use a config file to select erdos_renyi (it needs lam)")
    return cfg.replace(**changes) if changes else cfg


def _write(path: str, text: str) -> None:
    Path(path).write_text(text)


def _run_ordered(fn, tasks, workers: int):
    """Yield fn(task) in task order, computing on a process pool when workers > 1."""
    if workers <= 1 or len(tasks) <= 1:
        for t in tasks:
            yield fn(t)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(fn, tasks)


def read_sample(path) -> np.ndarray:
    """Values from a one-column file or from the last column of a headed CSV.

    Lines starting with '#' are comments.
    """
    values = []
    header_seen = False
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            field = line.split(",")[-1]
            try:
                values.append(float(field))
            except ValueError:
                if not header_seen and not values:
                    header_seen = True
                    continue
                raise InputFormatError(f"{path}:{lineno}: cannot parse {field!r} as a number") from None
    if not values:
        raise InputFormatError(f"{path}: no data rows")
    return np.array(values)


# ---------------------------------------------------------------------------
# replication kernels (module level so worker processes can import them)
# ---------------------------------------------------------------------------

def rank_replication(config: ExperimentConfig, r: int, eps: float, method: str) -> float:
    """R_1 of one independent graph; vertex 1 is index 0."""
    rng = replication_rng(config.seed, r)
    types = sample_types(config, rng)
    g = sample_digraph(config.model, types, rng, method)
    return float(solve_pagerank(g, types.q, types.zeta, config.c, eps).values[0])


def _rank_chunk(task):
    config, start, stop, eps, method = task
    return [rank_replication(config, r, eps, method) for r in range(start, stop)]


def _coupling_chunk(task):
    config, start, stop, horizon = task
    rows = []
    for r in range(start, stop):
        rng = replication_rng(config.seed, r)
        types = sample_types(config, rng)
        rep = coupled_exploration(config.model, types, horizon, rng)
        rows.append(rep.csv_row(derive_seed(config.seed, r)))
    return rows


def _chunks(total: int, start: int = 0, size: int = CHECKPOINT):
    return [(a, min(total, a + size)) for a in range(start, total, size)]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_gen_graph(args) -> None:
    cfg = resolve_config(args)
    rng = replication_rng(cfg.seed, 0)
    types = sample_types(cfg, rng)
    g = sample_digraph(cfg.model, types, rng, args.method)
    g.write_edgelist(args.out)


def cmd_pagerank(args) -> None:
    cfg = resolve_config(args)
    rng = replication_rng(cfg.seed, 0)
    types = sample_types(cfg, rng)
    g = sample_digraph(cfg.model, types, rng, args.method)
    _write(args.out, ranks_to_csv(solve_pagerank(g, types.q, types.zeta, cfg.c, args.eps)))


def _rank_header(cfg: ExperimentConfig, eps: float, method: str) -> str:
    return (f"# seed={cfg.seed} n={cfg.n} model={cfg.model.name} c={cfg.c!r} eps={eps!r} "
            f"method={method} replications={cfg.replications}")


def cmd_rank_replications(args) -> None:
    cfg = resolve_config(args)
    header = [_rank_header(cfg, args.eps, args.method), "replication,rank"]
    out = Path(args.out)
    done = 0
    if args.resume and out.exists():
        text = out.read_text()
        if not text.endswith("\n"):
            # an interrupted write leaves an unterminated last line; redo it
            text = text[:text.rfind("\n") + 1]
            out.write_text(text)
        lines = text.splitlines()
        if lines[:2] != header:
            raise ConfigError(f"{out}: existing file was written with different settings")
        body = lines[2:]
        for k, line in enumerate(body):
            if not line.startswith(f"{k + 1},"):
                raise InputFormatError(f"{out}:{k + 3}: expected replication {k + 1}")
        done = len(body)
        log.info("resuming at replication %d", done + 1)
    else:
        out.write_text("\n".join(header) + "\n")
    spans = _chunks(cfg.replications, done)
    tasks = [(cfg, a, b, args.eps, args.method) for a, b in spans]
    with out.open("a") as fh:
        for (a, b), values in zip(spans, _run_ordered(_rank_chunk, tasks, worker_count())):
            fh.write("".join(f"{a + i + 1},{v:.17g}\n" for i, v in enumerate(values)))
            fh.flush()
            log.info("replications done: %d/%d", b, cfg.replications)


def cmd_popdyn(args) -> None:
    if args.preset and not args.config:
        prm = get_preset(args.preset)
        k = prm.popdyn_k if args.k is None else args.k
        m = prm.popdyn_m if args.m is None else args.m
    else:
        k = 9 if args.k is None else args.k
        m = 15000 if args.m is None else args.m
    cfg = resolve_config(args)
    laws = LimitLaws.from_config(cfg)
    pool = population_dynamics(laws, k, m, replication_rng(cfg.seed, 0))
    _write(args.out, pool.to_csv(cfg.seed))


def cmd_compare(args) -> None:
    a, b = read_sample(args.a), read_sample(args.b)
    rows = [("ks", ks_distance(a, b)), ("w1", wasserstein1(a, b)),
            ("n_a", len(a)), ("n_b", len(b))]
    for side, v in (("a", a), ("b", b)):
        k = args.hill_k if args.hill_k is not None else default_hill_k(len(v))
        try:
            h = hill_tail_index(v, k)
        except ValueError:
            h = math.nan
        rows.append((f"hill_{side}", h))
        rows.append((f"hill_k_{side}", k))
    text = "statistic,value\n" + "".join(
        f"{name},{val:.17g}\n" if isinstance(val, float) else f"{name},{val}\n" for name, val in rows)
    _write(args.out, text)


def cmd_coupling(args) -> None:
    cfg = resolve_config(args)
    horizon = args.horizon
    if horizon is None:
        if not hasattr(cfg.w_plus_law, "shape"):
            raise ConfigError("--horizon is required unless W+ is Pareto")
        mu = LimitLaws.from_config(cfg).mean_n
        horizon = coupling_horizon(cfg.n, coupling_exponent(mu, cfg.w_plus_law.shape))
    tasks = [(cfg, a, b, horizon) for a, b in _chunks(cfg.replications)]
    lines = ["seed,tau,horizon,reason"]
    for rows in _run_ordered(_coupling_chunk, tasks, worker_count()):
        lines.extend(rows)
    _write(args.out, "\n".join(lines) + "\n")


def cmd_single_graph_tail(args) -> None:
    cfg = resolve_config(args)
    rng = replication_rng(cfg.seed, 0)
    types = sample_types(cfg, rng)
    g = sample_digraph(cfg.model, types, rng, args.method)
    rv = solve_pagerank(g, types.q, types.zeta, cfg.c, args.eps)
    ranks = rv.values
    if args.ranks_out:
        _write(args.ranks_out, ranks_to_csv(rv))
    pos = ranks[ranks > 0]
    grid = np.logspace(math.log10(pos.min()), math.log10(pos.max()), args.grid_points)
    _write(args.out, DEPENDENCE_CAVEAT + "\n" + tail_points_csv(tail_points(ranks, grid)))


def cmd_presets(args) -> None:
    lines = ["name,alpha,beta,sigma_alpha,sigma_beta,c,mu,reference_mu,reference_consistent,n,replications"]
    for p in PRESETS.values():
        lines.append(f"{p.name},{p.alpha!r},{p.beta!r},{p.sigma_alpha!r},{p.sigma_beta!r},{p.c!r},"
                     f"{p.mu:.17g},{p.reference_mu!r},{str(p.reference_consistent).lower()},"
                     f"{p.n},{p.replications}")
    text = "\n".join(lines) + "\n"
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _u64(s: str) -> int:
    v = int(s)
    if not (0 <= v < 2**64):
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ranklab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment(p, reps=False, method=True, eps=False):
        p.add_argument("--config", help="experiment TOML file")
        p.add_argument("--preset", choices=sorted(PRESETS))
        p.add_argument("--model", help="chung_lu, generalized_random_graph or norros_reittu "
                                        "(aliases cl, grg, nr)")
        p.add_argument("--seed", type=_u64)
        p.add_argument("--n", type=_positive, help="override the vertex count")
        if reps:
            p.add_argument("--reps", type=_positive)
        if method:
            p.add_argument("--method", choices=("naive", "fast"), default="fast")
        if eps:
            p.add_argument("--eps", type=float, default=0.01)
        p.add_argument("--out", required=True)

    p = sub.add_parser("gen-graph", help="sample one graph and write its edge list")
    experiment(p)
    p.set_defaults(func=cmd_gen_graph)

    p = sub.add_parser("pagerank", help="ranks of every vertex of one sampled graph")
    experiment(p, eps=True)
    p.set_defaults(func=cmd_pagerank)

    p = sub.add_parser("rank-replications", help="R_1 of independent graphs, one per line")
    experiment(p, reps=True, eps=True)
    p.add_argument("--resume", action="store_true", help="continue an interrupted run")
    p.set_defaults(func=cmd_rank_replications)

    p = sub.add_parser("popdyn", help="Population Dynamics pool")
    experiment(p, method=False)
    p.add_argument("--k", type=int, help="recursion depth (default 9)")
    p.add_argument("--m", type=_positive, help="pool size (default 15000)")
    p.set_defaults(func=cmd_popdyn)

    p = sub.add_parser("compare", help="KS, W1 and Hill estimates for two samples")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--hill-k", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("coupling", help="coupling-break steps of graph/tree explorations")
    experiment(p, reps=True, method=False)
    p.add_argument("--horizon", type=int, help="default floor(b log n)")
    p.set_defaults(func=cmd_coupling)

    p = sub.add_parser("single-graph-tail", help="empirical rank tail from all ranks of one graph")
    experiment(p, eps=True)
    p.add_argument("--grid-points", type=_positive, default=40)
    p.add_argument("--ranks-out", help="also write the ranks")
    p.set_defaults(func=cmd_single_graph_tail)

    p = sub.add_parser("presets", help="list presets and their mean degrees")
    p.add_argument("--out")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        args.func(args)
    except InputFormatError as exc:
        log.error("%s", exc)
        return 4
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return 2
    except NumericError as exc:
        log.error("numerical failure: %s", exc)
        return 3
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
