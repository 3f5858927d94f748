"""Command-line harness.

Verbs
-----
radius    hazard radius and the spectral influence ceiling of a graph
shape     run the subgradient shaping loop and write its artifacts
simulate  Monte-Carlo influence of a seed set
baseline  compute one reference policy and its resulting radius
sweep     policies x budgets x seeds comparison table (CSV, optional figures)

Every verb reads an optional flat key=value config (--config) and applies
command-line overrides on top.  Exit codes: 0 ok, 1 domain or numerical
error, 2 I/O or parse error.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baselines import degree_policy, netshield_policy, rand_policy, wdegree_policy
from .cascade import (estimate_influence, influence_counts, run_rng,
                      select_influencers, simulate_ctic)
from .config import METHODS, ExperimentConfig, parse_config_file
from .errors import DomainError, NetshapeError, ParseError
from .graph import (HazardMatrix, assign_trivalency, hazard_from_probabilities,
                    induced_subgraph, largest_scc, load_edge_list,
                    normalized_probabilities, probabilities_from_hazard,
                    sir_hazard, write_hazard_tsv)
from .shaping import (ActionAllocation, FeasibleSetSpec, apply_policy,
                      netshape_edge, netshape_node, write_allocation,
                      write_trace)
from .spectral import hazard_radius, influence_upper_bound

_U64 = (1 << 64) - 1
_TAG_SELECTION = 0x5E1
_TAG_CELL = 0xCE11


def _derive_seed(*parts: int) -> int:
    """Stable 64-bit seed from integer components, independent of platform."""
    entropy = [int(p) & _U64 for p in parts]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def _load_hazard(cfg: ExperimentConfig):
    """Load the graph and weight it into a hazard matrix per the config."""
    if not cfg.graph:
        raise DomainError("no graph given (config key 'graph' or --graph)")
    loaded = load_edge_list(cfg.graph, weighted=(cfg.format == "weighted"),
                            symmetrize=cfg.symmetrize)
    g = loaded.graph
    if cfg.weighting == "trivalency":
        p = assign_trivalency(g, (cfg.p_low, cfg.p_med, cfg.p_high),
                              cfg.weight_seed)
        h = hazard_from_probabilities(p)
    elif cfg.weighting == "native":
        p = normalized_probabilities(g, loaded.weights)
        h = hazard_from_probabilities(p)
    else:
        h = sir_hazard(g, cfg.sir_beta, cfg.sir_delta)
    if cfg.target_rho is not None:
        rho0 = hazard_radius(h).rho
        if rho0 <= 0.0:
            raise DomainError("cannot rescale a zero-radius hazard matrix")
        h = HazardMatrix(g, h.values * (cfg.target_rho / rho0))
    return loaded, h


def _zero_target(h: HazardMatrix) -> HazardMatrix:
    return HazardMatrix(h.graph, np.zeros(h.graph.num_edges))


def _baseline(method: str, h: HazardMatrix, k: float, seed: int):
    if method == "rand":
        return rand_policy(h.graph, k, seed=seed)
    if method == "degree":
        return degree_policy(h.graph, k)
    if method == "wdegree":
        return wdegree_policy(h, k)
    if method == "netshield":
        return netshield_policy(h.graph, k)
    raise DomainError(f"unknown baseline {method!r}")


def _outdir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ----------------------------- verbs -----------------------------


def cmd_radius(cfg: ExperimentConfig, args) -> None:
    loaded, h = _load_hazard(cfg)
    g = h.graph
    if args.largest_scc:
        nodes = largest_scc(g)
        sub, edge_ids = induced_subgraph(g, nodes)
        h = HazardMatrix(sub, h.values[edge_ids])
        g = sub
        print(f"scc_nodes {nodes.size}")
    res = hazard_radius(h)
    print(f"n {g.n}")
    print(f"edges {g.num_edges}")
    print(f"skipped_self_loops {loaded.skipped}")
    print(f"rho {res.rho!r}")
    bound = influence_upper_bound(res.rho, g.n, cfg.n0)
    print(f"gamma {bound.gamma!r}")
    print(f"bound {bound.bound!r}")


def cmd_shape(cfg: ExperimentConfig, args) -> None:
    if len(cfg.budgets) != 1:
        raise DomainError("shape needs exactly one budget (config key 'budget' "
                          "or --budget)")
    _, h = _load_hazard(cfg)
    g = h.graph
    cfg.check_against_graph(g.n, g.num_edges)
    spec = FeasibleSetSpec(h, _zero_target(h), cfg.budgets[0], cfg.mode)
    runner = netshape_node if cfg.mode == "node" else netshape_edge
    result = runner(spec, eps=cfg.eps, t_cap=cfg.t_cap)
    out = _outdir(cfg)
    write_allocation(result.averaged, out / "allocation.tsv")
    write_allocation(result.best, out / "allocation_best.tsv")
    write_trace(result, out / "trace.csv")
    write_hazard_tsv(result.shaped, out / "shaped.tsv")
    if cfg.plots:
        from .plotting import render_trace_figure

        render_trace_figure(result.trace_rho, out / "trace.svg")
    print(f"iterations {result.iterations}")
    print(f"rho_initial {float(result.trace_rho[0])!r}")
    print(f"rho_averaged {result.rho_averaged!r}")
    print(f"rho_best {result.rho_best!r}")
    print(f"out {out}")


def cmd_simulate(cfg: ExperimentConfig, args) -> None:
    _, h = _load_hazard(cfg)
    g = h.graph
    p = probabilities_from_hazard(h)
    seed = cfg.seeds[0]
    if args.s0:
        try:
            s0 = np.array(sorted({int(tok) for tok in args.s0.split(",")}),
                          dtype=np.int64)
        except ValueError:
            raise DomainError(f"bad --s0 value {args.s0!r}") from None
    else:
        cfg.check_against_graph(g.n, g.num_edges)
        s0 = select_influencers(p, cfg.n0, samples=cfg.selection_samples,
                                seed=_derive_seed(seed, _TAG_SELECTION))
    if args.model == "live":
        counts = influence_counts(p, s0, runs=cfg.runs, seed=seed)
    else:
        counts = np.empty(cfg.runs)
        for r in range(cfg.runs):
            outcome = simulate_ctic(h, s0, horizon=args.horizon,
                                    rng=run_rng(seed, r))
            counts[r] = outcome.infected.size
    mean = float(counts.mean())
    se = float(counts.std(ddof=1) / math.sqrt(cfg.runs)) if cfg.runs > 1 else 0.0
    if args.dump:
        with open(args.dump, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["run", "infected_count"])
            for r, c in enumerate(counts):
                writer.writerow([r, int(c)])
    print("s0 " + ",".join(str(v) for v in s0))
    print(f"runs {cfg.runs}")
    print(f"sigma_mean {mean!r}")
    print(f"sigma_stderr {se!r}")


def cmd_baseline(cfg: ExperimentConfig, args) -> None:
    if len(cfg.budgets) != 1:
        raise DomainError("baseline needs exactly one budget")
    method = args.baseline_method
    _, h = _load_hazard(cfg)
    g = h.graph
    k = cfg.budgets[0]
    if k > g.n:
        raise DomainError(f"budget {k} exceeds node count {g.n}")
    policy = _baseline(method, h, k, seed=cfg.seeds[0])
    spec = FeasibleSetSpec(h, _zero_target(h), k, "node")
    shaped = apply_policy(spec, policy.allocation)
    out = _outdir(cfg)
    write_allocation(policy.allocation, out / f"allocation_{method}.tsv")
    print(f"method {method}")
    print(f"rho {hazard_radius(shaped).rho!r}")
    print(f"out {out}")


@dataclass
class SweepRow:
    """One sweep cell; None fields render as empty CSV entries."""

    method: str
    k: float
    rho: float | None
    sigma_mean: float | None
    sigma_stderr: float | None
    wall_time_ms: int
    seed: int
    error: str = ""


def _run_cell(cfg: ExperimentConfig, h: HazardMatrix, method: str, k: float,
              k_index: int, seed: int, s0) -> SweepRow:
    g = h.graph
    cell_seed = _derive_seed(seed, _TAG_CELL, METHODS.index(method), k_index)
    t0 = time.perf_counter()
    row = SweepRow(method=method, k=k, rho=None, sigma_mean=None,
                   sigma_stderr=None, wall_time_ms=0, seed=seed)
    try:
        if method == "netshape":
            spec = FeasibleSetSpec(h, _zero_target(h), k, cfg.mode)
            runner = netshape_node if cfg.mode == "node" else netshape_edge
            result = runner(spec, eps=cfg.eps, t_cap=cfg.t_cap)
            shaped = result.shaped
            rho = result.rho_averaged
        else:
            node_k = min(k, float(g.n))
            policy = _baseline(method, h, node_k, seed=cell_seed)
            spec = FeasibleSetSpec(h, _zero_target(h), node_k, "node")
            shaped = apply_policy(spec, policy.allocation)
            rho = None
        if "radius" in cfg.evals:
            row.rho = rho if rho is not None else hazard_radius(shaped).rho
        if "influence" in cfg.evals:
            p = probabilities_from_hazard(shaped)
            cell_s0 = s0
            if cell_s0 is None:
                cell_s0 = select_influencers(
                    p, cfg.n0, samples=cfg.selection_samples,
                    seed=_derive_seed(cell_seed, _TAG_SELECTION))
            est = estimate_influence(p, cell_s0, runs=cfg.runs, seed=cell_seed)
            row.sigma_mean = est.mean
            row.sigma_stderr = est.std_error
    except NetshapeError as exc:
        row.error = str(exc)
    if cfg.timing:
        row.wall_time_ms = int(round((time.perf_counter() - t0) * 1000.0))
    return row


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def cmd_sweep(cfg: ExperimentConfig, args) -> None:
    _, h = _load_hazard(cfg)
    g = h.graph
    if not cfg.budgets:
        cfg.budgets = cfg.default_budgets(g.n, g.num_edges)
    cfg.check_against_graph(g.n, g.num_edges)
    s0 = None
    if "influence" in cfg.evals and not cfg.reselect:
        p0 = probabilities_from_hazard(h)
        s0 = select_influencers(p0, cfg.n0, samples=cfg.selection_samples,
                                seed=_derive_seed(cfg.seeds[0], _TAG_SELECTION))
    cells = [(method, k, ki, seed)
             for method in cfg.methods
             for ki, k in enumerate(cfg.budgets)
             for seed in cfg.seeds]

    def work(cell):
        method, k, ki, seed = cell
        return _run_cell(cfg, h, method, k, ki, seed, s0)

    if cfg.threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            rows = list(pool.map(work, cells))
    else:
        rows = [work(cell) for cell in cells]

    out = _outdir(cfg)
    csv_path = out / "sweep.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "k", "rho", "sigma_mean", "sigma_stderr",
                         "wall_time_ms", "seed", "error"])
        for row in rows:
            writer.writerow([row.method, _format_cell(row.k),
                             _format_cell(row.rho), _format_cell(row.sigma_mean),
                             _format_cell(row.sigma_stderr), row.wall_time_ms,
                             row.seed, row.error])
    meta_path = out / "meta.txt"
    with open(meta_path, "w", encoding="utf-8") as fh:
        fh.write(f"config_sha256={cfg.digest()}\n")
        fh.write(f"n={g.n}\n")
        fh.write(f"edges={g.num_edges}\n")
        fh.write(f"cells={len(cells)}\n")
        if s0 is not None:
            fh.write("s0=" + ",".join(str(v) for v in s0) + "\n")
    written = [str(csv_path), str(meta_path)]
    if cfg.plots:
        from .plotting import render_sweep_figures

        written += render_sweep_figures(rows, g.n, out)
    for path in written:
        print(f"out {path}")
    failed = sum(1 for r in rows if r.error)
    if failed:
        print(f"failed_cells {failed}", file=sys.stderr)


# ----------------------------- parser -----------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--graph", help="edge list path")
    common.add_argument("--format", choices=["unweighted", "weighted"])
    common.add_argument("--symmetrize", action="store_const", const=True,
                        default=None, help="add the reverse of every edge")
    common.add_argument("--weighting", choices=["trivalency", "native", "sir"])
    common.add_argument("--p-low", type=float, dest="p_low")
    common.add_argument("--p-med", type=float, dest="p_med")
    common.add_argument("--p-high", type=float, dest="p_high")
    common.add_argument("--weight-seed", type=int, dest="weight_seed")
    common.add_argument("--sir-beta", type=float, dest="sir_beta")
    common.add_argument("--sir-delta", type=float, dest="sir_delta")
    common.add_argument("--target-rho", type=float, dest="target_rho",
                        help="rescale hazards to this radius")
    common.add_argument("--seed", type=int, action="append", dest="seed",
                        help="global seed; repeat for multi-seed sweeps")
    common.add_argument("--threads", type=int)
    common.add_argument("--out", help="output directory")

    parser = argparse.ArgumentParser(
        prog="netshape",
        description="Budget-constrained cascade shaping and its evaluation")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("radius", parents=[common],
                       help="hazard radius and influence ceiling")
    p.add_argument("--n0", type=int, help="seed-set size for the bound")
    p.add_argument("--largest-scc", action="store_true",
                   help="restrict to the largest strongly connected component")
    p.set_defaults(func=cmd_radius)

    p = sub.add_parser("shape", parents=[common], help="run the shaping loop")
    p.add_argument("--mode", choices=["edge", "node"])
    p.add_argument("--budget", type=float, action="append", dest="budget")
    p.add_argument("--eps", type=float)
    p.add_argument("--t-cap", type=int, dest="t_cap")
    p.add_argument("--plots", action="store_const", const=True, default=None)
    p.set_defaults(func=cmd_shape)

    p = sub.add_parser("simulate", parents=[common],
                       help="Monte-Carlo influence of a seed set")
    p.add_argument("--s0", help="comma-separated seed nodes; default selects "
                                "the top influencers")
    p.add_argument("--model", choices=["live", "temporal"], default="live")
    p.add_argument("--horizon", type=float, default=math.inf)
    p.add_argument("--runs", type=int)
    p.add_argument("--n0", type=int)
    p.add_argument("--selection-samples", type=int, dest="selection_samples")
    p.add_argument("--dump", help="write per-run sizes as CSV here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("baseline", parents=[common],
                       help="one reference policy and its radius")
    p.add_argument("--method", required=True, dest="baseline_method",
                   choices=[m for m in METHODS if m != "netshape"])
    p.add_argument("--budget", type=float, action="append", dest="budget")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("sweep", parents=[common],
                       help="compare methods across budgets and seeds")
    p.add_argument("--mode", choices=["edge", "node"])
    p.add_argument("--budget", type=float, action="append", dest="budget")
    p.add_argument("--method", action="append", dest="method",
                   choices=list(METHODS))
    p.add_argument("--eval", action="append", dest="eval",
                   choices=["radius", "influence"])
    p.add_argument("--runs", type=int)
    p.add_argument("--n0", type=int)
    p.add_argument("--selection-samples", type=int, dest="selection_samples")
    p.add_argument("--reselect", action="store_const", const=True, default=None,
                   help="re-select influencers on each shaped graph")
    p.add_argument("--eps", type=float)
    p.add_argument("--t-cap", type=int, dest="t_cap")
    p.add_argument("--plots", action="store_const", const=True, default=None)
    p.add_argument("--timing", action="store_const", const=True, default=None,
                   help="record wall times (breaks byte-for-byte determinism)")
    p.set_defaults(func=cmd_sweep)
    return parser


_OVERRIDE_MAP = {"budget": "budgets", "method": "methods", "eval": "evals",
                 "seed": "seeds"}


def _config_from_args(args) -> ExperimentConfig:
    file_values = parse_config_file(args.config) if args.config else None
    overrides = {}
    for key, value in vars(args).items():
        if key in ("config", "verb", "func", "s0", "model", "horizon", "dump",
                   "largest_scc", "baseline_method"):
            continue
        if value is None:
            continue
        overrides[_OVERRIDE_MAP.get(key, key)] = value
    return ExperimentConfig.from_sources(file_values, overrides)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        args.func(cfg, args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NetshapeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
