"""Command-line entry point.

Exit status: 0 on success, 1 on usage or parameter errors, 2 on runtime
errors (I/O, malformed input files, generator budget exhausted).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from neutralcopy import __version__
from neutralcopy import io as nio
from neutralcopy.community import girvan_newman, modularity
from neutralcopy.dynamics import BiasMatrix, init_uniform_traits, run
from neutralcopy.errors import InvalidParameterError
from neutralcopy.graph import (
    CONNECTIVITY_POLICIES,
    TYPE_ASSIGNMENTS,
    GeneratorParams,
    Graph,
    generate_planted_partition,
    mixing_summary,
)
from neutralcopy.harness import (
    GRAPH_MODES,
    ExperimentConfig,
    metadata,
    run_ci_contrast,
    run_fig1,
)
from neutralcopy.rng import PURPOSE_DYNAMICS, PURPOSE_TRAITS, check_seed, stream
from neutralcopy.stats import conditional_report, permutation_test_conditional

log = logging.getLogger("neutralcopy")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, output_default: str, output_help: str) -> None:
    p.add_argument("--seed", type=int, default=None, help="master seed (64-bit unsigned; default 0)")
    p.add_argument("--output", default=output_default, help=output_help + f" (default: {output_default})")
    p.add_argument("--format", choices=("csv", "json"), default=None, help="output format")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def _generator_flags(p: argparse.ArgumentParser, defaults: bool) -> None:
    d = (lambda v: v) if defaults else (lambda v: None)
    p.add_argument("--nodes", type=int, default=d(100), help="node count n (default 100)")
    p.add_argument("--p-within", type=float, default=d(0.09), help="same-type edge probability (default 0.09)")
    p.add_argument("--p-between", type=float, default=d(0.01), help="cross-type edge probability (default 0.01)")
    p.add_argument("--type-assignment", choices=TYPE_ASSIGNMENTS, default=d("exact-half-split"),
                   help="social type rule (default exact-half-split)")
    p.add_argument("--connectivity", choices=CONNECTIVITY_POLICIES, default=d("resample-until-connected"),
                   help="connectivity policy (default resample-until-connected)")
    p.add_argument("--max-attempts", type=int, default=d(1000),
                   help="graph draws allowed when resampling until connected (default 1000)")


def _bias_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bias", type=float, nargs=4, metavar=("B00", "B01", "B10", "B11"), default=None,
                   help="biased copying: acceptance probability beta[type][trait], row-major; omit for neutral")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="neutralcopy",
                     description="Neutral copying on planted-partition graphs and conditional independence tests.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="draw a planted-partition graph",
                       description="Draw a two-type planted-partition graph. csv writes PREFIX.edges "
                                   "and PREFIX.types.csv; json writes PREFIX.json.")
    _generator_flags(p, defaults=True)
    _common(p, "graph", "output path prefix")

    p = sub.add_parser("simulate", help="run copying dynamics and record chi-squared",
                       description="Run neutral or biased copying on a graph read from --graph/--attrs, "
                                   "or on a freshly generated one.")
    p.add_argument("--graph", help="edge list file; omit to generate from the generator flags")
    p.add_argument("--attrs", help="node,social_type[,trait] CSV; a trait column gives the initial state")
    _generator_flags(p, defaults=True)
    _bias_flag(p)
    p.add_argument("--budget", type=int, default=None, help="maximum steps (default 200*n)")
    p.add_argument("--record-every", type=int, default=None, help="sampling interval in steps (default n)")
    p.add_argument("--no-early-stop", action="store_true", help="keep running after absorption")
    p.add_argument("--final-state", help="also write node,social_type,trait CSV of the final state here")
    _common(p, "trajectory", "trajectory file (extension added from --format)")

    p = sub.add_parser("communities", help="Girvan-Newman communities",
                       description="Girvan-Newman communities at the modularity-maximising cut.")
    p.add_argument("--graph", required=True, help="edge list file")
    p.add_argument("--attrs", help="attribute CSV, used only to fix n (isolated trailing nodes)")
    p.add_argument("--nodes", type=int, help="node count, if no --attrs")
    _common(p, "partition", "partition file (extension added from --format)")

    p = sub.add_parser("test", help="conditional independence test of type and trait",
                       description="Stratified chi-squared and within-community permutation test. "
                                   "Without --partition, communities come from Girvan-Newman.")
    p.add_argument("--graph", required=True, help="edge list file")
    p.add_argument("--attrs", required=True, help="node,social_type,trait CSV")
    p.add_argument("--partition", help="node,community CSV (default: Girvan-Newman)")
    p.add_argument("--permutations", type=int, default=1000, help="permutation count (default 1000)")
    _common(p, "report", "report file (extension added from --format)")

    for name, help_ in (("fig1", "chi-squared time series, assortative vs flat"),
                        ("ci-contrast", "unconditional vs community-conditional rejection rates")):
        p = sub.add_parser(name, help=help_, description=help_[0].upper() + help_[1:] + ". "
                           "Flags override values from --config.")
        p.add_argument("--config", help="JSON file mirroring ExperimentConfig")
        _generator_flags(p, defaults=False)
        p.add_argument("--graph-mode", choices=GRAPH_MODES, default=None,
                       help="fresh graph per replicate or one shared graph (default resample-per-replicate)")
        p.add_argument("--replicates", type=int, default=None, help="replicate count (default 200)")
        p.add_argument("--budget", type=int, default=None, help="maximum steps per run (default 200*n)")
        p.add_argument("--record-every", type=int, default=None, help="sampling interval in steps (default n)")
        p.add_argument("--no-early-stop", action="store_true", default=None,
                       help="keep running after absorption")
        if name == "fig1":
            p.add_argument("--flat-p", type=float, default=None,
                           help="edge probability of the non-assortative arm (default 0.05)")
        else:
            _bias_flag(p)
            p.add_argument("--alpha", type=float, default=None, help="significance level (default 0.05)")
            p.add_argument("--permutations", type=int, default=None, help="permutations per test (default 1000)")
        _common(p, f"{name}_out", "output directory")
    return parser


def _with_ext(path: str, fmt: str) -> Path:
    p = Path(path)
    return p if p.suffix else p.with_suffix("." + fmt)


def _load_graph(args) -> tuple[Graph, np.ndarray | None, np.ndarray | None]:
    types = traits = None
    n = getattr(args, "nodes", None) if getattr(args, "attrs", None) is None else None
    if getattr(args, "attrs", None):
        types, traits = nio.read_attributes(args.attrs)
        n = len(types)
    g = nio.read_edge_list(args.graph, n)
    if types is not None and g.n != len(types):
        raise nio.FormatError(f"{args.graph}: node ids exceed the {len(types)} nodes in {args.attrs}")
    return g, types, traits


def _generator(args, seed: int) -> GeneratorParams:
    return GeneratorParams(args.nodes, args.p_within, args.p_between, args.type_assignment, seed,
                           args.connectivity, args.max_attempts)


def cmd_generate(args) -> None:
    fmt = args.format or "csv"
    seed = check_seed(args.seed or 0)
    params = _generator(args, seed)
    g, types = generate_planted_partition(params)
    mix = mixing_summary(g, types) if g.m else None
    r = mix.r if mix is not None and mix.defined else None
    if fmt == "csv":
        nio.write_edge_list(args.output + ".edges", g)
        nio.write_attributes(args.output + ".types.csv", types)
    else:
        doc = {
            "metadata": {"artifact": "neutralcopy", "version": __version__,
                         "generator": dataclasses.asdict(params)},
            "n": g.n,
            "edges": [list(e) for e in g.edges],
            "social_types": types.tolist(),
            "assortativity": r,
        }
        nio.write_text(args.output + ".json", nio.dump_json(doc))
    print(f"n={g.n} m={g.m} r={'undefined' if r is None else f'{r:.4f}'}")


def cmd_simulate(args) -> None:
    fmt = args.format or "csv"
    seed = check_seed(args.seed or 0)
    if args.graph:
        g, types, traits = _load_graph(args)
        if types is None:
            raise UsageError("--attrs is required with --graph")
    else:
        g, types = generate_planted_partition(_generator(args, seed))
        traits = None
    if traits is None:
        traits = init_uniform_traits(g.n, stream(seed, 0, PURPOSE_TRAITS))
    stepper = BiasMatrix.from_flat(args.bias) if args.bias else "neutral"
    budget = args.budget if args.budget is not None else 200 * g.n
    every = args.record_every if args.record_every is not None else g.n
    rec = run(g, types, traits, stepper, budget, every, stream(seed, 0, PURPOSE_DYNAMICS),
              early_stop=not args.no_early_stop)
    meta = {"artifact": "neutralcopy", "version": __version__, "experiment": "simulate", "seed": seed,
            "n": g.n, "edges": g.m, "bias": None if args.bias is None else list(args.bias),
            "budget": budget, "record_every": every, "early_stop": not args.no_early_stop}
    out = _with_ext(args.output, fmt)
    if fmt == "csv":
        nio.write_trajectory(out, [(0, rec)], meta)
    else:
        rows = [dict(zip(nio.TRAJECTORY_HEADER, r)) for r in nio.trajectory_rows(rec)]
        for r in rows:
            r["sweep"], r["chi2"], r["absorbed"] = float(r["sweep"]), float(r["chi2"]), bool(r["absorbed"])
        nio.write_text(out, nio.dump_json({"metadata": meta, "samples": rows,
                                           "final_state": rec.final_state.tolist()}))
    if args.final_state:
        nio.write_attributes(args.final_state, types, rec.final_state)


def cmd_communities(args) -> None:
    fmt = args.format or "csv"
    g, _, _ = _load_graph(args)
    dendro, part = girvan_newman(g)
    q = modularity(g, part) if g.m else None
    out = _with_ext(args.output, fmt)
    if fmt == "csv":
        nio.write_partition(out, part)
    else:
        doc = {
            "metadata": {"artifact": "neutralcopy", "version": __version__, "experiment": "communities"},
            "modularity": q,
            "communities": [sorted(b) for b in part.blocks],
            "labels": part.labels.tolist(),
            "dendrogram": [{"edge": list(r.edge), "betweenness": r.betweenness, "components": r.components}
                           for r in dendro.removals],
        }
        nio.write_text(out, nio.dump_json(doc))
    print(f"communities={len(part)} modularity={'undefined' if q is None else f'{q:.6f}'}")


def cmd_test(args) -> None:
    fmt = args.format or "json"
    seed = check_seed(args.seed or 0)
    g, types, traits = _load_graph(args)
    if traits is None:
        raise nio.FormatError(f"{args.attrs}: a trait column is required for testing")
    part = nio.read_partition(args.partition) if args.partition else girvan_newman(g)[1]
    if part.n != g.n:
        raise nio.FormatError(f"{args.partition}: partition covers {part.n} nodes, graph has {g.n}")
    report = conditional_report(types, traits, part.blocks)
    perm = permutation_test_conditional(types, traits, part, args.permutations, seed)
    doc = report.to_dict()
    doc.update(p_permutation=perm.p_value, permutations=perm.permutations, seed=seed)
    out = _with_ext(args.output, fmt)
    if fmt == "json":
        nio.write_text(out, nio.dump_json(doc))
    else:
        rows = [(c["community_id"], c["size"], *sum(c["table"], []), c["statistic"], c["df"])
                for c in doc["per_community"]]
        meta = {k: v for k, v in doc.items() if k != "per_community"}
        nio.write_text(out, nio.table_csv(
            ["community_id", "size", "n00", "n01", "n10", "n11", "statistic", "df"], rows, meta))
    print(f"statistic={doc['statistic']:.6g} df={doc['df']} p_permutation={perm.p_value:.6g}")


def _experiment_config(args) -> ExperimentConfig:
    base: dict[str, Any] = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                base = json.load(fh)
        except json.JSONDecodeError as exc:
            raise nio.FormatError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(base, dict):
            raise nio.FormatError(f"{args.config}: top level must be an object")
    gen = dict(base.get("generator", {}))
    for flag, key in (("nodes", "n"), ("p_within", "p_within"), ("p_between", "p_between"),
                      ("type_assignment", "type_assignment"), ("connectivity", "connectivity_policy"),
                      ("max_attempts", "max_attempts")):
        v = getattr(args, flag)
        if v is not None:
            gen[key] = v
    base["generator"] = gen
    for key in ("graph_mode", "replicates", "budget", "record_every", "flat_p", "alpha", "permutations"):
        v = getattr(args, key, None)
        if v is not None:
            base[key] = v
    if getattr(args, "bias", None) is not None:
        base["bias"] = [args.bias[:2], args.bias[2:]]
    if args.no_early_stop:
        base["early_stop"] = False
    if args.seed is not None:
        base["master_seed"] = args.seed
    if args.format is not None:
        base["format"] = args.format
    base["output"] = args.output
    try:
        cfg = ExperimentConfig.from_dict(base)
    except TypeError as exc:
        raise InvalidParameterError(f"bad config: {exc}") from None
    cfg.validate()
    return cfg


def cmd_fig1(args) -> None:
    cfg = _experiment_config(args)
    res = run_fig1(cfg)
    meta = metadata(cfg, "fig1")
    out = Path(cfg.output)
    summary_rows = []
    for name, arm in res.arms.items():
        for k, step in enumerate(arm.steps.tolist()):
            summary_rows.append((name, step, step / cfg.generator.n, len(arm.replicates),
                                 float(arm.median[k]), float(arm.q25[k]), float(arm.q75[k])))
    rep_header = ["arm", "replicate", "graph_seed", "edges", "r", "peak_chi2", "peak_step", "absorbed",
                  "absorption_step", "samples", "samples_above_critical", "final_chi2"]
    rep_rows = [(r.arm, r.index, r.graph_seed, r.edges, "" if r.r is None else float(r.r), r.peak_chi2,
                 r.peak_step, int(r.absorbed), "" if r.absorption_step is None else r.absorption_step,
                 r.samples, r.samples_above_critical, r.final_chi2)
                for arm in res.arms.values() for r in arm.replicates]
    stats = {name: {"median_peak_chi2": arm.peak_median,
                    "fraction_samples_above_critical": arm.fraction_above_critical,
                    "absorbed": sum(r.absorbed for r in arm.replicates)}
             for name, arm in res.arms.items()}
    if cfg.format == "csv":
        nio.write_text(out / "fig1_summary.csv", nio.table_csv(
            ["arm", "step", "sweep", "replicates", "chi2_median", "chi2_q25", "chi2_q75"], summary_rows, meta))
        for name, arm in res.arms.items():
            nio.write_trajectory(out / f"fig1_trace_{name}.csv", [(0, arm.trace)], meta)
        nio.write_text(out / "fig1_replicates.csv", nio.table_csv(rep_header, rep_rows, meta))
    else:
        doc = {
            "metadata": meta,
            "arms": {
                name: {
                    "summary": stats[name],
                    "series": [dict(zip(["step", "sweep", "replicates", "chi2_median", "chi2_q25", "chi2_q75"],
                                        row[1:])) for row in summary_rows if row[0] == name],
                    "trace": [dict(zip(nio.TRAJECTORY_HEADER, [row[0], row[1], float(row[2]), float(row[3]),
                                                               *row[4:8], bool(row[8])]))
                              for row in nio.trajectory_rows(arm.trace)],
                    "replicates": [r.to_dict() for r in arm.replicates],
                }
                for name, arm in res.arms.items()
            },
        }
        nio.write_text(out / "fig1.json", nio.dump_json(doc))
    for name, s in stats.items():
        print(f"{name}: median peak chi2={s['median_peak_chi2']:.4g} "
              f"fraction>3.84={s['fraction_samples_above_critical']:.4f} absorbed={s['absorbed']}")


def cmd_ci_contrast(args) -> None:
    cfg = _experiment_config(args)
    res = run_ci_contrast(cfg)
    meta = metadata(cfg, "ci-contrast")
    out = Path(cfg.output)
    summary = res.summary()
    if cfg.format == "csv":
        nio.write_text(out / "ci_contrast_summary.csv",
                       nio.table_csv(list(summary), [list(summary.values())], meta))
        header = ["replicate", "graph_seed", "r", "peak_step", "peak_chi2", "excluded", "communities",
                  "p_unconditional", "p_conditional", "p_unconditional_asymptotic", "p_conditional_asymptotic"]
        rows = []
        for r in res.replicates:
            u, c = r.unconditional, r.conditional
            rows.append((r.index, r.graph_seed, "" if r.r is None else float(r.r), r.peak_step, r.peak_chi2,
                         int(r.excluded), "" if r.communities is None else r.communities,
                         "" if u is None else u.p_permutation, "" if c is None else c.p_permutation,
                         "" if u is None else u.p_asymptotic, "" if c is None else c.p_asymptotic))
        nio.write_text(out / "ci_contrast_replicates.csv", nio.table_csv(header, rows, meta))
        nio.write_text(out / "ci_contrast_reports.jsonl",
                       "".join(json.dumps(r.to_dict(), sort_keys=True, allow_nan=False) + "\n"
                               for r in res.replicates))
    else:
        nio.write_text(out / "ci_contrast.json", nio.dump_json(
            {"metadata": meta, "summary": summary, "replicates": [r.to_dict() for r in res.replicates]}))
    print(" ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in summary.items()))


COMMANDS = {
    "generate": cmd_generate,
    "simulate": cmd_simulate,
    "communities": cmd_communities,
    "test": cmd_test,
    "fig1": cmd_fig1,
    "ci-contrast": cmd_ci_contrast,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        COMMANDS[args.command](args)
    except (UsageError, InvalidParameterError) as exc:
        print(f"neutralcopy {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except (OSError, nio.FormatError, RuntimeError, ValueError) as exc:
        print(f"neutralcopy {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
