"""Command-line entry point: simulate, metrics, discover, score, compare,
ate, tradeoff, and select subcommands over CSV run tables and JSON artifacts.

Exit codes: 0 success, 1 usage error, 2 data or numerical error.  All
randomness flows through explicit --seed flags; outputs are written
atomically so reruns with identical inputs produce byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path

from . import __version__, _kernels, core, discovery, fairmetrics, inference
from . import scm as scm_mod
from . import selection, tradeoff
from .errors import TradecauseError


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; the contract here is exit 1
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _info(args, message: str) -> None:
    if not args.quiet:
        print(message, file=sys.stderr)


def _seed(value: str) -> int:
    parsed = int(value)
    if parsed < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return parsed


def _add_common(p: argparse.ArgumentParser, seed: bool = True) -> None:
    if seed:
        p.add_argument("--seed", type=_seed, default=0, help="random seed")
    p.add_argument("--out-dir", default=".", help="directory for output files")
    p.add_argument("--quiet", action="store_true", help="suppress progress messages")
    p.add_argument("--threads", type=int, default=None, help="cap worker threads")


def _apply_threads(args) -> None:
    threads = getattr(args, "threads", None)
    if threads and _kernels.USING_NUMBA:
        import numba

        numba.set_num_threads(max(1, threads))


def _load_table(args) -> core.ObservationMatrix:
    return core.load_run_table(args.data, args.config)


def _dml_config(args) -> inference.DmlConfig:
    nuisance: inference.LinearRidge | inference.KNearest
    if getattr(args, "nuisance", "ridge") == "knn":
        nuisance = inference.KNearest()
    else:
        nuisance = inference.LinearRidge()
    return inference.DmlConfig(
        folds=getattr(args, "folds", 5),
        nuisance=nuisance,
        seed=getattr(args, "seed", 0),
    )


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    cfg = scm_mod.ScmConfig(
        n_nodes=args.nodes,
        n_interventional=args.interventional,
        expected_in_degree=args.in_degree,
        noise_sigma=args.sigma,
        nonlinear=args.nonlinear,
        seed=args.seed,
    )
    model = scm_mod.random_scm(cfg)
    table = scm_mod.sample(model, args.n, seed=args.seed)
    out = Path(args.out_dir)
    _atomic_write(out / "runs.csv", core.run_table_to_csv(table))
    _atomic_write(out / "truth.json", core.dumps_json(core.graph_to_dict(model.graph)))
    _atomic_write(
        out / "study.json",
        core.dumps_json(core.study_config_to_dict(model.variables)),
    )
    _atomic_write(out / "scm.json", core.dumps_json(scm_mod.scm_to_dict(model)))
    _info(args, f"wrote runs.csv, truth.json, study.json, scm.json to {out}")
    return 0


def _cmd_metrics(args) -> int:
    table = fairmetrics.PredictionTable.from_csv(args.pred)
    row = fairmetrics.metrics_row(table, k=args.k)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(row.keys())
    writer.writerow([repr(v) for v in row.values()])
    if args.out:
        _atomic_write(Path(args.out), buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def _cmd_discover(args) -> int:
    table = _load_table(args)
    cfg = discovery.SearchConfig(
        restarts=args.restarts,
        max_in_degree=args.max_in_degree,
        tier_constraints=args.tiers,
        seed=args.seed,
    )
    graph = discovery.learn_graph(table, cfg=cfg)
    _atomic_write(Path(args.out), core.dumps_json(core.graph_to_dict(graph)))
    if args.dot:
        _atomic_write(Path(args.dot), core.graph_to_dot(graph, table.variables))
    _info(args, f"learned graph with {len(graph.edges)} edges -> {args.out}")
    return 0


def _cmd_score(args) -> int:
    table = _load_table(args)
    graph = core.load_graph(args.graph)
    value = discovery.bge_score(table, graph)
    sys.stdout.write(core.dumps_json({"bge_score": value}))
    return 0


def _cmd_compare(args) -> int:
    g1 = core.load_graph(args.graph1)
    g2 = core.load_graph(args.graph2)
    overlap = discovery.compare_graphs(g1, g2)
    accuracy = discovery.eval_against_truth(g1, g2)
    doc = {
        "n_common": overlap.n_common,
        "n_edges_1": overlap.n_edges_1,
        "n_edges_2": overlap.n_edges_2,
        "jaccard": overlap.jaccard,
        "false_edge_rate": accuracy.false_edge_rate,
        "missing_edge_rate": accuracy.missing_edge_rate,
        "shd": accuracy.shd,
        "skeleton_f1": discovery.skeleton_f1(g1, g2),
    }
    sys.stdout.write(core.dumps_json(doc))
    return 0


def _cmd_ate(args) -> int:
    table = _load_table(args)
    graph = core.load_graph(args.graph)
    query = core.AteQuery(args.treatment, args.outcome, args.x1, args.x2)
    cfg = _dml_config(args)
    adjust = inference.adjustment_set(graph, query.treatment, query.outcome)
    est = inference.dml_effect(table, query.treatment, query.outcome, adjust, cfg)
    doc = {
        "treatment": query.treatment,
        "outcome": query.outcome,
        "x1": query.x1,
        "x2": query.x2,
        "theta": est.theta,
        "ate": est.theta * (query.x1 - query.x2),
        "std_error": est.std_error,
        "n": est.n,
        "adjustment_set": sorted(est.adjustment_set),
    }
    sys.stdout.write(core.dumps_json(doc))
    return 0


def _parse_pairs(raw: str) -> list[tuple[str, str]]:
    pairs = []
    for chunk in raw.split(","):
        parts = chunk.split(":")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise TradecauseError(f"--pairs entry {chunk!r} is not of the form X:Y")
        pairs.append((parts[0], parts[1]))
    return pairs


def _cmd_tradeoff(args) -> int:
    table = _load_table(args)
    graph = core.load_graph(args.graph)
    methods = [m for m in args.methods.split(",") if m]
    if not methods:
        raise TradecauseError("--methods must list at least one method")
    pairs = _parse_pairs(args.pairs)
    cfg = _dml_config(args)
    report_pairs = []
    for x, y in pairs:
        analyses = []
        for method in methods:
            query = tradeoff.TradeoffQuery(
                method=method, x=x, y=y, t_on=args.t_on, t_off=args.t_off
            )
            analyses.append((method, tradeoff.analyze(table, graph, query, cfg=cfg)))
        report_pairs.append((tradeoff.aggregate(analyses), analyses))
    doc = tradeoff.build_report(report_pairs)
    _atomic_write(Path(args.out), core.dumps_json(doc))
    if args.dot:
        _atomic_write(
            Path(args.dot),
            tradeoff.annotated_dot(graph, table.variables, report_pairs),
        )
    _info(args, f"analyzed {len(pairs)} pair(s) x {len(methods)} method(s) -> {args.out}")
    return 0


def _cmd_select(args) -> int:
    table = _load_table(args)
    graph = core.load_graph(args.graph)
    try:
        doc = json.loads(Path(args.objective).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TradecauseError(f"{args.objective}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict) or "terms" not in doc:
        raise TradecauseError(f"{args.objective}: objective needs a 'terms' array")
    terms = []
    for entry in doc["terms"]:
        metric = entry.get("metric")
        if metric is None:
            raise TradecauseError(f"{args.objective}: every term needs a metric")
        terms.append(
            selection.ObjectiveTerm(
                metric=str(metric),
                weight=float(entry.get("weight", 1.0)),
                sign=table.spec(str(metric)).sign,
            )
        )
    objective = selection.Objective(terms=tuple(terms))
    methods = [
        s.name
        for s in table.variables
        if s.kind is core.VariableKind.INTERVENTIONAL
    ]
    plan = selection.select_methods(
        table,
        graph,
        objective,
        methods,
        grid_step=args.grid_step,
        max_active=args.max_active,
    )
    out = {
        "assignments": dict(plan.assignments),
        "predicted_changes": dict(plan.predicted_changes),
        "objective_value": plan.objective_value,
    }
    sys.stdout.write(core.dumps_json(out))
    return 0


# ---------------------------------------------------------------------------
# parser assembly
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="tradecause", description=__doc__)
    parser.add_argument("--version", action="version", version=f"tradecause {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample a synthetic study from a random SCM")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--interventional", type=int, required=True)
    p.add_argument("--n", type=int, required=True, help="number of runs")
    p.add_argument("--in-degree", type=float, default=2.0)
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--nonlinear", action="store_true")
    _add_common(p)
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("metrics", help="compute fairness metrics from predictions")
    p.add_argument("--pred", required=True, help="prediction-table CSV")
    p.add_argument("--k", type=int, default=5, help="neighbors for consistency")
    p.add_argument("--out", default=None, help="output CSV (default stdout)")
    _add_common(p, seed=False)
    p.set_defaults(handler=_cmd_metrics)

    p = sub.add_parser("discover", help="learn a causal graph from a run table")
    p.add_argument("--data", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--max-in-degree", type=int, default=4)
    p.add_argument("--tiers", action="store_true", help="enforce tier ordering")
    p.add_argument("--out", required=True, help="graph JSON output")
    p.add_argument("--dot", default=None, help="optional DOT output")
    _add_common(p)
    p.set_defaults(handler=_cmd_discover)

    p = sub.add_parser("score", help="BGe score of a graph on a run table")
    p.add_argument("--data", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--graph", required=True)
    _add_common(p, seed=False)
    p.set_defaults(handler=_cmd_score)

    p = sub.add_parser("compare", help="edge overlap and accuracy of two graphs")
    p.add_argument("graph1", help="learned graph JSON")
    p.add_argument("graph2", help="reference graph JSON")
    _add_common(p, seed=False)
    p.set_defaults(handler=_cmd_compare)

    p = sub.add_parser("ate", help="average treatment effect via DML")
    p.add_argument("--data", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--treatment", required=True)
    p.add_argument("--outcome", required=True)
    p.add_argument("--x1", type=float, required=True)
    p.add_argument("--x2", type=float, required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--nuisance", choices=("ridge", "knn"), default="ridge")
    _add_common(p)
    p.set_defaults(handler=_cmd_ate)

    p = sub.add_parser("tradeoff", help="detect trade-offs and identify causes")
    p.add_argument("--data", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--methods", required=True, help="comma-separated method names")
    p.add_argument("--pairs", required=True, help="comma-separated X:Y metric pairs")
    p.add_argument("--t-on", type=float, default=1.0)
    p.add_argument("--t-off", type=float, default=0.0)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--nuisance", choices=("ridge", "knn"), default="ridge")
    p.add_argument("--out", required=True, help="report JSON output")
    p.add_argument("--dot", default=None, help="optional annotated DOT output")
    _add_common(p)
    p.set_defaults(handler=_cmd_tradeoff)

    p = sub.add_parser("select", help="pick method ratios optimizing an objective")
    p.add_argument("--data", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--objective", required=True, help="objective JSON")
    p.add_argument("--grid-step", type=float, default=0.1)
    p.add_argument("--max-active", type=int, default=2)
    _add_common(p, seed=False)
    p.set_defaults(handler=_cmd_select)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_threads(args)
    try:
        return args.handler(args)
    except TradecauseError as exc:
        print(f"tradecause {args.command}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"tradecause {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
