"""Command-line front end.

Subcommands: generate, discover, estimate, bench, dsep, expected-ancestors.
Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .adjustment import (
    estimate_effect_ols,
    is_amenable,
    optimal_adjustment,
    possible_effects_local,
)
from .bench import ExperimentConfig, run_experiment, summarize, write_results_csv, write_summary_csv
from .citests import CATEGORICAL, CONTINUOUS, ChiSquareTester, Dataset, FisherZTester, OracleTester
from .discovery import pc, snap_inf, snap_k, snap_prefilter_then
from .edgelist import load_dag, load_mixed_graph, save_dag
from .errors import SnapError
from .graphs import d_separated
from .synthetic import (
    GenConfig,
    random_cpt,
    random_dag,
    random_sem,
    sample_binary,
    sample_linear_gaussian,
    sample_targets,
    expected_possible_ancestors,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: A003 - argparse API
        raise _UsageError(message)


def _labels_to_indices(names: str, labels: list[str]) -> list[int]:
    index = {l: i for i, l in enumerate(labels)}
    out = []
    for name in names.split(","):
        name = name.strip()
        if not name:
            continue
        if name not in index:
            raise _UsageError(f"unknown vertex name {name!r}")
        out.append(index[name])
    if not out:
        raise _UsageError("expected at least one vertex name")
    return out


def _cmd_generate(args) -> None:
    cfg_payload = json.loads(Path(args.config).read_text(encoding="utf-8"))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    gen = GenConfig(
        n_vertices=cfg_payload["n_vertices"],
        expected_degree=cfg_payload["expected_degree"],
        max_degree=cfg_payload.get("max_degree", 10),
        seed=cfg_payload.get("seed", 0),
    )
    dag = random_dag(gen)
    kind = cfg_payload.get("kind", "linear")
    n_samples = cfg_payload.get("n_samples", 1000)
    save_dag(dag, out_dir / "graph.edges")
    if kind == "binary":
        spec = random_cpt(dag, gen.seed)
        (out_dir / "spec.json").write_text(spec.to_json(), encoding="utf-8")
        data = sample_binary(spec, n_samples, gen.seed)
    else:
        spec = random_sem(dag, gen.seed)
        (out_dir / "spec.json").write_text(spec.to_json(), encoding="utf-8")
        data = sample_linear_gaussian(spec, n_samples, gen.seed)
    data.to_csv(out_dir / "data.csv")
    if "n_targets" in cfg_payload:
        targets = sample_targets(dag, cfg_payload["n_targets"],
                                 cfg_payload.get("target_mode", "random"), gen.seed)
        names = data.names or [f"V{i}" for i in range(dag.n_vertices)]
        (out_dir / "targets.json").write_text(
            json.dumps({"targets": sorted(names[t] for t in targets)}) + "\n",
            encoding="utf-8")
    print(f"wrote graph.edges, spec.json, data.csv to {out_dir}")


def _make_tester(args, labels):
    if args.tester == "oracle":
        if not args.graph:
            raise _UsageError("--tester oracle requires --graph")
        dag = load_dag(args.graph)
        return OracleTester(dag), dag.labels or labels
    if not args.data:
        raise _UsageError(f"--tester {args.tester} requires --data")
    kind = CATEGORICAL if args.tester == "chi-sq" else CONTINUOUS
    data = Dataset.from_csv(args.data, kind=kind)
    tester = (ChiSquareTester(data, alpha=args.alpha) if args.tester == "chi-sq"
              else FisherZTester(data, alpha=args.alpha))
    return tester, data.names


def _cmd_discover(args) -> None:
    tester, labels = _make_tester(args, None)
    n = tester.n_vertices
    if labels is None:
        labels = [f"V{i}" for i in range(n)]
    if args.algo in ("snap-inf", "snap-k") and not args.targets:
        raise _UsageError(f"--algo {args.algo} requires --targets")
    if args.algo == "pc":
        result = pc(n, tester)
    else:
        targets = _labels_to_indices(args.targets, labels)
        if args.algo == "snap-inf":
            result = snap_inf(n, targets, tester)
        elif args.algo == "snap-k":
            result = snap_k(n, targets, args.k, tester)
        else:
            result = snap_prefilter_then("pc", n, targets, args.k, tester)
    result.graph.labels = [labels[v] for v in result.remaining]
    edges_path, json_path = result.write(args.out)
    print(f"wrote {edges_path} and {json_path} "
          f"({result.counts.total} CI tests, {len(result.remaining)} vertices kept)")


def _cmd_estimate(args) -> None:
    graph = load_mixed_graph(args.graph)
    data = Dataset.from_csv(args.data, kind=CONTINUOUS)
    labels = graph.labels or [f"V{i}" for i in range(graph.n_vertices)]
    # Targets isolated in the learned graph carry no edge line; re-attach
    # them as isolated vertices when the dataset knows their columns.
    requested = [n.strip() for n in args.targets.split(",") if n.strip()]
    missing = [n for n in requested if n not in labels]
    if missing and data.names and all(n in data.names for n in missing):
        from snapcd.graphs import MixedGraph

        bigger = MixedGraph(graph.n_vertices + len(missing),
                            labels=labels + missing)
        for u, v, mu, mv in graph.edges():
            bigger.add_edge(u, v, mu, mv)
        graph = bigger
        labels = graph.labels
    if data.names and data.names != labels:
        if set(labels).issubset(data.names):
            data = data.select_columns([data.names.index(l) for l in labels])
        else:
            raise _UsageError("data columns do not cover the graph vertices")
    targets = _labels_to_indices(args.targets, labels)
    rows = []
    for cause in targets:
        for outcome in targets:
            if cause == outcome:
                continue
            if is_amenable(graph, cause, outcome):
                adj = optimal_adjustment(graph, cause, outcome)
                values = [estimate_effect_ols(data, cause, outcome, adj)]
                identifiable = True
                adj_names = ";".join(sorted(labels[a] for a in adj))
            else:
                values = sorted(possible_effects_local(data, graph, cause, outcome))
                identifiable = False
                adj_names = ""
            rows.append([labels[cause], labels[outcome], identifiable, len(values),
                         repr(sum(values) / len(values)), adj_names])
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cause", "outcome", "identifiable", "n_estimates",
                         "mean_estimate", "adjustment_set"])
        writer.writerows(rows)
    print(f"wrote {args.out} ({len(rows)} ordered pairs)")


def _cmd_bench(args) -> None:
    cfg = ExperimentConfig.from_json(Path(args.config).read_text(encoding="utf-8"))
    if args.workers is not None:
        cfg.workers = args.workers
    rows = run_experiment(cfg)
    write_results_csv(rows, args.out)
    summary_path = Path(args.out).with_name(Path(args.out).stem + "_summary.csv")
    write_summary_csv(summarize(rows, cfg.trim), summary_path)
    n_err = sum(1 for r in rows if r.error)
    print(f"wrote {args.out} ({len(rows)} rows, {n_err} errors) and {summary_path}")


def _cmd_dsep(args) -> None:
    dag = load_dag(args.graph)
    labels = dag.labels or [f"V{i}" for i in range(dag.n_vertices)]
    x = _labels_to_indices(args.x, labels)[0]
    y = _labels_to_indices(args.y, labels)[0]
    given = _labels_to_indices(args.given, labels) if args.given else []
    print("true" if d_separated(dag, x, y, given) else "false")


def _cmd_expected_ancestors(args) -> None:
    value = expected_possible_ancestors(args.n, args.t)
    print(f"{value:g}")


def build_parser() -> _Parser:
    parser = _Parser(prog="snapcd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a random graph, SEM/CPT spec and dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("discover", help="run causal discovery")
    p.add_argument("--graph", help="ground-truth DAG edge list (oracle tester)")
    p.add_argument("--data", help="CSV dataset (data-driven testers)")
    p.add_argument("--algo", required=True,
                   choices=["snap-inf", "snap-k", "snap-k+pc", "pc"])
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--targets", help="comma-separated vertex names")
    p.add_argument("--tester", default="oracle", choices=["oracle", "fisher-z", "chi-sq"])
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", required=True, help="output prefix for .edges/.json")
    p.set_defaults(func=_cmd_discover)

    p = sub.add_parser("estimate", help="pairwise effect estimates from a learned graph")
    p.add_argument("--graph", required=True, help="learned graph edge list")
    p.add_argument("--data", required=True, help="held-out CSV dataset")
    p.add_argument("--targets", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("bench", help="run an experiment sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("dsep", help="query d-separation in a DAG file")
    p.add_argument("--graph", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--given", default="")
    p.set_defaults(func=_cmd_dsep)

    p = sub.add_parser("expected-ancestors", help="expected highest target rank")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.set_defaults(func=_cmd_expected_ancestors)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
        return 0
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (SnapError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
