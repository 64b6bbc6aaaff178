"""Command-line surface wiring the library into reproducible workflows.

Every subcommand is deterministic given its inputs: repeated runs
byte-reproduce all output files.  Exit codes: 0 success, 1 input or
usage error, 2 ran fine but the validation verdict is negative.

A config file (plain KEY=VALUE lines, # comments) may supply any long
flag's value; explicit flags win.  The CARLAB_SEED environment variable
fixes the randomized dataset-generation helpers in carlab.synth.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import boolcube, carsim, lcpr, mdp, poset
from .core import (
    CarlabError,
    DataFormatError,
    load_learning_set,
    load_trace_log,
    save_trace_log,
)
from .lcpr import MiningConfig


def _write_json(obj, out: Optional[str]) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _read_config(path: str) -> dict[str, str]:
    config: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataFormatError(f"{path}:{lineno}: expected KEY=VALUE")
        key, value = line.split("=", 1)
        config[key.strip().lower().replace("-", "_")] = value.strip()
    return config


def _merge_config(args: argparse.Namespace) -> None:
    """Fill unset argument slots from the config file, if given."""
    if not getattr(args, "config", None):
        return
    config = _read_config(args.config)
    for key, value in config.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)


def _require(args: argparse.Namespace, name: str) -> str:
    value = getattr(args, name, None)
    if value is None:
        raise CarlabError(f"missing required option --{name.replace('_', '-')}")
    return value


def _load_vectors(path: str) -> tuple[int, list[tuple[str, tuple[float, ...]]]]:
    """Read id,f1..fn[,class] rows; a trailing class column is ignored."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "id":
        raise DataFormatError(f"{path}: bad header")
    header = rows[0][1:]
    if header and header[-1] == "class":
        header = header[:-1]
        drop_class = True
    else:
        drop_class = False
    n = len(header)
    if [f"f{j}" for j in range(1, n + 1)] != header:
        raise DataFormatError(f"{path}: bad feature columns")
    out = []
    for lineno, row in enumerate(rows[1:], 2):
        if not row:
            continue
        expected = n + (2 if drop_class else 1)
        if len(row) != expected:
            raise DataFormatError(f"{path}:{lineno}: malformed row")
        values = row[1 : n + 1]
        out.append((row[0], tuple(float(v) for v in values)))
    return n, out


def _cmd_mine(args: argparse.Namespace) -> int:
    learning_set = load_learning_set(_require(args, "data"), mode=args.mode or "real")
    config = MiningConfig(violation_budget=int(args.budget or 0))
    lds = lcpr.mine_lds(learning_set, config)
    for warning in lds.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    _write_json(lcpr.ldset_to_json(lds), args.out)
    return 0


def _cmd_classify(args: argparse.Namespace) -> int:
    lds = lcpr.load_ldset(_require(args, "lds"))
    _, vectors = _load_vectors(_require(args, "data"))
    results = []
    for object_id, x in vectors:
        outcome = lcpr.classify(x, lds)
        results.append(
            {
                "id": object_id,
                "label": outcome.label,
                "reason": outcome.reason,
                "scores": {str(i): v for i, v in sorted(outcome.scores.items())},
            }
        )
    _write_json({"results": results}, args.out)
    return 0


def _cmd_validate_poset(args: argparse.Namespace) -> int:
    graph = poset.load_transition_records(_require(args, "transitions"))
    verdict = poset.validate_to_normal(graph)
    _write_json(poset.verdict_to_json(verdict), args.out)
    return 0 if verdict.passed else 2


def _cmd_diagram(args: argparse.Namespace) -> int:
    graph = poset.load_transition_records(_require(args, "transitions"))
    diagram = poset.build_level_diagram(graph)
    _write_json(poset.diagram_to_json(diagram), args.out)
    return 0


def _load_or_derive_diagram(args: argparse.Namespace, traces) -> poset.LevelDiagram:
    if getattr(args, "diagram", None):
        return poset.diagram_from_json(
            json.loads(Path(args.diagram).read_text(encoding="utf-8"))
        )
    return poset.build_level_diagram(poset.extract_relation(traces))


def _cmd_fit_mdp(args: argparse.Namespace) -> int:
    traces = load_trace_log(_require(args, "traces"))
    diagram = _load_or_derive_diagram(args, traces)
    model = mdp.estimate_mdp(
        traces,
        diagram,
        gamma=float(args.gamma if args.gamma is not None else 0.9),
        smoothing=float(args.smoothing if args.smoothing is not None else 0.0),
        reward_shape=args.reward_shape or "level-diff",
    )
    _write_json(mdp.mdp_to_json(model), args.out)
    return 0


def _cmd_eval_policy(args: argparse.Namespace) -> int:
    model = mdp.load_mdp(_require(args, "mdp"))
    traces = load_trace_log(_require(args, "traces"))
    observed = mdp.extract_observed_policy(traces)
    report = mdp.compare_policies(observed, model)
    payload = {
        "verdict": report.verdict,
        "max_regret": report.max_regret,
        "per_state": {
            str(s): {
                "v_optimal": report.v_optimal[s],
                "v_observed": report.v_observed[s],
                "regret": report.regret[s],
                "optimal_actions": list(report.optimal_actions[s]),
                "observed": {
                    a: p for a, p in sorted(observed.decision[s].items())
                },
                "agree": report.agreement[s],
            }
            for s in model.states
        },
    }
    _write_json(payload, args.out)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    learning_set = load_learning_set(_require(args, "data"), mode=args.mode or "real")
    lds = lcpr.load_ldset(_require(args, "lds"))
    specs = carsim.load_actions(_require(args, "actions"))
    actions = carsim.register_actions(specs, learning_set.deviated_count)
    max_steps = int(args.max_steps if args.max_steps is not None else 20)
    report = carsim.run_car(
        learning_set.samples, lcpr.ld_classifier(lds), actions, max_steps
    )
    _write_json(carsim.report_to_json(report), args.out)
    if args.trace_out:
        flat = [e for events in report.traces.values() for e in events]
        if flat:
            save_trace_log(flat, args.trace_out)
    if args.emit_dataset:
        # Raw emission: validation happens when the file is re-ingested.
        with Path(args.emit_dataset).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["id"] + [f"f{j}" for j in range(1, learning_set.n + 1)] + ["class"]
            )
            for object_id in sorted(report.traces):
                for e in report.traces[object_id]:
                    writer.writerow(
                        [f"{object_id}.{e.step}"]
                        + [repr(v) for v in e.state]
                        + [e.assigned_class]
                    )
    return 0


def _cmd_inverse(args: argparse.Namespace) -> int:
    learning_set = load_learning_set(_require(args, "data"), mode="boolean")
    specs = carsim.load_actions(_require(args, "actions"))
    depth = int(args.depth if args.depth is not None else 1)
    n = learning_set.n
    rdnfs = boolcube.multiclass_rdnf(learning_set)
    lds = boolcube.subcubes_to_ldset(rdnfs)

    def classify_vertex(vertex: str) -> Optional[int]:
        return lcpr.classify(boolcube.vertex_to_vector(vertex), lds).label

    neg_union = set()
    for i in range(1, learning_set.deviated_count + 1):
        neg_union.update(rdnfs[i])
    partition = boolcube.forall_exists_partition(rdnfs[0], neg_union, n=n)

    actions = {}
    for spec in specs:
        if spec.kind not in ("table", "rule"):
            raise CarlabError("inverse requires Boolean actions")
        actions[spec.class_index] = boolcube.BooleanAction(
            action_id=spec.action_id, n=spec.n, table=spec.table, exprs=spec.exprs
        )
    reach = boolcube.backward_reach(
        partition.forall_region, actions, classify_vertex, depth, n
    )
    depths = []
    for d, (region, cumulative) in enumerate(zip(reach.depths, reach.cumulative)):
        depths.append(
            {
                "depth": d,
                "region": sorted(region),
                "cover": [c.word for c in boolcube.subcube_cover(region, n)],
                "cumulative": sorted(cumulative),
                "never_within": sorted(
                    set(boolcube.all_vertices(n)) - cumulative
                ),
            }
        )
    payload = {
        "n": n,
        "start_region": "forall",
        "forall": sorted(partition.forall_region),
        "exists": sorted(partition.exists_region),
        "uncovered": sorted(partition.uncovered),
        "indeterminate": sorted(reach.indeterminate),
        "depths": depths,
    }
    _write_json(payload, args.out)
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    bundle = {}
    for item in args.inputs:
        if "=" in item:
            name, path = item.split("=", 1)
        else:
            path = item
            name = Path(item).stem
        if name in bundle:
            raise CarlabError(f"duplicate report section {name!r}")
        bundle[name] = json.loads(Path(path).read_text(encoding="utf-8"))
    _write_json(bundle, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carlab",
        description="Classification-action recursion toolkit",
        epilog="Set CARLAB_SEED to fix the randomized dataset helpers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="KEY=VALUE config file; flags override")
        p.add_argument("--out", help="output file (default: stdout)")

    p = sub.add_parser("mine", help="mine logical dependencies from a dataset")
    common(p)
    p.add_argument("--data", help="dataset CSV")
    p.add_argument("--mode", choices=["real", "boolean"], help="value domain")
    p.add_argument("--budget", help="violation budget (default 0)")
    p.set_defaults(handler=_cmd_mine)

    p = sub.add_parser("classify", help="score and label vectors with mined LDs")
    common(p)
    p.add_argument("--lds", help="LD set JSON")
    p.add_argument("--data", help="vector CSV (id,f1..fn[,class])")
    p.set_defaults(handler=_cmd_classify)

    p = sub.add_parser("validate-poset", help="order-axiom verdict on transitions")
    common(p)
    p.add_argument("--transitions", help="transition CSV")
    p.set_defaults(handler=_cmd_validate_poset)

    p = sub.add_parser("diagram", help="level diagram rooted at the normal class")
    common(p)
    p.add_argument("--transitions", help="transition CSV")
    p.set_defaults(handler=_cmd_diagram)

    p = sub.add_parser("fit-mdp", help="estimate an MDP from a trace log")
    common(p)
    p.add_argument("--traces", help="trace log CSV")
    p.add_argument("--diagram", help="level diagram JSON (default: derive from traces)")
    p.add_argument("--gamma", help="discount factor (default 0.9)")
    p.add_argument("--smoothing", help="Laplace smoothing (default 0)")
    p.add_argument(
        "--reward-shape",
        dest="reward_shape",
        choices=["level-diff", "neg-level"],
        help="reward definition (default level-diff)",
    )
    p.set_defaults(handler=_cmd_fit_mdp)

    p = sub.add_parser("eval-policy", help="compare observed and optimal policies")
    common(p)
    p.add_argument("--mdp", help="MDP JSON")
    p.add_argument("--traces", help="trace log CSV")
    p.set_defaults(handler=_cmd_eval_policy)

    p = sub.add_parser("simulate", help="run the classify-act loop over a dataset")
    common(p)
    p.add_argument("--data", help="dataset CSV")
    p.add_argument("--mode", choices=["real", "boolean"], help="value domain")
    p.add_argument("--lds", help="LD set JSON")
    p.add_argument("--actions", help="action spec JSON")
    p.add_argument("--max-steps", dest="max_steps", help="step budget (default 20)")
    p.add_argument("--trace-out", dest="trace_out", help="emit trace log CSV")
    p.add_argument(
        "--emit-dataset",
        dest="emit_dataset",
        help="emit visited states as a dataset CSV (for re-mining between runs)",
    )
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser(
        "inverse", help="backward-reachable regions of the normal class (Boolean)"
    )
    common(p)
    p.add_argument("--data", help="Boolean dataset CSV")
    p.add_argument("--actions", help="Boolean action spec JSON")
    p.add_argument("--depth", help="backward depth k (default 1)")
    p.set_defaults(handler=_cmd_inverse)

    p = sub.add_parser("report", help="bundle JSON outputs into one summary")
    common(p)
    p.add_argument("inputs", nargs="*", help="JSON files, optionally name=path")
    p.set_defaults(handler=_cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; map to input-error code 1
        return 0 if exc.code == 0 else 1
    try:
        _merge_config(args)
        return args.handler(args)
    except (CarlabError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
