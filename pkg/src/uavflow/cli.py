"""Command-line interface: run / sweep / validate.

Exit codes: 0 success, 1 infeasible power allocation, 2 malformed scenario.
"""

import argparse
import json
import sys

from .errors import Infeasible, SchemaError
from .mission import alternating_optimize, run_sweep
from .scenario import build_scenario, canonical_config
from .traceio import export_trace


def _add_common(parser):
    parser.add_argument("--scenario", help="scenario config JSON (defaults apply)")
    parser.add_argument("--seed", type=int, help="override scenario seed")
    parser.add_argument("--mode",
                        choices=["reckless-coop", "reckless-noncoop", "smart"])
    parser.add_argument("--dims", choices=["xy", "xz", "yz", "xyz"])
    parser.add_argument("--topology", choices=["line", "mesh"])
    parser.add_argument("--iters", type=int, help="override iteration cap")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="uavflow",
        description="UAV relay-chain trajectory/power simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario")
    _add_common(run)
    run.add_argument("--out", help="trace CSV output path")

    sweep = sub.add_parser("sweep", help="run a one-field parameter sweep")
    _add_common(sweep)
    sweep.add_argument("--out", help="trace CSV base path (suffixed per value)")
    sweep.add_argument("--sweep", required=True, metavar="FIELD=v1,v2,...",
                       help="scenario field and value list")

    val = sub.add_parser("validate", help="validate a scenario config")
    _add_common(val)
    return parser


def _load_overrides(args):
    if args.scenario:
        with open(args.scenario) as fh:
            text = fh.read()
        try:
            overrides = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}", field="<root>") from exc
    else:
        overrides = {}
    raw = canonical_config(overrides)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.mode is not None:
        raw["mode"] = args.mode
        if raw["mode"] != "smart":
            for jam in raw["interferers"]:
                if jam["policy"] == "smart":
                    jam["policy"] = "naive"
    if args.dims is not None:
        raw["motion"]["dims"] = args.dims
    if args.topology is not None:
        raw["topology"] = args.topology
    if args.iters is not None:
        raw["solver"]["max_iters"] = args.iters
    return raw


def _parse_sweep(spec):
    if "=" not in spec:
        raise SchemaError(f"--sweep expects FIELD=v1,v2,..., got {spec!r}",
                          field="--sweep")
    name, _, tail = spec.partition("=")
    values = []
    for token in tail.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            values.append(json.loads(token))
        except json.JSONDecodeError:
            values.append(token)
    if not values:
        raise SchemaError("--sweep has no values", field="--sweep")
    return name, values


def _warn_smart(raw):
    if raw["mode"] == "smart":
        print("warning: mode 'smart' drops the interference and QoS "
              "constraints; constraints.i_max_dbm/r_th_bps are ignored",
              file=sys.stderr)


def _summary(label, trace):
    final = trace.records[-1].flow_bps if trace.records else float("nan")
    print(f"{label}final_flow_bps={final:.6f} "
          f"iterations={max(len(trace.records) - 1, 0)} "
          f"converged={trace.converged}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        raw = _load_overrides(args)
    except SchemaError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read scenario: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate":
        try:
            build_scenario(raw)
        except SchemaError as exc:
            print(f"scenario error: {exc}", file=sys.stderr)
            return 2
        print("scenario ok")
        return 0

    if args.command == "run":
        _warn_smart(raw)
        try:
            trace = alternating_optimize(build_scenario(raw))
        except Infeasible as exc:
            print(f"infeasible: {exc}", file=sys.stderr)
            return 1
        if args.out:
            export_trace(trace, args.out)
        _summary("", trace)
        if trace.error:
            print(f"infeasible: {trace.error}", file=sys.stderr)
            return 1
        return 0

    # sweep
    try:
        field, values = _parse_sweep(args.sweep)
    except SchemaError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    _warn_smart(raw)
    try:
        points = run_sweep(build_scenario(raw), field, values)
    except SchemaError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    failed = False
    for pt in points:
        label = f"{field}={pt.value} "
        if pt.trace is not None:
            if args.out:
                export_trace(pt.trace, f"{args.out}__{field}={pt.value}.csv")
            _summary(label, pt.trace)
        if pt.error:
            failed = True
            print(f"{label}failed: {pt.error}", file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
