"""Command-line surface.

Subcommands: generate, simulate, steady-state, linearize, control, fit,
experiment.  Shared flags (--seed, --output-dir, --format) follow the
subcommand.  Exit codes: 0 success, 1 validation error, 2 numerical
failure; errors go to stderr as one JSON line.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import netio
from .cascade import SimConfig, run_discrete
from .control import run_proactive, run_reactive
from .dynamics import controllability_rank, find_steady_state, linearize
from .errors import NumericalError, RiskNetError, ValidationError
from .estimation import count_transitions, fit_probabilities
from .experiments import run_experiment
from .model import (
    DriverSet,
    RiskNetwork,
    binary_state,
    continuous_state,
    degree_stats,
    identity_costs,
)


def _parse_names(net: RiskNetwork, spec: str) -> list:
    return [net.index_of(name.strip()) for name in spec.split(",") if name.strip()]


def _parse_pins(net: RiskNetwork, pins: list) -> dict:
    out = {}
    for item in pins:
        name, _, value = item.partition("=")
        if value not in ("0", "1"):
            raise ValidationError(f"pin {item!r} must be name=0 or name=1")
        out[net.index_of(name)] = int(value)
    return out


def _out_dir(args) -> Path:
    out = Path(args.output_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_state(names, values, fmt):
    if fmt == "json":
        doc = {name: float(v) for name, v in zip(names, values)}
        print(json.dumps(doc, indent=2))
    else:
        for name, v in zip(names, values):
            print(f"{name},{float(v):.9g}")


def _cmd_generate(args) -> int:
    ranges = {}
    for key in ("p_int", "p_ext", "p_con"):
        lo_hi = getattr(args, f"{key}_range")
        if lo_hi is not None:
            ranges[key] = tuple(lo_hi)
    net = netio.generate_synthetic(
        n=args.n,
        target_mean_degree=args.mean_degree,
        target_degree_std=args.degree_std,
        prob_ranges=ranges or None,
        seed=args.seed,
    )
    path = _out_dir(args) / "network.json"
    netio.save_network(path, net)
    mean, std = degree_stats(net)
    print(f"wrote {path} (n={net.n}, mean degree {mean:.2f}, std {std:.2f})")
    return 0


def _cmd_simulate(args) -> int:
    net = netio.load_network(args.network)
    init = np.zeros(net.n)
    if args.init_active:
        init[_parse_names(net, args.init_active)] = 1.0
    config = SimConfig(
        steps=args.steps,
        seed=args.seed,
        variant=args.variant,
        pinned=_parse_pins(net, args.pin),
    )
    log = run_discrete(net, binary_state(init), config)
    path = _out_dir(args) / "events.csv"
    netio.write_event_log(path, log, net.names)
    print(f"wrote {path} ({log.steps} steps, {log.n} nodes)")
    return 0


def _cmd_steady_state(args) -> int:
    net = netio.load_network(args.network)
    x_s = find_steady_state(
        net, tol=args.tol, max_iter=args.max_iter, damping=args.damping
    )
    _print_state(net.names, x_s.values, args.format)
    if args.output_dir is not None:
        out = _out_dir(args)
        if args.format == "json":
            doc = {name: float(v) for name, v in zip(net.names, x_s.values)}
            (out / "steady_state.json").write_text(json.dumps(doc, indent=2) + "\n")
        else:
            netio._write_csv(
                out / "steady_state.csv",
                ["node", "steady_state"],
                [[name, float(v)] for name, v in zip(net.names, x_s.values)],
            )
    return 0


def _cmd_linearize(args) -> int:
    net = netio.load_network(args.network)
    driver = DriverSet(tuple(_parse_names(net, args.drivers)), net.n)
    x_s = find_steady_state(net)
    sys_lin = linearize(net, driver, x_s)
    rank = controllability_rank(sys_lin)
    out = _out_dir(args)
    netio._write_csv(
        out / "jacobian.csv", list(net.names),
        [[float(v) for v in row] for row in sys_lin.A],
    )
    doc = {
        "rank": rank,
        "n": net.n,
        "controllable": rank == net.n,
        "drivers": [net.names[i] for i in driver.indices],
    }
    (out / "controllability.json").write_text(json.dumps(doc, indent=2) + "\n")
    print(f"controllability rank {rank} of {net.n}")
    return 0


def _cmd_control(args) -> int:
    net = netio.load_network(args.network)
    driver = DriverSet(tuple(_parse_names(net, args.drivers)), net.n)
    costs = identity_costs(net.n)
    if args.phase == "proactive":
        run = run_proactive(net, driver, costs, args.steps)
    else:
        pinned = _parse_pins(net, args.pin)
        if args.init_active:
            init = np.zeros(net.n)
            init[_parse_names(net, args.init_active)] = 1.0
            init = continuous_state(init)
        else:
            init = find_steady_state(net)
        run = run_reactive(net, driver, costs, init, args.steps, pinned)
    out = _out_dir(args)
    netio.write_control_run(out, run, net.names)
    print(
        f"{args.phase} run: state cost {run.state_cost:.6g}, "
        f"control cost {run.control_cost:.6g}, total {run.total_cost:.6g}"
    )
    return 0


def _cmd_fit(args) -> int:
    net = netio.load_network(args.network)
    names, log = netio.load_event_log(args.log)
    if list(names) != list(net.names):
        raise ValidationError("event log columns do not match the network's nodes")
    pinned = _parse_pins(net, args.pin)
    counts = count_transitions(net.E, log, pinned=set(pinned))
    fit = fit_probabilities(counts, smoothing=args.smoothing)

    def _clean(v: float):
        return None if math.isnan(v) else float(v)

    doc = {
        "schema_version": netio.SCHEMA_VERSION,
        "nodes": [
            {
                "name": net.names[i],
                "p_int": _clean(fit.p_int[i]),
                "p_ext": _clean(fit.p_ext[i]),
                "p_con": _clean(fit.p_con[i]),
            }
            for i in range(net.n)
        ],
    }
    path = _out_dir(args) / "fitted_params.json"
    path.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {path}")
    return 0


def _cmd_experiment(args) -> int:
    net = netio.load_network(args.network)
    plan, costs = netio.load_plan(args.plan, net)
    init = None
    if args.init_active:
        init = np.zeros(net.n)
        init[_parse_names(net, args.init_active)] = 1.0
        init = continuous_state(init)
    result = run_experiment(plan, net, init, costs)
    out = _out_dir(args)
    netio.write_experiment_csv(out / "results.csv", result, net.names)
    netio.write_experiment_summary(out / "summary.json", result)
    print(
        f"wrote {out / 'results.csv'} "
        f"({len(result.evaluations)} driver sets x {len(plan.phases)} phase(s))"
    )
    return 0


def _add_common(sub):
    sub.add_argument("--seed", type=int, default=0, help="random seed")
    sub.add_argument("--output-dir", default=None, help="directory for output files")
    sub.add_argument("--format", choices=("csv", "json"), default="csv",
                     help="stdout/report format")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risknet",
        description="Risk-network dynamics, estimation, and driver-set control.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("generate", help="generate a synthetic network file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mean-degree", type=float, required=True)
    p.add_argument("--degree-std", type=float, required=True)
    for key in ("p-int", "p-ext", "p-con"):
        p.add_argument(f"--{key}-range", type=float, nargs=2, metavar=("LO", "HI"),
                       default=None)
    _add_common(p)
    p.set_defaults(handler=_cmd_generate)

    p = sub.add_parser("simulate", help="run the discrete cascade, write events.csv")
    p.add_argument("network")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--variant", choices=("product", "additive"), default="product")
    p.add_argument("--init-active", default="", help="comma-separated node names")
    p.add_argument("--pin", action="append", default=[], metavar="NAME=0|1")
    _add_common(p)
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("steady-state", help="print the natural steady state")
    p.add_argument("network")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iter", type=int, default=10**6)
    p.add_argument("--damping", type=float, default=None)
    _add_common(p)
    p.set_defaults(handler=_cmd_steady_state)

    p = sub.add_parser("linearize", help="emit the Jacobian and controllability rank")
    p.add_argument("network")
    p.add_argument("--drivers", required=True, help="comma-separated node names")
    _add_common(p)
    p.set_defaults(handler=_cmd_linearize)

    p = sub.add_parser("control", help="one reactive or proactive control run")
    p.add_argument("network")
    p.add_argument("--drivers", required=True, help="comma-separated node names")
    p.add_argument("--phase", choices=("reactive", "proactive"), default="reactive")
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--init-active", default="",
                   help="reactive initial actives (default: steady state)")
    p.add_argument("--pin", action="append", default=[], metavar="NAME=0|1")
    _add_common(p)
    p.set_defaults(handler=_cmd_control)

    p = sub.add_parser("fit", help="fit transition probabilities from an event log")
    p.add_argument("log", help="event log CSV")
    p.add_argument("network", help="network file providing the topology")
    p.add_argument("--smoothing", type=float, default=0.0)
    p.add_argument("--pin", action="append", default=[], metavar="NAME=0|1")
    _add_common(p)
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser("experiment", help="run a driver-set experiment plan")
    p.add_argument("network")
    p.add_argument("plan")
    p.add_argument("--init-active", default="",
                   help="initial actives (default: steady state)")
    _add_common(p)
    p.set_defaults(handler=_cmd_experiment)

    return parser


def _emit_error(exc: Exception):
    doc = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(doc), file=sys.stderr)


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; map to the validation exit code
        return 0 if exc.code == 0 else 1
    if getattr(args, "handler", None) is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.handler(args)
    except NumericalError as exc:
        _emit_error(exc)
        return 2
    except (RiskNetError, OSError) as exc:
        _emit_error(exc)
        return 1


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
