"""File formats and synthetic network generation.

Networks and experiment plans travel as JSON documents that domain experts
can edit by hand; trajectories, event logs, and experiment tables travel as
CSV with the node-name header fixed to file order.  All writers use
canonical formatting (two-space indented JSON, shortest round-trip float
repr) so identical inputs produce byte-identical files.

Network schema (version 1)::

    {
      "schema_version": 1,
      "nodes": [{"name", "p_int", "p_ext", "p_con"}, ...],
      "edges": [{"from", "to", "weight"}, ...]   # "from" influences "to"
    }

Plan schema (version 1): the :class:`~risknet.experiments.ExperimentPlan`
fields with node names in place of indices, plus a cost specification
``{"kind": "identity"}``, ``{"kind": "diagonal", "q_f": [...], "q": [...],
"r": [...]}`` or ``{"kind": "dense", ...}`` with full matrices.
"""

from __future__ import annotations

import csv
import json

import networkx as nx
import numpy as np

from .cascade import EventLog
from .control import ControlRun
from .errors import (
    ParseError,
    TargetsUnreachable,
    UnknownSchemaVersion,
    ValidationError,
)
from .experiments import ExperimentPlan, ExperimentResult
from .model import CostMatrices, RiskNetwork, build_network, identity_costs

SCHEMA_VERSION = 1

#: Relative tolerance on degree targets accepted by the generator.
DEGREE_TOLERANCE = 0.10
GENERATOR_MAX_ATTEMPTS = 100

DEFAULT_PROB_RANGES = {
    "p_int": (0.01, 0.10),
    "p_ext": (0.005, 0.05),
    "p_con": (0.20, 0.80),
}


# ---------------------------------------------------------------------------
# canonical serialization helpers

def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _fmt(x) -> str:
    """Shortest exact decimal repr for floats; plain str otherwise."""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


# ---------------------------------------------------------------------------
# network files

def network_to_dict(net: RiskNetwork) -> dict:
    nodes = [
        {
            "name": net.names[i],
            "p_int": float(net.p_int[i]),
            "p_ext": float(net.p_ext[i]),
            "p_con": float(net.p_con[i]),
        }
        for i in range(net.n)
    ]
    edges = [
        {"from": net.names[i], "to": net.names[j], "weight": float(net.E[i, j])}
        for i in range(net.n)
        for j in range(net.n)
        if net.E[i, j] != 0.0
    ]
    return {"schema_version": SCHEMA_VERSION, "nodes": nodes, "edges": edges}


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from None


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ParseError(f"{where}: missing field {key!r}")
    return doc[key]


def _check_version(doc: dict, where: str):
    version = _require(doc, "schema_version", where)
    if version != SCHEMA_VERSION:
        raise UnknownSchemaVersion(f"{where}: schema_version {version!r} not supported")


def network_from_dict(doc: dict, where: str = "network") -> RiskNetwork:
    _check_version(doc, where)
    nodes = _require(doc, "nodes", where)
    names, p_int, p_ext, p_con = [], [], [], []
    for k, node in enumerate(nodes):
        names.append(str(_require(node, "name", f"{where}: nodes[{k}]")))
        p_int.append(_require(node, "p_int", f"{where}: nodes[{k}]"))
        p_ext.append(_require(node, "p_ext", f"{where}: nodes[{k}]"))
        p_con.append(_require(node, "p_con", f"{where}: nodes[{k}]"))
    index = {name: i for i, name in enumerate(names)}
    n = len(names)
    E = np.zeros((n, n))
    seen = set()
    for k, edge in enumerate(doc.get("edges", [])):
        src = _require(edge, "from", f"{where}: edges[{k}]")
        dst = _require(edge, "to", f"{where}: edges[{k}]")
        weight = _require(edge, "weight", f"{where}: edges[{k}]")
        if src not in index or dst not in index:
            raise ValidationError(
                f"{where}: edge {src!r} -> {dst!r} references an unknown node"
            )
        if (src, dst) in seen:
            raise ValidationError(f"{where}: duplicate edge {src!r} -> {dst!r}")
        seen.add((src, dst))
        E[index[src], index[dst]] = weight
    return build_network(names, p_int, p_ext, p_con, E)


def load_network(path) -> RiskNetwork:
    """Read and validate a network file."""
    return network_from_dict(_load_json(path), where=str(path))


def save_network(path, net: RiskNetwork):
    """Write a network file in canonical formatting (save/load round-trips
    are byte-stable)."""
    with open(path, "w") as fh:
        fh.write(_dump_json(network_to_dict(net)))


# ---------------------------------------------------------------------------
# event logs

def write_event_log(path, log: EventLog, names):
    if len(names) != log.n:
        raise ValidationError("header length does not match the log")
    _write_csv(path, list(names), [[int(v) for v in row] for row in log.states])


def load_matrix_csv(path) -> tuple[list, np.ndarray]:
    """Read any toolkit-emitted numeric CSV back as (header, float matrix)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        rows = []
        for k, row in enumerate(reader):
            if len(row) != len(header):
                raise ParseError(f"{path}: row {k + 1} has {len(row)} fields")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ParseError(f"{path}: row {k + 1}: {exc}") from None
    return header, np.array(rows) if rows else np.empty((0, len(header)))


def load_event_log(path) -> tuple[list, EventLog]:
    """Read an event log CSV; returns (node names, log)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        rows = []
        for k, row in enumerate(reader):
            if len(row) != len(header):
                raise ParseError(f"{path}: row {k + 1} has {len(row)} fields")
            try:
                rows.append([int(v) for v in row])
            except ValueError as exc:
                raise ParseError(f"{path}: row {k + 1}: {exc}") from None
    if not rows:
        raise ParseError(f"{path}: no state rows")
    return header, EventLog(np.array(rows))


# ---------------------------------------------------------------------------
# control runs

def control_run_to_dict(run: ControlRun) -> dict:
    return {
        "state_cost": float(run.state_cost),
        "control_cost": float(run.control_cost),
        "total_cost": float(run.total_cost),
        "saturation_count": int(run.saturation_count),
    }


def write_control_run(out_dir, run: ControlRun, names, prefix: str = "control"):
    """Write <prefix>.json (costs) plus trajectory and signal CSVs."""
    import pathlib

    out = pathlib.Path(out_dir)
    (out / f"{prefix}.json").write_text(_dump_json(control_run_to_dict(run)))
    _write_csv(out / f"{prefix}_trajectory.csv", list(names),
               [[float(v) for v in row] for row in run.states])
    _write_csv(out / f"{prefix}_signals.csv", list(names),
               [[float(v) for v in row] for row in run.signals])


# ---------------------------------------------------------------------------
# experiment plans and results

_COST_KINDS = ("identity", "diagonal", "dense")


def costs_from_spec(spec: dict, n: int) -> CostMatrices:
    kind = _require(spec, "kind", "costs")
    if kind not in _COST_KINDS:
        raise ParseError(f"costs: unknown kind {kind!r}")
    if kind == "identity":
        return identity_costs(n)
    q_f = np.asarray(_require(spec, "q_f", "costs"), dtype=float)
    q = np.asarray(_require(spec, "q", "costs"), dtype=float)
    r = np.asarray(_require(spec, "r", "costs"), dtype=float)
    if kind == "diagonal":
        return CostMatrices(Q_f=np.diag(q_f), Q=np.diag(q), R=np.diag(r))
    return CostMatrices(Q_f=q_f, Q=q, R=r)


def plan_from_dict(doc: dict, net: RiskNetwork, where: str = "plan"):
    """Resolve a plan document against a network; returns
    (ExperimentPlan, CostMatrices)."""
    _check_version(doc, where)
    pinned = {
        net.index_of(name): int(v) for name, v in doc.get("pinned", {}).items()
    }
    baselines = {
        str(label): tuple(net.index_of(name) for name in names)
        for label, names in doc.get("baseline_sets", {}).items()
    }
    groups = tuple((v, c) for v, c in doc.get("groups", []))
    plan = ExperimentPlan(
        driver_size=_require(doc, "driver_size", where),
        num_sets=doc.get("num_sets", 1),
        seed=_require(doc, "seed", where),
        pinned=pinned,
        stratify_by=doc.get("stratify_by", "none"),
        groups=groups,
        phase=doc.get("phase", "reactive"),
        steps_reactive=doc.get("steps_reactive", 500),
        steps_proactive=doc.get("steps_proactive", 50),
        baseline_sets=baselines,
        top_fraction=doc.get("top_fraction", 0.25),
    )
    if plan.driver_size > net.n - len(pinned):
        raise ValidationError(
            f"{where}: driver_size {plan.driver_size} exceeds the "
            f"{net.n - len(pinned)} non-pinned nodes"
        )
    costs = costs_from_spec(doc.get("costs", {"kind": "identity"}), net.n)
    return plan, costs


def load_plan(path, net: RiskNetwork):
    return plan_from_dict(_load_json(path), net, where=str(path))


EXPERIMENT_HEADER = (
    "label", "kind", "phase", "stratum", "initially_active", "steady_peak",
    "drivers", "state_cost", "control_cost", "total_cost",
    "saturation_count", "rank", "error",
)


def experiment_rows(result: ExperimentResult, names) -> list:
    rows = []
    for ev in result.evaluations:
        drivers = ";".join(names[i] for i in ev.indices)
        for phase in result.plan.phases:
            out = ev.outcomes[phase]
            rows.append([
                ev.label,
                ev.kind,
                phase,
                "" if ev.stratum is None else ev.stratum,
                ev.initially_active,
                ev.steady_peak,
                drivers,
                float(out.state_cost),
                float(out.control_cost),
                float(out.total_cost),
                out.saturation_count,
                "" if out.rank == 0 else out.rank,
                out.error,
            ])
    return rows


def write_experiment_csv(path, result: ExperimentResult, names):
    """One row per (driver set, phase); columns per EXPERIMENT_HEADER."""
    _write_csv(path, EXPERIMENT_HEADER, experiment_rows(result, names))


def experiment_summary(result: ExperimentResult) -> dict:
    strata: dict = {}
    for (phase, value), quartiles in sorted(result.stratum_summary.items()):
        strata.setdefault(phase, {})[str(value)] = quartiles
    baselines: dict = {}
    for ev in result.evaluations:
        if ev.kind != "baseline":
            continue
        baselines[ev.label] = {
            phase: {
                "total_cost": float(ev.outcomes[phase].total_cost),
                "rank": ev.outcomes[phase].rank,
                "of": sum(
                    1 for other in result.evaluations
                    if not other.outcomes[phase].error
                ),
            }
            for phase in result.plan.phases
        }
    return {
        "num_sets": result.plan.num_sets,
        "driver_size": result.plan.driver_size,
        "phases": list(result.plan.phases),
        "strata": strata,
        "baselines": baselines,
    }


def write_experiment_summary(path, result: ExperimentResult):
    with open(path, "w") as fh:
        fh.write(_dump_json(experiment_summary(result)))


# ---------------------------------------------------------------------------
# synthetic generation

def _draw_degree_sequence(rng, n, mean, std) -> list:
    d = np.clip(np.rint(rng.normal(mean, std, size=n)), 0, n - 1).astype(int)
    if d.sum() % 2 == 1:
        # fix parity with the smallest adjustment that stays in range
        i = int(np.argmin(d)) if d.min() < n - 1 else int(np.argmax(d))
        d[i] += 1 if d[i] < n - 1 else -1
    return [int(v) for v in d]


def generate_synthetic(
    n: int,
    target_mean_degree: float,
    target_degree_std: float,
    prob_ranges: dict | None = None,
    seed: int = 0,
    max_attempts: int = GENERATOR_MAX_ATTEMPTS,
) -> RiskNetwork:
    """Seeded random network hitting prescribed degree statistics.

    Draws a degree sequence from N(mean, std), realizes it exactly with a
    Havel-Hakimi construction randomized by seeded edge swaps, and accepts
    when the realized mean/std fall within 10% of the targets (up to
    ``max_attempts`` redraws).  Every undirected edge becomes a symmetric
    pair of weight-1 directed links; node probabilities are drawn uniformly
    from ``prob_ranges`` (keys p_int, p_ext, p_con).

    Raises
    ------
    TargetsUnreachable
        No attempt met both degree targets.
    """
    if not 0 < target_mean_degree < n:
        raise ValidationError("target_mean_degree must be in (0, n)")
    if target_degree_std < 0:
        raise ValidationError("target_degree_std must be >= 0")
    ranges = dict(DEFAULT_PROB_RANGES)
    if prob_ranges:
        ranges.update(prob_ranges)

    rng = np.random.default_rng(seed)
    mean_tol = DEGREE_TOLERANCE * target_mean_degree
    # A zero-std target demands an exactly regular realization.
    std_tol = DEGREE_TOLERANCE * target_degree_std

    last = None
    graph = None
    for _ in range(max_attempts):
        d = _draw_degree_sequence(rng, n, target_mean_degree, target_degree_std)
        swap_seed = int(rng.integers(2**32))
        if not nx.is_graphical(d):
            continue
        G = nx.havel_hakimi_graph(d)
        m = G.number_of_edges()
        if m >= 2:
            try:
                nx.double_edge_swap(G, nswap=4 * m, max_tries=40 * m + 100, seed=swap_seed)
            except nx.NetworkXException:
                pass  # saturated graphs (e.g. complete) admit no swaps
        degrees = np.array([deg for _, deg in G.degree()], dtype=float)
        last = (float(degrees.mean()), float(degrees.std()))
        if abs(last[0] - target_mean_degree) <= mean_tol and abs(last[1] - target_degree_std) <= std_tol:
            graph = G
            break
    if graph is None:
        raise TargetsUnreachable(
            f"degree targets (mean {target_mean_degree}, std {target_degree_std}) "
            f"not met in {max_attempts} attempts; last realization {last}"
        )

    E = np.zeros((n, n))
    for i, j in graph.edges():
        E[i, j] = 1.0
        E[j, i] = 1.0
    width = len(str(n - 1))
    names = [f"risk_{i:0{width}d}" for i in range(n)]
    p_int = rng.uniform(*ranges["p_int"], size=n)
    p_ext = rng.uniform(*ranges["p_ext"], size=n)
    p_con = rng.uniform(*ranges["p_con"], size=n)
    return build_network(names, p_int, p_ext, p_con, E)
