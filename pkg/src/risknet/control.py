"""Finite-horizon optimal control of the risk dynamics.

The objective charges both risk activity and control effort:

    J = x(tau)' Q_f x(tau) + sum_{k<tau} [ x(k)' Q x(k) + u(k)' R u(k) ]

Gains come from the standard backward value recursion on the linear model
taken at the natural steady state, restricted to the driven coordinates.
Two control phases are provided:

* reactive: feedback ``u(k) = -K(k) (x(k) - target)`` rolled out on the
  nonlinear map, driving ongoing activity toward inactivity;
* proactive: starting at inactivity, each driven node's expected activation
  inflow is cancelled exactly, holding it down while undriven nodes evolve
  freely.

Costs are always measured on the realized nonlinear trajectory, on absolute
states (deviation from the all-inactive target), not on deviations from the
linearization point: regulating the deviation variable would stabilize the
very steady state the controller is meant to avoid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, SingularInnerMatrix, ValidationError
from .model import (
    CONTINUOUS,
    CostMatrices,
    DriverSet,
    RiskNetwork,
    StateVector,
    zeros_state,
)
from .dynamics import LinearizedSystem, find_steady_state, linearize, step_continuous


@dataclass(frozen=True, eq=False)
class ControlProblem:
    """A regulation problem: linear model, costs, horizon, target state."""

    sys: LinearizedSystem
    costs: CostMatrices
    horizon: int
    target: StateVector | None = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ValidationError(f"horizon must be >= 1, got {self.horizon}")
        if self.costs.n != self.sys.n:
            raise DimensionMismatch("cost matrices sized for a different network")
        target = self.target if self.target is not None else zeros_state(self.sys.n)
        if target.mode != CONTINUOUS or target.n != self.sys.n:
            raise ValidationError("target must be a continuous state of matching length")
        object.__setattr__(self, "target", target)


@dataclass(frozen=True, eq=False)
class GainSchedule:
    """Time-varying gains K(0..tau-1) (each m x n, rows = driven nodes in
    index order) and value matrices P(0..tau)."""

    K: tuple
    P: tuple


@dataclass(frozen=True, eq=False)
class ControlRun:
    """A completed rollout: trajectory, signals, and decomposed costs.

    ``signals`` rows are full-length with zeros off the driven nodes;
    ``total_cost = state_cost + control_cost`` exactly by construction.
    ``saturation_count`` totals the node-steps where the raw update left
    [0, 1] and was clamped.
    """

    states: np.ndarray
    signals: np.ndarray
    state_cost: float
    control_cost: float
    total_cost: float
    saturation_count: int


def _solve_gain(inner: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``inner @ K = rhs`` for K, with a definiteness guard."""
    try:
        np.linalg.cholesky(inner)
        return np.linalg.solve(inner, rhs)
    except np.linalg.LinAlgError:
        raise SingularInnerMatrix(
            "signal-cost block plus value quadratic is numerically singular; "
            "check the conditioning of R"
        ) from None


def riccati_schedule(prob: ControlProblem) -> GainSchedule:
    """Backward value recursion for the finite-horizon regulator.

    With S the driver column selection, Rd the driver block of R and
    P(tau) = Q_f, for k = tau-1 .. 0:

        K(k) = (Rd + S'P(k+1)S)^-1 S'P(k+1)A
        P(k) = Q + A'P(k+1)A - A'P(k+1)S K(k)

    The optimal driven signal is ``u(k) = -K(k) (x(k) - target)``.
    """
    A = prob.sys.A
    d = list(prob.sys.driver.indices)
    Rd = prob.costs.R[np.ix_(d, d)]
    Q, Q_f = prob.costs.Q, prob.costs.Q_f
    tau = prob.horizon

    P = [None] * (tau + 1)
    K = [None] * tau
    P[tau] = Q_f
    for k in range(tau - 1, -1, -1):
        Pn = P[k + 1]
        inner = Rd + Pn[np.ix_(d, d)]
        K[k] = _solve_gain(inner, Pn[d, :] @ A)
        Pk = Q + A.T @ (Pn @ A) - (A.T @ Pn[:, d]) @ K[k]
        P[k] = 0.5 * (Pk + Pk.T)
    return GainSchedule(K=tuple(K), P=tuple(P))


def control_energy(signals: np.ndarray) -> float:
    """Sum of squared Euclidean norms of the per-step signals."""
    return float(np.sum(np.asarray(signals, dtype=float) ** 2))


def evaluate_cost(
    run_states: np.ndarray, run_signals: np.ndarray, costs: CostMatrices
) -> tuple[float, float, float]:
    """Decompose a trajectory's cost into (state, control, total).

    ``run_states`` must have exactly one more row than ``run_signals``.
    The final state is charged with Q_f, every earlier state (including the
    initial one) with Q, and every signal row with R.
    """
    X = np.asarray(run_states, dtype=float)
    U = np.asarray(run_signals, dtype=float)
    if X.ndim != 2 or U.ndim != 2 or X.shape[0] != U.shape[0] + 1:
        raise DimensionMismatch(
            f"states {X.shape} must have one more row than signals {U.shape}"
        )
    if X.shape[1] != costs.n or U.shape[1] != costs.n:
        raise DimensionMismatch("state/signal width does not match cost matrices")
    body = X[:-1]
    state_cost = float(X[-1] @ costs.Q_f @ X[-1] + np.sum((body @ costs.Q) * body))
    control_cost = float(np.sum((U @ costs.R) * U))
    return state_cost, control_cost, state_cost + control_cost


def _check_driver_pin_overlap(driver: DriverSet, pinned: dict | None):
    if pinned:
        overlap = set(driver.indices) & set(pinned)
        if overlap:
            raise ValidationError(
                f"pinned nodes cannot be driven: {sorted(overlap)}"
            )


def _finish_run(states, signals, costs, saturation) -> ControlRun:
    state_cost, control_cost, total = evaluate_cost(states, signals, costs)
    return ControlRun(
        states=states,
        signals=signals,
        state_cost=state_cost,
        control_cost=control_cost,
        total_cost=total,
        saturation_count=int(saturation),
    )


def run_reactive(
    net: RiskNetwork,
    driver: DriverSet,
    costs: CostMatrices,
    init: StateVector,
    steps: int,
    pinned: dict | None = None,
) -> ControlRun:
    """Finite-horizon feedback run from ongoing activity toward inactivity.

    Linearizes at the natural steady state, builds the gain schedule for
    ``steps`` with an all-inactive target, then rolls the nonlinear map
    forward under ``u(k) = -K(k) x(k)`` on the driven nodes.  Pinned nodes
    are forced to their value at every step (including the initial state)
    and must not appear in the driver set.
    """
    if steps < 1:
        raise ValidationError(f"steps must be >= 1, got {steps}")
    if init.mode != CONTINUOUS or init.n != net.n:
        raise ValidationError("init must be a continuous state of matching length")
    _check_driver_pin_overlap(driver, pinned)

    x_s = find_steady_state(net)
    sys = linearize(net, driver, x_s)
    prob = ControlProblem(sys=sys, costs=costs, horizon=steps)
    schedule = riccati_schedule(prob)
    return rollout_feedback(net, driver, costs, init, schedule, prob.target, pinned)


def rollout_feedback(
    net: RiskNetwork,
    driver: DriverSet,
    costs: CostMatrices,
    init: StateVector,
    schedule: GainSchedule,
    target: StateVector,
    pinned: dict | None = None,
) -> ControlRun:
    """Roll the nonlinear map under a precomputed gain schedule."""
    steps = len(schedule.K)
    pin_idx = np.array(sorted(pinned), dtype=int) if pinned else np.empty(0, dtype=int)
    pin_val = np.array([float(pinned[i]) for i in pin_idx]) if pinned else np.empty(0)

    states = np.empty((steps + 1, net.n))
    signals = np.zeros((steps, net.n))
    x = init.values.copy()
    if pin_idx.size:
        x[pin_idx] = pin_val
    states[0] = x
    saturation = 0
    for k in range(steps):
        reduced = -schedule.K[k] @ (x - target.values)
        u = driver.embed(reduced)
        signals[k] = u
        nxt, sat = step_continuous(net, StateVector(x, CONTINUOUS), u, driver)
        saturation += int(sat.sum())
        x = nxt.values.copy()
        if pin_idx.size:
            x[pin_idx] = pin_val
        states[k + 1] = x
    return _finish_run(states, signals, costs, saturation)


def run_proactive(
    net: RiskNetwork,
    driver: DriverSet,
    costs: CostMatrices,
    steps: int,
) -> ControlRun:
    """Hold the network near inactivity by cancelling driven activation.

    Starts at the all-inactive state (the reactive phase's goal).  Each
    step, every driven node i receives
    ``u_i = -(p_int_i + p_ext_i * s_i) * (1 - x_i)``, exactly cancelling its
    expected activation inflow; undriven nodes evolve freely.
    """
    if steps < 1:
        raise ValidationError(f"steps must be >= 1, got {steps}")
    d = list(driver.indices)
    states = np.empty((steps + 1, net.n))
    signals = np.zeros((steps, net.n))
    x = np.zeros(net.n)
    states[0] = x
    saturation = 0
    for k in range(steps):
        s = net.inflow(x)
        u = np.zeros(net.n)
        u[d] = -(net.p_int[d] + net.p_ext[d] * s[d]) * (1.0 - x[d])
        signals[k] = u
        nxt, sat = step_continuous(net, StateVector(x, CONTINUOUS), u, driver)
        saturation += int(sat.sum())
        x = nxt.values.copy()
        states[k + 1] = x
    return _finish_run(states, signals, costs, saturation)
