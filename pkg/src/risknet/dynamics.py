"""Deterministic expected-value dynamics, steady state, and linearization.

The state update splits into an internal part
``F_i = p_int_i * (1 - x_i) + p_con_i * x_i`` and a network part
``G_i = p_ext_i * s_i * (1 - x_i)`` with ``s_i`` the weighted active
in-neighbor mass.  One step is ``clamp_[0,1](F + G + B u)``; clamping is
reported per node so callers can detect boundary operation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, SaturatedPoint, ValidationError
from .model import CONTINUOUS, DriverSet, RiskNetwork, StateVector, continuous_state

#: Default fixed-point settings for the steady-state solver.
STEADY_STATE_TOL = 1e-12
STEADY_STATE_MAX_ITER = 10**6


def unclamped_step(
    net: RiskNetwork,
    x: np.ndarray,
    u: np.ndarray | None = None,
    driver: DriverSet | None = None,
) -> np.ndarray:
    """Raw update ``F + G + B u`` before projection onto [0, 1]."""
    x = np.asarray(x, dtype=float)
    internal = net.p_int * (1.0 - x) + net.p_con * x
    network = net.p_ext * net.inflow(x) * (1.0 - x)
    raw = internal + network
    if u is not None:
        u = np.asarray(u, dtype=float)
        if u.shape != (net.n,):
            raise ValidationError(f"control vector has shape {u.shape}, expected ({net.n},)")
        if driver is not None:
            raw = raw + driver.B @ u
        else:
            raw = raw + u
    return raw


def step_continuous(
    net: RiskNetwork,
    x: StateVector,
    u: np.ndarray | None = None,
    driver: DriverSet | None = None,
) -> tuple[StateVector, np.ndarray]:
    """One step of the expected-value map.

    ``u`` may be any real vector (negative entries suppress activity); when
    ``driver`` is given only driven entries of ``u`` act.  Returns the
    clamped next state together with a boolean mask of nodes whose raw
    update left [0, 1].
    """
    if x.mode != CONTINUOUS:
        raise ValidationError("step_continuous needs a continuous state")
    raw = unclamped_step(net, x.values, u, driver)
    saturated = (raw < 0.0) | (raw > 1.0)
    return continuous_state(np.clip(raw, 0.0, 1.0)), saturated


def find_steady_state(
    net: RiskNetwork,
    x0: StateVector | None = None,
    tol: float = STEADY_STATE_TOL,
    max_iter: int = STEADY_STATE_MAX_ITER,
    damping: float | None = None,
) -> StateVector:
    """Natural steady state: fixed point of the uncontrolled map.

    Plain fixed-point iteration from ``x0`` (all-zeros by default); the
    returned point satisfies ``max |step(x) - x| <= tol``.  Set ``damping``
    (e.g. 0.5) to average each update with the current iterate, which tames
    oscillatory dynamics.  No uniqueness is claimed: the result is the fixed
    point reached from ``x0``.

    Raises
    ------
    NoConvergence
        If ``max_iter`` iterations pass without meeting ``tol``; carries the
        last residual.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    x = np.zeros(net.n) if x0 is None else np.asarray(x0.values, dtype=float)
    residual = np.inf
    for _ in range(max_iter):
        fx = np.clip(unclamped_step(net, x), 0.0, 1.0)
        residual = float(np.max(np.abs(fx - x)))
        if residual <= tol:
            return continuous_state(x)
        x = fx if damping is None else (1.0 - damping) * x + damping * fx
    raise NoConvergence(max_iter, residual)


def jacobian(net: RiskNetwork, x: StateVector) -> np.ndarray:
    """Analytic Jacobian of the unclamped map at ``x``.

    ``A[i, j] = d(next x_i)/d(x_j)``:

    * diagonal: ``p_con_i - p_int_i - p_ext_i * s_i``
    * off-diagonal: ``p_ext_i * E[j, i] * (1 - x_i)``

    Raises
    ------
    SaturatedPoint
        The raw map leaves [0, 1] at ``x``, where the clamped dynamics are
        not differentiable by this formula.
    """
    raw = unclamped_step(net, x.values)
    if np.any((raw < 0.0) | (raw > 1.0)):
        i = int(np.argmax((raw < 0.0) | (raw > 1.0)))
        raise SaturatedPoint(f"update map saturates at node {i} (raw value {raw[i]:.6g})")
    s = net.inflow(x.values)
    A = net.E.T * (net.p_ext * (1.0 - x.values))[:, None]
    np.fill_diagonal(A, net.p_con - net.p_int - net.p_ext * s)
    return A


@dataclass(frozen=True, eq=False)
class LinearizedSystem:
    """Local linear model ``dx(k+1) ~ A dx(k) + B du(k)`` about ``x_lin``."""

    A: np.ndarray
    x_lin: StateVector
    driver: DriverSet

    def __post_init__(self):
        n = self.x_lin.n
        if self.A.shape != (n, n):
            raise ValidationError(f"A has shape {self.A.shape}, expected ({n}, {n})")
        if self.driver.n != n:
            raise ValidationError("driver set sized for a different network")

    @property
    def n(self) -> int:
        return self.x_lin.n


def linearize(net: RiskNetwork, driver: DriverSet, x_lin: StateVector) -> LinearizedSystem:
    """Package the Jacobian at ``x_lin`` (typically the natural steady
    state) with the driver set's input matrix."""
    return LinearizedSystem(A=jacobian(net, x_lin), x_lin=x_lin, driver=driver)


def controllability_rank(sys: LinearizedSystem) -> int:
    """Rank of the reachability matrix ``[B, AB, ..., A^(n-1) B]``.

    Computed by SVD with threshold ``n * max_singular_value * eps`` (eps =
    double-precision machine epsilon).
    """
    n = sys.n
    S = sys.driver.selection
    blocks = []
    block = S
    for _ in range(n):
        blocks.append(block)
        block = sys.A @ block
    kalman = np.hstack(blocks)
    svals = np.linalg.svd(kalman, compute_uv=False)
    if svals.size == 0 or svals[0] == 0.0:
        return 0
    tol = n * svals[0] * np.finfo(float).eps
    return int(np.count_nonzero(svals > tol))
