"""Discrete stochastic cascade simulation on binary states.

Each step is synchronous: every node's next state is drawn from the current
step's states.  An inactive node activates internally or through active
in-neighbors; an active node persists with its continuation probability or
recovers.  Two activation variants are supported:

* ``product``: each active in-neighbor is an independent activation chance,
  so an inactive node i activates with probability
  ``1 - (1 - p_int_i) * prod_j_active (1 - E[j, i] * p_ext_i)``.
* ``additive``: activation probability ``min(1, p_int_i + p_ext_i * s_i)``
  where ``s_i`` is the weighted active in-neighbor mass.  This is the
  one-step mean of the continuous expected-value map, so it is the variant
  to use when cross-validating against :mod:`risknet.dynamics`.

The default is ``product``.  With at most one active in-neighbor per node
(and binary weights) the two variants coincide exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .model import BINARY, RiskNetwork, StateVector, binary_state

PRODUCT = "product"
ADDITIVE = "additive"

# Floor for per-neighbor survival factors so log(0) cannot poison the
# product accumulation; exp(log(1e-300)) underflows cleanly to 0.
_LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``pinned`` maps node index -> forced binary value; pinned nodes are
    overridden at every step after the initial state.
    """

    steps: int
    seed: int
    variant: str = PRODUCT
    pinned: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.steps < 1:
            raise ValidationError(f"steps must be >= 1, got {self.steps}")
        if self.seed < 0:
            raise ValidationError("seed must be a nonnegative integer")
        if self.variant not in (PRODUCT, ADDITIVE):
            raise ValidationError(f"unknown variant {self.variant!r}")
        for i, v in self.pinned.items():
            if v not in (0, 1):
                raise ValidationError(f"pinned value for node {i} must be 0 or 1")


@dataclass(frozen=True, eq=False)
class EventLog:
    """Binary state history; row k is the state at step k."""

    states: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.states)
        if s.ndim != 2:
            raise ValidationError("event log must be a 2-D array")
        if not np.all((s == 0) | (s == 1)):
            raise ValidationError("event log entries must be 0 or 1")
        frozen = s.astype(np.uint8)
        frozen.flags.writeable = False
        object.__setattr__(self, "states", frozen)

    @property
    def steps(self) -> int:
        return self.states.shape[0] - 1

    @property
    def n(self) -> int:
        return self.states.shape[1]


def _survival_logs(net: RiskNetwork) -> np.ndarray:
    """Matrix L with L[j, i] = log(1 - E[j, i] * p_ext[i]), floored."""
    return np.log(np.maximum(1.0 - net.E * net.p_ext[None, :], _LOG_FLOOR))


def activation_probability(
    net: RiskNetwork, state: np.ndarray, variant: str = PRODUCT
) -> np.ndarray:
    """Per-node probability that an inactive node activates this step.

    Only meaningful for entries where ``state`` is 0; returned for all nodes.
    """
    x = np.asarray(state, dtype=float)
    if variant == PRODUCT:
        survive = np.exp(x @ _survival_logs(net))
        return 1.0 - (1.0 - net.p_int) * survive
    return np.minimum(1.0, net.p_int + net.p_ext * net.inflow(x))


def _advance(
    net: RiskNetwork,
    x: np.ndarray,
    u: np.ndarray,
    config: SimConfig,
    pin_idx: np.ndarray,
    pin_val: np.ndarray,
) -> np.ndarray:
    """One synchronous transition; ``u`` is a vector of n uniform draws."""
    act = activation_probability(net, x, config.variant)
    nxt = np.where(x == 1.0, (u < net.p_con).astype(float), (u < act).astype(float))
    if pin_idx.size:
        nxt[pin_idx] = pin_val
    return nxt


def _pin_arrays(config: SimConfig, n: int):
    if not config.pinned:
        return np.empty(0, dtype=int), np.empty(0)
    idx = np.array(sorted(config.pinned), dtype=int)
    if idx[0] < 0 or idx[-1] >= n:
        bad = idx[-1] if idx[-1] >= n else idx[0]
        raise ValidationError(f"pinned index {bad} out of range for {n} nodes")
    val = np.array([float(config.pinned[i]) for i in idx])
    return idx, val


def step_discrete(
    net: RiskNetwork,
    state: StateVector,
    rng: np.random.Generator,
    config: SimConfig,
) -> StateVector:
    """Draw one synchronous transition of the cascade.

    Consumes exactly n uniforms from ``rng`` (one per node).
    """
    if state.mode != BINARY:
        raise ValidationError("step_discrete needs a binary state")
    pin_idx, pin_val = _pin_arrays(config, net.n)
    u = rng.random(net.n)
    return binary_state(_advance(net, state.values, u, config, pin_idx, pin_val))


def run_discrete(net: RiskNetwork, init: StateVector, config: SimConfig) -> EventLog:
    """Simulate ``config.steps`` transitions from ``init``.

    Deterministic given ``config.seed``.  Row 0 of the log is ``init``
    verbatim; pins apply from row 1 on.
    """
    if init.mode != BINARY:
        raise ValidationError("run_discrete needs a binary initial state")
    if init.n != net.n:
        raise ValidationError(
            f"initial state has {init.n} entries for a {net.n}-node network"
        )
    pin_idx, pin_val = _pin_arrays(config, net.n)
    rng = np.random.default_rng(config.seed)
    out = np.empty((config.steps + 1, net.n))
    out[0] = init.values
    x = init.values
    for k in range(config.steps):
        x = _advance(net, x, rng.random(net.n), config, pin_idx, pin_val)
        out[k + 1] = x
    return EventLog(out)


def trial_seed(seed: int, trial: int) -> int:
    """Seed for Monte Carlo trial ``trial``: ``seed + trial``.

    Trial 0 therefore replays the single run with the same config, and
    distinct trials get independent generator streams.
    """
    return seed + trial


def monte_carlo_mean(
    net: RiskNetwork, init: StateVector, config: SimConfig, trials: int
) -> np.ndarray:
    """Per-step empirical mean state over independent seeded trials.

    Returns a (steps+1, n) float array.  Trial t runs with seed
    ``trial_seed(config.seed, t)``.
    """
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    total = np.zeros((config.steps + 1, net.n))
    for t in range(trials):
        cfg = SimConfig(
            steps=config.steps,
            seed=trial_seed(config.seed, t),
            variant=config.variant,
            pinned=config.pinned,
        )
        total += run_discrete(net, init, cfg).states
    return total / trials
