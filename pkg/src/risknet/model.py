"""Core domain types: networks, states, driver sets, and cost matrices.

Edge direction convention: ``E[i, j]`` is the influence node ``i`` exerts on
node ``j``.  The weighted activity arriving at each node is therefore
``E.T @ x``; :func:`inflow` is the single place that owns this transpose.

All types are immutable after construction and safe to share across
concurrent readers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ProbabilityOutOfRange, SelfLoop, ValidationError

#: Tolerance for symmetry and eigenvalue checks on cost matrices.
SYMMETRY_TOL = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    """Copy an array and mark it read-only."""
    out = np.array(a, dtype=float, copy=True)
    out.flags.writeable = False
    return out


def inflow(E: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Weighted activity each node receives from its in-neighbors.

    Returns the vector with entries ``sum_j E[j, i] * x[j]``.
    """
    return E.T @ x


@dataclass(frozen=True, eq=False)
class RiskNetwork:
    """A weighted directed risk network with per-node transition probabilities.

    Attributes
    ----------
    names : tuple of str
        Unique node labels, index order fixed.
    p_int : ndarray
        Probability an inactive node activates spontaneously in one step.
    p_ext : ndarray
        Probability an active neighbor activates an inactive node in one step.
    p_con : ndarray
        Probability an active node stays active (recovery prob is 1 - p_con).
    E : ndarray
        n x n adjacency with entries in [0, 1]; ``E[i, j]`` is the influence
        of node i on node j.  Weight 1 means a certain link, 0 no link.
        The diagonal is zero: self-activation is carried by ``p_int`` alone.
    """

    names: tuple
    p_int: np.ndarray
    p_ext: np.ndarray
    p_con: np.ndarray
    E: np.ndarray

    @property
    def n(self) -> int:
        return len(self.names)

    def inflow(self, x: np.ndarray) -> np.ndarray:
        """Weighted in-neighbor activity at every node, ``(E.T @ x)``."""
        return inflow(self.E, x)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValidationError(f"unknown node name {name!r}") from None


def _check_probability_vector(label: str, v: np.ndarray, n: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (n,):
        raise DimensionMismatch(f"{label} has shape {v.shape}, expected ({n},)")
    bad = np.flatnonzero((v < 0.0) | (v > 1.0) | ~np.isfinite(v))
    if bad.size:
        i = int(bad[0])
        raise ProbabilityOutOfRange(f"{label}[{i}] = {v[i]} is outside [0, 1]")
    return v


def build_network(names, p_int, p_ext, p_con, E) -> RiskNetwork:
    """Validated constructor for :class:`RiskNetwork`.

    Raises
    ------
    DimensionMismatch
        Vector lengths or the adjacency shape disagree.
    ProbabilityOutOfRange
        Any probability or edge weight outside [0, 1]; the message names
        the offending entry.
    SelfLoop
        Nonzero diagonal entry in ``E``.
    ValidationError
        Duplicate node names.
    """
    names = tuple(str(s) for s in names)
    n = len(names)
    if n == 0:
        raise ValidationError("a network needs at least one node")
    if len(set(names)) != n:
        seen = set()
        dup = next(s for s in names if s in seen or seen.add(s))
        raise ValidationError(f"duplicate node name {dup!r}")

    p_int = _check_probability_vector("p_int", p_int, n)
    p_ext = _check_probability_vector("p_ext", p_ext, n)
    p_con = _check_probability_vector("p_con", p_con, n)

    E = np.asarray(E, dtype=float)
    if E.shape != (n, n):
        raise DimensionMismatch(f"E has shape {E.shape}, expected ({n}, {n})")
    if np.any((E < 0.0) | (E > 1.0) | ~np.isfinite(E)):
        i, j = np.argwhere((E < 0.0) | (E > 1.0) | ~np.isfinite(E))[0]
        raise ProbabilityOutOfRange(f"E[{i}, {j}] = {E[i, j]} is outside [0, 1]")
    diag = np.flatnonzero(np.diag(E))
    if diag.size:
        raise SelfLoop(f"E[{diag[0]}, {diag[0]}] must be 0 (no self-loops)")

    return RiskNetwork(
        names=names,
        p_int=_frozen(p_int),
        p_ext=_frozen(p_ext),
        p_con=_frozen(p_con),
        E=_frozen(E),
    )


def degree_stats(net: RiskNetwork) -> tuple:
    """Mean and population std of vertex degrees over the undirected support.

    An edge present in either direction counts once per incident node.
    """
    support = (net.E != 0) | (net.E.T != 0)
    degrees = support.sum(axis=1)
    return float(degrees.mean()), float(degrees.std())


BINARY = "binary"
CONTINUOUS = "continuous"


@dataclass(frozen=True, eq=False)
class StateVector:
    """Per-node activity.  Binary for the stochastic cascade, continuous
    (expected values in [0, 1]) for the deterministic dynamics."""

    values: np.ndarray
    mode: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise DimensionMismatch(f"state must be a vector, got shape {v.shape}")
        if self.mode == BINARY:
            if not np.all((v == 0.0) | (v == 1.0)):
                raise ValidationError("binary state entries must be 0 or 1")
        elif self.mode == CONTINUOUS:
            if np.any((v < 0.0) | (v > 1.0) | ~np.isfinite(v)):
                raise ValidationError("continuous state entries must lie in [0, 1]")
        else:
            raise ValidationError(f"unknown state mode {self.mode!r}")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def n(self) -> int:
        return self.values.shape[0]


def binary_state(values) -> StateVector:
    return StateVector(np.asarray(values, dtype=float), BINARY)


def continuous_state(values) -> StateVector:
    return StateVector(np.asarray(values, dtype=float), CONTINUOUS)


def zeros_state(n: int, mode: str = CONTINUOUS) -> StateVector:
    return StateVector(np.zeros(n), mode)


@dataclass(frozen=True, eq=False)
class DriverSet:
    """The nodes receiving direct control signals.

    ``indices`` is kept sorted; it fixes the column order of the reduced
    input matrix and of gain matrices downstream.
    """

    indices: tuple
    n: int

    def __post_init__(self):
        idx = tuple(sorted(set(int(i) for i in self.indices)))
        if not idx:
            raise ValidationError("driver set must be nonempty")
        if idx[0] < 0 or idx[-1] >= self.n:
            raise ValidationError(
                f"driver indices {idx} out of range for {self.n} nodes"
            )
        object.__setattr__(self, "indices", idx)

    @property
    def size(self) -> int:
        return len(self.indices)

    @property
    def B(self) -> np.ndarray:
        """n x n diagonal binary matrix with ones on the driven nodes."""
        B = np.zeros((self.n, self.n))
        B[self.indices, self.indices] = 1.0
        return B

    @property
    def selection(self) -> np.ndarray:
        """n x m column selection: identity columns of the driven nodes."""
        S = np.zeros((self.n, self.size))
        S[self.indices, np.arange(self.size)] = 1.0
        return S

    def embed(self, reduced: np.ndarray) -> np.ndarray:
        """Place an m-vector of driver signals into a full-length vector."""
        full = np.zeros(self.n)
        full[list(self.indices)] = reduced
        return full


def _check_symmetric_matrix(label: str, M, n: int) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.shape != (n, n):
        raise DimensionMismatch(f"{label} has shape {M.shape}, expected ({n}, {n})")
    if np.max(np.abs(M - M.T)) > SYMMETRY_TOL:
        raise ValidationError(f"{label} is not symmetric within {SYMMETRY_TOL}")
    return M


@dataclass(frozen=True, eq=False)
class CostMatrices:
    """Quadratic cost weights: ``Q_f`` on the final state, ``Q`` on
    intermediate states, ``R`` on the control signal.

    ``Q_f`` and ``Q`` must be positive semidefinite, ``R`` positive definite.
    """

    Q_f: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.Q_f).shape[0]
        Q_f = _check_symmetric_matrix("Q_f", self.Q_f, n)
        Q = _check_symmetric_matrix("Q", self.Q, n)
        R = _check_symmetric_matrix("R", self.R, n)
        for label, M in (("Q_f", Q_f), ("Q", Q)):
            if np.linalg.eigvalsh(M).min() < -SYMMETRY_TOL:
                raise ValidationError(f"{label} must be positive semidefinite")
        if np.linalg.eigvalsh(R).min() <= 0.0:
            raise ValidationError("R must be positive definite")
        object.__setattr__(self, "Q_f", _frozen(Q_f))
        object.__setattr__(self, "Q", _frozen(Q))
        object.__setattr__(self, "R", _frozen(R))

    @property
    def n(self) -> int:
        return self.Q.shape[0]


def identity_costs(n: int) -> CostMatrices:
    """Unit weights on every state and signal channel."""
    eye = np.eye(n)
    return CostMatrices(Q_f=eye, Q=eye, R=eye)
