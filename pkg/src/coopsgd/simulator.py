"""Decentralized periodic-averaging SGD, the ``A(tau, W, v)`` family.

The state is a ``d x (N + v)`` column matrix ``X``. Columns ``0..N-1`` are
worker models that take local SGD steps; columns ``N..N+v-1`` are auxiliary
anchors that receive no gradient and move only when ``X <- X @ W`` is applied
after every ``tau``-th local step. Metrics are measured at the uniform column
average ``u_k = X_k 1 / (N + v)`` using the exact gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from coopsgd.objectives import Objective
from coopsgd.rng import SEED_MASK, worker_streams
from coopsgd.topology import MixingMatrix

__all__ = [
    "ConfigError",
    "NumericFailure",
    "SimConfig",
    "SimState",
    "Trace",
    "init",
    "local_step",
    "mixing_step",
    "averaged_model",
    "consensus_distance",
    "run",
]


class ConfigError(ValueError):
    pass


class NumericFailure(FloatingPointError):
    """Non-finite stochastic gradient. ``trace`` holds the records so far."""

    def __init__(self, worker: int, iteration: int, trace: "Trace | None" = None):
        super().__init__(f"non-finite gradient at worker {worker}, iteration {iteration}")
        self.worker = worker
        self.iteration = iteration
        self.trace = trace


@dataclass(frozen=True)
class SimConfig:
    N: int
    tau: int
    alpha: float
    K: int
    dim: int
    v: int = 0
    m: int = 1
    u1: tuple[float, ...] | float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ConfigError(f"N must be >= 1, got {self.N}")
        if self.v < 0:
            raise ConfigError(f"v must be >= 0, got {self.v}")
        if self.tau < 1:
            raise ConfigError(f"tau must be >= 1, got {self.tau}")
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be > 0, got {self.alpha}")
        if self.m < 1:
            raise ConfigError(f"m must be >= 1, got {self.m}")
        if self.K < 1:
            raise ConfigError(f"K must be >= 1, got {self.K}")
        if self.K % self.tau:
            raise ConfigError(f"K mod tau must be 0, got K={self.K}, tau={self.tau}")
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if isinstance(self.u1, (int, float)):
            u1 = (float(self.u1),) * self.dim
        else:
            u1 = tuple(float(x) for x in self.u1)
        if len(u1) != self.dim:
            raise ConfigError(f"u1 has length {len(u1)}, dim is {self.dim}")
        object.__setattr__(self, "u1", u1)
        object.__setattr__(self, "seed", int(self.seed) & SEED_MASK)

    @property
    def columns(self) -> int:
        return self.N + self.v

    @property
    def alpha_e(self) -> float:
        return self.N / (self.N + self.v) * self.alpha


@dataclass
class SimState:
    X: np.ndarray
    N: int
    v: int
    streams: list[np.random.Generator]
    k: int = 0

    def worker(self, i: int) -> np.ndarray:
        return self.X[:, i]


@dataclass
class Trace:
    """Per-iteration metrics at ``u_k`` for ``k = 1..K``.

    ``mix_drift`` holds ``||u_before - u_after||_inf`` for every mixing step.
    """

    k: np.ndarray
    f_u: np.ndarray
    grad_norm_sq: np.ndarray
    consensus: np.ndarray
    mix_drift: np.ndarray = field(default_factory=lambda: np.zeros(0))
    final_X: np.ndarray | None = None
    N: int = 0
    v: int = 0

    def __len__(self) -> int:
        return len(self.k)

    @property
    def summary(self) -> float:
        """Mean of ``||grad F(u_k)||^2`` over the recorded iterations."""
        return float(np.mean(self.grad_norm_sq)) if len(self) else float("nan")

    @property
    def max_mix_drift(self) -> float:
        return float(self.mix_drift.max()) if self.mix_drift.size else 0.0



def init(config: SimConfig, W: MixingMatrix | np.ndarray) -> SimState:
    size = W.size if isinstance(W, MixingMatrix) else np.asarray(W).shape[0]
    if size != config.columns:
        raise ConfigError(
            f"mixing matrix has size {size}, expected N + v = {config.N} + {config.v}"
        )
    X = np.tile(np.asarray(config.u1, dtype=float)[:, None], (1, config.columns))
    return SimState(X=X, N=config.N, v=config.v, streams=worker_streams(config.seed, config.N))


def local_step(
    state: SimState,
    obj: Objective,
    config: SimConfig,
    worker_order: Sequence[int] | None = None,
) -> SimState:
    """One SGD step on every worker column; auxiliaries untouched.

    ``worker_order`` only changes the order workers are visited; results do
    not depend on it because each worker draws from its own stream.
    """
    N = state.N
    if worker_order is None:
        grads = obj.stochastic_gradients(state.X[:, :N], config.m, state.streams)
    else:
        grads = np.empty((state.X.shape[0], N))
        for i in worker_order:
            grads[:, i] = obj.stochastic_gradient(state.X[:, i], config.m, state.streams[i])
    if not np.isfinite(grads).all():
        bad = int(np.flatnonzero(~np.isfinite(grads).all(axis=0))[0])
        raise NumericFailure(bad, state.k + 1)
    state.X[:, :N] -= config.alpha * grads
    state.k += 1
    return state


def _matrix(W: MixingMatrix | np.ndarray) -> np.ndarray:
    return W.entries if isinstance(W, MixingMatrix) else np.asarray(W, dtype=float)


def mixing_step(state: SimState, W: MixingMatrix | np.ndarray) -> SimState:
    state.X = state.X @ _matrix(W)
    return state


def averaged_model(state: SimState) -> np.ndarray:
    return state.X.sum(axis=1) / state.X.shape[1]


def _frobenius_from(X: np.ndarray, u: np.ndarray) -> float:
    D = X - u[:, None]
    return math.sqrt(float(np.vdot(D, D)))


def consensus_distance(state: SimState) -> float:
    return _frobenius_from(state.X, averaged_model(state))


def run(config: SimConfig, obj: Objective, W: MixingMatrix | np.ndarray) -> Trace:
    """Execute ``K`` iterations and record metrics at ``u_1..u_K``.

    Iteration ``k`` records ``u_k`` and then takes the local step; the mix
    follows every block of ``tau`` local steps.

    Raises
    ------
    NumericFailure
        With the partial trace (records ``1..k``) attached.
    """
    if obj.dim != config.dim:
        raise ConfigError(f"objective dimension {obj.dim} != config dim {config.dim}")
    state = init(config, W)
    Wm = _matrix(W)
    K = config.K
    f_u = np.empty(K)
    gsq = np.empty(K)
    cons = np.empty(K)
    drift = np.empty(K // config.tau)
    for k in range(K):
        u = averaged_model(state)
        f, g = obj.value_and_gradient(u)
        f_u[k] = f
        gsq[k] = float(g @ g)
        cons[k] = _frobenius_from(state.X, u)
        try:
            local_step(state, obj, config)
        except NumericFailure as exc:
            idx = np.arange(1, k + 2)
            exc.trace = Trace(idx, f_u[: k + 1], gsq[: k + 1], cons[: k + 1],
                              drift[: k // config.tau], state.X.copy(), config.N, config.v)
            raise
        if state.k % config.tau == 0:
            before = averaged_model(state)
            state.X = state.X @ Wm
            after = averaged_model(state)
            drift[state.k // config.tau - 1] = float(np.max(np.abs(before - after)))
    return Trace(np.arange(1, K + 1), f_u, gsq, cons, drift, state.X.copy(), config.N, config.v)

