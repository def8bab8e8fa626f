"""Synthetic smooth objectives with known constants.

Every objective exposes exact ``value`` / ``full_gradient`` plus an unbiased
``stochastic_gradient`` whose noise variance scales as ``sigma2 / m`` at batch
size ``m``. The constants ``L``, ``sigma2``, ``omega`` and ``F_inf`` are
attributes so the bound module can consume them directly.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from coopsgd.rng import aux_stream

__all__ = [
    "ObjectiveError",
    "Objective",
    "QuadraticSpec",
    "QuadraticObjective",
    "LogisticSyntheticSpec",
    "LogisticObjective",
    "quadratic_value_grad",
    "stochastic_gradient",
    "gradient_noise",
    "estimate_sigma2",
    "parse_diag",
]


class ObjectiveError(ValueError):
    pass


def _check_point(x: np.ndarray, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,):
        raise ObjectiveError(f"expected a point of shape ({dim},), got {x.shape}")
    return x


def _check_batch(m: int) -> None:
    if int(m) != m or m < 1:
        raise ObjectiveError(f"batch size must be a positive integer, got {m}")


class Objective(ABC):
    dim: int
    L: float
    omega: float | None
    F_inf: float

    @property
    @abstractmethod
    def sigma2(self) -> float:
        """Gradient-noise variance at batch size 1."""

    @abstractmethod
    def value(self, x: np.ndarray) -> float: ...

    @abstractmethod
    def full_gradient(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def stochastic_gradient(self, x: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray: ...

    def value_and_gradient(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        return self.value(x), self.full_gradient(x)

    def stochastic_gradients(
        self, X: np.ndarray, m: int, rngs: Sequence[np.random.Generator]
    ) -> np.ndarray:
        """Column ``i`` is ``stochastic_gradient(X[:, i], m, rngs[i])``."""
        G = np.empty_like(X, dtype=float)
        for i, rng in enumerate(rngs):
            G[:, i] = self.stochastic_gradient(X[:, i], m, rng)
        return G


# --------------------------------------------------------------------------
# quadratic


@dataclass(frozen=True)
class QuadraticSpec:
    """``F(x) = 1/2 sum_i diag_i x_i^2 - b^T x`` with additive Gaussian noise."""

    diag: tuple[float, ...]
    b: tuple[float, ...] | None = None
    noise_sigma2: float = 1.0

    def __post_init__(self) -> None:
        diag = tuple(float(x) for x in self.diag)
        if not diag or min(diag) <= 0:
            raise ObjectiveError("quadratic diag must be a nonempty vector of positive reals")
        b = (0.0,) * len(diag) if self.b is None else tuple(float(x) for x in self.b)
        if len(b) != len(diag):
            raise ObjectiveError(f"b has length {len(b)}, diag has length {len(diag)}")
        if self.noise_sigma2 < 0:
            raise ObjectiveError("noise_sigma2 must be >= 0")
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "b", b)


def quadratic_value_grad(spec: QuadraticSpec, x: np.ndarray) -> tuple[float, np.ndarray]:
    diag = np.asarray(spec.diag)
    b = np.asarray(spec.b)
    x = _check_point(x, diag.size)
    return 0.5 * float(diag @ (x * x)) - float(b @ x), diag * x - b


class QuadraticObjective(Objective):
    """Separable convex quadratic. ``omega = 0`` since the noise is additive."""

    def __init__(self, spec: QuadraticSpec):
        self.spec = spec
        self._diag = np.asarray(spec.diag)
        self._b = np.asarray(spec.b)
        self.dim = self._diag.size
        self.L = float(self._diag.max())
        self.omega = 0.0
        self.minimizer = self._b / self._diag
        self.F_inf = -0.5 * float(self._b @ self.minimizer)
        self._sigma2 = float(spec.noise_sigma2)
        self._coord_scale = math.sqrt(self._sigma2 / self.dim)

    @property
    def sigma2(self) -> float:
        return self._sigma2

    def value(self, x):
        x = _check_point(x, self.dim)
        return 0.5 * float(self._diag @ (x * x)) - float(self._b @ x)

    def full_gradient(self, x):
        x = _check_point(x, self.dim)
        return self._diag * x - self._b

    def stochastic_gradient(self, x, m, rng):
        _check_batch(m)
        g = self.full_gradient(x)
        if self._sigma2 == 0.0:
            return g
        # per-coordinate variance sigma2 / (m d) gives E||z||^2 = sigma2 / m
        return g + rng.standard_normal(self.dim) * (self._coord_scale / math.sqrt(m))

    def stochastic_gradients(self, X, m, rngs):
        _check_batch(m)
        G = self._diag[:, None] * X - self._b[:, None]
        if self._sigma2 == 0.0:
            return G
        scale = self._coord_scale / math.sqrt(m)
        # same draws and arithmetic as the per-point path, column by column
        Z = np.empty((len(rngs), self.dim))
        for i, rng in enumerate(rngs):
            Z[i] = rng.standard_normal(self.dim) * scale
        return G + Z.T

    def __repr__(self) -> str:
        return f"QuadraticObjective(dim={self.dim}, L={self.L}, sigma2={self._sigma2})"


# --------------------------------------------------------------------------
# logistic


@dataclass(frozen=True)
class LogisticSyntheticSpec:
    """Ridge-regularised logistic regression on Gaussian features.

    Labels are ``sign(a_j . w_true)``, so the sample is linearly separable;
    the ridge term keeps the minimiser finite.
    """

    sample_count: int = 256
    dim: int = 10
    seed: int = 0
    ridge: float = 0.01

    def __post_init__(self) -> None:
        if self.sample_count < 1 or self.dim < 1:
            raise ObjectiveError("sample_count and dim must be positive")
        if self.ridge <= 0:
            raise ObjectiveError("ridge must be > 0")


def _log1pexp(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class LogisticObjective(Objective):
    """Finite-sum logistic loss; stochasticity comes from minibatch sampling.

    ``omega`` is unknown for this objective (sampling noise grows with the
    gradient), so it is ``None`` and the bound oracle refuses it by default.
    """

    omega = None

    def __init__(self, spec: LogisticSyntheticSpec, sigma2_draws: int = 10_000):
        self.spec = spec
        rng = aux_stream(spec.seed)
        self.features = rng.standard_normal((spec.sample_count, spec.dim))
        self.true_weights = rng.standard_normal(spec.dim)
        margin = self.features @ self.true_weights
        self.signs = np.where(margin >= 0, 1.0, -1.0)
        self.labels = (self.signs > 0).astype(float)
        self.dim = spec.dim
        self.ridge = float(spec.ridge)
        n = spec.sample_count
        gram_max = float(np.linalg.eigvalsh(self.features.T @ self.features)[-1])
        self.L = 0.25 * gram_max / n + self.ridge
        self._sigma2_draws = sigma2_draws
        # signed features: margin of sample j is signed_features[j] @ x
        self._signed = self.features * self.signs[:, None]

    def value(self, x):
        x = _check_point(x, self.dim)
        z = self._signed @ x
        return float(np.mean(_log1pexp(-z))) + 0.5 * self.ridge * float(x @ x)

    def _batch_gradient(self, x: np.ndarray, idx: np.ndarray | None) -> np.ndarray:
        rows = self._signed if idx is None else self._signed[idx]
        z = rows @ x
        coef = -_sigmoid(-z)
        return rows.T @ coef / rows.shape[0] + self.ridge * x

    def full_gradient(self, x):
        x = _check_point(x, self.dim)
        return self._batch_gradient(x, None)

    def stochastic_gradient(self, x, m, rng):
        _check_batch(m)
        x = _check_point(x, self.dim)
        n = self.spec.sample_count
        if m > n:
            raise ObjectiveError(f"batch size {m} exceeds sample_count {n}")
        if m == n:
            return self._batch_gradient(x, None)
        idx = np.sort(rng.choice(n, size=m, replace=False))
        return self._batch_gradient(x, idx)

    def predict_proba(self, x: np.ndarray, samples: np.ndarray) -> np.ndarray:
        return _sigmoid(np.asarray(samples) @ x)

    @cached_property
    def minimizer(self) -> np.ndarray:
        """Full-gradient descent at step ``1/L`` until ``||grad|| <= 1e-10``."""
        x = np.zeros(self.dim)
        step = 1.0 / self.L
        for _ in range(1_000_000):
            g = self._batch_gradient(x, None)
            if float(np.linalg.norm(g)) <= 1e-10:
                return x
            x = x - step * g
        raise ObjectiveError("logistic minimiser did not converge")

    @cached_property
    def F_inf(self) -> float:
        return self.value(self.minimizer)

    @cached_property
    def _sigma2_cached(self) -> float:
        probes = [np.zeros(self.dim), self.minimizer]
        return estimate_sigma2(self, probes, draws=self._sigma2_draws, rng=aux_stream(self.spec.seed, 1))

    @property
    def sigma2(self) -> float:
        return self._sigma2_cached

    def __repr__(self) -> str:
        return f"LogisticObjective(n={self.spec.sample_count}, dim={self.dim}, ridge={self.ridge})"


# --------------------------------------------------------------------------
# generic operations


def stochastic_gradient(obj: Objective, x: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    return obj.stochastic_gradient(x, m, rng)


def gradient_noise(obj: Objective, x: np.ndarray, m: int, draws: int, rng: np.random.Generator) -> float:
    """Monte Carlo estimate of ``E||g(x) - grad F(x)||^2`` at batch size ``m``."""
    grad = obj.full_gradient(x)
    total = 0.0
    for _ in range(draws):
        dev = obj.stochastic_gradient(x, m, rng) - grad
        total += float(dev @ dev)
    return total / draws


def estimate_sigma2(
    obj: Objective,
    probes: Sequence[np.ndarray],
    draws: int,
    rng: np.random.Generator | None = None,
) -> float:
    """Largest batch-1 gradient-noise estimate over the probe points."""
    if len(probes) == 0:
        raise ObjectiveError("estimate_sigma2 needs at least one probe point")
    if draws < 100:
        raise ObjectiveError(f"draws must be >= 100, got {draws}")
    rng = aux_stream(0, 2) if rng is None else rng
    return max(gradient_noise(obj, np.asarray(p, dtype=float), 1, draws, rng) for p in probes)


def parse_diag(text: str, dim: int | None = None) -> tuple[float, ...]:
    """Comma list ``0.1,0.5,1`` or ``linspace:lo:hi`` (length taken from ``dim``)."""
    text = text.strip()
    if text.startswith("linspace:"):
        parts = text.split(":")
        if len(parts) != 3:
            raise ObjectiveError(f"expected linspace:lo:hi, got {text!r}")
        if dim is None:
            raise ObjectiveError("linspace diag needs a dimension")
        lo, hi = float(parts[1]), float(parts[2])
        return tuple(float(x) for x in np.linspace(lo, hi, dim))
    values = tuple(float(x) for x in text.split(",") if x.strip())
    if dim is not None and len(values) != dim:
        raise ObjectiveError(f"quad_diag has {len(values)} entries but dim = {dim}")
    return values
