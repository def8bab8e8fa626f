"""Ensemble inference over silo models with binary participation flags.

The aggregated prediction for a sample is the mean of the participating
silos' predictions, ``sum_i f_i * eta_i / sum_i f_i`` with ``f_i in {0, 1}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

__all__ = [
    "NoParticipantsError",
    "SiloPredictor",
    "Participation",
    "TestSet",
    "EnsembleMetrics",
    "fedboost_aggregate",
    "predict_silo",
    "evaluate",
]

PredictorKind = Literal["linear", "logistic"]


class NoParticipantsError(ValueError):
    """Every participation flag is zero, so the normaliser is undefined."""


@dataclass(frozen=True)
class SiloPredictor:
    silo_id: int
    model: np.ndarray
    kind: PredictorKind = "logistic"

    def __post_init__(self) -> None:
        if self.kind not in ("linear", "logistic"):
            raise ValueError(f"unknown predictor kind {self.kind!r}")
        object.__setattr__(self, "model", np.asarray(self.model, dtype=float))

    @property
    def dim(self) -> int:
        return self.model.shape[0]


@dataclass(frozen=True)
class Participation:
    flags: tuple[int, ...]

    def __post_init__(self) -> None:
        flags = tuple(int(f) for f in self.flags)
        if any(f not in (0, 1) for f in flags):
            raise ValueError(f"participation flags must be 0 or 1, got {self.flags}")
        object.__setattr__(self, "flags", flags)

    @classmethod
    def parse(cls, text: str) -> "Participation":
        """From a comma list such as ``1,0,1``."""
        try:
            return cls(tuple(int(x) for x in text.split(",") if x.strip()))
        except ValueError:
            raise ValueError(f"bad participation list {text!r}") from None

    @classmethod
    def all(cls, n: int) -> "Participation":
        return cls((1,) * n)

    @property
    def count(self) -> int:
        return sum(self.flags)

    def __len__(self) -> int:
        return len(self.flags)


@dataclass(frozen=True)
class TestSet:
    __test__ = False  # not a pytest class

    samples: np.ndarray
    labels: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        s = np.atleast_2d(np.asarray(self.samples, dtype=float))
        object.__setattr__(self, "samples", s)
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=float)
            if lab.shape != (s.shape[0],):
                raise ValueError(f"{lab.shape[0]} labels for {s.shape[0]} samples")
            object.__setattr__(self, "labels", lab)

    def __len__(self) -> int:
        return self.samples.shape[0]


def _flags(flags: Participation | Sequence[int]) -> np.ndarray:
    f = flags.flags if isinstance(flags, Participation) else tuple(flags)
    return np.asarray(f, dtype=float)


def fedboost_aggregate(predictions: Sequence[float] | np.ndarray, flags: Participation | Sequence[int]) -> float:
    """Uniform mean of the participating entries of ``predictions``.

    Raises
    ------
    NoParticipantsError
        If no flag is set.
    ValueError
        If the two sequences differ in length.
    """
    preds = np.asarray(predictions, dtype=float)
    f = _flags(flags)
    if preds.shape != f.shape:
        raise ValueError(f"{preds.size} predictions but {f.size} participation flags")
    total = f.sum()
    if total == 0:
        raise NoParticipantsError("no silo participates; aggregation is undefined")
    return float(f @ preds / total)


def predict_silo(p: SiloPredictor, sample: np.ndarray) -> float | np.ndarray:
    """Linear score ``theta . x`` or logistic probability of it.

    ``sample`` may be a single point or a 2-D array of points (one per row).
    """
    x = np.asarray(sample, dtype=float)
    if x.shape[-1] != p.dim:
        raise ValueError(f"sample dimension {x.shape[-1]} != model dimension {p.dim}")
    score = x @ p.model
    if p.kind == "logistic":
        score = 0.5 * (1.0 + np.tanh(0.5 * score))
    return float(score) if np.ndim(score) == 0 else score


@dataclass(frozen=True)
class EnsembleMetrics:
    predictions: np.ndarray
    metric: str | None
    value: float | None
    participants: int

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "value": self.value,
            "participants": self.participants,
            "samples": int(self.predictions.size),
        }


def evaluate(
    silos: Sequence[SiloPredictor],
    flags: Participation | Sequence[int],
    testset: TestSet,
) -> EnsembleMetrics:
    """Aggregate predictions per sample and score them if labels exist.

    MSE for linear silos, accuracy at threshold 0.5 for logistic ones.
    """
    if len(testset) == 0:
        raise ValueError("test set is empty")
    f = _flags(flags)
    if f.size != len(silos):
        raise ValueError(f"{len(silos)} silos but {f.size} participation flags")
    if f.sum() == 0:
        raise NoParticipantsError("no silo participates; aggregation is undefined")
    kinds = {s.kind for s in silos}
    if len(kinds) != 1:
        raise ValueError(f"mixed predictor kinds {sorted(kinds)}")
    per_silo = np.stack([np.atleast_1d(predict_silo(s, testset.samples)) for s in silos])
    agg = f @ per_silo / f.sum()
    metric = value = None
    if testset.labels is not None:
        if silos[0].kind == "linear":
            metric, value = "mse", float(np.mean((agg - testset.labels) ** 2))
        else:
            metric = "accuracy"
            value = float(np.mean((agg >= 0.5) == (testset.labels >= 0.5)))
    return EnsembleMetrics(agg, metric, value, int(f.sum()))
