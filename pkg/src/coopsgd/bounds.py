"""Closed-form learning-rate condition and convergence bound.

With ``alpha_e = N / (N + v) * alpha`` and ``c = 1 + v / N``::

    feasible  <=>  alpha_e L + 5 alpha_e^2 L^2 (c tau / (1 - zeta))^2 <= 1

    bound_asymptotic = alpha_e L sigma2 / m
                       + alpha_e^2 L^2 sigma2 ((1 + zeta^2) / (1 - zeta^2) tau - 1) c^2

    bound_finite     = 2 (F(u1) - F_inf) / (alpha_e K) + bound_asymptotic

The bound holds in expectation for objectives with ``omega = 0``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from coopsgd.objectives import Objective
from coopsgd.simulator import SimConfig, Trace
from coopsgd.topology import MixingMatrix

__all__ = [
    "BoundError",
    "InfeasibleError",
    "BoundInputs",
    "BoundReport",
    "Verdict",
    "effective_lr",
    "lr_feasible",
    "bound_asymptotic",
    "bound_finite",
    "bound_report",
    "inputs_for",
    "check_trace",
    "check_seed_mean",
]


class BoundError(ValueError):
    pass


class InfeasibleError(BoundError):
    """The learning rate violates the feasibility condition."""


def effective_lr(alpha: float, N: int, v: int) -> float:
    if N < 1 or v < 0:
        raise BoundError(f"need N >= 1 and v >= 0, got N={N}, v={v}")
    return N / (N + v) * alpha


@dataclass(frozen=True)
class BoundInputs:
    L: float
    sigma2: float
    m: int
    zeta: float
    tau: int
    v: int
    N: int
    alpha: float
    F_u1: float = 0.0
    F_inf: float = 0.0
    K: int = 1

    def __post_init__(self) -> None:
        if not 0.0 <= self.zeta < 1.0:
            raise BoundError(f"zeta must lie in [0, 1), got {self.zeta}")
        if self.alpha < 0:
            raise BoundError(f"alpha must be >= 0, got {self.alpha}")
        if self.L < 0 or self.sigma2 < 0:
            raise BoundError("L and sigma2 must be nonnegative")
        if self.m < 1 or self.tau < 1 or self.N < 1 or self.v < 0:
            raise BoundError("need m >= 1, tau >= 1, N >= 1, v >= 0")
        if self.F_u1 < self.F_inf:
            raise BoundError(f"F_u1 = {self.F_u1} lies below F_inf = {self.F_inf}")

    @classmethod
    def from_alpha_e(cls, alpha_e: float, **kw) -> "BoundInputs":
        """Build inputs from the effective rate; ``alpha = alpha_e (N + v) / N``."""
        N, v = kw["N"], kw.get("v", 0)
        return cls(alpha=alpha_e * (N + v) / N, **kw)

    @property
    def alpha_e(self) -> float:
        return effective_lr(self.alpha, self.N, self.v)

    def to_dict(self) -> dict:
        return asdict(self)


def lr_feasible(inputs: BoundInputs) -> tuple[bool, float]:
    """Return ``(lhs <= 1, lhs)`` for the learning-rate condition."""
    ae, L = inputs.alpha_e, inputs.L
    spread = (1.0 + inputs.v / inputs.N) * inputs.tau / (1.0 - inputs.zeta)
    lhs = ae * L + 5.0 * ae**2 * L**2 * spread**2
    return lhs <= 1.0, lhs


def bound_asymptotic(inputs: BoundInputs) -> float:
    ae, L, s2, z = inputs.alpha_e, inputs.L, inputs.sigma2, inputs.zeta
    drift = (1.0 + z * z) / (1.0 - z * z) * inputs.tau - 1.0
    return ae * L * s2 / inputs.m + ae**2 * L**2 * s2 * drift * (1.0 + inputs.v / inputs.N) ** 2


def bound_finite(inputs: BoundInputs, literal_v_factor: bool = False) -> float:
    """Finite-``K`` bound.

    ``literal_v_factor`` multiplies the optimality-gap term by ``v``, which
    zeroes it whenever ``v = 0``; keep the default unless reproducing that form.
    """
    if inputs.K < 1:
        raise BoundError(f"K must be >= 1, got {inputs.K}")
    if inputs.alpha <= 0:
        raise BoundError("finite bound needs alpha > 0")
    gap = 2.0 * (inputs.F_u1 - inputs.F_inf) / (inputs.alpha_e * inputs.K)
    if literal_v_factor:
        gap *= inputs.v
    return gap + bound_asymptotic(inputs)


@dataclass(frozen=True)
class BoundReport:
    alpha_e: float
    feasible: bool
    lhs_lr: float
    finite_bound: float
    finite_bound_literal: float
    asymptotic_bound: float
    K: int
    inputs: BoundInputs

    def to_dict(self) -> dict:
        d = asdict(self)
        d["inputs"] = self.inputs.to_dict()
        return d


def bound_report(inputs: BoundInputs) -> BoundReport:
    feasible, lhs = lr_feasible(inputs)
    return BoundReport(
        alpha_e=inputs.alpha_e,
        feasible=feasible,
        lhs_lr=lhs,
        finite_bound=bound_finite(inputs),
        finite_bound_literal=bound_finite(inputs, literal_v_factor=True),
        asymptotic_bound=bound_asymptotic(inputs),
        K=inputs.K,
        inputs=inputs,
    )


def inputs_for(
    config: SimConfig,
    obj: Objective,
    W: MixingMatrix,
    assume_omega_zero: bool = False,
) -> BoundInputs:
    """Collect bound inputs for a simulator run.

    Objectives whose ``omega`` is not known to be zero are refused unless
    ``assume_omega_zero`` is set.
    """
    if obj.omega != 0.0 and not assume_omega_zero:
        raise BoundError(
            f"bound assumes omega = 0 but {obj!r} has omega = {obj.omega}; "
            "pass assume_omega_zero=True to override"
        )
    return BoundInputs(
        L=obj.L,
        sigma2=obj.sigma2,
        m=config.m,
        zeta=W.zeta,
        tau=config.tau,
        v=config.v,
        N=config.N,
        alpha=config.alpha,
        F_u1=obj.value(np.asarray(config.u1)),
        F_inf=obj.F_inf,
        K=config.K,
    )


@dataclass(frozen=True)
class Verdict:
    summary: float
    finite_bound: float
    ratio: float
    satisfied: bool


def _ratio(summary: float, bound: float) -> float:
    if bound > 0:
        return summary / bound
    return 0.0 if summary == 0 else float("inf")


def _require_feasible(report: BoundReport) -> None:
    if not report.feasible:
        raise InfeasibleError(
            f"learning-rate condition fails (lhs = {report.lhs_lr:.6g} > 1); the bound does not apply"
        )


def check_trace(trace: Trace, report: BoundReport) -> Verdict:
    _require_feasible(report)
    if len(trace) != report.K:
        raise BoundError(f"trace has {len(trace)} records but the report is for K = {report.K}")
    if (trace.N, trace.v) != (report.inputs.N, report.inputs.v):
        raise BoundError(
            f"trace has (N, v) = ({trace.N}, {trace.v}), report has "
            f"({report.inputs.N}, {report.inputs.v})"
        )
    s = trace.summary
    return Verdict(s, report.finite_bound, _ratio(s, report.finite_bound), s <= report.finite_bound)


def check_seed_mean(traces: Sequence[Trace], report: BoundReport) -> Verdict:
    """Compare the across-seed mean of trace summaries with the finite bound."""
    if not traces:
        raise BoundError("no traces given")
    per_seed = [check_trace(t, report).summary for t in traces]
    mean = float(np.mean(per_seed))
    return Verdict(mean, report.finite_bound, _ratio(mean, report.finite_bound), mean <= report.finite_bound)
