"""Desk-scale lab for decentralized periodic-averaging SGD.

Mixing matrices (:mod:`coopsgd.topology`), synthetic objectives
(:mod:`coopsgd.objectives`), the ``A(tau, W, v)`` simulator
(:mod:`coopsgd.simulator`), closed-form bounds (:mod:`coopsgd.bounds`),
ensemble inference (:mod:`coopsgd.ensemble`) and the sweep runner
(:mod:`coopsgd.experiment`, :mod:`coopsgd.cli`).
"""

__version__ = "0.1.0"
