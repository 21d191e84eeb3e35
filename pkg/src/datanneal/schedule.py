"""Mixing-ratio policies and source-data budget arithmetic.

The annealed policy puts a fraction ``alpha * decay**(t-1)`` of each batch
on source-domain data at step t (1-based), so training starts almost
entirely on source data and drifts toward target-only. The budget helpers
convert between the schedule parameters and the expected total number of
source sentences consumed over a run.

All functions here are pure and operate in double precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .errors import InfeasibleBudgetError, UnsupportedPolicyError


@dataclass(frozen=True)
class AnnealingSchedule:
    """Exponential-decay mixing schedule with initial ratio ``alpha``."""

    alpha: float
    decay: float  # per-step decay rate, written "lambda" in configs

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if not 0.0 < self.decay < 1.0:
            raise ValueError(f"decay must be in (0, 1), got {self.decay}")


@dataclass(frozen=True)
class TargetOnly:
    """No transfer: every batch is drawn from the target pool."""


@dataclass(frozen=True)
class FixedRatio:
    """Constant source fraction throughout training (multi-task mixing)."""

    rho: float

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must be in [0, 1], got {self.rho}")


@dataclass(frozen=True)
class TwoPhase:
    """Source-only for the first ``source_steps`` batches, then target-only."""

    source_steps: int

    def __post_init__(self):
        if self.source_steps < 1:
            raise ValueError(f"source_steps must be >= 1, got {self.source_steps}")


@dataclass(frozen=True)
class Annealed:
    """Exponentially decaying source fraction."""

    schedule: AnnealingSchedule


MixPolicy = Union[TargetOnly, FixedRatio, TwoPhase, Annealed]


@dataclass(frozen=True)
class TrainingPlan:
    """Batch size, step budget, and the mixing policy for one run."""

    batch_size: int
    total_steps: int
    policy: MixPolicy

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.total_steps < 1:
            raise ValueError(f"total_steps must be >= 1, got {self.total_steps}")


def source_ratio_at(schedule: AnnealingSchedule, t: int) -> float:
    """Source fraction of the batch at step ``t`` (1-based): alpha * decay**(t-1)."""
    if t < 1:
        raise ValueError(f"step must be >= 1, got {t}")
    return schedule.alpha * schedule.decay ** (t - 1)


def target_ratio_at(schedule: AnnealingSchedule, t: int) -> float:
    """Target fraction of the batch at step ``t``; complements source_ratio_at."""
    return 1.0 - source_ratio_at(schedule, t)


def ratio_at(policy: MixPolicy, t: int) -> float:
    """Source fraction at step ``t`` under any policy variant."""
    if t < 1:
        raise ValueError(f"step must be >= 1, got {t}")
    if isinstance(policy, TargetOnly):
        return 0.0
    if isinstance(policy, FixedRatio):
        return policy.rho
    if isinstance(policy, TwoPhase):
        return 1.0 if t <= policy.source_steps else 0.0
    if isinstance(policy, Annealed):
        return source_ratio_at(policy.schedule, t)
    raise TypeError(f"unknown policy variant: {policy!r}")


def exact_source_budget(plan: TrainingPlan) -> float:
    """Expected source-sentence count over the full run (closed-form geometric sum).

    Equals B * alpha * (1 - decay**m) / (1 - decay) for m total steps.
    Only defined for annealed plans.
    """
    if not isinstance(plan.policy, Annealed):
        raise UnsupportedPolicyError(
            f"exact_source_budget requires an Annealed policy, got {type(plan.policy).__name__}"
        )
    sch = plan.policy.schedule
    return (
        plan.batch_size
        * sch.alpha
        * (1.0 - sch.decay**plan.total_steps)
        / (1.0 - sch.decay)
    )


def approx_source_budget(batch_size: int, schedule: AnnealingSchedule) -> float:
    """Geometric-series limit of the source budget: B * alpha / (1 - decay).

    Upper-bounds the exact budget; the two agree once decay**m is negligible.
    """
    return batch_size * schedule.alpha / (1.0 - schedule.decay)


def alpha_for_budget(source_budget: float, decay: float, batch_size: int) -> float:
    """Initial ratio ``alpha`` that spends ``source_budget`` source sentences.

    Inverts the budget approximation: alpha = budget * (1 - decay) / B.
    Raises InfeasibleBudgetError when the implied alpha leaves (0, 1).
    """
    if source_budget <= 0.0:
        raise InfeasibleBudgetError(
            f"source budget must be positive, got {source_budget}"
        )
    alpha = source_budget * (1.0 - decay) / batch_size
    if not 0.0 < alpha < 1.0:
        raise InfeasibleBudgetError(
            f"budget {source_budget} with decay {decay} and batch size {batch_size} "
            f"implies alpha={alpha}, outside (0, 1)"
        )
    return alpha
