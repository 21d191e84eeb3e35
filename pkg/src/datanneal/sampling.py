"""Deterministic batch composition from a source pool and a target pool.

Fractional per-batch source counts are integerized with a carry
accumulator, so the cumulative number of source sentences tracks the
schedule's running sum to within one sentence at every prefix. Pools
cycle independently: each pool shuffles once per pass and reshuffles on
exhaustion, so a sentence never repeats within a pass.

Pool RNG: numpy PCG64 seeded via SeedSequence([run_seed, domain_code])
with domain codes Source=0, Target=1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import EmptyPoolError
from .schedule import TrainingPlan, ratio_at

if TYPE_CHECKING:
    from .corpus import TaggedSentence


class Domain(enum.Enum):
    SOURCE = 0
    TARGET = 1


@dataclass(frozen=True)
class QuotaAccumulator:
    """Fractional remainder carried between quota draws; always in [0, 1)."""

    carry: float = 0.0


def source_quota(
    batch_size: int, ratio: float, acc: QuotaAccumulator
) -> tuple[int, QuotaAccumulator]:
    """Integer source count for one batch: floor(B*ratio + carry), carry updated."""
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio must be in [0, 1], got {ratio}")
    raw = batch_size * ratio + acc.carry
    count = int(math.floor(raw))
    return count, QuotaAccumulator(carry=raw - count)


@dataclass
class SentencePool:
    """Cycling shuffled view over one domain's sentences.

    Single-threaded: cursor and generator state are mutable.
    """

    sentences: Sequence["TaggedSentence"]
    domain: Domain
    rng: np.random.Generator
    permutation: np.ndarray = field(init=False)
    cursor: int = field(init=False, default=0)

    def __post_init__(self):
        self.permutation = (
            self.rng.permutation(len(self.sentences))
            if self.sentences
            else np.empty(0, dtype=np.int64)
        )

    @classmethod
    def from_seed(
        cls, sentences: Sequence["TaggedSentence"], domain: Domain, run_seed: int
    ) -> "SentencePool":
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([run_seed, domain.value]))
        )
        return cls(sentences=sentences, domain=domain, rng=rng)

    def draw(self, n: int) -> list["TaggedSentence"]:
        """Next ``n`` sentences in permutation order, reshuffling on exhaustion."""
        if n == 0:
            return []
        if not self.sentences:
            raise EmptyPoolError(f"cannot draw {n} sentences from empty {self.domain.name} pool")
        out = []
        while len(out) < n:
            if self.cursor >= len(self.permutation):
                self.permutation = self.rng.permutation(len(self.sentences))
                self.cursor = 0
            take = min(n - len(out), len(self.permutation) - self.cursor)
            for idx in self.permutation[self.cursor : self.cursor + take]:
                out.append(self.sentences[idx])
            self.cursor += take
        return out


@dataclass(frozen=True)
class MixedBatch:
    """One training batch: (sentence, domain) pairs at step ``step``."""

    items: tuple
    step: int

    @property
    def source_count(self) -> int:
        return sum(1 for _, d in self.items if d is Domain.SOURCE)


def next_batch(
    source: SentencePool,
    target: SentencePool,
    plan: TrainingPlan,
    t: int,
    acc: QuotaAccumulator,
) -> tuple[MixedBatch, QuotaAccumulator]:
    """Compose the step-``t`` batch: quota source sentences first, then target."""
    if t > plan.total_steps:
        raise ValueError(f"step {t} exceeds plan.total_steps {plan.total_steps}")
    quota, acc = source_quota(plan.batch_size, ratio_at(plan.policy, t), acc)
    items = [(s, Domain.SOURCE) for s in source.draw(quota)]
    items += [(s, Domain.TARGET) for s in target.draw(plan.batch_size - quota)]
    return MixedBatch(items=tuple(items), step=t), acc
