"""Annealed source/target batch mixing for transfer learning on taggers.

The package trains a dual-head linear-chain CRF whose batches blend a
formal "source" corpus into an informal "target" corpus at a source
fraction that decays exponentially over training, and compares that
against target-only, fixed-ratio, and pretrain-then-fine-tune baselines.
"""

from .config import ExperimentConfig, build_config, parse_config_file
from .corpus import (
    Corpus,
    LabelScheme,
    LabelSet,
    TaggedSentence,
    build_corpus,
    read_conll,
    repair_bio,
    subsample,
    validate_bio,
    write_conll,
)
from .crf import (
    AdagradState,
    NeuralCrfModel,
    TaskHead,
    chain_log_partition,
    chain_marginals,
    chain_viterbi,
    load_checkpoint,
    save_checkpoint,
    train_step,
)
from .errors import ConfigError, DataError
from .evaluation import (
    ChunkSpan,
    EvalReport,
    aggregate_runs,
    extract_chunks,
    primary_metric,
    score,
)
from .features import FeatureExtractor
from .runner import run_experiment, run_seed
from .sampling import Domain, MixedBatch, QuotaAccumulator, SentencePool, next_batch, source_quota
from .schedule import (
    Annealed,
    AnnealingSchedule,
    FixedRatio,
    MixPolicy,
    TargetOnly,
    TrainingPlan,
    TwoPhase,
    alpha_for_budget,
    approx_source_budget,
    exact_source_budget,
    ratio_at,
    source_ratio_at,
    target_ratio_at,
)
from .synth import SynthConfig, synth_transfer_pair

__all__ = [
    "AdagradState",
    "Annealed",
    "AnnealingSchedule",
    "ChunkSpan",
    "ConfigError",
    "Corpus",
    "DataError",
    "Domain",
    "EvalReport",
    "ExperimentConfig",
    "FeatureExtractor",
    "FixedRatio",
    "LabelScheme",
    "LabelSet",
    "MixPolicy",
    "MixedBatch",
    "NeuralCrfModel",
    "QuotaAccumulator",
    "SentencePool",
    "SynthConfig",
    "TaggedSentence",
    "TargetOnly",
    "TaskHead",
    "TrainingPlan",
    "TwoPhase",
    "aggregate_runs",
    "alpha_for_budget",
    "approx_source_budget",
    "build_config",
    "build_corpus",
    "chain_log_partition",
    "chain_marginals",
    "chain_viterbi",
    "exact_source_budget",
    "extract_chunks",
    "load_checkpoint",
    "next_batch",
    "parse_config_file",
    "primary_metric",
    "ratio_at",
    "read_conll",
    "repair_bio",
    "run_experiment",
    "run_seed",
    "save_checkpoint",
    "score",
    "source_quota",
    "source_ratio_at",
    "subsample",
    "synth_transfer_pair",
    "target_ratio_at",
    "train_step",
    "validate_bio",
    "write_conll",
]
