"""Seeded experiment runs: one training paradigm on one source/target pair.

A run is atomic and fully determined by (config, seed): corpora are read,
the target training split is optionally subsampled with the run seed, the
paradigm's mixing policy drives the batch composition, and the artifacts
are written under output_dir/seed_<seed>/:

  record.json   canonical-JSON run record (sorted keys, no whitespace);
                byte-identical across reruns of the same config+seed
  model.ckpt    model + optimizer state, same byte-identical guarantee
  timing.json   wall-clock duration, kept out of record.json on purpose
                so the record stays reproducible

The run record holds one row per step (step, planned source ratio,
realized source count, mean batch loss), the dev-metric curve sampled
every eval_every steps, final dev/test reports, and for the
initialization paradigm the per-candidate selection scores.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, config_to_dict
from .corpus import Corpus, read_conll, subsample
from .crf import AdagradState, NeuralCrfModel, save_checkpoint, train_step
from .errors import ConfigError
from .evaluation import EvalReport, primary_metric, report_to_dict, score
from .sampling import Domain, QuotaAccumulator, SentencePool, next_batch
from .schedule import (
    AnnealingSchedule,
    Annealed,
    FixedRatio,
    MixPolicy,
    TargetOnly,
    TrainingPlan,
    ratio_at,
)


@dataclass
class ExperimentData:
    source_train: Corpus | None
    source_dev: Corpus | None
    target_train: Corpus
    target_dev: Corpus
    target_test: Corpus


@dataclass
class RunResult:
    seed: int
    record: dict
    model: NeuralCrfModel
    state: AdagradState
    wall_clock_seconds: float


def load_experiment_data(config: ExperimentConfig) -> ExperimentData:
    def read(path, domain, name):
        with open(path, "r", encoding="utf-8") as fh:
            return read_conll(
                fh,
                token_column=config.token_column,
                label_column=config.label_column,
                domain=domain,
                name=name,
            )

    return ExperimentData(
        source_train=(
            read(config.source_train, Domain.SOURCE, "source-train")
            if config.source_train
            else None
        ),
        source_dev=(
            read(config.source_dev, Domain.SOURCE, "source-dev")
            if config.source_dev
            else None
        ),
        target_train=read(config.target_train, Domain.TARGET, "target-train"),
        target_dev=read(config.target_dev, Domain.TARGET, "target-dev"),
        target_test=read(config.target_test, Domain.TARGET, "target-test"),
    )


def mix_policy(config: ExperimentConfig) -> MixPolicy:
    """The batch-composition policy for vanilla/mult/da configurations."""
    if config.paradigm == "vanilla":
        return TargetOnly()
    if config.paradigm == "mult":
        return FixedRatio(config.mult_ratio)
    if config.paradigm == "da":
        return Annealed(AnnealingSchedule(alpha=config.alpha, decay=config.decay))
    raise ConfigError(f"paradigm {config.paradigm!r} has no single mixing policy")


def _derived_seed(seed: int, index: int) -> int:
    """Stable per-candidate seed, disjoint from plain run seeds."""
    return int(np.random.SeedSequence([seed, 9000 + index]).generate_state(1)[0])


def _evaluate(model: NeuralCrfModel, corpus: Corpus, domain: Domain) -> EvalReport:
    predictions = model.predict(corpus.sentences, domain)
    gold = [s.labels for s in corpus.sentences]
    return score(gold, predictions, corpus.label_set.scheme)


def _run_span(
    model: NeuralCrfModel,
    state: AdagradState,
    plan: TrainingPlan,
    source_pool: SentencePool,
    target_pool: SentencePool,
    step_offset: int,
    step_records: list,
    dev_hook=None,
    eval_every: int = 0,
) -> None:
    acc = QuotaAccumulator()
    for t in range(1, plan.total_steps + 1):
        batch, acc = next_batch(source_pool, target_pool, plan, t, acc)
        loss = train_step(model, batch.items, state)
        global_t = step_offset + t
        step_records.append(
            [global_t, ratio_at(plan.policy, t), batch.source_count, loss]
        )
        if dev_hook is not None and eval_every and global_t % eval_every == 0:
            dev_hook(global_t)


def run_seed(config: ExperimentConfig, data: ExperimentData, seed: int) -> RunResult:
    started = time.perf_counter()

    target_train = subsample(data.target_train, config.subsample_fraction, seed)
    source_sents = data.source_train.sentences if data.source_train else ()
    labels_target = data.target_train.label_set.labels
    labels_source = (
        data.source_train.label_set.labels if data.source_train else labels_target
    )

    step_records: list = []
    dev_curve: list = []
    record: dict = {"seed": seed, "config": config_to_dict(config)}

    def make_pools(pool_seed: int):
        return (
            SentencePool.from_seed(source_sents, Domain.SOURCE, pool_seed),
            SentencePool.from_seed(target_train.sentences, Domain.TARGET, pool_seed),
        )

    def make_model(model_seed: int) -> tuple[NeuralCrfModel, AdagradState]:
        model = NeuralCrfModel.initialized(
            labels_source,
            labels_target,
            hash_dim=config.hash_dim,
            hidden_dim=config.hidden_dim,
            seed=model_seed,
        )
        return model, AdagradState.for_model(model, config.learning_rate, config.l2)

    def make_dev_hook(model: NeuralCrfModel):
        def dev_hook(global_t: int) -> None:
            report = _evaluate(model, data.target_dev, Domain.TARGET)
            dev_curve.append([global_t, primary_metric(report)])

        return dev_hook

    if config.paradigm == "init":
        phase1_steps = config.init_source_steps
        plan1 = TrainingPlan(config.batch_size, phase1_steps, FixedRatio(1.0))
        candidates = []
        for c in range(config.init_candidates):
            cand_seed = _derived_seed(seed, c)
            model, state = make_model(cand_seed)
            src_pool, tgt_pool = make_pools(cand_seed)
            cand_steps: list = []
            _run_span(model, state, plan1, src_pool, tgt_pool, 0, cand_steps)
            source_report = _evaluate(model, data.source_dev, Domain.SOURCE)
            candidates.append((primary_metric(source_report), c, model, state, cand_steps))
        best_metric, best_index, model, state, best_steps = max(
            candidates, key=lambda item: item[0]
        )
        record["candidate_scores"] = [m for m, *_ in candidates]
        record["selected_candidate"] = best_index
        step_records.extend(best_steps)

        plan2 = TrainingPlan(
            config.batch_size, config.total_steps - phase1_steps, TargetOnly()
        )
        src_pool, tgt_pool = make_pools(seed)
        _run_span(
            model,
            state,
            plan2,
            src_pool,
            tgt_pool,
            phase1_steps,
            step_records,
            make_dev_hook(model),
            config.eval_every,
        )
    else:
        plan = TrainingPlan(config.batch_size, config.total_steps, mix_policy(config))
        model, state = make_model(seed)
        src_pool, tgt_pool = make_pools(seed)
        _run_span(
            model,
            state,
            plan,
            src_pool,
            tgt_pool,
            0,
            step_records,
            make_dev_hook(model),
            config.eval_every,
        )

    record["steps"] = step_records
    record["dev_curve"] = dev_curve
    record["dev"] = report_to_dict(_evaluate(model, data.target_dev, Domain.TARGET))
    record["test"] = report_to_dict(_evaluate(model, data.target_test, Domain.TARGET))

    return RunResult(
        seed=seed,
        record=record,
        model=model,
        state=state,
        wall_clock_seconds=time.perf_counter() - started,
    )


def canonical_json(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def write_run(output_dir, result: RunResult) -> Path:
    seed_dir = Path(output_dir) / f"seed_{result.seed}"
    seed_dir.mkdir(parents=True, exist_ok=True)
    (seed_dir / "record.json").write_text(canonical_json(result.record) + "\n")
    save_checkpoint(seed_dir / "model.ckpt", result.model, result.state)
    (seed_dir / "timing.json").write_text(
        json.dumps({"wall_clock_seconds": result.wall_clock_seconds}) + "\n"
    )
    return seed_dir


def run_experiment(config: ExperimentConfig) -> list[Path]:
    """Train every configured seed and persist each run; returns run dirs."""
    data = load_experiment_data(config)
    return [
        write_run(config.output_dir, run_seed(config, data, seed))
        for seed in config.seeds
    ]
