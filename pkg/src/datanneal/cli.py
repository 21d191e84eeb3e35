"""Command-line harness for the annealed-transfer experiment suite.

Commands: train (and its alias init), schedule, subsample, synth, report.
Experiment flags mirror the config-file keys; --config loads a key=value
file and explicit flags override it. Exit codes: 0 success, 1 config
error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .config import ExperimentConfig, build_config, parse_config_file
from .corpus import read_conll, stats_csv, subsample, write_conll
from .errors import ConfigError, DataError
from .evaluation import aggregate_runs, primary_metric, report_from_dict
from .runner import run_experiment
from .sampling import Domain, QuotaAccumulator, source_quota
from .schedule import (
    AnnealingSchedule,
    approx_source_budget,
    exact_source_budget,
    source_ratio_at,
    target_ratio_at,
    Annealed,
    TrainingPlan,
)
from .synth import SynthConfig, synth_transfer_pair

_CONFIG_KEYS = tuple(
    "lambda" if f.name == "decay" else f.name
    for f in dataclasses.fields(ExperimentConfig)
)


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors surface as config errors."""

    def error(self, message):
        raise ConfigError(message)


def _add_experiment_flags(parser: argparse.ArgumentParser, with_paradigm: bool) -> None:
    parser.add_argument("--config", help="key=value config file; flags override it")
    for key in _CONFIG_KEYS:
        if key == "paradigm" and not with_paradigm:
            continue
        flag = "--" + key.replace("_", "-")
        if key == "relax_schedule_bounds":
            parser.add_argument(flag, dest=key, action="store_const", const="true")
        else:
            parser.add_argument(flag, dest=key)


def _experiment_config(args: argparse.Namespace, forced_paradigm=None) -> ExperimentConfig:
    values: dict = {}
    if args.config:
        values.update(parse_config_file(args.config))
    flags = vars(args)
    for key in _CONFIG_KEYS:
        if flags.get(key) is not None:
            values[key] = flags[key]
    if forced_paradigm is not None:
        values["paradigm"] = forced_paradigm
    return build_config(values)


def _read_corpus(path, token_column: int, label_column: int, domain=Domain.TARGET):
    with open(path, "r", encoding="utf-8") as fh:
        return read_conll(
            fh,
            token_column=token_column,
            label_column=label_column,
            domain=domain,
            name=Path(path).stem,
        )


# -- commands -----------------------------------------------------------------


def cmd_train(args: argparse.Namespace, forced_paradigm=None) -> int:
    config = _experiment_config(args, forced_paradigm)
    for run_dir in run_experiment(config):
        print(run_dir)
    return 0


def cmd_schedule(args: argparse.Namespace) -> int:
    try:
        schedule = AnnealingSchedule(alpha=args.alpha, decay=args.decay)
        plan = TrainingPlan(args.batch_size, args.total_steps, Annealed(schedule))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    lines = ["step,source_ratio,target_ratio,source_count,cum_source"]
    acc = QuotaAccumulator()
    cum = 0
    for t in range(1, plan.total_steps + 1):
        ratio = source_ratio_at(schedule, t)
        count, acc = source_quota(plan.batch_size, ratio, acc)
        cum += count
        lines.append(f"{t},{ratio!r},{target_ratio_at(schedule, t)!r},{count},{cum}")
    lines.append(f"exact_source_budget,{exact_source_budget(plan)!r}")
    lines.append(f"approx_source_budget,{approx_source_budget(plan.batch_size, schedule)!r}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_subsample(args: argparse.Namespace) -> int:
    if not 0.0 < args.fraction <= 1.0:
        raise ConfigError(f"fraction must lie in (0, 1], got {args.fraction}")
    corpus = _read_corpus(args.input, args.token_column, args.label_column)
    kept = subsample(corpus, args.fraction, args.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        write_conll(kept, fh)
    print(f"{args.out}: kept {len(kept.sentences)} of {len(corpus.sentences)} sentences")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    try:
        config = SynthConfig(
            source_sentences=args.source_sentences,
            target_sentences=args.target_sentences,
            noise_rate=args.noise_rate,
            seed=args.seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    source, target = synth_transfer_pair(config)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stats_entries = []
    for corpus, tag in ((source, "source"), (target, "target")):
        n = len(corpus.sentences)
        hold = n // 10
        splits = {
            "train": corpus.sentences[: n - 2 * hold],
            "dev": corpus.sentences[n - 2 * hold : n - hold],
            "test": corpus.sentences[n - hold :],
        }
        for split, sentences in splits.items():
            part = dataclasses.replace(corpus, sentences=sentences)
            path = out_dir / f"{tag}_{split}.conll"
            with open(path, "w", encoding="utf-8") as fh:
                write_conll(part, fh)
            stats_entries.append((tag, split, part))
    (out_dir / "stats.csv").write_text(stats_csv(stats_entries), encoding="utf-8")
    print(out_dir)
    return 0


def _format_cell(value) -> str:
    if value is None:
        return "-"
    return f"{value:.4f}" if isinstance(value, float) else str(value)


def cmd_report(args: argparse.Namespace) -> int:
    run_dir = Path(args.run_dir)
    records = []
    for path in sorted(run_dir.rglob("record.json")):
        records.append(json.loads(path.read_text(encoding="utf-8")))
    if not records:
        raise DataError(f"no run records found under {run_dir}")

    groups: dict[str, list[dict]] = {}
    for rec in records:
        groups.setdefault(rec["config"]["paradigm"], []).append(rec)

    json_lines = []
    table = [["paradigm", "runs", "acc", "P", "R", "F1", "min", "max"]]
    for paradigm in sorted(groups):
        recs = sorted(groups[paradigm], key=lambda r: r["seed"])
        reports = [report_from_dict(r[args.split]) for r in recs]
        mean = aggregate_runs(reports)
        metrics = [primary_metric(rep) for rep in reports]
        overall = {
            "record": "overall",
            "paradigm": paradigm,
            "split": args.split,
            "runs": len(recs),
            "seeds": [r["seed"] for r in recs],
            "token_accuracy": mean.token_accuracy,
            "precision": mean.precision,
            "recall": mean.recall,
            "f1": mean.f1,
            "min_metric": min(metrics),
            "max_metric": max(metrics),
        }
        json_lines.append(overall)
        for ctype, m in mean.per_type.items():
            json_lines.append(
                {
                    "record": "type",
                    "paradigm": paradigm,
                    "split": args.split,
                    "type": ctype,
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "gold_count": m.gold_count,
                    "pred_count": m.pred_count,
                    "runs_missing": m.runs_missing,
                }
            )
        table.append(
            [
                paradigm,
                str(len(recs)),
                _format_cell(mean.token_accuracy),
                _format_cell(mean.precision),
                _format_cell(mean.recall),
                _format_cell(mean.f1),
                _format_cell(min(metrics)),
                _format_cell(max(metrics)),
            ]
        )

    payload = "\n".join(json.dumps(obj, sort_keys=True) for obj in json_lines) + "\n"
    if args.json_out:
        Path(args.json_out).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)

    widths = [max(len(row[i]) for row in table) for i in range(len(table[0]))]
    for row in table:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return 0


# -- wiring ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="datanneal", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run one experiment config across its seeds")
    _add_experiment_flags(p_train, with_paradigm=True)

    p_init = sub.add_parser("init", help="train with paradigm=init (source pretrain, then fine-tune)")
    _add_experiment_flags(p_init, with_paradigm=False)

    p_sched = sub.add_parser("schedule", help="dump the annealing schedule as CSV")
    p_sched.add_argument("--alpha", type=float, required=True)
    p_sched.add_argument("--lambda", dest="decay", type=float, required=True)
    p_sched.add_argument("--batch-size", type=int, required=True)
    p_sched.add_argument("--total-steps", type=int, required=True)
    p_sched.add_argument("--out", help="CSV path; stdout when omitted")

    p_sub = sub.add_parser("subsample", help="deterministically subsample a corpus file")
    p_sub.add_argument("--in", dest="input", required=True)
    p_sub.add_argument("--fraction", type=float, required=True)
    p_sub.add_argument("--seed", type=int, required=True)
    p_sub.add_argument("--out", required=True)
    p_sub.add_argument("--token-column", type=int, default=0)
    p_sub.add_argument("--label-column", type=int, default=1)

    p_synth = sub.add_parser("synth", help="generate the synthetic source/target corpus pair")
    p_synth.add_argument("--out-dir", required=True)
    p_synth.add_argument("--source-sentences", type=int, default=2500)
    p_synth.add_argument("--target-sentences", type=int, default=250)
    p_synth.add_argument("--noise-rate", type=float, default=0.3)
    p_synth.add_argument("--seed", type=int, default=0)

    p_rep = sub.add_parser("report", help="aggregate run records by paradigm")
    p_rep.add_argument("--run-dir", required=True)
    p_rep.add_argument("--split", choices=("dev", "test"), default="test")
    p_rep.add_argument("--json-out", help="write JSON-lines here instead of stdout")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "train":
            return cmd_train(args)
        if args.command == "init":
            return cmd_train(args, forced_paradigm="init")
        if args.command == "schedule":
            return cmd_schedule(args)
        if args.command == "subsample":
            return cmd_subsample(args)
        if args.command == "synth":
            return cmd_synth(args)
        if args.command == "report":
            return cmd_report(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal invariant violation
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
