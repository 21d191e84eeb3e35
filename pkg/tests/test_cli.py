"""Config handling, CLI commands, and exit codes."""

import json
import math

import pytest

from datanneal.cli import main
from datanneal.config import (
    build_config,
    config_to_dict,
    parse_config_file,
    validate_config,
)
from datanneal.errors import ConfigError
from datanneal.evaluation import report_to_dict, score


def write_config(tmp_path, text, name="exp.conf"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


BASE = """
task = synth
paradigm = vanilla
target_train = t_train.conll
target_dev = t_dev.conll
target_test = t_test.conll
output_dir = runs
"""


# -- config files ----------------------------------------------------------------


def test_parse_config_skips_comments_and_blanks(tmp_path):
    path = write_config(tmp_path, "# header\n\na = 1\n  # indented comment\nb = two words\n")
    assert parse_config_file(path) == {"a": "1", "b": "two words"}


def test_parse_config_reports_offending_line(tmp_path):
    path = write_config(tmp_path, "a = 1\nnot an assignment\n")
    with pytest.raises(ConfigError, match=":2:"):
        parse_config_file(path)


def test_build_config_minimal_vanilla(tmp_path):
    config = build_config(parse_config_file(write_config(tmp_path, BASE)))
    assert config.paradigm == "vanilla"
    assert config.batch_size == 32
    assert config.seeds == (0,)
    assert config.decay is None


def test_build_config_rejects_unknown_key(tmp_path):
    path = write_config(tmp_path, BASE + "momentum = 0.9\n")
    with pytest.raises(ConfigError, match="momentum"):
        build_config(parse_config_file(path))


def test_build_config_rejects_internal_name_for_lambda(tmp_path):
    path = write_config(tmp_path, BASE + "decay = 0.95\n")
    with pytest.raises(ConfigError, match="decay"):
        build_config(parse_config_file(path))


def test_build_config_names_missing_required_keys():
    with pytest.raises(ConfigError, match="target_dev"):
        build_config({"task": "synth", "paradigm": "vanilla"})


def test_lambda_key_populates_decay(tmp_path):
    text = BASE + "paradigm = da\nalpha = 0.95\nlambda = 0.91\nsource_train = s.conll\n"
    config = build_config(parse_config_file(write_config(tmp_path, text)))
    assert config.decay == 0.91
    assert config_to_dict(config)["lambda"] == 0.91
    assert "decay" not in config_to_dict(config)


def test_seeds_parse_as_tuple(tmp_path):
    config = build_config(parse_config_file(write_config(tmp_path, BASE + "seeds = 3, 1, 2\n")))
    assert config.seeds == (3, 1, 2)


def test_da_requires_alpha_and_lambda(tmp_path):
    text = BASE + "paradigm = da\nsource_train = s.conll\n"
    with pytest.raises(ConfigError, match="alpha"):
        build_config(parse_config_file(write_config(tmp_path, text)))


def test_da_outside_tuning_range_needs_relax(tmp_path):
    text = BASE + "paradigm = da\nalpha = 0.95\nlambda = 0.5\nsource_train = s.conll\n"
    with pytest.raises(ConfigError, match="relax_schedule_bounds"):
        build_config(parse_config_file(write_config(tmp_path, text)))
    relaxed = build_config(
        parse_config_file(write_config(tmp_path, text + "relax_schedule_bounds = true\n"))
    )
    assert relaxed.decay == 0.5


def test_relax_still_enforces_open_unit_interval(tmp_path):
    text = (
        BASE
        + "paradigm = da\nalpha = 1.0\nlambda = 0.95\nsource_train = s.conll\n"
        + "relax_schedule_bounds = true\n"
    )
    with pytest.raises(ConfigError, match="alpha"):
        build_config(parse_config_file(write_config(tmp_path, text)))


def test_mult_requires_ratio_and_source(tmp_path):
    with pytest.raises(ConfigError, match="mult_ratio"):
        build_config(parse_config_file(write_config(tmp_path, BASE + "paradigm = mult\n")))
    text = BASE + "paradigm = mult\nmult_ratio = 0.5\n"
    with pytest.raises(ConfigError, match="source_train"):
        build_config(parse_config_file(write_config(tmp_path, text)))


def test_init_requires_phase_length_and_source_dev(tmp_path):
    text = BASE + "paradigm = init\nsource_train = s.conll\n"
    with pytest.raises(ConfigError, match="init_source_steps"):
        build_config(parse_config_file(write_config(tmp_path, text)))
    text += "init_source_steps = 3000\ntotal_steps = 3000\n"
    with pytest.raises(ConfigError, match="init_source_steps"):
        build_config(parse_config_file(write_config(tmp_path, text)))


def test_validate_rejects_non_power_of_two_hash_dim():
    config = build_config(
        {
            "task": "synth",
            "paradigm": "vanilla",
            "target_train": "a",
            "target_dev": "b",
            "target_test": "c",
            "output_dir": "d",
        }
    )
    import dataclasses

    broken = dataclasses.replace(config, hash_dim=1000)
    with pytest.raises(ConfigError, match="power of two"):
        validate_config(broken)


def test_config_to_dict_round_trips(tmp_path):
    text = BASE + "seeds = 1,2\nbatch_size = 16\n"
    config = build_config(parse_config_file(write_config(tmp_path, text)))
    rebuilt = build_config(config_to_dict(config))
    assert rebuilt == config


# -- exit codes -------------------------------------------------------------------


def test_main_usage_error_is_config_exit(capsys):
    assert main(["schedule", "--alpha", "0.9"]) == 1  # missing required flags
    assert "error" in capsys.readouterr().err.lower()


def test_main_unknown_command_is_config_exit(capsys):
    assert main(["frobnicate"]) == 1
    capsys.readouterr()


def test_main_missing_config_file_is_data_exit(tmp_path, capsys):
    assert main(["train", "--config", str(tmp_path / "absent.conf")]) == 2
    capsys.readouterr()


def test_main_missing_corpus_is_data_exit(tmp_path, capsys):
    path = write_config(
        tmp_path,
        BASE.replace("runs", str(tmp_path / "runs")).replace(
            "t_train.conll", str(tmp_path / "absent.conll")
        ),
    )
    assert main(["train", "--config", path]) == 2
    capsys.readouterr()


def test_main_bad_fraction_is_config_exit(tmp_path, capsys):
    corpus = tmp_path / "c.conll"
    corpus.write_text("a\tO\n\n", encoding="utf-8")
    code = main(
        ["subsample", "--in", str(corpus), "--fraction", "1.5", "--seed", "0", "--out", str(tmp_path / "o")]
    )
    assert code == 1
    capsys.readouterr()


# -- schedule command --------------------------------------------------------------


def read_schedule_csv(tmp_path, alpha, lam, batch, steps):
    out = tmp_path / "sched.csv"
    code = main(
        [
            "schedule",
            "--alpha", str(alpha),
            "--lambda", str(lam),
            "--batch-size", str(batch),
            "--total-steps", str(steps),
            "--out", str(out),
        ]
    )
    assert code == 0
    return out.read_text(encoding="utf-8").splitlines()


def test_schedule_csv_layout(tmp_path):
    lines = read_schedule_csv(tmp_path, 0.9, 0.95, 32, 5)
    assert lines[0] == "step,source_ratio,target_ratio,source_count,cum_source"
    assert len(lines) == 1 + 5 + 2
    first = lines[1].split(",")
    assert first[0] == "1"
    assert float(first[1]) == 0.9
    assert float(first[2]) == pytest.approx(0.1, abs=1e-15)
    assert int(first[3]) == 28  # floor(32 * 0.9)


def test_schedule_csv_ratio_column_decays(tmp_path):
    lines = read_schedule_csv(tmp_path, 0.9, 0.95, 32, 40)
    ratios = [float(line.split(",")[1]) for line in lines[1:41]]
    for t, ratio in enumerate(ratios, start=1):
        assert ratio == pytest.approx(0.9 * 0.95 ** (t - 1), rel=1e-12)
    assert all(a > b for a, b in zip(ratios, ratios[1:]))


def test_schedule_csv_quota_conservation(tmp_path):
    lines = read_schedule_csv(tmp_path, 0.9, 0.95, 32, 200)
    rows = [line.split(",") for line in lines[1:201]]
    counts = [int(r[3]) for r in rows]
    cums = [int(r[4]) for r in rows]
    assert cums == [sum(counts[: i + 1]) for i in range(len(counts))]
    ideal = 32 * math.fsum(0.9 * 0.95 ** (t - 1) for t in range(1, 201))
    assert abs(cums[-1] - ideal) < 1.0


def test_schedule_csv_budget_footer(tmp_path):
    lines = read_schedule_csv(tmp_path, 0.9, 0.99, 32, 3000)
    exact = float(lines[-2].split(",")[1])
    approx = float(lines[-1].split(",")[1])
    assert lines[-2].startswith("exact_source_budget,")
    assert lines[-1].startswith("approx_source_budget,")
    assert approx == pytest.approx(2880.0, rel=1e-12)  # 32 * 0.9 / 0.01
    assert exact <= approx
    assert exact == pytest.approx(32 * 0.9 * (1 - 0.99**3000) / 0.01, rel=1e-12)


def test_schedule_rejects_bad_alpha(tmp_path, capsys):
    code = main(
        ["schedule", "--alpha", "1.5", "--lambda", "0.9", "--batch-size", "32", "--total-steps", "5"]
    )
    assert code == 1
    capsys.readouterr()


# -- subsample command --------------------------------------------------------------


CORPUS_TEXT = "\n".join(f"tok{i} O\nend{i} B-PER\n" for i in range(10))


def test_subsample_full_fraction_keeps_everything(tmp_path, capsys):
    src = tmp_path / "in.conll"
    src.write_text(CORPUS_TEXT, encoding="utf-8")
    out = tmp_path / "out.conll"
    assert main(["subsample", "--in", str(src), "--fraction", "1.0", "--seed", "7", "--out", str(out)]) == 0
    assert out.read_text(encoding="utf-8") == CORPUS_TEXT
    assert "kept 10 of 10 sentences" in capsys.readouterr().out


def test_subsample_half_fraction_counts_and_determinism(tmp_path, capsys):
    src = tmp_path / "in.conll"
    src.write_text(CORPUS_TEXT, encoding="utf-8")
    a, b = tmp_path / "a.conll", tmp_path / "b.conll"
    assert main(["subsample", "--in", str(src), "--fraction", "0.5", "--seed", "3", "--out", str(a)]) == 0
    assert main(["subsample", "--in", str(src), "--fraction", "0.5", "--seed", "3", "--out", str(b)]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()
    kept = [blk for blk in a.read_text(encoding="utf-8").split("\n\n") if blk.strip()]
    assert len(kept) == 5


# -- synth command --------------------------------------------------------------------


def test_synth_writes_split_files_and_stats(tmp_path, capsys):
    out_dir = tmp_path / "data"
    assert main(
        [
            "synth", "--out-dir", str(out_dir),
            "--source-sentences", "60", "--target-sentences", "20",
            "--noise-rate", "0.2", "--seed", "4",
        ]
    ) == 0
    capsys.readouterr()
    for tag in ("source", "target"):
        for split in ("train", "dev", "test"):
            assert (out_dir / f"{tag}_{split}.conll").exists()
    stats = (out_dir / "stats.csv").read_text(encoding="utf-8").splitlines()
    assert stats[0] == "name,split,sentences,tokens"
    rows = {(r.split(",")[0], r.split(",")[1]): int(r.split(",")[2]) for r in stats[1:]}
    assert rows[("source", "train")] == 48
    assert rows[("source", "dev")] == 6
    assert rows[("source", "test")] == 6
    assert rows[("target", "train")] == 16
    assert rows[("target", "dev")] == 2
    assert rows[("target", "test")] == 2


def test_synth_output_is_deterministic(tmp_path, capsys):
    args = ["--source-sentences", "40", "--target-sentences", "20", "--noise-rate", "0.3", "--seed", "9"]
    assert main(["synth", "--out-dir", str(tmp_path / "one")] + args) == 0
    assert main(["synth", "--out-dir", str(tmp_path / "two")] + args) == 0
    capsys.readouterr()
    for name in ("source_train.conll", "target_train.conll", "target_test.conll", "stats.csv"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()


def test_synth_rejects_bad_noise_rate(tmp_path, capsys):
    assert main(["synth", "--out-dir", str(tmp_path / "x"), "--noise-rate", "0.9"]) == 1
    capsys.readouterr()


# -- report command --------------------------------------------------------------------


def fake_record(run_dir, paradigm, seed, gold, pred):
    report = score(gold, pred)
    rec = {
        "seed": seed,
        "config": {"paradigm": paradigm},
        "steps": [],
        "dev_curve": [],
        "dev": report_to_dict(report),
        "test": report_to_dict(report),
    }
    seed_dir = run_dir / paradigm / f"seed_{seed}"
    seed_dir.mkdir(parents=True)
    (seed_dir / "record.json").write_text(json.dumps(rec), encoding="utf-8")
    return report


def test_report_empty_dir_is_data_exit(tmp_path, capsys):
    empty = tmp_path / "none"
    empty.mkdir()
    assert main(["report", "--run-dir", str(empty)]) == 2
    capsys.readouterr()


def test_report_aggregates_mean_and_range(tmp_path, capsys):
    run_dir = tmp_path / "runs"
    gold = [("B-PER", "O"), ("B-LOC",)]
    r1 = fake_record(run_dir, "vanilla", 1, gold, gold)  # f1 = 1.0
    r2 = fake_record(run_dir, "vanilla", 2, gold, [("B-PER", "O"), ("O",)])  # f1 = 2/3
    json_out = tmp_path / "report.jsonl"
    assert main(["report", "--run-dir", str(run_dir), "--json-out", str(json_out)]) == 0
    table = capsys.readouterr().out
    records = [json.loads(line) for line in json_out.read_text(encoding="utf-8").splitlines()]
    overall = [r for r in records if r["record"] == "overall"]
    assert len(overall) == 1
    assert overall[0]["paradigm"] == "vanilla"
    assert overall[0]["runs"] == 2
    assert overall[0]["seeds"] == [1, 2]
    mean_f1 = (r1.f1 + r2.f1) / 2
    assert overall[0]["f1"] == pytest.approx(mean_f1)
    assert overall[0]["min_metric"] == pytest.approx(2 / 3)
    assert overall[0]["max_metric"] == pytest.approx(1.0)
    assert "vanilla" in table
    assert f"{mean_f1:.4f}" in table


def test_report_groups_sorted_by_paradigm(tmp_path, capsys):
    run_dir = tmp_path / "runs"
    gold = [("B-PER",)]
    fake_record(run_dir, "vanilla", 1, gold, gold)
    fake_record(run_dir, "da", 1, gold, gold)
    fake_record(run_dir, "mult", 1, gold, gold)
    json_out = tmp_path / "report.jsonl"
    assert main(["report", "--run-dir", str(run_dir), "--json-out", str(json_out)]) == 0
    capsys.readouterr()
    records = [json.loads(line) for line in json_out.read_text(encoding="utf-8").splitlines()]
    order = [r["paradigm"] for r in records if r["record"] == "overall"]
    assert order == ["da", "mult", "vanilla"]


# -- train command (tiny end-to-end) ------------------------------------------------


@pytest.fixture(scope="module")
def tiny_data(tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("tiny") / "data"
    code = main(
        [
            "synth", "--out-dir", str(out_dir),
            "--source-sentences", "40", "--target-sentences", "20",
            "--noise-rate", "0.3", "--seed", "2",
        ]
    )
    assert code == 0
    return out_dir


def tiny_config_text(data_dir, out_dir, extra=""):
    return (
        f"task = synth\n"
        f"target_train = {data_dir}/target_train.conll\n"
        f"target_dev = {data_dir}/target_dev.conll\n"
        f"target_test = {data_dir}/target_test.conll\n"
        f"source_train = {data_dir}/source_train.conll\n"
        f"source_dev = {data_dir}/source_dev.conll\n"
        f"output_dir = {out_dir}\n"
        f"batch_size = 8\n"
        f"total_steps = 30\n"
        f"eval_every = 10\n"
        f"hash_dim = 1024\n"
        f"hidden_dim = 8\n"
        f"seeds = 0\n"
    ) + extra


def run_train(tmp_path, tiny_data, name, extra, command="train"):
    out_dir = tmp_path / name
    conf = write_config(tmp_path, tiny_config_text(tiny_data, out_dir, extra), f"{name}.conf")
    assert main([command, "--config", conf]) == 0
    record = json.loads((out_dir / "seed_0" / "record.json").read_text(encoding="utf-8"))
    return out_dir, record


def test_train_vanilla_never_draws_source(tmp_path, tiny_data, capsys):
    _, record = run_train(tmp_path, tiny_data, "vanilla", "paradigm = vanilla\n")
    capsys.readouterr()
    steps = record["steps"]
    assert len(steps) == 30
    assert [row[0] for row in steps] == list(range(1, 31))
    assert all(row[1] == 0.0 for row in steps)  # source ratio
    assert all(row[2] == 0 for row in steps)  # realized source count
    assert len(record["dev_curve"]) == 3
    assert [t for t, _ in record["dev_curve"]] == [10, 20, 30]


def test_train_da_quota_matches_budget(tmp_path, tiny_data, capsys):
    extra = "paradigm = da\nalpha = 0.9\nlambda = 0.5\nrelax_schedule_bounds = true\n"
    _, record = run_train(tmp_path, tiny_data, "da", extra)
    capsys.readouterr()
    counts = [row[2] for row in record["steps"]]
    ratios = [row[1] for row in record["steps"]]
    assert ratios[0] == 0.9
    assert all(r == pytest.approx(0.9 * 0.5 ** t) for t, r in enumerate(ratios))
    ideal = 8 * math.fsum(ratios)
    assert abs(sum(counts) - ideal) < 1.0
    assert sum(counts) > 0
    assert counts[0] == 7  # floor(8 * 0.9)


def test_train_rerun_is_byte_identical(tmp_path, tiny_data, capsys):
    out_dir, _ = run_train(tmp_path, tiny_data, "repeat", "paradigm = vanilla\n")
    first_record = (out_dir / "seed_0" / "record.json").read_bytes()
    first_model = (out_dir / "seed_0" / "model.ckpt").read_bytes()
    conf = str(tmp_path / "repeat.conf")
    assert main(["train", "--config", conf]) == 0
    capsys.readouterr()
    assert (out_dir / "seed_0" / "record.json").read_bytes() == first_record
    assert (out_dir / "seed_0" / "model.ckpt").read_bytes() == first_model


def test_train_flag_overrides_config_file(tmp_path, tiny_data, capsys):
    out_a = tmp_path / "flag_a"
    conf = write_config(
        tmp_path, tiny_config_text(tiny_data, out_a, "paradigm = vanilla\n"), "flag.conf"
    )
    out_b = tmp_path / "flag_b"
    assert main(["train", "--config", conf, "--output-dir", str(out_b), "--total-steps", "12"]) == 0
    capsys.readouterr()
    assert not out_a.exists()
    record = json.loads((out_b / "seed_0" / "record.json").read_text(encoding="utf-8"))
    assert len(record["steps"]) == 12
    assert record["config"]["total_steps"] == 12


def test_init_command_selects_candidate(tmp_path, tiny_data, capsys):
    extra = "init_source_steps = 10\ninit_candidates = 3\n"
    _, record = run_train(tmp_path, tiny_data, "init", extra, command="init")
    capsys.readouterr()
    assert record["config"]["paradigm"] == "init"
    assert len(record["candidate_scores"]) == 3
    best = max(record["candidate_scores"])
    assert record["candidate_scores"][record["selected_candidate"]] == best
    assert record["candidate_scores"].index(best) == record["selected_candidate"]
    steps = record["steps"]
    assert len(steps) == 30
    assert all(row[2] == 8 for row in steps[:10])  # pure source phase
    assert all(row[2] == 0 for row in steps[10:])  # pure target phase


def test_init_command_rejects_paradigm_flag(tmp_path, tiny_data, capsys):
    conf = write_config(
        tmp_path,
        tiny_config_text(tiny_data, tmp_path / "x", "init_source_steps = 10\n"),
        "initflag.conf",
    )
    assert main(["init", "--config", conf, "--paradigm", "da"]) == 1
    capsys.readouterr()


def test_train_multiple_seeds_write_separate_dirs(tmp_path, tiny_data, capsys):
    out_dir = tmp_path / "multi"
    conf = write_config(
        tmp_path,
        tiny_config_text(tiny_data, out_dir, "paradigm = vanilla\n").replace(
            "seeds = 0", "seeds = 0, 1"
        ),
        "multi.conf",
    )
    assert main(["train", "--config", conf]) == 0
    out = capsys.readouterr().out
    assert str(out_dir / "seed_0") in out
    assert str(out_dir / "seed_1") in out
    rec0 = json.loads((out_dir / "seed_0" / "record.json").read_text(encoding="utf-8"))
    rec1 = json.loads((out_dir / "seed_1" / "record.json").read_text(encoding="utf-8"))
    assert rec0["seed"] == 0
    assert rec1["seed"] == 1
    assert rec0["steps"] != rec1["steps"]  # different batch order
