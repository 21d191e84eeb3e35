"""Experiment configuration: a flat key=value file plus CLI flag overrides.

The file format is deliberately primitive: UTF-8 lines of ``key = value``,
blank lines and full-line ``#`` comments ignored. Flags always win over
file values. The mixing-rate keys keep their conventional names ``alpha``
and ``lambda`` externally; internally the decay is stored as ``decay``
because ``lambda`` is reserved in Python.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ConfigError

TASKS = ("ner", "pos", "chunk", "synth")
PARADIGMS = ("vanilla", "mult", "init", "da")

# Mixing hyperparameters are expected inside the usual tuning range; the
# relax flag lifts the bounds to (0, 1) for deliberate out-of-range runs.
TUNED_LOW = 0.9
TUNED_HIGH = 0.99


@dataclass
class ExperimentConfig:
    task: str
    paradigm: str
    target_train: str
    target_dev: str
    target_test: str
    output_dir: str
    source_train: str | None = None
    source_dev: str | None = None
    token_column: int = 0
    label_column: int = 1
    batch_size: int = 32
    total_steps: int = 3000
    alpha: float | None = None
    decay: float | None = None
    mult_ratio: float | None = None
    init_source_steps: int | None = None
    init_candidates: int = 3
    seeds: tuple[int, ...] = (0,)
    subsample_fraction: float = 1.0
    learning_rate: float = 0.1
    l2: float = 1e-6
    hash_dim: int = 2**18
    hidden_dim: int = 64
    eval_every: int = 200
    relax_schedule_bounds: bool = False


# External key name -> dataclass attribute. Only "lambda" differs.
_KEY_TO_ATTR = {f.name: f.name for f in fields(ExperimentConfig)} | {"lambda": "decay"}
del _KEY_TO_ATTR["decay"]


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_seeds(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(s) for s in text)
    parts = [p for p in str(text).replace(",", " ").split() if p]
    if not parts:
        raise ValueError("empty seed list")
    return tuple(int(p) for p in parts)


_PARSERS = {
    "token_column": int,
    "label_column": int,
    "batch_size": int,
    "total_steps": int,
    "alpha": float,
    "decay": float,
    "mult_ratio": float,
    "init_source_steps": int,
    "init_candidates": int,
    "seeds": _parse_seeds,
    "subsample_fraction": float,
    "learning_rate": float,
    "l2": float,
    "hash_dim": int,
    "hidden_dim": int,
    "eval_every": int,
    "relax_schedule_bounds": _parse_bool,
}


def parse_config_file(path) -> dict[str, str]:
    """Raw key -> value strings from a flat config file."""
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    return values


def build_config(values: dict) -> ExperimentConfig:
    """Typed, validated config from a raw key -> value mapping."""
    kwargs = {}
    for key, value in values.items():
        attr = _KEY_TO_ATTR.get(key)
        if attr is None:
            raise ConfigError(f"unknown config key {key!r}")
        if value is None:
            continue
        parser = _PARSERS.get(attr)
        try:
            kwargs[attr] = parser(value) if parser and isinstance(value, str) else value
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from None
    if "seeds" in kwargs:
        kwargs["seeds"] = _parse_seeds(kwargs["seeds"])
    missing = [
        name
        for name in ("task", "paradigm", "target_train", "target_dev", "target_test", "output_dir")
        if name not in kwargs
    ]
    if missing:
        raise ConfigError(f"missing required config keys: {', '.join(missing)}")
    config = ExperimentConfig(**kwargs)
    validate_config(config)
    return config


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _check_tuned(name: str, value: float, relaxed: bool) -> None:
    _require(0.0 < value < 1.0, f"{name} must lie in (0, 1), got {value}")
    if not relaxed:
        _require(
            TUNED_LOW < value < TUNED_HIGH,
            f"{name}={value} outside the tuning range ({TUNED_LOW}, {TUNED_HIGH}); "
            "set relax_schedule_bounds=true to override",
        )


def validate_config(c: ExperimentConfig) -> None:
    _require(c.task in TASKS, f"task must be one of {TASKS}, got {c.task!r}")
    _require(c.paradigm in PARADIGMS, f"paradigm must be one of {PARADIGMS}, got {c.paradigm!r}")
    _require(c.batch_size >= 1, f"batch_size must be >= 1, got {c.batch_size}")
    _require(c.total_steps >= 1, f"total_steps must be >= 1, got {c.total_steps}")
    _require(c.token_column >= 0 and c.label_column >= 0, "column indices must be >= 0")
    _require(c.token_column != c.label_column, "token_column and label_column must differ")
    _require(len(c.seeds) >= 1, "need at least one seed")
    _require(
        0.0 < c.subsample_fraction <= 1.0,
        f"subsample_fraction must lie in (0, 1], got {c.subsample_fraction}",
    )
    _require(c.learning_rate > 0, "learning_rate must be positive")
    _require(c.l2 >= 0, "l2 must be non-negative")
    _require(
        c.hash_dim >= 2 and not (c.hash_dim & (c.hash_dim - 1)),
        f"hash_dim must be a power of two, got {c.hash_dim}",
    )
    _require(c.hidden_dim >= 1, "hidden_dim must be >= 1")
    _require(c.eval_every >= 1, "eval_every must be >= 1")

    if c.paradigm == "da":
        _require(c.alpha is not None and c.decay is not None, "paradigm=da requires alpha and lambda")
        _check_tuned("alpha", c.alpha, c.relax_schedule_bounds)
        _check_tuned("lambda", c.decay, c.relax_schedule_bounds)
    if c.paradigm == "mult":
        _require(c.mult_ratio is not None, "paradigm=mult requires mult_ratio")
        _require(0.0 <= c.mult_ratio <= 1.0, f"mult_ratio must lie in [0, 1], got {c.mult_ratio}")
    if c.paradigm == "init":
        _require(c.init_source_steps is not None, "paradigm=init requires init_source_steps")
        _require(
            1 <= c.init_source_steps < c.total_steps,
            f"init_source_steps must lie in [1, total_steps), got {c.init_source_steps}",
        )
        _require(c.init_candidates >= 1, "init_candidates must be >= 1")
        _require(c.source_dev is not None, "paradigm=init requires source_dev for candidate selection")
    if c.paradigm in ("mult", "init", "da"):
        _require(c.source_train is not None, f"paradigm={c.paradigm} requires source_train")


def config_to_dict(c: ExperimentConfig) -> dict:
    """Round-trippable plain mapping using external key names."""
    out = {}
    for f in fields(ExperimentConfig):
        key = "lambda" if f.name == "decay" else f.name
        value = getattr(c, f.name)
        out[key] = list(value) if isinstance(value, tuple) else value
    return out
