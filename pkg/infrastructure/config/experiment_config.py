#!/usr/bin/env python3
"""
⚙️ EXPERIMENT CONFIGURATION
==========================
Per-command default tables and flat key=value configuration files.

Precedence (lowest first): defaults -> --config file -> --set overrides.
Unknown keys are rejected; values are coerced to the type of their default.

Domain-Driven Design: Infrastructure configuration layer.
"""

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

from domain.entities.fast_weights import DEFAULT_SWEEP_GRID
from domain.exceptions import ConfigError

ENV_LOG_LEVEL = "EMA_WORKBENCH_LOG_LEVEL"
ENV_RESULTS_DIR = "EMA_WORKBENCH_RESULTS_DIR"
DEFAULT_RESULTS_DIR = "results/runs"

# key -> (default, help)
Table = Dict[str, Tuple[Any, str]]

SPEN_KEYS: Table = {
    "seed": (0, "random seed for initialization, batches and corpora"),
    "corpus": ("", "UTF-8 training text; empty means the synthetic grammar corpus"),
    "n_sentences": (4000, "sentences in the synthetic corpus"),
    "d_model": (128, "model width"),
    "d_ff": (512, "FFN width"),
    "n_blocks": (2, "number of blocks"),
    "k_active": (31, "active FFN units per token"),
    "seq_len": (256, "training context length"),
    "n_heads": (1, "heads of the softmax-attention predictor"),
    "lb_weight": (0.01, "load-balance loss weight"),
    "ste_mode": ("identity", "top-k backward: identity or masked"),
    "predictor": ("static", "static, linear_attention, softmax_attention or projected_static"),
    "chunk_len": (64, "chunk length of the training-mode trace scan"),
    "steps": (500, "optimizer steps"),
    "batch_size": (8, "sequences per step"),
    "peak_lr": (2e-3, "peak learning rate"),
    "warmup_steps": (-1, "warmup steps; -1 means 5% of steps"),
    "weight_decay": (0.1, "AdamW weight decay on matrices"),
    "grad_clip": (1.0, "global gradient-norm clip"),
    "dtype": ("float32", "float32 or float64"),
    "log_every": (50, "steps between progress logs"),
    "eval_fraction": (0.1, "tail share of the corpus held out for evaluation"),
}

COMMAND_DEFAULTS: Dict[str, Table] = {
    "grammar": {
        "seed": (0, "random seed"),
        "n_train": (5000, "training sentences (grammar A)"),
        "n_test": (3000, "sentences per held-out split"),
    },
    "table1": {
        "seed": (0, "random seed for the hierarchies"),
        "corpus_dir": ("", "directory written by the grammar command; empty generates one in the run"),
        "dims": ((512, 256, 128, 64), "level widths"),
        "lam": (0.01, "ridge strength"),
        "projection_dims": ((1024, 512), "widths of the random-projection control"),
        "projection_seeds": (5, "projection seeds per width"),
        "use_spa": (True, "enable the sparse associative buffer"),
        "no_machinery_ablation": (True, "also probe a pair trained without SPA on activation plus fast traces"),
        "workers": (1, "threads for the evaluation passes"),
        "dump_representations": (False, "write <kind>.f32 dumps"),
        "log_every": (1000, "sentences between progress logs"),
    },
    "spen-train": dict(SPEN_KEYS, **{
        "check_equivalence": (True, "compare chunked and sequential logits after training"),
    }),
    "ablate": dict(SPEN_KEYS, **{
        "seeds": ((0, 1, 2), "seeds per arm"),
        "arms": ("static,linear_attention,softmax_attention", "comma-separated predictor arms"),
        "parallel_arms": (False, "train arms concurrently in worker threads"),
    }),
    "stream": dict(SPEN_KEYS, **{
        "checkpoint": ("", "SPEN checkpoint; empty trains a static-predictor model first"),
        "window": (200, "tokens per perplexity window"),
        "stream_tokens": (10000, "tokens per domain stream"),
        "grid": (",".join(f"{eta:g}:{pi_max:g}" for eta, pi_max in DEFAULT_SWEEP_GRID),
                 "eta:pi_max arms, comma-separated"),
        "flatness_bins": (10, "bins for the position-flatness check"),
    }),
    "bench": {
        "seed": (0, "random seed"),
        "T": (4096, "sequence length"),
        "d": (256, "feature width"),
        "chunk_len": (128, "chunk length"),
        "repeats": (5, "timing repeats"),
        "lanes": (4, "thread lanes"),
        "alpha": (0.02, "decay"),
    },
}

TRUE_WORDS = {"1", "true", "yes", "on"}
FALSE_WORDS = {"0", "false", "no", "off"}


def coerce(key: str, raw: str, default: Any) -> Any:
    """Parse `raw` into the type of `default`"""
    text = raw.strip()
    try:
        if isinstance(default, bool):
            lowered = text.lower()
            if lowered in TRUE_WORDS:
                return True
            if lowered in FALSE_WORDS:
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            element = type(default[0]) if default else float
            return tuple(element(part.strip()) for part in text.split(",") if part.strip())
        return text
    except ValueError:
        raise ConfigError(f"bad value for {key!r}: {raw!r} (expected {type(default).__name__})") from None


def format_value(value: Any) -> str:
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def parse_lines(lines: Iterable[str], source: str) -> Dict[str, str]:
    pairs: Dict[str, str] = {}
    for number, line in enumerate(lines, 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{number}: expected key=value, got {line.strip()!r}")
        key, _, value = stripped.partition("=")
        pairs[key.strip()] = value.strip()
    return pairs


@dataclass
class ExperimentConfig:
    """Resolved key=value parameters of one command"""
    command: str
    values: Dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def get(self, key: str, default: Any = None) -> Any:
        return self.values.get(key, default)

    def resolved_text(self) -> str:
        lines = [f"command={self.command}"]
        lines += [f"{key}={format_value(self.values[key])}" for key in sorted(self.values)]
        return "\n".join(lines) + "\n"


def defaults_for(command: str) -> Table:
    if command not in COMMAND_DEFAULTS:
        raise ConfigError(f"unknown command {command!r}")
    return COMMAND_DEFAULTS[command]


def describe(command: str) -> str:
    """Help text listing every key with its default"""
    table = defaults_for(command)
    return "\n".join(f"  {key} = {format_value(default)}    {text}" for key, (default, text) in table.items())


def load_config(command: str,
                config_file: Optional[str] = None,
                overrides: Optional[List[str]] = None) -> ExperimentConfig:
    table = defaults_for(command)
    values = {key: default for key, (default, _) in table.items()}

    raw: Dict[str, str] = {}
    if config_file:
        path = Path(config_file)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        raw.update(parse_lines(path.read_text(encoding="utf-8").splitlines(), str(path)))
    if overrides:
        raw.update(parse_lines(overrides, "--set"))

    unknown = sorted(set(raw) - set(table))
    if unknown:
        raise ConfigError(f"unknown keys for {command}: {', '.join(unknown)}")
    for key, value in raw.items():
        values[key] = coerce(key, value, table[key][0])
    return ExperimentConfig(command=command, values=values)


def results_dir() -> Path:
    return Path(os.getenv(ENV_RESULTS_DIR, DEFAULT_RESULTS_DIR))


def env_log_level() -> Optional[str]:
    return os.getenv(ENV_LOG_LEVEL)
