"""Run configuration: one strict JSON document drives every CLI command.

The schema has three sections. Unknown keys anywhere are errors, so typos
fail fast instead of silently falling back to defaults.

    {
      "model":    {"encoder": {...}, "decoder": {...}, "generation": {...}},
      "training": {"steps": int, "seed": int, "batch_size": int,
                   "grad_accum": int, "patience": int | null,
                   "masking": {...}, "optimizer": {...},
                   "schedule": [[until | null, batch], ...]},
      "paths":    {"corpus": str, "pairs": str, ...}
    }

Only "model.encoder", "training.steps" and "training.seed" are required;
everything else has defaults. Parsing and serialization are inverses, so a
config round-trips losslessly.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

from .encoder import EncoderConfig, encoder_config_from_dict, encoder_config_to_dict
from .errors import ConfigError
from .seq2seq import DecoderConfig, GenerationConfig
from .training import AdamW, BatchSchedule, MaskingPolicy

PATH_KEYS = (
    "corpus",
    "pairs",
    "val_pairs",
    "checkpoint_in",
    "checkpoint_out",
    "loss_csv",
    "sources",
    "output",
)


@dataclass(frozen=True)
class OptimizerSettings:
    base_lr: float = 5e-5
    weight_decay: float = 0.01
    warmup_steps: int = 500
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def build(self) -> AdamW:
        return AdamW(
            base_lr=self.base_lr,
            weight_decay=self.weight_decay,
            warmup_steps=self.warmup_steps,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
        )


@dataclass(frozen=True)
class RunConfig:
    encoder: EncoderConfig
    decoder: DecoderConfig | None = None
    generation: GenerationConfig | None = None
    masking: MaskingPolicy = MaskingPolicy()
    optimizer: OptimizerSettings = OptimizerSettings()
    schedule: tuple = ((None, 4),)
    steps: int = 0
    seed: int = 0
    batch_size: int = 4
    grad_accum: int = 1
    patience: int | None = None
    paths: tuple = ()

    def batch_schedule(self) -> BatchSchedule:
        return BatchSchedule(list(self.schedule))

    def path(self, key: str) -> str | None:
        return dict(self.paths).get(key)


def _check_keys(section: dict, allowed, where: str) -> None:
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _section(data: dict, key: str) -> dict:
    value = data.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError(f"config section '{key}' must be an object")
    return value


def _build(cls, data: dict, where: str):
    """Construct a config dataclass from a dict, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be an object")
    _check_keys(data, [f.name for f in dataclasses.fields(cls)], where)
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad {where}: {exc}") from exc


def _parse_schedule(raw, where: str) -> tuple:
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{where} must be a non-empty list of [until, batch] pairs")
    phases = []
    for item in raw:
        if not isinstance(item, (list, tuple)) or len(item) != 2:
            raise ConfigError(f"{where} entries must be [until, batch] pairs, got {item!r}")
        phases.append((item[0], item[1]))
    BatchSchedule(phases)  # delegate boundary/ordering validation
    return tuple(phases)


def parse_run_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    _check_keys(data, ("model", "training", "paths"), "config")

    model = _section(data, "model")
    _check_keys(model, ("encoder", "decoder", "generation"), "model")
    if "encoder" not in model:
        raise ConfigError("model.encoder is required")
    enc_dict = model["encoder"]
    if not isinstance(enc_dict, dict):
        raise ConfigError("model.encoder must be an object")
    _check_keys(enc_dict, [f.name for f in dataclasses.fields(EncoderConfig)], "model.encoder")
    encoder = encoder_config_from_dict(enc_dict)
    decoder = (
        _build(DecoderConfig, model["decoder"], "model.decoder") if "decoder" in model else None
    )
    generation = (
        _build(GenerationConfig, model["generation"], "model.generation")
        if "generation" in model
        else None
    )

    training = _section(data, "training")
    _check_keys(
        training,
        ("masking", "optimizer", "schedule", "steps", "seed",
         "batch_size", "grad_accum", "patience"),
        "training",
    )
    for key in ("steps", "seed"):
        if key not in training:
            raise ConfigError(f"training.{key} is required")
        if not isinstance(training[key], int) or isinstance(training[key], bool):
            raise ConfigError(f"training.{key} must be an integer")
    masking = _build(MaskingPolicy, training.get("masking", {}), "training.masking")
    optimizer = _build(OptimizerSettings, training.get("optimizer", {}), "training.optimizer")
    schedule = _parse_schedule(training.get("schedule", [[None, 4]]), "training.schedule")
    batch_size = training.get("batch_size", 4)
    grad_accum = training.get("grad_accum", 1)
    patience = training.get("patience", None)
    if batch_size < 1 or grad_accum < 1:
        raise ConfigError("training.batch_size and training.grad_accum must be >= 1")
    if patience is not None and patience < 1:
        raise ConfigError("training.patience must be >= 1 when set")

    paths = _section(data, "paths")
    _check_keys(paths, PATH_KEYS, "paths")
    for key, value in paths.items():
        if not isinstance(value, str):
            raise ConfigError(f"paths.{key} must be a string")
    ordered = tuple((key, paths[key]) for key in PATH_KEYS if key in paths)

    return RunConfig(
        encoder=encoder,
        decoder=decoder,
        generation=generation,
        masking=masking,
        optimizer=optimizer,
        schedule=schedule,
        steps=training["steps"],
        seed=training["seed"],
        batch_size=batch_size,
        grad_accum=grad_accum,
        patience=patience,
        paths=ordered,
    )


def run_config_to_dict(cfg: RunConfig) -> dict:
    model = {"encoder": encoder_config_to_dict(cfg.encoder)}
    if cfg.decoder is not None:
        model["decoder"] = dataclasses.asdict(cfg.decoder)
    if cfg.generation is not None:
        model["generation"] = dataclasses.asdict(cfg.generation)
    return {
        "model": model,
        "training": {
            "masking": dataclasses.asdict(cfg.masking),
            "optimizer": dataclasses.asdict(cfg.optimizer),
            "schedule": [[until, batch] for until, batch in cfg.schedule],
            "steps": cfg.steps,
            "seed": cfg.seed,
            "batch_size": cfg.batch_size,
            "grad_accum": cfg.grad_accum,
            "patience": cfg.patience,
        },
        "paths": dict(cfg.paths),
    }


def load_run_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return parse_run_config(data)


def save_run_config(path, cfg: RunConfig) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(run_config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
