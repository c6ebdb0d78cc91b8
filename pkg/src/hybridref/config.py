"""Run configuration: one JSON document covering encoder, training, and loss
settings plus the global seed.

Layout (all sections optional, unknown keys are rejected):

    {"seed": 0,
     "encoder":  {... EncoderConfig fields ...},
     "training": {... TrainConfig fields except seed/loss ...},
     "loss":     {... LossConfig fields ...}}

Precedence is CLI flag > config file > built-in default; the CLI applies its
flag overrides on top of the parsed file.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from hybridref.encoder import EncoderConfig
from hybridref.errors import ConfigError
from hybridref.losses import LossConfig
from hybridref.training.loop import TrainConfig

_TOP_KEYS = ("seed", "encoder", "training", "loss")


def _check_unknown(section: dict, allowed, where: str) -> None:
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown {where} fields: {sorted(unknown)}")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    training: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.training.seed != self.seed:
            object.__setattr__(self, "training", replace(self.training, seed=self.seed))

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("run config must be a JSON object")
        _check_unknown(doc, _TOP_KEYS, "run config")
        seed = doc.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigError(f"seed must be an integer, got {seed!r}")

        enc_section = dict(doc.get("encoder", {}))
        encoder = EncoderConfig.from_dict(enc_section)

        loss_section = dict(doc.get("loss", {}))
        _check_unknown(loss_section, [f.name for f in fields(LossConfig)], "loss")
        loss = LossConfig(**loss_section)

        train_section = dict(doc.get("training", {}))
        for reserved, where in (("seed", "top-level 'seed'"), ("loss", "the 'loss' section")):
            if reserved in train_section:
                raise ConfigError(f"training.{reserved} is not allowed; use {where}")
        allowed = [f.name for f in fields(TrainConfig) if f.name not in ("seed", "loss")]
        _check_unknown(train_section, allowed, "training")
        if "select_epochs" in train_section:
            window = train_section["select_epochs"]
            if not (isinstance(window, (list, tuple)) and len(window) == 2):
                raise ConfigError("training.select_epochs must be a [low, high] pair")
            train_section["select_epochs"] = (int(window[0]), int(window[1]))
        training = TrainConfig(seed=seed, loss=loss, **train_section)
        return cls(seed=seed, encoder=encoder, training=training)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read run config {path}: {exc}") from exc
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        training = asdict(self.training)
        loss = training.pop("loss")
        training.pop("seed")
        training["select_epochs"] = list(self.training.select_epochs)
        return {
            "seed": self.seed,
            "encoder": asdict(self.encoder),
            "training": training,
            "loss": loss,
        }

    def override(self, **kwargs) -> "RunConfig":
        """Apply CLI-level overrides (highest precedence). None values are ignored."""
        out = self
        if kwargs.get("seed") is not None:
            seed = int(kwargs["seed"])
            out = RunConfig(seed=seed, encoder=out.encoder,
                            training=replace(out.training, seed=seed))
        training_over = {k: v for k, v in kwargs.items()
                         if k in {f.name for f in fields(TrainConfig)} and k != "seed" and v is not None}
        if training_over:
            out = RunConfig(seed=out.seed, encoder=out.encoder,
                            training=replace(out.training, **training_over))
        return out
