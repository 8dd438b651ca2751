"""Experiment configuration: flat key=value files over explicit defaults.

Every hyperparameter defaults to the standard training recipe, so an empty
config reproduces it; a config file only lists deviations.  Seeds are always
explicit after load, making any run reproducible from its manifest.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, fields

from mixtag.augment import CharLmConfig
from mixtag.taggers import SiameseConfig, SigmoidTrainConfig


@dataclass
class ExperimentConfig:
    pair_id: str = "default"
    # seeds
    split_seed: int = 13
    train_seed: int = 42
    support_seed: int = 7  # folded into the siamese train seed stream
    generator_seed: int = 99
    # baseline / augmented training
    baseline_epochs: int = 100
    baseline_batch_size: int = 64
    baseline_lr: float = 1e-3
    # conv1d training
    conv_epochs: int = 100
    conv_batch_size: int = 64
    conv_lr: float = 1e-3
    # character-LM generator training
    charlm_epochs: int = 50
    charlm_batch_size: int = 32
    charlm_lr: float = 1e-3
    charlm_hidden: int = 200
    # siamese training
    siamese_epochs: int = 10
    siamese_batch_size: int = 128
    siamese_lr: float = 1e-4
    siamese_margin: float = 1.0
    siamese_weight_decay: float = 1e-4
    siamese_score_scale: float = 4.0
    siamese_support_size: int = 100
    pair_subsample: float = 1.0

    def baseline_config(self) -> SigmoidTrainConfig:
        return SigmoidTrainConfig(epochs=self.baseline_epochs,
                                  batch_size=self.baseline_batch_size,
                                  lr=self.baseline_lr)

    def conv_config(self) -> SigmoidTrainConfig:
        return SigmoidTrainConfig(epochs=self.conv_epochs,
                                  batch_size=self.conv_batch_size,
                                  lr=self.conv_lr)

    def charlm_config(self) -> CharLmConfig:
        return CharLmConfig(epochs=self.charlm_epochs,
                            batch_size=self.charlm_batch_size,
                            lr=self.charlm_lr, hidden=self.charlm_hidden)

    def siamese_config(self) -> SiameseConfig:
        return SiameseConfig(epochs=self.siamese_epochs,
                             batch_size=self.siamese_batch_size,
                             lr=self.siamese_lr, margin=self.siamese_margin,
                             weight_decay=self.siamese_weight_decay,
                             score_scale=self.siamese_score_scale,
                             support_size=self.siamese_support_size,
                             pair_subsample=self.pair_subsample)

    def hash(self) -> str:
        blob = "\n".join(f"{k}={v}" for k, v in sorted(asdict(self).items()))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_config(path=None) -> ExperimentConfig:
    """Parse ``key = value`` lines (# starts a comment); unknown keys fail."""
    config = ExperimentConfig()
    if path is None:
        return config
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    casts = {"str": str, "int": int, "float": float}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{line_no}: expected key = value")
            key, _, value = (part.strip() for part in text.partition("="))
            if key not in types:
                raise ValueError(f"{path}:{line_no}: unknown config key {key!r}")
            setattr(config, key, casts[types[key]](value))
    return config
