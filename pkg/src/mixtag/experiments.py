"""Desk-scale experiment harness: train all four taggers plus the ensemble
on one language pair and evaluate token-level test accuracy.

The augmentation leg trains one n-gram model and three shift character
models per language, grows each 1000-token training batch to 4000 tokens,
and retrains the baseline architecture on the result.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace

import numpy as np

from mixtag.augment import (
    augment_dataset,
    augmented_tokens,
    build_ngram_model,
    extract_seeds,
    train_char_lm,
)
from mixtag.config import ExperimentConfig
from mixtag.data import Token
from mixtag.ensemble import EnsembleModel, Metrics, evaluate_token_level
from mixtag.taggers import (
    TrainedTagger,
    train_augmented,
    train_baseline,
    train_conv1d,
    train_siamese_tagger,
)

logger = logging.getLogger(__name__)

METHODS = ("baseline", "conv1d", "augment", "siamese", "ensemble")


@dataclass
class SuiteResult:
    metrics: dict[str, Metrics]
    models: dict[str, object]
    seconds: float = 0.0


def three_way_split(tokens, seed: int, size: int = 1000):
    """Seeded shuffle into (train, dev, test) of ``size`` tokens each."""
    if len(tokens) < 3 * size:
        raise ValueError(f"need at least {3 * size} tokens, got {len(tokens)}")
    order = np.random.default_rng(seed).permutation(len(tokens))
    picked = [tokens[i] for i in order[: 3 * size]]
    return picked[:size], picked[size : 2 * size], picked[2 * size :]


def augment_language(train_tokens, generator_seed: int, charlm_config
                     ) -> list[Token]:
    """Grow one language's 1000-token batch to the 4000-token corpus."""
    seeds = np.random.SeedSequence(generator_seed).generate_state(4)
    ngram = build_ngram_model(train_tokens)
    seed_set = extract_seeds(train_tokens)
    generators = [
        train_char_lm(train_tokens, shift, int(seeds[shift - 1]), charlm_config)
        for shift in (1, 2, 3)
    ]
    rng = np.random.default_rng(int(seeds[3]))
    return augmented_tokens(
        augment_dataset(train_tokens, seed_set, ngram, generators, rng)
    )


def run_low_resource_suite(class0, class1, cfg: ExperimentConfig) -> SuiteResult:
    """Train baseline, conv1d, augmented, siamese, and their ensemble on a
    1000/1000/1000-per-class split; report token-level test metrics."""
    started = time.perf_counter()
    train0, dev0, test0 = three_way_split(class0, cfg.split_seed)
    train1, dev1, test1 = three_way_split(class1, cfg.split_seed + 1)
    train_all = train0 + train1
    dev_all = dev0 + dev1
    test_all = test0 + test1

    logger.info("training baseline")
    baseline = train_baseline(train_all, dev_all, cfg.train_seed,
                              cfg.baseline_config())
    logger.info("training conv1d")
    conv = train_conv1d(train_all, dev_all, cfg.train_seed, cfg.conv_config())

    logger.info("building augmented corpora")
    aug_all = (
        augment_language(train0, cfg.generator_seed, cfg.charlm_config())
        + augment_language(train1, cfg.generator_seed + 1, cfg.charlm_config())
    )
    logger.info("training on augmented data")
    augmented = train_augmented(aug_all, dev_all, cfg.train_seed,
                                cfg.baseline_config())

    logger.info("training siamese")
    siamese = train_siamese_tagger(train0, train1, dev_all,
                                   (cfg.train_seed, cfg.support_seed),
                                   cfg.siamese_config())

    taggers: dict[str, TrainedTagger] = {
        "baseline": baseline, "conv1d": conv,
        "augment": augmented, "siamese": siamese,
    }
    ensemble = EnsembleModel.from_taggers(list(taggers.values()))
    models: dict[str, object] = {**taggers, "ensemble": ensemble}
    metrics = {name: evaluate_token_level(model, test_all)
               for name, model in models.items()}
    return SuiteResult(metrics=metrics, models=models,
                       seconds=time.perf_counter() - started)


def run_repeated(class0, class1, cfg: ExperimentConfig, n_seeds: int = 2
                 ) -> dict[str, list[Metrics]]:
    """Rerun the suite under n_seeds different training/generation seeds."""
    out: dict[str, list[Metrics]] = {m: [] for m in METHODS}
    for i in range(n_seeds):
        run_cfg = replace(
            cfg,
            train_seed=cfg.train_seed + 1000 * i,
            generator_seed=cfg.generator_seed + 1000 * i,
            support_seed=cfg.support_seed + 1000 * i,
        )
        result = run_low_resource_suite(class0, class1, run_cfg)
        for name, metric in result.metrics.items():
            out[name].append(metric)
        logger.info("seed %d accuracies: %s", i,
                    {k: round(v.accuracy, 4) for k, v in result.metrics.items()})
    return out


def mean_accuracy(metrics_per_method: dict[str, list[Metrics]]) -> dict[str, float]:
    return {name: float(np.mean([m.accuracy for m in runs]))
            for name, runs in metrics_per_method.items()}
