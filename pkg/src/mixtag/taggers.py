"""The four word-level taggers and brute-force threshold tuning.

Sigmoid taggers (stacked LSTM baseline, Conv1D, and the baseline retrained
on augmented data) map a 15x27 one-hot word to a probability and compare it
against a tuned threshold: score >= theta reads as label 1.

The siamese tagger embeds words with twin weight-shared subnetworks trained
under contrastive loss, scores a word by summing its dissimilarity to a
100-word support set of class-0 training tokens, and labels it 0 when the
sum stays at or below theta.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Iterator

import numpy as np

from mixtag.data import (
    N_SYMBOLS,
    WORD_LEN,
    Token,
    encode_batch,
    labels_array,
    one_hot,
)
from mixtag.nn import (
    LayerSpec,
    Network,
    ParamStore,
    bce_loss,
    build_network,
    contrastive_loss,
    embedding_distance,
    l2_penalty,
    optimizer_step,
)
from mixtag.nn.activations import sigmoid
from mixtag.nn.optim import DivergedError

logger = logging.getLogger(__name__)

TUNE_DELTA = 1e-6
SCORE_CHUNK = 512  # fixed inference chunk so scoring is batching-invariant

DEFAULT_MARGIN = 1.0
DEFAULT_DISTANCE_EPS = 1e-6
DEFAULT_SCORE_SCALE = 4.0
DEFAULT_SUPPORT_SIZE = 100


# ---------------------------------------------------------------------------
# threshold tuning


def tune_threshold(scores, labels) -> tuple[float, float]:
    """Pick the threshold maximizing accuracy of ``score >= theta -> 1``.

    Candidates are min-delta, midpoints of consecutive distinct sorted
    scores, and max+delta; ties go to the smallest threshold.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.size == 0 or scores.shape != labels.shape:
        raise ValueError("scores and labels must be equal-length and non-empty")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores contain non-finite values")
    uniq = np.unique(scores)
    cands = np.concatenate(
        [[uniq[0] - TUNE_DELTA], (uniq[:-1] + uniq[1:]) / 2.0, [uniq[-1] + TUNE_DELTA]]
    )
    preds = scores[None, :] >= cands[:, None]
    accs = (preds == (labels[None, :] == 1)).mean(axis=1)
    best = int(np.argmax(accs))  # first max = smallest candidate
    return float(cands[best]), float(accs[best])


# ---------------------------------------------------------------------------
# architectures


def baseline_specs() -> list[LayerSpec]:
    return [
        LayerSpec("lstm", size=35, return_sequences=True),
        LayerSpec("lstm", size=25),
        LayerSpec("dense", size=1, activation="sigmoid"),
    ]


def conv1d_specs() -> list[LayerSpec]:
    return [
        LayerSpec("conv1d", filters=32, kernel=2, activation="relu"),
        LayerSpec("dropout", rate=0.2),
        LayerSpec("conv1d", filters=32, kernel=3, activation="relu"),
        LayerSpec("dropout", rate=0.2),
        LayerSpec("flatten"),
        LayerSpec("dense", size=1, activation="sigmoid"),
    ]


def siamese_subnet_specs() -> list[LayerSpec]:
    return [
        LayerSpec("gru", size=128, return_sequences=True),
        LayerSpec("gru", size=128),
        LayerSpec("dense", size=64, activation="relu"),
        LayerSpec("dropout", rate=0.1),
        LayerSpec("dense", size=32, activation="relu"),
        LayerSpec("dropout", rate=0.1),
        LayerSpec("dense", size=16, activation="identity"),
    ]


def config_fingerprint(specs: list[LayerSpec], config) -> str:
    blob = json.dumps([asdict(s) for s in specs] + [asdict(config)], sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# trained models


def _chunked_forward(net: Network, x: np.ndarray) -> np.ndarray:
    if len(x) == 0:
        raise ValueError("cannot score an empty batch")
    outs = [net.predict(x[i : i + SCORE_CHUNK]) for i in range(0, len(x), SCORE_CHUNK)]
    return np.concatenate(outs)


@dataclass
class SiameseModel:
    """Twin subnetwork weights plus the distance/score constants."""

    store: ParamStore
    specs: list[LayerSpec]
    net: Network
    margin: float = DEFAULT_MARGIN
    distance_eps: float = DEFAULT_DISTANCE_EPS
    score_scale: float = DEFAULT_SCORE_SCALE
    history: list = field(default_factory=list)

    def embed(self, x_onehot: np.ndarray) -> np.ndarray:
        return _chunked_forward(self.net, x_onehot)


def pair_score(model: SiameseModel, a, b) -> float:
    """Dissimilarity of two encoded words in (0, 1), symmetric bit-for-bit.

    sigmoid(scale * (distance - margin)); each word is embedded as its own
    single-row batch so argument order cannot perturb the arithmetic.
    """
    e1 = model.net.predict(one_hot(np.asarray(a)[None], model.store.dtype))[0]
    e2 = model.net.predict(one_hot(np.asarray(b)[None], model.store.dtype))[0]
    d = embedding_distance(e1, e2, model.distance_eps)
    return float(sigmoid(model.score_scale * (d - model.margin)))


def support_score_sums(model: SiameseModel, support_encoded: np.ndarray,
                       tokens_encoded: np.ndarray) -> np.ndarray:
    """Sum of pairwise dissimilarity scores against the support set."""
    sup = model.embed(one_hot(support_encoded, model.store.dtype))
    emb = model.embed(one_hot(tokens_encoded, model.store.dtype))
    sums = np.empty(len(emb), dtype=np.float64)
    for start in range(0, len(emb), SCORE_CHUNK):
        chunk = emb[start : start + SCORE_CHUNK]
        diff = chunk[:, None, :] - sup[None, :, :]
        d = np.sqrt((diff * diff).sum(axis=-1) + model.distance_eps)
        scores = sigmoid(model.score_scale * (d - model.margin))
        sums[start : start + len(chunk)] = scores.sum(axis=1, dtype=np.float64)
    return sums


def siamese_tag(model: SiameseModel, support_encoded: np.ndarray, token,
                theta: float) -> int:
    """Label one encoded word: support-score sum <= theta reads as 0."""
    total = support_score_sums(model, support_encoded, np.asarray(token)[None])[0]
    return 0 if total <= theta else 1


def tune_siamese_threshold(model: SiameseModel, support_encoded: np.ndarray,
                           dev_tokens) -> tuple[float, float]:
    sums = support_score_sums(model, support_encoded, encode_batch(dev_tokens))
    return tune_threshold(sums, labels_array(dev_tokens))


@dataclass
class TrainedTagger:
    """A trained classifier bundled with its tuned threshold.

    For the siamese method, ``store``/``specs``/``net`` describe the shared
    twin subnetwork and ``support`` holds the encoded support set.
    """

    method: str  # baseline | conv1d | augment | siamese
    specs: list[LayerSpec]
    store: ParamStore
    net: Network
    theta: float
    dev_accuracy: float
    train_meta: dict = field(default_factory=dict)
    history: list = field(default_factory=list)
    support: np.ndarray | None = None
    margin: float = DEFAULT_MARGIN
    distance_eps: float = DEFAULT_DISTANCE_EPS
    score_scale: float = DEFAULT_SCORE_SCALE

    def siamese_model(self) -> SiameseModel:
        if self.method != "siamese":
            raise ValueError(f"{self.method} tagger has no siamese model")
        return SiameseModel(self.store, self.specs, self.net, self.margin,
                            self.distance_eps, self.score_scale)

    def scores(self, tokens) -> np.ndarray:
        encoded = encode_batch(tokens)
        if self.method == "siamese":
            return support_score_sums(self.siamese_model(), self.support, encoded)
        out = _chunked_forward(self.net, one_hot(encoded, self.store.dtype))
        return out[:, 0].astype(np.float64)

    def predict(self, tokens) -> np.ndarray:
        s = self.scores(tokens)
        if self.method == "siamese":
            return (s > self.theta).astype(np.int64)
        return (s >= self.theta).astype(np.int64)


# ---------------------------------------------------------------------------
# sigmoid-tagger training


@dataclass(frozen=True)
class SigmoidTrainConfig:
    epochs: int = 100
    batch_size: int = 64
    lr: float = 1e-3


def _check_training_labels(tokens) -> None:
    counts = [0, 0]
    for t in tokens:
        if t.label is None:
            raise ValueError("universal tokens cannot be used for training")
        counts[t.label] += 1
    if 0 in counts:
        raise ValueError(f"both classes required, got counts {counts}")
    if counts[0] != counts[1]:
        logger.warning("class imbalance: %d vs %d tokens", counts[0], counts[1])


def _train_sigmoid(method: str, specs: list[LayerSpec], optimizer: str,
                   train_tokens, dev_tokens, seed: int,
                   config: SigmoidTrainConfig) -> TrainedTagger:
    _check_training_labels(train_tokens)
    init_rng, shuffle_rng, dropout_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)
    )
    store = ParamStore()
    net = build_network(store, specs, (WORD_LEN, N_SYMBOLS), init_rng)
    x_all = one_hot(encode_batch(train_tokens), store.dtype)
    y_all = labels_array(train_tokens).astype(store.dtype)

    n = len(train_tokens)
    history = []
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            sel = order[start : start + config.batch_size]
            out, caches = net.forward(x_all[sel], training=True, rng=dropout_rng)
            losses, d_loss = bce_loss(out[:, 0], y_all[sel])
            batch_loss = float(losses.mean())
            if not np.isfinite(batch_loss):
                raise DivergedError(
                    f"{method}: non-finite loss at epoch {epoch} step {start}"
                )
            store.zero_grads()
            net.backward((d_loss / len(sel))[:, None], caches)
            optimizer_step(store, optimizer, config.lr)
            total += float(losses.sum())
        history.append({"epoch": epoch, "loss": total / n})

    tagger = TrainedTagger(
        method=method, specs=specs, store=store, net=net, theta=0.5,
        dev_accuracy=0.0, history=history,
        train_meta={"seed": seed, "optimizer": optimizer, **asdict(config),
                    "config_hash": config_fingerprint(specs, config)},
    )
    tagger.theta, tagger.dev_accuracy = tune_threshold(
        tagger.scores(dev_tokens), labels_array(dev_tokens)
    )
    return tagger


def train_baseline(train_tokens, dev_tokens, seed: int,
                   config: SigmoidTrainConfig = SigmoidTrainConfig()) -> TrainedTagger:
    """Stacked LSTM (35, then 25) to a sigmoid unit; Adam, BCE."""
    return _train_sigmoid("baseline", baseline_specs(), "adam",
                          train_tokens, dev_tokens, seed, config)


def train_conv1d(train_tokens, dev_tokens, seed: int,
                 config: SigmoidTrainConfig = SigmoidTrainConfig()) -> TrainedTagger:
    """Two Conv1D blocks (32 filters, kernels 2 and 3) to a sigmoid; Nadam."""
    return _train_sigmoid("conv1d", conv1d_specs(), "nadam",
                          train_tokens, dev_tokens, seed, config)


def train_augmented(train_tokens, dev_tokens, seed: int,
                    config: SigmoidTrainConfig = SigmoidTrainConfig()) -> TrainedTagger:
    """Baseline architecture and hyperparameters on the augmented corpus."""
    counts = [0, 0]
    for t in train_tokens:
        if t.label in (0, 1):
            counts[t.label] += 1
    if counts != [4000, 4000]:
        raise ValueError(f"augmented training needs 4000 tokens per class, got {counts}")
    tagger = _train_sigmoid("augment", baseline_specs(), "adam",
                            train_tokens, dev_tokens, seed, config)
    return tagger


# ---------------------------------------------------------------------------
# siamese training


@dataclass(frozen=True)
class LabeledPair:
    """An unordered word pair; label 0 when classes match, 1 otherwise."""

    a: np.ndarray
    b: np.ndarray
    label: int


def enumerate_pairs(class0, class1) -> Iterator[LabeledPair]:
    """Every unordered pair of distinct tokens, streamed, labeled by class
    agreement."""
    encoded = encode_batch(list(class0) + list(class1))
    n0 = len(class0)
    n = len(encoded)
    for i in range(n - 1):
        for j in range(i + 1, n):
            yield LabeledPair(encoded[i], encoded[j], int((i < n0) != (j < n0)))


@dataclass(frozen=True)
class SiameseConfig:
    epochs: int = 10
    batch_size: int = 128
    lr: float = 1e-4
    margin: float = DEFAULT_MARGIN
    distance_eps: float = DEFAULT_DISTANCE_EPS
    score_scale: float = DEFAULT_SCORE_SCALE
    weight_decay: float = 1e-4
    support_size: int = DEFAULT_SUPPORT_SIZE
    pair_subsample: float = 1.0


def train_siamese(class0, class1, config: SiameseConfig, seed: int
                  ) -> tuple[SiameseModel, np.ndarray]:
    """Train the twin subnetwork on the full pair stream; returns the model
    and the encoded support set (config.support_size class-0 tokens).

    pair_subsample < 1 draws that fraction of pairs fresh each epoch.
    """
    if not 0.0 < config.pair_subsample <= 1.0:
        raise ValueError("pair_subsample must be in (0, 1]")
    if not class0 or not class1:
        raise ValueError("both classes must be non-empty")
    init_rng, shuffle_rng, dropout_rng, support_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(4)
    )
    store = ParamStore()
    specs = siamese_subnet_specs()
    net = build_network(store, specs, (WORD_LEN, N_SYMBOLS), init_rng)
    model = SiameseModel(store, specs, net, config.margin, config.distance_eps,
                         config.score_scale)

    x_all = one_hot(encode_batch(list(class0) + list(class1)), store.dtype)
    n0 = len(class0)
    idx_a, idx_b = (ix.astype(np.int32) for ix in np.triu_indices(len(x_all), k=1))
    pair_y = ((idx_a < n0) != (idx_b < n0)).astype(store.dtype)
    n_pairs = len(idx_a)
    per_epoch = max(1, int(round(n_pairs * config.pair_subsample)))

    history = []
    for epoch in range(config.epochs):
        perm = shuffle_rng.permutation(n_pairs)[:per_epoch]
        total = 0.0
        for start in range(0, per_epoch, config.batch_size):
            sel = perm[start : start + config.batch_size]
            k = len(sel)
            x_pair = np.concatenate([x_all[idx_a[sel]], x_all[idx_b[sel]]])
            out, caches = net.forward(x_pair, training=True, rng=dropout_rng)
            e1, e2 = out[:k], out[k:]
            diff = e1 - e2
            dist = np.sqrt((diff * diff).sum(axis=-1) + config.distance_eps)
            losses, d_loss = contrastive_loss(dist, pair_y[sel], config.margin)
            store.zero_grads()
            d_embed = (d_loss / (k * dist))[:, None] * diff
            net.backward(np.concatenate([d_embed, -d_embed]), caches)
            reg = l2_penalty(store, config.weight_decay)
            batch_loss = float(losses.mean()) + reg
            if not np.isfinite(batch_loss):
                raise DivergedError(
                    f"siamese: non-finite loss at epoch {epoch} step {start}"
                )
            optimizer_step(store, "rmsprop", config.lr)
            total += float(losses.sum()) + reg * k
        history.append({"epoch": epoch, "loss": total / per_epoch})

    support_idx = support_rng.choice(n0, size=config.support_size, replace=False)
    support = encode_batch([class0[i] for i in sorted(support_idx)])
    model.history = history
    return model, support


def train_siamese_tagger(class0, class1, dev_tokens, seed: int,
                         config: SiameseConfig = SiameseConfig()) -> TrainedTagger:
    """Full siamese pipeline: train twins, draw support set, tune theta."""
    model, support = train_siamese(class0, class1, config, seed)
    theta, dev_acc = tune_siamese_threshold(model, support, dev_tokens)
    return TrainedTagger(
        method="siamese", specs=model.specs, store=model.store, net=model.net,
        theta=theta, dev_accuracy=dev_acc, history=model.history,
        train_meta={"seed": seed, **asdict(config),
                    "config_hash": config_fingerprint(model.specs, config)},
        support=support, margin=config.margin,
        distance_eps=config.distance_eps, score_scale=config.score_scale,
    )
