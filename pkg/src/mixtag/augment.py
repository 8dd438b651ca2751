"""Data augmentation: two character-level word generators plus assembly.

The probabilistic generator estimates character n-gram statistics (orders
1..3, counted under two start symbols) and emits the most or second-most
likely next character, switching order at random each step.  The neural
generator is a 26->LSTM(200)->26 character model trained to predict the
character ``shift`` steps ahead; words are sampled from its softmax.

Augmentation grows a 1000-token training set to 4000: the originals, 1500
n-gram words and 1500 LSTM words (500 per shift), each grown from a
high-frequency substring seed to a length drawn from [3, 16].
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from mixtag.data import ALPHABET, Token
from mixtag.nn import (
    LayerSpec,
    Network,
    ParamStore,
    build_network,
    cce_loss,
    optimizer_step,
)

logger = logging.getLogger(__name__)

START = "^"
MIN_GEN_LEN = 3
MAX_GEN_LEN = 16
SEED_QUOTAS = {2: 100, 3: 300, 4: 600}
NGRAM_QUOTA = 1500
LM_QUOTA = 1500


class UnseenContextError(KeyError):
    """The requested n-gram context never occurred in training."""


@dataclass
class NGramModel:
    """Next-character count tables keyed by context length (0, 1, 2)."""

    counts: dict[int, dict[str, np.ndarray]]

    def conditional_counts(self, context: str) -> np.ndarray | None:
        return self.counts[len(context)].get(context)


def build_ngram_model(tokens) -> NGramModel:
    """Count next-character occurrences for contexts of length 0, 1 and 2,
    with two start symbols prepended to each token."""
    if not tokens:
        raise ValueError("need at least one token")
    counts: dict[int, dict[str, np.ndarray]] = {0: {}, 1: {}, 2: {}}
    for token in tokens:
        padded = START * 2 + (token.surface if isinstance(token, Token) else token)
        for i in range(2, len(padded)):
            nxt = ord(padded[i]) - 97
            for ctx_len in (0, 1, 2):
                ctx = padded[i - ctx_len : i]
                table = counts[ctx_len].setdefault(
                    ctx, np.zeros(len(ALPHABET), dtype=np.int64)
                )
                table[nxt] += 1
    return NGramModel(counts)


def ngram_prob(model: NGramModel, context: str, char: str) -> float:
    """C(context + char) / C(context .); context length must be 0, 1 or 2."""
    if len(context) > 2:
        raise ValueError(f"context length must be <= 2, got {context!r}")
    table = model.conditional_counts(context)
    if table is None:
        raise UnseenContextError(context)
    return float(table[ord(char) - 97]) / float(table.sum())


def _argmax_char(table: np.ndarray) -> int:
    return int(np.argmax(table))


def _second_max_char(table: np.ndarray) -> int:
    if np.count_nonzero(table) < 2:
        return _argmax_char(table)
    top = _argmax_char(table)
    rest = table.copy()
    rest[top] = -1
    return int(np.argmax(rest))


def _check_generation_length(length: int) -> None:
    if not MIN_GEN_LEN <= length <= MAX_GEN_LEN:
        raise ValueError(
            f"generation length must be in [{MIN_GEN_LEN}, {MAX_GEN_LEN}], got {length}"
        )


def ngram_generate(model: NGramModel, seed: str, length: int, rng) -> str:
    """Grow ``seed`` to exactly ``length`` characters.

    Per character the rng is consulted twice, in order: integers(1, 4) picks
    the n-gram order (backing off to shorter contexts when unseen), then
    integers(2) chooses argmax (0) or second-argmax (1) of the conditional
    distribution.
    """
    _check_generation_length(length)
    if not seed:
        raise ValueError("seed must be non-empty")
    padded = START * 2 + seed[:length]
    while len(padded) - 2 < length:
        order = int(rng.integers(1, 4))
        table = None
        for ctx_len in range(order - 1, -1, -1):
            ctx = padded[len(padded) - ctx_len :] if ctx_len else ""
            table = model.conditional_counts(ctx)
            if table is not None:
                break
        if table is None:  # pragma: no cover - empty models are rejected earlier
            raise UnseenContextError("")
        want_second = bool(rng.integers(2))
        idx = _second_max_char(table) if want_second else _argmax_char(table)
        padded += ALPHABET[idx]
    return padded[2:]


# ---------------------------------------------------------------------------
# substring seeds


@dataclass(frozen=True)
class SeedSet:
    """Generator seed substrings, nominally 100 bigrams + 300 trigrams +
    600 quadgrams (backfilled from shorter lengths when a length runs out)."""

    seeds: tuple[str, ...]

    def count_by_length(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for s in self.seeds:
            out[len(s)] = out.get(len(s), 0) + 1
        return out


def substring_frequencies(tokens, length: int) -> Counter:
    """All substrings of one length, counted with overlaps, across tokens."""
    freq: Counter = Counter()
    for token in tokens:
        s = token.surface if isinstance(token, Token) else token
        for i in range(len(s) - length + 1):
            freq[s[i : i + length]] += 1
    return freq


def extract_seeds(train_tokens) -> SeedSet:
    """Highest-frequency substrings per length, ties broken alphabetically.

    A shortfall at one length is backfilled from the next-lower length's
    ranking; if the corpus cannot supply 1000 seeds at all, that's an error.
    """
    ranked = {
        n: [s for s, _ in sorted(substring_frequencies(train_tokens, n).items(),
                                 key=lambda kv: (-kv[1], kv[0]))]
        for n in SEED_QUOTAS
    }
    picked: list[str] = []
    deficit = 0
    for n in sorted(SEED_QUOTAS, reverse=True):
        want = SEED_QUOTAS[n] + deficit
        take = ranked[n][:want]
        picked.extend(take)
        deficit = want - len(take)
    if deficit:
        raise ValueError(
            f"corpus has too few distinct substrings: short by {deficit} seeds"
        )
    return SeedSet(tuple(picked))


# ---------------------------------------------------------------------------
# LSTM character model


@dataclass(frozen=True)
class CharLmConfig:
    epochs: int = 50
    batch_size: int = 32
    lr: float = 1e-3
    hidden: int = 200


@dataclass
class CharLMGenerator:
    """A trained shift-n character model plus everything needed to sample."""

    store: ParamStore
    net: Network
    shift: int
    history: list[dict] = field(default_factory=list)


def _lm_specs(hidden: int) -> list[LayerSpec]:
    return [
        LayerSpec("lstm", size=hidden, return_sequences=True),
        LayerSpec("dense", size=len(ALPHABET), activation="softmax"),
    ]


def _lm_one_hot(surface: str, length: int, dtype) -> np.ndarray:
    out = np.zeros((length, len(ALPHABET)), dtype=dtype)
    for i, c in enumerate(surface):
        out[i, ord(c) - 97] = 1.0
    return out


def train_char_lm(tokens, shift: int, seed: int,
                  config: CharLmConfig = CharLmConfig()) -> CharLMGenerator:
    """Fit the 26->LSTM->26 model on (word, word shifted by n) pairs.

    Tokens shorter than shift+1 contribute nothing; sequences in a batch are
    padded to the batch maximum and masked out of the loss.
    """
    if shift not in (1, 2, 3):
        raise ValueError(f"shift must be 1, 2 or 3, got {shift}")
    pairs = []
    for token in tokens:
        s = token.surface if isinstance(token, Token) else token
        if len(s) > shift:
            pairs.append((s[:-shift], s[shift:]))
    if not pairs:
        raise ValueError(f"no tokens longer than shift {shift}")

    init_rng, shuffle_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2)
    )
    store = ParamStore()
    net = build_network(store, _lm_specs(config.hidden), (None, len(ALPHABET)),
                        init_rng)
    gen = CharLMGenerator(store=store, net=net, shift=shift)

    n = len(pairs)
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(n)
        total, count = 0.0, 0
        for start in range(0, n, config.batch_size):
            batch = [pairs[i] for i in order[start : start + config.batch_size]]
            t_max = max(len(inp) for inp, _ in batch)
            x = np.zeros((len(batch), t_max, len(ALPHABET)), dtype=store.dtype)
            targets = np.zeros((len(batch), t_max), dtype=np.int64)
            mask = np.zeros((len(batch), t_max), dtype=store.dtype)
            for row, (inp, tgt) in enumerate(batch):
                x[row, : len(inp)] = _lm_one_hot(inp, len(inp), store.dtype)
                targets[row, : len(tgt)] = [ord(c) - 97 for c in tgt]
                mask[row, : len(tgt)] = 1.0
            out, caches = net.forward(x, training=True)
            losses, d_probs = cce_loss(out, targets)
            n_real = mask.sum()
            store.zero_grads()
            net.backward(d_probs * mask[..., None] / n_real, caches)
            optimizer_step(store, "rmsprop", config.lr)
            total += float((losses * mask).sum())
            count += int(n_real)
        gen.history.append({"epoch": epoch, "loss": total / count})
    return gen


def lm_generate(gen: CharLMGenerator, seed: str, length: int, rng,
                greedy: bool = False) -> str:
    """Grow ``seed`` to ``length`` characters by sampling the model's softmax
    and feeding each new character back in."""
    _check_generation_length(length)
    if not seed:
        raise ValueError("seed must be non-empty")
    text = seed[:length]
    while len(text) < length:
        x = _lm_one_hot(text, len(text), gen.store.dtype)[None]
        probs = gen.net.predict(x)[0, -1].astype(np.float64)
        probs /= probs.sum()
        idx = int(np.argmax(probs)) if greedy else int(rng.choice(len(ALPHABET), p=probs))
        text += ALPHABET[idx]
    return text


# ---------------------------------------------------------------------------
# assembly


@dataclass(frozen=True)
class AugmentRecord:
    """One augmented-corpus entry with its provenance."""

    token: Token
    source: str  # original | ngram | lm{shift}
    seed: str | None = None
    length: int | None = None


def augment_dataset(train_tokens, seed_set: SeedSet, ngram_model: NGramModel,
                    lm_generators, rng) -> list[AugmentRecord]:
    """1000 originals + 1500 n-gram words + 1500 LSTM words (split evenly
    across the shift generators), all labeled with the source language.

    Per generated word, the rng draws a uniform seed substring and a uniform
    length from [3, 16]; duplicates are kept.
    """
    labels = {t.label for t in train_tokens}
    if len(labels) != 1 or None in labels:
        raise ValueError("training tokens must share one non-universal label")
    label = labels.pop()
    if not lm_generators:
        raise ValueError("need at least one trained character model")

    records = [AugmentRecord(t, "original") for t in train_tokens]

    def draw():
        s = seed_set.seeds[int(rng.integers(len(seed_set.seeds)))]
        return s, int(rng.integers(MIN_GEN_LEN, MAX_GEN_LEN + 1))

    for _ in range(NGRAM_QUOTA):
        s, length = draw()
        word = ngram_generate(ngram_model, s, length, rng)
        records.append(AugmentRecord(Token(word, label), "ngram", s, length))

    share, extra = divmod(LM_QUOTA, len(lm_generators))
    for gi, gen in enumerate(lm_generators):
        quota = share + (1 if gi < extra else 0)
        for _ in range(quota):
            s, length = draw()
            word = lm_generate(gen, s, length, rng)
            records.append(
                AugmentRecord(Token(word, label), f"lm{gen.shift}", s, length)
            )
    return records


def augmented_tokens(records) -> list[Token]:
    return [r.token for r in records]
