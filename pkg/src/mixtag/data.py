"""Tokens, fixed-length character encoding, dataset splits, and file formats.

A token's surface form is normalized to lowercase a-z.  Words enter every
network as a sequence of 15 character positions: indices 1..26 for a..z and
0 for right padding, one-hot over 27 symbols at the network boundary.

File formats:
  - wordlist: one raw token per line (label supplied externally)
  - labeled wordlist: ``token<TAB>label`` with label 0 or 1
  - instance file: ``token<TAB>label`` lines (label 0, 1, or U), instances
    separated by blank lines
"""

from __future__ import annotations

import logging
import string
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

WORD_LEN = 15
ALPHABET = string.ascii_lowercase
N_SYMBOLS = len(ALPHABET) + 1  # a..z plus pad
_CHAR_TO_INDEX = {c: i + 1 for i, c in enumerate(ALPHABET)}


class EmptyTokenError(ValueError):
    """A raw string contained no a-z characters after normalization."""


class DatasetError(ValueError):
    """Malformed dataset contents (counts, duplicates, labels)."""


@dataclass(frozen=True)
class Token:
    """A normalized word with its language label; label None means
    universal/other (excluded from classifier training and scoring)."""

    surface: str
    label: int | None

    def __post_init__(self):
        if not self.surface or any(c not in _CHAR_TO_INDEX for c in self.surface):
            raise ValueError(f"surface must be nonempty a-z, got {self.surface!r}")
        if self.label not in (0, 1, None):
            raise ValueError(f"label must be 0, 1 or None, got {self.label!r}")


@dataclass(frozen=True)
class Instance:
    """An ordered utterance of tokens, possibly mixing languages."""

    tokens: tuple[Token, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("instance must contain at least one token")


@dataclass
class DatasetSplit:
    train_batches: list[list[Token]]  # 4 x 1000
    dev: list[Token]  # 1000
    test: list[Token]  # 1000


def normalize_token(raw: str) -> str:
    """Lowercase and strip everything outside a-z; error if nothing is left."""
    cleaned = "".join(c for c in raw.lower() if c in _CHAR_TO_INDEX)
    if not cleaned:
        raise EmptyTokenError(f"token {raw!r} has no a-z characters")
    return cleaned


def encode_word(token: Token | str) -> np.ndarray:
    """First 15 characters as indices a->1 .. z->26, right-padded with 0."""
    surface = token.surface if isinstance(token, Token) else token
    indices = np.zeros(WORD_LEN, dtype=np.int64)
    for i, c in enumerate(surface[:WORD_LEN]):
        indices[i] = _CHAR_TO_INDEX[c]
    return indices


def decode_word(indices) -> str:
    """Inverse of encode_word for tokens of length <= 15."""
    chars = []
    for idx in indices:
        if idx == 0:
            break
        chars.append(ALPHABET[int(idx) - 1])
    return "".join(chars)


def encode_batch(tokens) -> np.ndarray:
    """(N, 15) index matrix for a list of Tokens or strings."""
    return np.stack([encode_word(t) for t in tokens]) if len(tokens) else \
        np.zeros((0, WORD_LEN), dtype=np.int64)


def one_hot(indices: np.ndarray, dtype=np.float32) -> np.ndarray:
    """(..., 15) index array -> (..., 15, 27) one-hot array."""
    out = np.zeros(indices.shape + (N_SYMBOLS,), dtype=dtype)
    np.put_along_axis(out, indices[..., None], 1.0, axis=-1)
    return out


def labels_array(tokens) -> np.ndarray:
    return np.array([t.label for t in tokens], dtype=np.int64)


def split_dataset(tokens: list[Token], seed: int) -> DatasetSplit:
    """Seeded shuffle of exactly 6000 unique same-language tokens into
    4x1000 train batches, 1000 dev, 1000 test."""
    if len(tokens) != 6000:
        raise DatasetError(f"need exactly 6000 tokens, got {len(tokens)}")
    surfaces = {t.surface for t in tokens}
    if len(surfaces) != 6000:
        raise DatasetError(f"tokens must be unique; {6000 - len(surfaces)} duplicates")
    labels = {t.label for t in tokens}
    if len(labels) != 1:
        raise DatasetError(f"tokens must share one label, got {sorted(map(str, labels))}")
    order = np.random.default_rng(seed).permutation(6000)
    shuffled = [tokens[i] for i in order]
    batches = [shuffled[i * 1000 : (i + 1) * 1000] for i in range(4)]
    return DatasetSplit(train_batches=batches, dev=shuffled[4000:5000],
                        test=shuffled[5000:6000])


def _parse_label(text: str, path, line_no: int, allow_universal: bool):
    if text == "0":
        return 0
    if text == "1":
        return 1
    if text == "U" and allow_universal:
        return None
    raise DatasetError(f"{path}:{line_no}: unknown label {text!r}")


def load_wordlist(path, label: int) -> list[Token]:
    """Read a raw wordlist, one token per line, all under the given label.

    Lines that normalize to nothing are skipped and reported by line number.
    """
    if label not in (0, 1):
        raise DatasetError(f"wordlist label must be 0 or 1, got {label!r}")
    tokens = []
    skipped = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            raw = line.strip()
            if not raw:
                continue
            try:
                tokens.append(Token(normalize_token(raw), label))
            except EmptyTokenError:
                skipped.append(line_no)
    if skipped:
        logger.warning("%s: skipped %d unusable lines (e.g. line %d)",
                       path, len(skipped), skipped[0])
    return tokens


def load_labeled_wordlist(path) -> list[Token]:
    """Read ``token<TAB>label`` lines with labels in {0, 1}."""
    tokens = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            raw = line.rstrip("\n")
            if not raw.strip():
                continue
            parts = raw.split("\t")
            if len(parts) != 2:
                raise DatasetError(f"{path}:{line_no}: expected token<TAB>label")
            label = _parse_label(parts[1].strip(), path, line_no, allow_universal=False)
            tokens.append(Token(normalize_token(parts[0]), label))
    return tokens


def load_instances(path) -> list[Instance]:
    """Read blank-line-separated instances of ``token<TAB>label`` lines."""
    instances = []
    current: list[Token] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            raw = line.rstrip("\n")
            if not raw.strip():
                if current:
                    instances.append(Instance(tuple(current)))
                    current = []
                continue
            parts = raw.split("\t")
            if len(parts) != 2:
                raise DatasetError(f"{path}:{line_no}: expected token<TAB>label")
            label = _parse_label(parts[1].strip(), path, line_no, allow_universal=True)
            current.append(Token(normalize_token(parts[0]), label))
    if current:
        instances.append(Instance(tuple(current)))
    return instances


def write_labeled_wordlist(path, tokens) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in tokens:
            if t.label is None:
                raise DatasetError("labeled wordlists cannot hold universal tokens")
            fh.write(f"{t.surface}\t{t.label}\n")


def write_instances(path, instances) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            for t in inst.tokens:
                fh.write(f"{t.surface}\t{'U' if t.label is None else t.label}\n")
            fh.write("\n")


def code_mixing_index(instance: Instance) -> float:
    """Utterance-level degree of mixing, 0 (monolingual) to 100.

    With n tokens, u universal tokens, and maxw the largest per-language
    token count: 100 * (1 - maxw / (n - u)) when n > u, else 0.
    """
    n = len(instance.tokens)
    u = sum(1 for t in instance.tokens if t.label is None)
    if n == u:
        return 0.0
    counts = [0, 0]
    for t in instance.tokens:
        if t.label is not None:
            counts[t.label] += 1
    return 100.0 * (1.0 - max(counts) / (n - u))
