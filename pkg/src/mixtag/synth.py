"""Seeded synthetic wordlists and instances for experiments and tests.

Two flavors: a fully separable pair (disjoint alphabets a-m vs n-z) and a
statistical pair whose languages share the alphabet but draw letters from
distinct distributions, so the tagging task is learnable without being
trivial.
"""

from __future__ import annotations

import numpy as np

from mixtag.data import ALPHABET, Instance, Token


def _unique_words(n: int, rng, letters: str, probs, min_len=3, max_len=10
                  ) -> list[str]:
    words: list[str] = []
    seen: set[str] = set()
    attempts = 0
    while len(words) < n:
        attempts += 1
        if attempts > 200 * n:
            raise RuntimeError(f"could not draw {n} unique words")
        length = int(rng.integers(min_len, max_len + 1))
        word = "".join(rng.choice(list(letters), size=length, p=probs))
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def separable_wordlists(n_per_class: int, seed: int) -> tuple[list[Token], list[Token]]:
    """Class 0 uses letters a-m only, class 1 uses n-z only."""
    rng = np.random.default_rng(seed)
    first, second = ALPHABET[:13], ALPHABET[13:]
    uniform = np.full(13, 1.0 / 13)
    class0 = [Token(w, 0) for w in _unique_words(n_per_class, rng, first, uniform)]
    class1 = [Token(w, 1) for w in _unique_words(n_per_class, rng, second, uniform)]
    return class0, class1


def _zipf_over(rng, sharpness: float = 1.2) -> np.ndarray:
    """A Zipf-like distribution over a seeded permutation of the alphabet."""
    ranks = np.arange(1, 27, dtype=np.float64)
    weights = 1.0 / ranks**sharpness
    perm = rng.permutation(26)
    probs = np.empty(26)
    probs[perm] = weights / weights.sum()
    return probs


def statistical_wordlists(n_per_class: int, seed: int,
                          shared_mass: float = 0.2
                          ) -> tuple[list[Token], list[Token]]:
    """Shared alphabet, distinct letter statistics per language.

    Each language mixes its own Zipf-permuted letter distribution with a
    small shared uniform component, so the classes overlap without being
    inseparable.
    """
    rng = np.random.default_rng(seed)
    uniform = np.full(26, 1.0 / 26)
    p0 = (1 - shared_mass) * _zipf_over(rng) + shared_mass * uniform
    p1 = (1 - shared_mass) * _zipf_over(rng) + shared_mass * uniform
    class0 = [Token(w, 0) for w in _unique_words(n_per_class, rng, ALPHABET, p0)]
    class1 = [Token(w, 1) for w in _unique_words(n_per_class, rng, ALPHABET, p1)]
    return class0, class1


def mixed_instances(class0, class1, n_instances: int, seed: int,
                    universal_rate: float = 0.1) -> list[Instance]:
    """Utterances of 3-12 tokens with a per-instance dominant language and
    occasional universal tokens."""
    rng = np.random.default_rng(seed)
    pools = (class0, class1)
    instances = []
    for _ in range(n_instances):
        length = int(rng.integers(3, 13))
        dominant = int(rng.integers(2))
        mix = float(rng.uniform(0.1, 0.5))
        tokens = []
        for _ in range(length):
            source = pools[dominant if rng.random() >= mix else 1 - dominant]
            token = source[int(rng.integers(len(source)))]
            if rng.random() < universal_rate:
                token = Token(token.surface, None)
            tokens.append(token)
        instances.append(Instance(tuple(tokens)))
    return instances
