"""Hashed sparse features for sequence tagging.

Each token is described by a fixed template set (surface form, affixes,
shape, context words) and every template string is hashed into a
power-of-two index space with zlib.crc32. CRC-32 is stable across
processes and Python versions, unlike the builtin hash(), so feature
indices written into checkpoints remain meaningful when reloaded.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np


def word_shape(word: str) -> str:
    """Collapsed character-class sketch: "Fennwick" -> "Xx", "B4-2" -> "Xd-d"."""
    out = []
    last = None
    for ch in word:
        if ch.isupper():
            cls = "X"
        elif ch.islower():
            cls = "x"
        elif ch.isdigit():
            cls = "d"
        else:
            cls = ch
        if cls != last:
            out.append(cls)
            last = cls
    return "".join(out)


def token_features(tokens: tuple[str, ...], i: int) -> list[str]:
    """Template strings describing position ``i`` of the sentence."""
    word = tokens[i]
    lower = word.lower()
    feats = [
        "w=" + lower,
        "shape=" + word_shape(word),
    ]
    for n in (1, 2, 3):
        if len(lower) >= n:
            feats.append(f"pre{n}=" + lower[:n])
            feats.append(f"suf{n}=" + lower[-n:])
    if word[:1].isupper():
        feats.append("cap")
    if any(ch.isdigit() for ch in word):
        feats.append("digit")
    prev_word = tokens[i - 1].lower() if i > 0 else "<s>"
    next_word = tokens[i + 1].lower() if i + 1 < len(tokens) else "</s>"
    feats.append("prev=" + prev_word)
    feats.append("next=" + next_word)
    return feats


@dataclass(frozen=True)
class FeatureExtractor:
    """Maps tokens to hashed feature index arrays in [0, hash_dim)."""

    hash_dim: int

    def __post_init__(self):
        if self.hash_dim < 2 or self.hash_dim & (self.hash_dim - 1):
            raise ValueError(f"hash_dim must be a power of two >= 2, got {self.hash_dim}")

    def hash_feature(self, feat: str) -> int:
        return zlib.crc32(feat.encode("utf-8")) & (self.hash_dim - 1)

    def token_indices(self, tokens: tuple[str, ...], i: int) -> np.ndarray:
        idx = [self.hash_feature(f) for f in token_features(tokens, i)]
        return np.asarray(idx, dtype=np.int64)

    def sentence_indices(self, tokens: tuple[str, ...]) -> list[np.ndarray]:
        """Per-token hashed index arrays for a whole sentence.

        Duplicates from hash collisions are kept; a collided row simply
        gets counted twice, matching how the training update sees it.
        """
        return [self.token_indices(tokens, i) for i in range(len(tokens))]
