"""Stochastic text augmentation producing paired views for contrastive training.

Three resource-free operators are applied in order: random word deletion,
adjacent-word swap, and contiguous span masking with the reserved ``[MASK]``
token. Every view keeps at least one token. Sampling is keyed by
``(policy.seed, instance_index, view)`` so corpus-level parallelism stays
reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK_TOKEN = "[MASK]"


@dataclass(frozen=True)
class AugmentPolicy:
    word_delete_prob: float = 0.0
    word_swap_prob: float = 0.0
    span_mask_prob: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("word_delete_prob", "word_swap_prob", "span_mask_prob"):
            p = getattr(self, name)
            if not 0.0 <= p < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {p}")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


def _delete_words(tokens: list[str], p: float, rng: np.random.Generator) -> list[str]:
    if p <= 0.0:
        return tokens
    keep = rng.random(len(tokens)) >= p
    if not keep.any():
        keep[rng.integers(len(tokens))] = True
    return [t for t, k in zip(tokens, keep) if k]


def _swap_adjacent(tokens: list[str], p: float, rng: np.random.Generator) -> list[str]:
    if p <= 0.0 or len(tokens) < 2:
        return tokens
    out = list(tokens)
    i = 0
    while i < len(out) - 1:
        if rng.random() < p:
            out[i], out[i + 1] = out[i + 1], out[i]
            i += 2
        else:
            i += 1
    return out


def _mask_span(tokens: list[str], p: float, rng: np.random.Generator) -> list[str]:
    if p <= 0.0 or rng.random() >= p:
        return tokens
    n = len(tokens)
    span = int(rng.integers(1, max(1, n // 4) + 1))
    start = int(rng.integers(0, n - span + 1))
    return tokens[:start] + [MASK_TOKEN] * span + tokens[start + span:]


def _one_view(tokens: list[str], policy: AugmentPolicy, rng: np.random.Generator) -> str:
    out = _delete_words(tokens, policy.word_delete_prob, rng)
    out = _swap_adjacent(out, policy.word_swap_prob, rng)
    out = _mask_span(out, policy.span_mask_prob, rng)
    return " ".join(out)


def augment_pair(text: str, policy: AugmentPolicy, instance_index: int) -> tuple[str, str]:
    """Sample two independent augmented views of ``text``.

    Deterministic given ``(policy.seed, instance_index)``; the two views use
    separate random streams drawn from the same operator distribution.
    """
    tokens = text.split()
    if not tokens:
        raise ValueError("cannot augment empty text")
    if instance_index < 0:
        raise ValueError("instance_index must be nonnegative")
    views = []
    for view in (0, 1):
        rng = np.random.default_rng([policy.seed, instance_index, view])
        views.append(_one_view(tokens, policy, rng))
    return views[0], views[1]
