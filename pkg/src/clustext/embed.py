"""Embedding providers and the EMB1 on-disk format.

Three sources of fixed-dimension text vectors are supported: precomputed
EMB1 files, a signed hashed bag-of-words, and (in :mod:`clustext.encoder`)
a small trainable attention encoder fed per-token hashed vectors plus
sinusoidal positions.

EMB1 layout, all little-endian: magic ``EMB1``, u32 row count ``n``, u32
dimension ``d``, then ``n*d`` IEEE-754 f32 values row-major, then an optional
id block: one ``0x01`` byte followed by ``n`` u64 document ids.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

_MAGIC = b"EMB1"


@dataclass
class EmbeddingSet:
    data: np.ndarray
    ids: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 2 or self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ValueError(f"embedding matrix must be n x d with n,d >= 1, got {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            bad = int(np.argwhere(~np.isfinite(self.data).all(axis=1))[0, 0])
            raise ValueError(f"non-finite embedding value (row {bad})")
        if self.ids is None:
            self.ids = np.arange(self.data.shape[0], dtype=np.uint64)
        else:
            self.ids = np.ascontiguousarray(self.ids, dtype=np.uint64)
            if self.ids.shape != (self.data.shape[0],):
                raise ValueError("ids must align 1:1 with embedding rows")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


def save_embeddings(emb: EmbeddingSet, path, include_ids: bool = True) -> None:
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", emb.n, emb.d))
        fh.write(emb.data.astype("<f4", copy=False).tobytes(order="C"))
        if include_ids:
            fh.write(b"\x01")
            fh.write(emb.ids.astype("<u8", copy=False).tobytes(order="C"))


def load_embeddings(path) -> EmbeddingSet:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _MAGIC:
        raise ValueError(f"{path}: not an embedding file")
    if len(raw) < 12:
        raise ValueError(f"{path}: truncated header")
    n, d = struct.unpack("<II", raw[4:12])
    need = n * d * 4
    payload = raw[12:12 + need]
    if len(payload) < need:
        raise ValueError(f"{path}: truncated payload ({len(payload)} bytes, expected {need})")
    data = np.frombuffer(payload, dtype="<f4").reshape(n, d)
    if not np.all(np.isfinite(data)):
        bad = int(np.argwhere(~np.isfinite(data).all(axis=1))[0, 0])
        raise ValueError(f"{path}: non-finite embedding value (row {bad})")
    ids = None
    rest = raw[12 + need:]
    if rest[:1] == b"\x01":
        id_bytes = rest[1:1 + 8 * n]
        if len(id_bytes) < 8 * n:
            raise ValueError(f"{path}: truncated id block")
        ids = np.frombuffer(id_bytes, dtype="<u8").copy()
    return EmbeddingSet(data=data.copy(), ids=ids)


def token_bucket(token: str, d: int, seed: int) -> tuple[int, int]:
    """Deterministic (bucket index, +/-1 sign) for one token under ``seed``."""
    key = seed.to_bytes(8, "little", signed=True)
    digest = hashlib.blake2b(token.encode("utf-8"), key=key, digest_size=9).digest()
    bucket = int.from_bytes(digest[:8], "little") % d
    sign = 1 if digest[8] & 1 else -1
    return bucket, sign


def hashed_bow(text: str, d: int, seed: int = 0, normalize: bool = True) -> np.ndarray:
    """Signed hashing of whitespace token counts into ``d`` buckets.

    Counts accumulate with a +/-1 sign per token, then the vector is
    L2-normalised. Empty text gives the zero vector; a nonempty text whose
    signed counts cancel exactly falls back to the first token's bucket so
    that nonempty inputs always embed to a nonzero vector.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    tokens = text.split()
    v = np.zeros(d, dtype=np.float64)
    for tok in tokens:
        b, s = token_bucket(tok, d, seed)
        v[b] += s
    if tokens and not v.any():
        b, s = token_bucket(tokens[0], d, seed)
        v[b] = s
    if normalize:
        norm = np.linalg.norm(v)
        if norm > 0:
            v /= norm
    return v


def sinusoidal_positions(m: int, d: int) -> np.ndarray:
    """Standard sin/cos position matrix of shape (m, d)."""
    pos = np.arange(m, dtype=np.float64)[:, None]
    i = np.arange(d, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, 2.0 * np.floor(i / 2.0) / d)
    out = np.where(i % 2 == 0, np.sin(angle), np.cos(angle))
    return out


def token_matrix(text: str, d: int, seed: int = 0, max_len: int = 32) -> np.ndarray:
    """Per-token hashed vectors plus sinusoidal positions, truncated to ``max_len``."""
    tokens = text.split()[:max_len]
    if not tokens:
        tokens = [""]
    X = np.stack([hashed_bow(tok, d, seed, normalize=False) for tok in tokens])
    return X + sinusoidal_positions(len(tokens), d)


class HashedBowVectorizer(TransformerMixin, BaseEstimator):
    """sklearn-style transformer turning a list of texts into an n x d matrix."""

    def __init__(self, d: int = 64, seed: int = 0):
        self.d = d
        self.seed = seed

    def fit(self, X, y=None):
        return self

    def transform(self, X) -> np.ndarray:
        return np.stack([hashed_bow(t, self.d, self.seed) for t in X])
