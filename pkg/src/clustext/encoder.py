"""A single-block trainable text encoder: multi-head self-attention, residual
plus layer-norm, a ReLU feed-forward layer, a second residual plus layer-norm,
mean pooling over token positions, and a final linear projection head.

Forward passes cache every intermediate so :func:`encoder_backward` can return
exact analytic gradients for all trainable tensors; correctness is pinned by
finite-difference tests.
"""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .validation import check_matrix

LN_EPS = 1e-5


@dataclass
class EncoderParams:
    wq: np.ndarray  # (heads, d, dk)
    wk: np.ndarray  # (heads, d, dk)
    wv: np.ndarray  # (heads, d, dk)
    wc: np.ndarray  # (heads*dk, d)
    w1: np.ndarray  # (d, dff)
    b1: np.ndarray  # (dff,)
    w2: np.ndarray  # (dff, d)
    b2: np.ndarray  # (d,)
    g: np.ndarray   # (d, dg)

    @property
    def n_heads(self) -> int:
        return self.wq.shape[0]

    @property
    def d(self) -> int:
        return self.wq.shape[1]

    @property
    def d_g(self) -> int:
        return self.g.shape[1]

    def as_dict(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def copy(self) -> "EncoderParams":
        return EncoderParams(**{k: v.copy() for k, v in self.as_dict().items()})

    def validate(self) -> None:
        h, d, dk = self.wq.shape
        for name in ("wq", "wk", "wv"):
            arr = getattr(self, name)
            if arr.shape != (h, d, dk):
                raise ValueError(f"parameter {name} has shape {arr.shape}, expected {(h, d, dk)}")
        if self.wc.shape != (h * dk, d):
            raise ValueError(f"parameter wc has shape {self.wc.shape}, expected {(h * dk, d)}")
        dff = self.w1.shape[1]
        if self.w1.shape != (d, dff):
            raise ValueError(f"parameter w1 has shape {self.w1.shape}, expected ({d}, {dff})")
        if self.b1.shape != (dff,):
            raise ValueError(f"parameter b1 has shape {self.b1.shape}, expected ({dff},)")
        if self.w2.shape != (dff, d):
            raise ValueError(f"parameter w2 has shape {self.w2.shape}, expected ({dff}, {d})")
        if self.b2.shape != (d,):
            raise ValueError(f"parameter b2 has shape {self.b2.shape}, expected ({d},)")
        if self.g.shape[0] != d:
            raise ValueError(f"parameter g has shape {self.g.shape}, expected ({d}, *)")
        for name, arr in self.as_dict().items():
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"parameter {name} contains non-finite values")


def init_encoder_params(d: int, n_heads: int = 2, d_k: int | None = None,
                        d_ff: int | None = None, d_g: int | None = None,
                        seed: int = 0) -> EncoderParams:
    if d_k is None:
        d_k = max(1, d // n_heads)
    if d_ff is None:
        d_ff = 2 * d
    if d_g is None:
        d_g = d
    rng = np.random.default_rng(seed)
    scale = 1.0 / np.sqrt(d)

    def mat(*shape):
        return rng.normal(0.0, scale, size=shape)

    params = EncoderParams(
        wq=mat(n_heads, d, d_k), wk=mat(n_heads, d, d_k), wv=mat(n_heads, d, d_k),
        wc=mat(n_heads * d_k, d),
        w1=mat(d, d_ff), b1=np.zeros(d_ff), w2=mat(d_ff, d), b2=np.zeros(d),
        g=mat(d, d_g),
    )
    params.validate()
    return params


def _softmax_rows(S: np.ndarray) -> np.ndarray:
    shifted = S - S.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def self_attention(Q: np.ndarray, K: np.ndarray, V: np.ndarray) -> np.ndarray:
    """softmax(Q K^T / sqrt(d_k)) V with one attention row per query position."""
    Q = check_matrix(Q, "Q")
    K = check_matrix(K, "K")
    V = check_matrix(V, "V")
    if Q.shape[1] != K.shape[1]:
        raise ValueError(f"Q and K must share the key dimension, got {Q.shape} vs {K.shape}")
    if K.shape[0] != V.shape[0]:
        raise ValueError(f"K and V must share the position count, got {K.shape} vs {V.shape}")
    A = _softmax_rows(Q @ K.T / np.sqrt(Q.shape[1]))
    return A @ V


def _layer_norm_rows(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mu = X.mean(axis=1, keepdims=True)
    var = X.var(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    return (X - mu) * inv, inv


def _layer_norm_backward(dY: np.ndarray, Y: np.ndarray, inv: np.ndarray) -> np.ndarray:
    m1 = dY.mean(axis=1, keepdims=True)
    m2 = (dY * Y).mean(axis=1, keepdims=True)
    return inv * (dY - m1 - Y * m2)


def encoder_forward(params: EncoderParams, X: np.ndarray, want_cache: bool = False):
    """Encode one token matrix (m x d) into a d_g vector.

    With ``want_cache`` the returned tuple carries every intermediate needed
    by :func:`encoder_backward`.
    """
    params.validate()
    X = check_matrix(X, "X")
    if X.shape[1] != params.d:
        raise ValueError(f"X has dimension {X.shape[1]}, parameters expect {params.d}")
    h = params.n_heads
    dk = params.wq.shape[2]
    scale = 1.0 / np.sqrt(dk)

    Qs, Ks, Vs, As, heads = [], [], [], [], []
    for i in range(h):
        Q = X @ params.wq[i]
        K = X @ params.wk[i]
        V = X @ params.wv[i]
        A = _softmax_rows(Q @ K.T * scale)
        Qs.append(Q); Ks.append(K); Vs.append(V); As.append(A)
        heads.append(A @ V)
    concat = np.concatenate(heads, axis=1)
    mh = concat @ params.wc

    Z1, inv1 = _layer_norm_rows(X + mh)
    pre = Z1 @ params.w1 + params.b1
    relu = np.maximum(pre, 0.0)
    ff = relu @ params.w2 + params.b2
    Z2, inv2 = _layer_norm_rows(Z1 + ff)
    pooled = Z2.mean(axis=0)
    out = pooled @ params.g

    if not want_cache:
        return out
    cache = {
        "X": X, "Qs": Qs, "Ks": Ks, "Vs": Vs, "As": As, "concat": concat,
        "Z1": Z1, "inv1": inv1, "pre": pre, "relu": relu,
        "Z2": Z2, "inv2": inv2, "pooled": pooled, "scale": scale,
    }
    return out, cache


def zero_grads(params: EncoderParams) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in params.as_dict().items()}


def encoder_backward(params: EncoderParams, cache: dict, d_out: np.ndarray,
                     into: dict[str, np.ndarray] | None = None) -> dict[str, np.ndarray]:
    """Accumulate d(loss)/d(params) for one instance given d(loss)/d(output)."""
    grads = into if into is not None else zero_grads(params)
    X = cache["X"]
    m = X.shape[0]
    dk = params.wq.shape[2]
    scale = cache["scale"]

    grads["g"] += np.outer(cache["pooled"], d_out)
    d_pooled = params.g @ d_out
    dZ2 = np.tile(d_pooled / m, (m, 1))

    dR2 = _layer_norm_backward(dZ2, cache["Z2"], cache["inv2"])
    dZ1 = dR2.copy()
    dFF = dR2

    grads["w2"] += cache["relu"].T @ dFF
    grads["b2"] += dFF.sum(axis=0)
    d_relu = dFF @ params.w2.T
    d_pre = d_relu * (cache["pre"] > 0.0)
    grads["w1"] += cache["Z1"].T @ d_pre
    grads["b1"] += d_pre.sum(axis=0)
    dZ1 += d_pre @ params.w1.T

    dR1 = _layer_norm_backward(dZ1, cache["Z1"], cache["inv1"])
    dMH = dR1

    grads["wc"] += cache["concat"].T @ dMH
    d_concat = dMH @ params.wc.T
    for i in range(params.n_heads):
        dH = d_concat[:, i * dk:(i + 1) * dk]
        A = cache["As"][i]
        dA = dH @ cache["Vs"][i].T
        dV = A.T @ dH
        dS = A * (dA - (dA * A).sum(axis=1, keepdims=True))
        dQ = dS @ cache["Ks"][i] * scale
        dK = dS.T @ cache["Qs"][i] * scale
        grads["wq"][i] += X.T @ dQ
        grads["wk"][i] += X.T @ dK
        grads["wv"][i] += X.T @ dV
    return grads
