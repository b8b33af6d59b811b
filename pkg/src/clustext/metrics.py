"""Clustering evaluation: accuracy under the optimal predicted-to-true label
mapping (Hungarian assignment on the confusion matrix) and normalised mutual
information, 2*I(Y;C) / (H(Y)+H(C)) with natural-log entropies.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .validation import check_same_length


def _as_labels(x, name):
    a = np.asarray(x)
    if a.ndim != 1 or a.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-D label array")
    return a


def confusion_matrix(pred, truth) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Counts indexed by (predicted cluster, true class), with the sorted
    unique label values of each side."""
    pred = _as_labels(pred, "pred")
    truth = _as_labels(truth, "truth")
    check_same_length(pred, truth, "pred", "truth")
    pv, pi = np.unique(pred, return_inverse=True)
    tv, ti = np.unique(truth, return_inverse=True)
    M = np.zeros((len(pv), len(tv)), dtype=np.int64)
    np.add.at(M, (pi, ti), 1)
    return M, pv, tv


def clustering_accuracy(pred, truth) -> tuple[float, dict[int, int]]:
    """Best-match accuracy: the confusion matrix is padded square and solved
    by the Hungarian method; each predicted cluster maps to at most one true
    class. Returns the accuracy and the mapping actually used."""
    M, pv, tv = confusion_matrix(pred, truth)
    k = max(M.shape)
    padded = np.zeros((k, k), dtype=np.int64)
    padded[:M.shape[0], :M.shape[1]] = M
    rows, cols = linear_sum_assignment(-padded)
    matched = int(padded[rows, cols].sum())
    mapping = {
        int(pv[r]): int(tv[c])
        for r, c in zip(rows, cols)
        if r < M.shape[0] and c < M.shape[1]
    }
    return matched / len(np.asarray(pred)), mapping


def _entropy(counts: np.ndarray) -> float:
    p = counts / counts.sum()
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def nmi(pred, truth) -> float:
    """2*I(Y;C) / (H(Y)+H(C)); 1.0 by convention when both labelings are the
    same single-class partition."""
    M, _, _ = confusion_matrix(pred, truth)
    n = M.sum()
    hp = _entropy(M.sum(axis=1).astype(float))
    ht = _entropy(M.sum(axis=0).astype(float))
    if hp + ht == 0.0:
        return 1.0
    joint = M / n
    outer = np.outer(M.sum(axis=1), M.sum(axis=0)) / (n * n)
    nz = joint > 0
    mi = float((joint[nz] * np.log(joint[nz] / outer[nz])).sum())
    value = 2.0 * mi / (hp + ht)
    return float(min(max(value, 0.0), 1.0))


@dataclass
class EvalReport:
    acc: float
    nmi: float
    n: int
    confusion: list[list[int]]
    mapping: dict[int, int]

    def to_dict(self) -> dict:
        return {
            "acc": self.acc,
            "nmi": self.nmi,
            "n": self.n,
            "confusion": self.confusion,
            "mapping": {str(k): v for k, v in sorted(self.mapping.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def evaluate(pred, truth) -> EvalReport:
    acc, mapping = clustering_accuracy(pred, truth)
    M, _, _ = confusion_matrix(pred, truth)
    return EvalReport(acc=acc, nmi=nmi(pred, truth), n=int(M.sum()),
                      confusion=M.tolist(), mapping=mapping)
