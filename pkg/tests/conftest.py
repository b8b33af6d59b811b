"""Shared test helpers: independent oracles (finite differences, brute-force
assignment search, contingency-table information) and synthetic data makers.
These deliberately do not reuse the package's own gradient or metric code.
"""
import numpy as np
import pytest
from itertools import permutations


def fd_grad(f, x, h=1e-4):
    """Central finite differences of scalar f() w.r.t. array x, in place."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        i = it.multi_index
        x[i] += h
        fp = f()
        x[i] -= 2 * h
        fm = f()
        x[i] += h
        g[i] = (fp - fm) / (2 * h)
        it.iternext()
    return g


def rel_err(a, b):
    """Max elementwise relative error with a unit floor on the denominator."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)))


def brute_force_acc(pred, truth):
    """Best accuracy over all injective predicted->true mappings (K <= 5)."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    pv = list(np.unique(pred))
    tv = list(np.unique(truth))
    k = max(len(pv), len(tv))
    best = 0
    for perm in permutations(range(k)):
        hits = 0
        for pi, ti in enumerate(perm):
            if pi < len(pv) and ti < len(tv):
                hits += int(((pred == pv[pi]) & (truth == tv[ti])).sum())
        best = max(best, hits)
    return best / len(pred)


def contingency_nmi(y, c):
    """Direct contingency-table computation of 2 I(Y;C) / (H(Y)+H(C))."""
    y = np.asarray(y)
    c = np.asarray(c)
    n = len(y)
    yv = np.unique(y)
    cv = np.unique(c)
    joint = np.zeros((len(yv), len(cv)))
    for i, a in enumerate(yv):
        for j, b in enumerate(cv):
            joint[i, j] = np.sum((y == a) & (c == b)) / n
    py = joint.sum(axis=1)
    pc = joint.sum(axis=0)
    hy = -sum(p * np.log(p) for p in py if p > 0)
    hc = -sum(p * np.log(p) for p in pc if p > 0)
    if hy + hc == 0:
        return 1.0
    mi = 0.0
    for i in range(len(yv)):
        for j in range(len(cv)):
            if joint[i, j] > 0:
                mi += joint[i, j] * np.log(joint[i, j] / (py[i] * pc[j]))
    return 2 * mi / (hy + hc)


def four_blobs(seed=0, n_per=50, d=16, sigma=0.05, spread=2.0):
    """Four Gaussian blobs at 2*e_1..2*e_4 (pairwise distance 2*sqrt(2) >= 2)."""
    rng = np.random.default_rng(seed)
    centers = np.zeros((4, d))
    for i in range(4):
        centers[i, i] = spread
    X = np.vstack([c + sigma * rng.normal(size=(n_per, d)) for c in centers])
    y = np.repeat(np.arange(4), n_per)
    return X, y, centers


@pytest.fixture
def blobs():
    return four_blobs()
