"""Joint contrastive + self-training loop and the hyperparameter sweep harness.

Each epoch samples a mini-batch, draws two augmented views per text, embeds
originals and views, computes the contrastive loss over the views and the KL
self-training loss against centres refit by the configured clustering head,
and applies gradient steps: encoder parameters at ``lr``, clustering-head
parameters (centroids, and the K-way projection for the label-as-representation
variants) at ``lr * lr_scale``. Runs are bit-reproducible for a fixed seed.

Providers: ``file`` (a fixed embedding matrix; the contrastive term is
reported but nothing upstream of the centroids is trainable), ``bow``
(hashed bag-of-words over texts, views differ through augmentation), and
``encoder`` (the trainable attention block). The self-training loss always
measures raw embeddings against the head's centres; SOM-origin prediction
follows the map's unit-sphere winner rule.
"""
from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator

from . import losses
from .augment import AugmentPolicy, augment_pair
from .cluster import KMeans, SelfOrganizingMap, label_as_representation, unit_normalize_rows
from .corpus import Corpus
from .embed import EmbeddingSet, hashed_bow, token_matrix
from .encoder import encoder_backward, encoder_forward, init_encoder_params, zero_grads
from .metrics import EvalReport, evaluate
from .optim import make_optimizer
from .validation import check_matrix

HEADS = ("kmeans", "kmeansr", "som", "somr", "label-as-rep")
PROVIDERS = ("file", "bow", "encoder")
SWEEP_AXES = ("lr", "lr_scale", "tau")

# seed-stream tags
_ENC, _HEAD, _BATCH, _PROJ = 1, 2, 3, 4


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 64
    tau: float = 0.5
    lr: float = 1e-3
    lr_scale: float = 100.0
    alpha: float = 1.0
    head: str = "kmeans"
    n_clusters: int = 4
    grid_rows: int = 2
    grid_cols: int = 2
    som_iters: int = 20
    seed: int = 0
    provider: str = "file"
    dim: int = 64
    max_len: int = 32
    optimizer: str = "sgd"
    kmeans_restarts: int = 10
    kmeans_max_iter: int = 100
    word_delete_prob: float = 0.0
    word_swap_prob: float = 0.0
    span_mask_prob: float = 0.0

    def validate(self) -> "TrainConfig":
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if self.lr <= 0 or self.lr_scale <= 0:
            raise ValueError("lr and lr_scale must be positive")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.head not in HEADS:
            raise ValueError(f"head must be one of {HEADS}, got {self.head!r}")
        if self.provider not in PROVIDERS:
            raise ValueError(f"provider must be one of {PROVIDERS}, got {self.provider!r}")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}")
        if self.som_iters < 1:
            raise ValueError("som_iters must be >= 1")
        k = self.k
        if k < 2:
            raise ValueError("need at least 2 clusters for self-training")
        if self.head in ("som", "somr") and self.n_clusters not in (k, 0):
            raise ValueError(
                f"n_clusters={self.n_clusters} conflicts with grid {self.grid_rows}x{self.grid_cols}"
            )
        self.augment_policy()  # validates probabilities
        return self

    @property
    def k(self) -> int:
        """Cluster count; the grid product for the SOM-centred heads."""
        if self.head in ("som", "somr"):
            return self.grid_rows * self.grid_cols
        return self.n_clusters

    def augment_policy(self) -> AugmentPolicy:
        return AugmentPolicy(
            word_delete_prob=self.word_delete_prob,
            word_swap_prob=self.word_swap_prob,
            span_mask_prob=self.span_mask_prob,
            seed=self.seed,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class RunResult:
    report: EvalReport
    trace: list[losses.LossBreakdown]
    config: TrainConfig
    wall_time: float
    labels: np.ndarray

    def to_dict(self) -> dict:
        return {
            "report": self.report.to_dict(),
            "trace": [
                {"contrastive": b.contrastive, "clustering": b.clustering, "total": b.total}
                for b in self.trace
            ],
            "config": self.config.to_dict(),
            "wall_time": self.wall_time,
            "labels": [int(x) for x in self.labels],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _derive_seed(seed: int, *tags: int) -> int:
    return int(np.random.SeedSequence([seed, *tags]).generate_state(1)[0])


class _Pipeline:
    """Mutable training state for one run: provider, head parameters, optimizers."""

    def __init__(self, cfg: TrainConfig, texts: Optional[list[str]], X: Optional[np.ndarray]):
        self.cfg = cfg
        self.texts = texts
        self.X = X
        self.k = cfg.k
        self.policy = cfg.augment_policy()
        self.enc_params = None
        self.enc_opt = None
        self.proj = None
        self.proj_opt = None
        self.centroids = None

        if cfg.provider == "encoder":
            self.enc_params = init_encoder_params(
                cfg.dim, n_heads=2, d_g=cfg.dim, seed=_derive_seed(cfg.seed, _ENC)
            )
            self.enc_opt = make_optimizer(cfg.optimizer, cfg.lr)
        if cfg.head in ("kmeansr", "somr", "label-as-rep"):
            d_emb = self.embed_dim()
            rng = np.random.default_rng([cfg.seed, _PROJ])
            self.proj = rng.normal(0.0, 1.0 / np.sqrt(d_emb), size=(d_emb, self.k))
            self.proj_opt = make_optimizer(cfg.optimizer, cfg.lr * cfg.lr_scale)

    def embed_dim(self) -> int:
        return self.X.shape[1] if self.cfg.provider == "file" else self.cfg.dim

    def n(self) -> int:
        return self.X.shape[0] if self.texts is None else len(self.texts)

    def embed_texts(self, items: list[str], want_cache: bool):
        """Embed a list of texts; returns (matrix, caches or None)."""
        cfg = self.cfg
        if cfg.provider == "bow":
            E = np.stack([hashed_bow(t, cfg.dim, cfg.seed) for t in items])
            return E, None
        outs, caches = [], []
        for t in items:
            X = token_matrix(t, cfg.dim, cfg.seed, cfg.max_len)
            if want_cache:
                out, cache = encoder_forward(self.enc_params, X, want_cache=True)
                caches.append(cache)
            else:
                out = encoder_forward(self.enc_params, X)
            outs.append(out)
        return np.stack(outs), (caches if want_cache else None)

    def embed_all(self) -> np.ndarray:
        if self.cfg.provider == "file":
            return self.X
        return self.embed_texts(self.texts, want_cache=False)[0]

    def fit_centers(self, E_used: np.ndarray, epoch: int):
        """Refit the configured head on this epoch's batch; returns
        (centroids, batch labels)."""
        cfg = self.cfg
        head_seed = _derive_seed(cfg.seed, _HEAD, epoch)
        if cfg.head == "kmeans":
            km = KMeans(self.k, max_iter=cfg.kmeans_max_iter,
                        n_init=cfg.kmeans_restarts, seed=head_seed).fit(E_used)
            return km.cluster_centers_, km.labels_
        if cfg.head == "som":
            som = SelfOrganizingMap(cfg.grid_rows, cfg.grid_cols, n_iter=cfg.som_iters,
                                    seed=head_seed).fit(E_used)
            return som.weights_, som.labels_
        # projected-space variants: labels by argmax, centres by K-means or SOM
        labels = label_as_representation(E_used)
        if cfg.head == "somr":
            som = SelfOrganizingMap(cfg.grid_rows, cfg.grid_cols, n_iter=cfg.som_iters,
                                    seed=head_seed).fit(E_used)
            return som.weights_, labels
        km = KMeans(self.k, max_iter=cfg.kmeans_max_iter,
                    n_init=cfg.kmeans_restarts, seed=head_seed).fit(E_used)
        return km.cluster_centers_, labels

    def predict(self, E_full: np.ndarray) -> np.ndarray:
        cfg = self.cfg
        if self.proj is not None:
            return label_as_representation(E_full @ self.proj)
        if self.centroids is None:
            # untrained pipeline: one un-updated head fit on the full set
            _, labels = self.fit_centers(E_full, epoch=0)
            return labels
        E = unit_normalize_rows(E_full) if cfg.head == "som" else E_full
        d2 = ((E[:, None, :] - self.centroids[None, :, :]) ** 2).sum(axis=2)
        return d2.argmin(axis=1)


def _resolve_data(cfg: TrainConfig, data, labels):
    if isinstance(data, EmbeddingSet):
        X: Optional[np.ndarray] = data.data.astype(np.float64)
        texts = None
    elif isinstance(data, Corpus):
        X = None
        texts = data.texts()
        if labels is None:
            labels = data.labels()
    elif isinstance(data, np.ndarray):
        X = check_matrix(data, "data")
        texts = None
    else:
        raise TypeError(f"unsupported data type {type(data).__name__}")
    if cfg.provider == "file" and X is None:
        raise ValueError("provider 'file' requires an embedding matrix, got a corpus")
    if cfg.provider in ("bow", "encoder") and texts is None:
        raise ValueError(f"provider {cfg.provider!r} requires a corpus, got embeddings")
    if labels is None:
        raise ValueError("ground-truth labels are required for evaluation")
    labels = np.asarray(labels)
    n = X.shape[0] if texts is None else len(texts)
    if len(labels) != n:
        raise ValueError(f"length mismatch: {n} samples vs {len(labels)} labels")
    return X, texts, labels


def train(config: TrainConfig, data, labels=None) -> RunResult:
    """Run the full loop of epochs on ``data`` and evaluate on the whole set.

    ``data`` is a Corpus (providers ``bow``/``encoder``) or an EmbeddingSet /
    plain matrix (provider ``file``). ``labels`` overrides or supplies the
    ground truth. Deterministic given ``config.seed``.
    """
    result, _ = _train_pipeline(config, data, labels)
    return result


def _train_pipeline(config: TrainConfig, data, labels):
    t0 = time.perf_counter()
    cfg = config.validate()
    X, texts, truth = _resolve_data(cfg, data, labels)
    pipe = _Pipeline(cfg, texts, X)
    n = pipe.n()
    if cfg.batch_size > n:
        raise ValueError(f"batch_size={cfg.batch_size} exceeds data size {n}")

    trace: list[losses.LossBreakdown] = []
    for epoch in range(cfg.epochs):
        trace.append(_run_epoch(pipe, epoch, n))

    E_full = pipe.embed_all()
    pred = pipe.predict(E_full)
    report = evaluate(pred, truth)
    result = RunResult(report=report, trace=trace, config=cfg,
                       wall_time=time.perf_counter() - t0, labels=pred)
    return result, pipe


def _run_epoch(pipe: _Pipeline, epoch: int, n: int) -> losses.LossBreakdown:
    cfg = pipe.cfg
    rng = np.random.default_rng([cfg.seed, _BATCH, epoch])
    idx = np.sort(rng.choice(n, size=cfg.batch_size, replace=False))

    if cfg.provider == "file":
        E = pipe.X[idx]
        Z1, Z2 = E, E
        caches = caches1 = caches2 = None
    else:
        batch_texts = [pipe.texts[i] for i in idx]
        views = [augment_pair(t, pipe.policy, epoch * n + int(i))
                 for t, i in zip(batch_texts, idx)]
        want = cfg.provider == "encoder"
        E, caches = pipe.embed_texts(batch_texts, want_cache=want)
        Z1, caches1 = pipe.embed_texts([v[0] for v in views], want_cache=want)
        Z2, caches2 = pipe.embed_texts([v[1] for v in views], want_cache=want)

    loss_co, dZ1, dZ2 = losses.contrastive_loss(Z1, Z2, cfg.tau)

    E_used = E @ pipe.proj if pipe.proj is not None else E
    centers, _ = pipe.fit_centers(E_used, epoch)
    assign = losses.soft_assign(E_used, centers, cfg.alpha)
    target = losses.target_distribution(assign)
    loss_cl, dE_used, dC = losses.kl_cluster_loss(target, assign)

    breakdown = losses.total_loss(loss_co, loss_cl, cfg.tau)
    if not np.isfinite(breakdown.total):
        raise RuntimeError(f"non-finite loss at epoch {epoch}")

    # clustering-head step at lr * lr_scale; centroids are refit each epoch so
    # their optimizer state starts fresh, while the projection keeps its state
    head_opt = make_optimizer(cfg.optimizer, cfg.lr * cfg.lr_scale)
    cparams = {"centroids": centers.copy()}
    head_opt.step(cparams, {"centroids": dC})
    pipe.centroids = cparams["centroids"]

    dE = dE_used
    if pipe.proj is not None:
        d_proj = E.T @ dE_used
        pipe.proj_opt.step({"proj": pipe.proj}, {"proj": d_proj})
        dE = dE_used @ pipe.proj.T

    if cfg.provider == "encoder":
        grads = zero_grads(pipe.enc_params)
        for i in range(len(idx)):
            encoder_backward(pipe.enc_params, caches[i], dE[i], into=grads)
            encoder_backward(pipe.enc_params, caches1[i], dZ1[i], into=grads)
            encoder_backward(pipe.enc_params, caches2[i], dZ2[i], into=grads)
        pipe.enc_opt.step(pipe.enc_params.as_dict(), grads)
    return breakdown


class DeepEmbeddedClusterer(BaseEstimator):
    """sklearn-style wrapper around :func:`train`.

    Parameters mirror :class:`TrainConfig` one-to-one; ``fit`` stores the
    fitted pipeline and exposes ``labels_``, ``report_`` and ``result_``.
    """

    def __init__(self, epochs=10, batch_size=64, tau=0.5, lr=1e-3, lr_scale=100.0,
                 alpha=1.0, head="kmeans", n_clusters=4, grid_rows=2, grid_cols=2,
                 som_iters=20, seed=0, provider="file", dim=64, max_len=32,
                 optimizer="sgd", kmeans_restarts=10, kmeans_max_iter=100,
                 word_delete_prob=0.0, word_swap_prob=0.0, span_mask_prob=0.0):
        self.epochs = epochs
        self.batch_size = batch_size
        self.tau = tau
        self.lr = lr
        self.lr_scale = lr_scale
        self.alpha = alpha
        self.head = head
        self.n_clusters = n_clusters
        self.grid_rows = grid_rows
        self.grid_cols = grid_cols
        self.som_iters = som_iters
        self.seed = seed
        self.provider = provider
        self.dim = dim
        self.max_len = max_len
        self.optimizer = optimizer
        self.kmeans_restarts = kmeans_restarts
        self.kmeans_max_iter = kmeans_max_iter
        self.word_delete_prob = word_delete_prob
        self.word_swap_prob = word_swap_prob
        self.span_mask_prob = span_mask_prob

    def config(self) -> TrainConfig:
        return TrainConfig(**self.get_params())

    def fit(self, X, y=None):
        self.result_, self._pipeline = _train_pipeline(self.config(), X, y)
        self.labels_ = self.result_.labels
        self.report_ = self.result_.report
        return self

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X, y).labels_

    def predict(self, X) -> np.ndarray:
        """Cluster new data with the fitted pipeline: an embedding matrix for
        the ``file`` provider, a Corpus or list of texts otherwise."""
        if not hasattr(self, "_pipeline"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError("DeepEmbeddedClusterer is not fitted")
        pipe = self._pipeline
        if pipe.cfg.provider == "file":
            if isinstance(X, EmbeddingSet):
                E = X.data.astype(np.float64)
            else:
                E = check_matrix(X, "X")
        else:
            texts = X.texts() if isinstance(X, Corpus) else list(X)
            E = pipe.embed_texts(texts, want_cache=False)[0]
        return pipe.predict(E)


@dataclass
class SweepTable:
    dataset: str
    axis: str
    values: list[float]
    heads: list[str]
    results: dict = field(default_factory=dict)  # (head, value) -> RunResult

    def score(self, head: str, value: float, metric: str) -> float:
        rep = self.results[(head, value)].report
        return rep.nmi if metric == "nmi" else rep.acc

    def rows(self):
        for metric in ("nmi", "acc"):
            for head in self.heads:
                yield (self.dataset, head, metric,
                       [self.score(head, v, metric) for v in self.values])

    def best(self, metric: str) -> tuple[str, float, float]:
        """(head, axis value, score) of the best cell for a metric."""
        cells = [(self.score(h, v, metric), h, v) for h in self.heads for v in self.values]
        score, head, value = max(cells, key=lambda c: c[0])
        return head, value, score

    def to_csv(self) -> str:
        header = "dataset,head,metric," + ",".join(repr(v) for v in self.values)
        lines = [header]
        for dataset, head, metric, scores in self.rows():
            lines.append(",".join([dataset, head, metric] + [repr(s) for s in scores]))
        return "\n".join(lines) + "\n"


def sweep(base: TrainConfig, axis: str, values, data, labels=None,
          heads=None, jobs: int = 1, dataset: str = "data") -> SweepTable:
    """One :func:`train` run per (axis value, head), laid out as a calibration
    table: a (head x metric) row per axis-value column."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {SWEEP_AXES}, got {axis!r}")
    values = [float(v) for v in values]
    if not values:
        raise ValueError("values must be nonempty")
    heads = list(heads) if heads else [base.head]
    for h in heads:
        if h not in HEADS:
            raise ValueError(f"unknown head {h!r}")
    # validate every cell before any run starts; cells share the base seed so
    # axis values are compared under identical randomness and a single-value
    # sweep reproduces a lone train() call
    configs = {}
    for v in values:
        for h in heads:
            configs[(h, v)] = replace(base, head=h, **{axis: v}).validate()

    runs = [(h, v) for v in values for h in heads]  # ordered by (axis value, head)
    table = SweepTable(dataset=dataset, axis=axis, values=values, heads=heads)
    if jobs <= 1:
        for key in runs:
            table.results[key] = train(configs[key], data, labels=labels)
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {key: pool.submit(train, configs[key], data, labels=labels)
                       for key in runs}
        for key in runs:
            table.results[key] = futures[key].result()
    return table
