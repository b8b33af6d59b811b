"""Contrastive representation learning and deep embedded clustering for text.

The pipeline loads a corpus (or precomputed embeddings), draws two augmented
views per text, embeds them, and jointly minimises a temperature-scaled
contrastive loss and a Student-t / KL self-training clustering loss over one
of three interchangeable heads: K-means, a self-organising map, or
label-as-representation with centres from either. Evaluation reports
best-mapping accuracy and normalised mutual information.
"""

from .augment import AugmentPolicy, augment_pair
from .cluster import (KMeans, LabelAsRepresentation, SelfOrganizingMap,
                      centroids_of, label_as_representation, unit_normalize)
from .corpus import Corpus, Document, PreprocessRules, dedup, load_agnews, \
    load_stackoverflow, preprocess
from .embed import EmbeddingSet, HashedBowVectorizer, hashed_bow, load_embeddings, \
    save_embeddings
from .encoder import EncoderParams, encoder_forward, init_encoder_params, self_attention
from .losses import (LossBreakdown, SoftAssignment, TargetDistribution,
                     contrastive_loss, cosine_sim, kl_cluster_loss, soft_assign,
                     target_distribution, total_loss)
from .metrics import EvalReport, clustering_accuracy, evaluate, nmi
from .trainer import DeepEmbeddedClusterer, RunResult, SweepTable, TrainConfig, sweep, train

__version__ = "0.1.0"

__all__ = [
    "AugmentPolicy", "augment_pair",
    "KMeans", "LabelAsRepresentation", "SelfOrganizingMap", "centroids_of",
    "label_as_representation", "unit_normalize",
    "Corpus", "Document", "PreprocessRules", "dedup", "load_agnews",
    "load_stackoverflow", "preprocess",
    "EmbeddingSet", "HashedBowVectorizer", "hashed_bow", "load_embeddings",
    "save_embeddings",
    "EncoderParams", "encoder_forward", "init_encoder_params", "self_attention",
    "LossBreakdown", "SoftAssignment", "TargetDistribution", "contrastive_loss",
    "cosine_sim", "kl_cluster_loss", "soft_assign", "target_distribution", "total_loss",
    "EvalReport", "clustering_accuracy", "evaluate", "nmi",
    "DeepEmbeddedClusterer", "RunResult", "SweepTable", "TrainConfig", "sweep", "train",
]
