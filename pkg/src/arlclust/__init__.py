"""Short text clustering with cluster-level attention and adversarial training."""

from .corpus import (
    Corpus,
    EncodedDocument,
    PreprocessOptions,
    RawDocument,
    Vocabulary,
    load_corpus_file,
    load_labels,
    preprocess,
    with_labels,
)
from .embeddings import load_checkpoint, load_word2vec_text, save_checkpoint
from .metrics import ContingencyTable, acc, ari, contingency, hungarian, nmi, score_labels
from .model import (
    Gradients,
    LossSwitches,
    ModelParams,
    Perturbation,
    adversarial_step,
    attention,
    doc_embed,
    gradients,
    loss_pairwise,
    loss_pointwise,
    objective_j1,
    objective_j2,
    objective_total,
    random_perturbation,
    reconstruct,
    relevance,
)
from .stem import porter_stem
from .stopwords import ENGLISH_STOPWORDS
from .trainer import (
    AdamState,
    ClusterResult,
    TrainConfig,
    baseline_kmeans_tfidf,
    extract_assignments,
    init_params,
    kmeans,
    tfidf_matrix,
    train,
)

__version__ = "0.1.0"
