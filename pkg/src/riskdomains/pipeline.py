"""End-to-end training: weak labels to calibrated classifier.

The stages run in a fixed order: weak-label the corpus with the lexicon,
build megadocuments, fit TF-IDF over the labeled paragraphs, reduce with
truncated SVD, train the chosen scorer, then calibrate thresholds on the
scorer's outputs for the full training corpus. Disabling MWEs removes the
keyphrases from both weak labeling and fusion, which is the ablation arm.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .classify import DEFAULT_ALPHA, Pipeline, calibrate, score_vectors
from .corpus import (
    KeywordLexicon,
    Paragraph,
    TrainingCorpus,
    build_megadocuments,
    weak_label,
)
from .domains import CLASSIFIED_DOMAINS, DOMAIN_INDEX
from .errors import ConfigError, DataError, RiskDomainsError
from .networks import (
    PROTOTYPES_PER_DOMAIN,
    TrainConfig,
    build_rbf_prototypes,
    compute_rbf_width,
    init_rbf,
    one_hot,
    train_mlp,
    train_rbf,
)
from .textnorm import text_to_terms
from .vectorspace import fit_svd, fit_tfidf, project_all, vectorize, vectorize_all

DEFAULT_EPOCHS = {"mlp": 30, "rbf": 50}
# Summed binary cross entropy is the default for the MLP: the true-class-only
# categorical variant has no gradient pushing non-target sigmoids down, so
# every output saturates high and the calibrated thresholds stop separating
# anything. The categorical variant stays available as loss="cce".
DEFAULT_LOSS = {"mlp": "bce", "rbf": "mse"}


@dataclass
class PipelineOptions:
    kind: str = "mlp"
    svd_k: int = 100
    alpha: float | None = None       # None = per-kind default
    use_mwes: bool = True
    epochs: int | None = None        # None = per-kind default
    batch_size: int = 128
    loss: str | None = None          # None = per-kind default
    seed: int = 0
    per_domain_prototypes: int = PROTOTYPES_PER_DOMAIN
    clamp_prototypes: bool = False
    # Effective prototype count in the width heuristic d_max/sqrt(2n); the
    # architectural count (None) gives vanishing activations at 100 dims.
    rbf_width_units: int | None = 1

    def validate(self) -> None:
        if self.kind not in ("cosine", "mlp", "rbf"):
            raise ConfigError(f"unknown model kind {self.kind!r}")
        if self.svd_k < 1:
            raise ConfigError(f"svd_k must be >= 1, got {self.svd_k}")
        alpha = self.effective_alpha()
        if not np.isfinite(alpha):
            raise ConfigError(f"alpha must be finite, got {alpha}")

    def effective_alpha(self) -> float:
        return DEFAULT_ALPHA[self.kind] if self.alpha is None else float(self.alpha)

    def effective_epochs(self) -> int:
        if self.epochs is not None:
            return self.epochs
        return DEFAULT_EPOCHS.get(self.kind, 0)

    def effective_loss(self) -> str:
        if self.loss is not None:
            return self.loss
        return DEFAULT_LOSS.get(self.kind, "cce")


@dataclass
class TrainedPipeline:
    pipeline: Pipeline
    corpus: TrainingCorpus
    options: PipelineOptions
    loss_history: list[float] = field(default_factory=list)


@contextmanager
def _stage(name: str):
    """Prefix any pipeline error with the stage it came from."""
    try:
        yield
    except RiskDomainsError as e:
        raise type(e)(f"stage {name}: {e}") from e


def train_pipeline(
    paragraphs: list[Paragraph],
    lexicon: KeywordLexicon,
    options: PipelineOptions,
) -> TrainedPipeline:
    options.validate()
    effective_lexicon = lexicon if options.use_mwes else lexicon.without_keyphrases()
    phrases = effective_lexicon.all_phrases()

    with _stage("weak_label"):
        corpus = weak_label(paragraphs, effective_lexicon)
        if not corpus.entries:
            raise DataError("weak labeling produced an empty training corpus")
    with _stage("megadocuments"):
        megadocs = build_megadocuments(corpus, phrases)
    with _stage("fit_tfidf"):
        term_docs = [text_to_terms(p.text, phrases) for p, _ in corpus.entries]
        tfidf = fit_tfidf(term_docs)
        matrix = vectorize_all(tfidf, term_docs)
    with _stage("fit_svd"):
        svd = fit_svd(matrix, k=options.svd_k)
        vectors = project_all(svd, matrix)

    pipeline = Pipeline(
        kind=options.kind,
        use_mwes=options.use_mwes,
        phrases=phrases,
        tfidf=tfidf,
        svd=svd,
    )
    history: list[float] = []

    if options.kind == "cosine":
        with _stage("megadocument_vectors"):
            rows = [vectorize(tfidf, megadocs[d].terms) for d in CLASSIFIED_DOMAINS]
            megadoc_vectors = np.vstack([project_all(svd, r) for r in rows])
            norms = np.linalg.norm(megadoc_vectors, axis=1)
            if np.any(norms == 0.0):
                dead = CLASSIFIED_DOMAINS[int(np.argmin(norms))]
                raise DataError(f"megadocument vector for {dead} is zero")
            pipeline.megadoc_vectors = megadoc_vectors
    else:
        labels = np.array([DOMAIN_INDEX[d] for _, d in corpus.entries])
        targets = one_hot(labels)
        config = TrainConfig(
            epochs=options.effective_epochs(),
            batch_size=options.batch_size,
            seed=options.seed,
            loss=options.effective_loss(),
        )
        if options.kind == "mlp":
            with _stage("train_mlp"):
                model, history = train_mlp(vectors, targets, config)
                pipeline.mlp = model
        else:
            with _stage("rbf_prototypes"):
                by_domain = {
                    d: vectors[labels == DOMAIN_INDEX[d]] for d in CLASSIFIED_DOMAINS
                }
                prototypes = build_rbf_prototypes(
                    by_domain,
                    per_domain_k=options.per_domain_prototypes,
                    seed=options.seed,
                    clamp=options.clamp_prototypes,
                )
                width = compute_rbf_width(prototypes, options.rbf_width_units)
            with _stage("train_rbf"):
                base = init_rbf(prototypes, width, np.random.default_rng(options.seed))
                model, history = train_rbf(base, vectors, targets, config)
                pipeline.rbf = model

    with _stage("calibrate"):
        calibration_scores = score_vectors(pipeline, vectors)
        pipeline.thresholds = calibrate(calibration_scores, options.effective_alpha())
    return TrainedPipeline(
        pipeline=pipeline, corpus=corpus, options=options, loss_history=history
    )
