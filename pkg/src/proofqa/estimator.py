"""Scikit-learn style wrapper around training and inference.

``JointProofClassifier`` follows the estimator conventions: constructor
arguments are stored verbatim (so ``get_params`` / ``set_params`` / ``clone``
work), ``fit`` accepts a sequence of examples and returns ``self``, and the
fitted state lives in trailing-underscore attributes.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .decode import DecodeConfig, Prediction, infer
from .errors import EmptyDataset, MissingGold
from .metrics import Metrics, evaluate
from .model import (EncoderConfig, TrainConfig, load_checkpoint,
                    save_checkpoint, train_model)
from .reasoner import Example


def validate_examples(X, require_gold: bool = False) -> list[Example]:
    """Check that X is a non-empty sequence of Example objects."""
    items = list(X)
    if not items:
        raise EmptyDataset("expected at least one example")
    for k, ex in enumerate(items):
        if not isinstance(ex, Example):
            raise TypeError(f"X[{k}] is {type(ex).__name__}, expected Example")
        if require_gold and not ex.gold_proofs:
            raise MissingGold(f"example {ex.id} carries no gold proof")
    return items


class JointProofClassifier(BaseEstimator):
    """Joint answer + proof-graph predictor over parsed rule theories."""

    def __init__(self, epochs=30, batch_size=8, learning_rate=1e-3,
                 grad_clip=1.0, dropout=0.0, variant="base",
                 hash_dim=2048, embed_dim=64, hidden_dim=64,
                 node_threshold=0.5, max_nodes_exact=10,
                 time_budget_ms=2000, seed=0):
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.grad_clip = grad_clip
        self.dropout = dropout
        self.variant = variant
        self.hash_dim = hash_dim
        self.embed_dim = embed_dim
        self.hidden_dim = hidden_dim
        self.node_threshold = node_threshold
        self.max_nodes_exact = max_nodes_exact
        self.time_budget_ms = time_budget_ms
        self.seed = seed

    def _configs(self) -> tuple[EncoderConfig, TrainConfig, DecodeConfig]:
        enc = EncoderConfig(hash_dim=self.hash_dim, embed_dim=self.embed_dim,
                            hidden_dim=self.hidden_dim, seed=self.seed)
        tr = TrainConfig(epochs=self.epochs, batch_size=self.batch_size,
                         learning_rate=self.learning_rate,
                         grad_clip=self.grad_clip, dropout=self.dropout,
                         variant=self.variant, seed=self.seed)
        dec = DecodeConfig(node_threshold=self.node_threshold,
                           max_nodes_exact=self.max_nodes_exact,
                           time_budget_ms=self.time_budget_ms)
        return enc, tr, dec

    def fit(self, X, y=None, dev=None):
        """Train on examples carrying gold answers and proofs."""
        examples = validate_examples(X, require_gold=True)
        dev_examples = validate_examples(dev) if dev else None
        enc, tr, _ = self._configs()
        result = train_model(examples, dev_examples, tr, enc)
        self.params_ = result.params
        self.moments_ = result.moments
        self.history_ = result.history
        return self

    def predict_proof(self, X) -> list[Prediction]:
        """Full predictions (answer, proof graph, indicator bits) per example."""
        check_is_fitted(self, "params_")
        examples = validate_examples(X)
        _, _, dec = self._configs()
        out = []
        for ex in examples:
            pred = infer(self.params_, ex.theory, ex.query, dec)
            pred.example_id = ex.id
            out.append(pred)
        return out

    def predict(self, X) -> np.ndarray:
        """Boolean answer per example."""
        return np.array([bool(p.answer) for p in self.predict_proof(X)])

    def evaluate(self, X) -> Metrics:
        """Answer / proof / full accuracy against the gold in X."""
        examples = validate_examples(X)
        return evaluate(self.predict_proof(examples), examples)

    def score(self, X, y=None) -> float:
        """Full accuracy (answer and proof both right), the headline metric."""
        return self.evaluate(X).fa

    def save(self, path):
        check_is_fitted(self, "params_")
        _, tr, _ = self._configs()
        save_checkpoint(path, self.params_, tr, self.moments_)

    @classmethod
    def load(cls, path) -> "JointProofClassifier":
        params, tr, moments = load_checkpoint(path)
        enc = params.encoder_config
        est = cls(epochs=tr.epochs, batch_size=tr.batch_size,
                  learning_rate=tr.learning_rate, grad_clip=tr.grad_clip,
                  dropout=tr.dropout, variant=tr.variant,
                  hash_dim=enc.hash_dim, embed_dim=enc.embed_dim,
                  hidden_dim=enc.hidden_dim, seed=enc.seed)
        est.params_ = params
        est.moments_ = moments
        est.history_ = []
        return est
