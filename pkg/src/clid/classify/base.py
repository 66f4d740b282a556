from __future__ import annotations

import numpy as np

from clid.errors import DataError
from clid.nn import argmax_lowest, softmax

N_CLASSES = 4


def check_training(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] != y.shape[0]:
        raise DataError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
    if np.unique(y).size < 2:
        raise DataError("training data must contain at least 2 classes")
    if y.min() < 0 or y.max() >= N_CLASSES:
        raise DataError(f"labels must lie in [0, {N_CLASSES})")
    return X, y


class Classifier:
    """Mixin for trained models: subclasses implement ``_scores`` and ``input_dim``."""

    kind = "classifier"

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if X.shape[1] != self.input_dim:
            raise DataError(f"{self.kind} expects {self.input_dim} input columns, got {X.shape[1]}")
        return X

    def scores(self, X) -> np.ndarray:
        return self._scores(self._check(X))

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.scores(X))

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X)
        out = argmax_lowest(self.scores(X))
        return out[0] if X.ndim == 1 else out
