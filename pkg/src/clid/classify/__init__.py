"""Supervised classifiers: linear SVM, dense network, character CNN."""
from __future__ import annotations

import numpy as np

from clid.classify import cnn, dense
from clid.classify.base import N_CLASSES, Classifier
from clid.classify.cnn import CnnConfig, CnnModel, train_cnn
from clid.classify.dense import NnConfig, NnModel, train_nn
from clid.classify.svm import SvmConfig, SvmModel, train_svm
from clid.nn import gradient_check as _fd_check
from clid.unsup import vae as _vae

__all__ = [
    "N_CLASSES", "Classifier", "CnnConfig", "CnnModel", "NnConfig", "NnModel", "SvmConfig", "SvmModel",
    "gradient_check", "predict", "train_cnn", "train_nn", "train_svm",
]


def predict(model: Classifier, features) -> np.ndarray:
    """Class indices by argmax of the model scores; ties go to the lowest index."""
    return model.predict(features)


def _copy(params: dict) -> dict:
    return {k: np.array(v, dtype=np.float64, copy=True) for k, v in params.items()}


def gradient_check(model, X, y=None, n_samples: int = 200, step: float = 1e-5, seed: int = 0) -> float:
    """Max relative error of analytic gradients against central differences.

    Works for :class:`NnModel` (with a fixed seeded dropout mask),
    :class:`CnnModel` and :class:`~clid.unsup.vae.VaeModel` (fixed noise).
    Batches above 8 rows are rejected.
    """
    X = np.asarray(X)
    if X.shape[0] > 8:
        raise ValueError("gradient checks use at most 8 samples")
    rng = np.random.default_rng(seed)
    if isinstance(model, NnModel):
        params = _copy(model.params)
        Xf = X.astype(np.float64)
        mask = dense.dropout_mask(rng, len(X))
        fn = lambda p: dense.loss_and_grads(p, Xf, y, mask)
    elif isinstance(model, CnnModel):
        params = _copy(model.params)
        ids = X.astype(np.int64)
        fn = lambda p: cnn.loss_and_grads(p, ids, y)
    elif isinstance(model, _vae.VaeModel):
        params = _copy(model.params)
        xs = model.scale(X)
        eps = rng.standard_normal((len(X), _vae.LATENT))
        fn = lambda p: _vae.loss_and_grads(p, xs, eps)
    else:
        raise TypeError(f"no gradient check for {type(model).__name__}")
    _, grads = fn(params)
    return _fd_check(lambda p: fn(p)[0], grads, params, n_samples, step, seed)
