"""Four clustering algorithms over a shared 2-D PCA view, as one-hot features."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from clid.features import PcaModel, fit_pca
from clid.unsup.clustering import (
    AgglomerativeModel,
    BirchModel,
    GmmModel,
    KMeansModel,
    fit_agglomerative,
    fit_birch,
    fit_gmm,
    fit_kmeans,
)

N_CLUSTERS = 4
MEMBERS = ("kmeans", "gmm", "birch", "agglomerative")


@dataclass(frozen=True)
class ClusterEnsemble:
    pca: PcaModel
    kmeans: KMeansModel
    gmm: GmmModel
    birch: BirchModel
    agglomerative: AgglomerativeModel

    @property
    def input_dim(self) -> int:
        return self.pca.mean.shape[0]

    def project(self, X: np.ndarray) -> np.ndarray:
        return self.pca.transform(X)

    def assignments(self, X: np.ndarray) -> np.ndarray:
        """Cluster ids, one column per member in ``MEMBERS`` order."""
        P = np.atleast_2d(self.project(X))
        return np.stack([getattr(self, m).assign(P) for m in MEMBERS], axis=1)

    def features(self, X: np.ndarray) -> np.ndarray:
        ids = self.assignments(X)
        out = np.zeros((ids.shape[0], len(MEMBERS) * N_CLUSTERS))
        for j in range(len(MEMBERS)):
            out[np.arange(ids.shape[0]), j * N_CLUSTERS + ids[:, j]] = 1.0
        return out


def fit_ensemble(X: np.ndarray, seed: int = 42, birch_threshold: float = 0.25) -> ClusterEnsemble:
    """Fit PCA(2) on the scaled statistical features, then all four clusterers."""
    pca = fit_pca(X, 2)
    P = pca.transform(X)
    return ClusterEnsemble(
        pca,
        fit_kmeans(P, N_CLUSTERS, seed),
        fit_gmm(P, N_CLUSTERS, seed),
        fit_birch(P, N_CLUSTERS, birch_threshold),
        fit_agglomerative(P, N_CLUSTERS),
    )


def ensemble_features(ensemble: ClusterEnsemble, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = ensemble.features(x)
    return out[0] if x.ndim == 1 else out
