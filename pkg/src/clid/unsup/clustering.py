"""k-means, Gaussian mixture, Birch and Ward agglomerative clustering.

All four are fitted on unlabelled 2-D point clouds and expose ``assign`` for
out-of-sample points so their outputs can be used as classifier features.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from clid.errors import DataError, NumericalError


def _check_points(X: np.ndarray, k: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < k:
        raise DataError(f"need at least k={k} points, got {X.shape[0]}")
    return X


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d = (X * X).sum(1)[:, None] - 2 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def nearest(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if C.shape[1] == 1 else X[None, :]
    return _sq_dists(X, C).argmin(axis=1)


# -- k-means ---------------------------------------------------------------


@dataclass(frozen=True)
class KMeansModel:
    centroids: np.ndarray
    inertia: float
    traces: tuple = field(default=(), compare=False)

    def assign(self, X: np.ndarray) -> np.ndarray:
        return nearest(X, self.centroids)


def _kmeans_pp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    d2 = _sq_dists(X, centers[0][None, :])[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers.append(X[idx])
        d2 = np.minimum(d2, _sq_dists(X, X[idx][None, :])[:, 0])
    return np.array(centers)


def _lloyd(X, C, max_iter, tol):
    trace = []
    for _ in range(max_iter):
        d = _sq_dists(X, C)
        labels = d.argmin(axis=1)
        new = C.copy()
        for j in range(C.shape[0]):
            members = labels == j
            if members.any():
                new[j] = X[members].mean(axis=0)
            else:
                # empty cluster takes over the worst-served point
                far = d[np.arange(len(X)), labels].argmax()
                new[j] = X[far]
                labels[far] = j
        trace.append(float(((X - new[labels]) ** 2).sum()))
        shift = np.sqrt(((new - C) ** 2).sum(axis=1)).max()
        C = new
        if shift < tol:
            break
    return C, trace


def fit_kmeans(
    X: np.ndarray, k: int = 4, seed: int = 0, n_init: int = 10, max_iter: int = 300, tol: float = 1e-4
) -> KMeansModel:
    """Lloyd's algorithm from k-means++ seeds; best of ``n_init`` restarts."""
    X = _check_points(X, k)
    rng = np.random.default_rng(seed)
    best = None
    traces = []
    for _ in range(n_init):
        C, trace = _lloyd(X, _kmeans_pp(X, k, rng), max_iter, tol)
        traces.append(trace)
        inertia = float(_sq_dists(X, C).min(axis=1).sum())
        if best is None or inertia < best[1]:
            best = (C, inertia)
    return KMeansModel(best[0], best[1], tuple(traces))


# -- Gaussian mixture --------------------------------------------------------


@dataclass(frozen=True)
class GmmModel:
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    log_likelihood_trace: tuple = field(default=(), compare=False)

    def _log_joint(self, X: np.ndarray) -> np.ndarray:
        return _log_joint(X, self.weights, self.means, self.covariances)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        lj = self._log_joint(X)
        lj -= lj.max(axis=1, keepdims=True)
        p = np.exp(lj)
        return p / p.sum(axis=1, keepdims=True)

    def assign(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self._log_joint(X).argmax(axis=1)


def _log_joint(X, weights, means, covs):
    n, d = X.shape
    out = np.empty((n, len(weights)))
    for j in range(len(weights)):
        try:
            L = np.linalg.cholesky(covs[j])
        except np.linalg.LinAlgError:
            raise NumericalError(f"GMM component {j} has a singular covariance despite the ridge") from None
        z = np.linalg.solve(L, (X - means[j]).T)
        log_det = 2 * np.log(np.diag(L)).sum()
        out[:, j] = np.log(weights[j]) - 0.5 * (d * np.log(2 * np.pi) + log_det + (z * z).sum(axis=0))
    return out


def fit_gmm(
    X: np.ndarray, k: int = 4, seed: int = 0, ridge: float = 1e-6, tol: float = 1e-3, max_iter: int = 100
) -> GmmModel:
    """Full-covariance EM initialised from k-means.

    ``tol`` applies to the gain in mean per-sample log-likelihood.
    """
    X = _check_points(X, k)
    n, d = X.shape
    km = fit_kmeans(X, k, seed)
    labels = km.assign(X)
    resp = np.eye(k)[labels]
    trace: list[float] = []
    weights = means = covs = None
    for _ in range(max_iter + 1):
        nk = resp.sum(axis=0) + 10 * np.finfo(float).eps
        weights = nk / n
        means = resp.T @ X / nk[:, None]
        covs = np.empty((k, d, d))
        for j in range(k):
            diff = X - means[j]
            covs[j] = (resp[:, j, None] * diff).T @ diff / nk[j] + ridge * np.eye(d)
        lj = _log_joint(X, weights, means, covs)
        top = lj.max(axis=1, keepdims=True)
        log_norm = top[:, 0] + np.log(np.exp(lj - top).sum(axis=1))
        ll = float(log_norm.mean())
        if not np.isfinite(ll):
            raise NumericalError("GMM log-likelihood is not finite")
        resp = np.exp(lj - log_norm[:, None])
        trace.append(ll)
        if len(trace) > 1 and trace[-1] - trace[-2] < tol:
            break
    return GmmModel(weights, means, covs, tuple(trace))


# -- Ward agglomerative (nearest-neighbour chain) ----------------------------


def ward_merges(X: np.ndarray, sizes: np.ndarray | None = None) -> list[tuple[int, int, float]]:
    """Full Ward hierarchy as ``(rep_a, rep_b, cost)`` merges sorted by cost.

    ``rep_*`` are the smallest original point indices of the merged clusters;
    ``cost`` is the increase in within-cluster sum of squares.  Ties between
    candidate neighbours go to the lowest index.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    cent = X.copy()
    size = np.ones(n) if sizes is None else np.asarray(sizes, dtype=float).copy()
    rep = np.arange(n)
    active = np.ones(n, dtype=bool)
    merges = []
    chain: list[int] = []
    remaining = n
    while remaining > 1:
        if not chain:
            chain.append(int(np.flatnonzero(active)[0]))
        a = chain[-1]
        cost = size[a] * size / (size[a] + size) * ((cent - cent[a]) ** 2).sum(axis=1)
        cost[~active] = np.inf
        cost[a] = np.inf
        b = int(cost.argmin())
        if len(chain) > 1 and cost[chain[-2]] <= cost[b]:
            b = chain[-2]
        if len(chain) > 1 and b == chain[-2]:
            chain.pop()
            chain.pop()
            lo, hi = min(a, b), max(a, b)
            merges.append((int(rep[lo]), int(rep[hi]), float(cost[b])))
            tot = size[lo] + size[hi]
            cent[lo] = (size[lo] * cent[lo] + size[hi] * cent[hi]) / tot
            size[lo] = tot
            rep[lo] = min(rep[lo], rep[hi])
            active[hi] = False
            remaining -= 1
        else:
            chain.append(b)
    order = sorted(range(len(merges)), key=lambda i: (merges[i][2], i))
    return [merges[i] for i in order]


def cut_merges(n: int, merges: list[tuple[int, int, float]], k: int) -> np.ndarray:
    """Apply the cheapest ``n - k`` merges; labels numbered by first member index."""
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b, _ in merges[: n - k]:
        ra, rb = find(a), find(b)
        parent[max(ra, rb)] = min(ra, rb)
    roots = [find(i) for i in range(n)]
    relabel: dict[int, int] = {}
    return np.array([relabel.setdefault(r, len(relabel)) for r in roots])


def _weighted_centroids(X, labels, k, weights=None):
    w = np.ones(len(X)) if weights is None else weights
    out = np.zeros((k, X.shape[1]))
    for j in range(k):
        m = labels == j
        out[j] = (w[m, None] * X[m]).sum(axis=0) / w[m].sum()
    return out


@dataclass(frozen=True)
class AgglomerativeModel:
    """Ward partition of the training points.

    New points take the label of their nearest training point, so every
    training point maps back to its own cluster.
    """

    centroids: np.ndarray
    labels: np.ndarray
    points: np.ndarray

    def assign(self, X: np.ndarray, chunk: int = 1024) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None] if self.points.shape[1] == 1 else X[None, :]
        out = np.empty(len(X), dtype=np.int64)
        for i in range(0, len(X), chunk):
            # exact differences: the expanded form is not exactly zero for x == p
            d = ((X[i : i + chunk, None, :] - self.points[None]) ** 2).sum(axis=2)
            out[i : i + chunk] = self.labels[d.argmin(axis=1)]
        return out


def fit_agglomerative(X: np.ndarray, k: int = 4) -> AgglomerativeModel:
    X = _check_points(X, k)
    labels = cut_merges(len(X), ward_merges(X), k)
    return AgglomerativeModel(_weighted_centroids(X, labels, k), labels, X.copy())


# -- Birch ------------------------------------------------------------------


class _CF:
    __slots__ = ("n", "ls", "ss", "child")

    def __init__(self, n, ls, ss, child=None):
        self.n, self.ls, self.ss, self.child = n, ls, ss, child

    @property
    def centroid(self):
        return self.ls / self.n

    def absorb(self, other: "_CF"):
        self.n += other.n
        self.ls = self.ls + other.ls
        self.ss += other.ss

    def merged_radius(self, other: "_CF") -> float:
        n = self.n + other.n
        ls = self.ls + other.ls
        r2 = (self.ss + other.ss) / n - float(ls @ ls) / n**2
        return float(np.sqrt(max(r2, 0.0)))


class _Node:
    __slots__ = ("entries", "leaf")

    def __init__(self, leaf: bool):
        self.entries: list[_CF] = []
        self.leaf = leaf

    def summary(self) -> _CF:
        n = sum(e.n for e in self.entries)
        ls = sum(e.ls for e in self.entries)
        ss = sum(e.ss for e in self.entries)
        return _CF(n, ls, ss, self)


class CFTree:
    """Clustering-feature tree; leaf entries are the Birch subclusters."""

    def __init__(self, threshold: float = 0.25, branching: int = 50):
        self.threshold = threshold
        self.branching = branching
        self.root = _Node(leaf=True)

    def insert(self, x: np.ndarray):
        x = np.asarray(x, dtype=float)
        entry = _CF(1, x.copy(), float(x @ x))
        if self._insert(self.root, entry):
            left, right = self._split(self.root)
            self.root = _Node(leaf=False)
            self.root.entries = [left.summary(), right.summary()]

    def _closest(self, node: _Node, entry: _CF) -> _CF:
        c = np.array([e.centroid for e in node.entries])
        return node.entries[int(((c - entry.centroid) ** 2).sum(axis=1).argmin())]

    def _insert(self, node: _Node, entry: _CF) -> bool:
        if not node.entries:
            node.entries.append(entry)
            return False
        target = self._closest(node, entry)
        if node.leaf:
            if target.merged_radius(entry) <= self.threshold:
                target.absorb(entry)
                return False
            node.entries.append(entry)
            return len(node.entries) > self.branching
        if not self._insert(target.child, entry):
            target.absorb(entry)
            return False
        left, right = self._split(target.child)
        i = node.entries.index(target)
        node.entries[i : i + 1] = [left.summary(), right.summary()]
        return len(node.entries) > self.branching

    @staticmethod
    def _split(node: _Node) -> tuple[_Node, _Node]:
        c = np.array([e.centroid for e in node.entries])
        d = _sq_dists(c, c)
        i, j = np.unravel_index(int(d.argmax()), d.shape)
        left, right = _Node(node.leaf), _Node(node.leaf)
        for e, row in zip(node.entries, d):
            (left if row[i] <= row[j] else right).entries.append(e)
        return left, right

    def leaves(self) -> list[_CF]:
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.leaf:
                out.extend(node.entries)
            else:
                stack.extend(e.child for e in reversed(node.entries))
        return out


@dataclass(frozen=True)
class BirchModel:
    centroids: np.ndarray
    subcluster_centroids: np.ndarray
    subcluster_sizes: np.ndarray
    subcluster_labels: np.ndarray

    def assign(self, X: np.ndarray) -> np.ndarray:
        """Label of the nearest leaf subcluster."""
        return self.subcluster_labels[nearest(X, self.subcluster_centroids)]


def fit_birch(X: np.ndarray, k: int = 4, threshold: float = 0.25, branching: int = 50) -> BirchModel:
    """CF-tree summarisation, then Ward merging of leaf subclusters down to k."""
    X = _check_points(X, k)
    tree = CFTree(threshold, branching)
    for x in X:
        tree.insert(x)
    leaves = tree.leaves()
    if len(leaves) < k:
        raise DataError(
            f"Birch found {len(leaves)} leaf subclusters for k={k}; use a smaller threshold than {threshold}"
        )
    cents = np.array([e.centroid for e in leaves])
    sizes = np.array([e.n for e in leaves], dtype=float)
    labels = cut_merges(len(leaves), ward_merges(cents, sizes), k)
    return BirchModel(_weighted_centroids(cents, labels, k, sizes), cents, sizes, labels)
