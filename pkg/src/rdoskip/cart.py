"""Binary CART classifier for the CU split decision.

Trees are grown by recursive Gini-impurity minimisation under two
complexity constraints: a maximum node depth of 5 and a minimum leaf
occupancy of 0.1% of the training set.  Continuous features (RDC, Bits)
are quantile-binned before growth; thresholds are stored as raw-domain
values (the smallest feature value routed right), so evaluating a node
predicate on raw values reproduces the training-time routing exactly.

Class 0 is "not split", class 1 is "split".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .features import (
    FEATURE_NAMES,
    apply_bins,
    bin_representatives,
    quantile_bin_edges,
)

MAX_TREE_DEPTH = 5
MIN_LEAF_FRACTION = 0.001
DEFAULT_BIN_COUNT = 32
DEFAULT_BINNED_FEATURES = ("rdc", "bits")

MODEL_FORMAT = "rdoskip-tree-v1"


def gini_impurity(class_counts) -> float:
    """1 - p0^2 - p1^2 over the node's class shares (0 pure, 0.5 even)."""
    n0, n1 = int(class_counts[0]), int(class_counts[1])
    if n0 < 0 or n1 < 0:
        raise ValueError("class counts must be non-negative")
    total = n0 + n1
    if total == 0:
        raise ValueError("gini impurity is undefined for an empty node")
    return 1.0 - (n0 / total) ** 2 - (n1 / total) ** 2


class Split(NamedTuple):
    feature: int
    threshold: float  # route left when value < threshold
    weighted_gini: float


def best_split(X: np.ndarray, y: np.ndarray, min_leaf: int = 1
               ) -> Split | None:
    """Lowest weighted-child-Gini split over all features and thresholds.

    Threshold candidates are the distinct feature values themselves (the
    predicate "value < v" puts v's own bin on the right), which keeps
    thresholds inside the raw value domain.  Splits that leave a child
    below `min_leaf` or do not strictly reduce impurity are rejected.
    Ties break towards the lowest feature index, then lowest threshold.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=bool)
    n = y.size
    if n == 0:
        raise ValueError("best_split on an empty node")
    n_pos = int(y.sum())
    parent = gini_impurity((n - n_pos, n_pos))
    if parent == 0.0:
        return None

    best: Split | None = None
    for feature in range(X.shape[1]):
        order = np.argsort(X[:, feature], kind="stable")
        sv = X[order, feature]
        sy = y[order]
        boundaries = np.nonzero(sv[1:] != sv[:-1])[0]
        if boundaries.size == 0:
            continue
        cum_pos = np.cumsum(sy)
        n_left = boundaries + 1
        pos_left = cum_pos[boundaries]
        neg_left = n_left - pos_left
        n_right = n - n_left
        pos_right = n_pos - pos_left
        neg_right = n_right - pos_right

        gini_left = 1.0 - (neg_left / n_left) ** 2 - (pos_left / n_left) ** 2
        gini_right = (1.0 - (neg_right / n_right) ** 2
                      - (pos_right / n_right) ** 2)
        weighted = (n_left * gini_left + n_right * gini_right) / n

        valid = (n_left >= min_leaf) & (n_right >= min_leaf)
        valid &= weighted < parent
        if not valid.any():
            continue
        masked = np.where(valid, weighted, np.inf)
        idx = int(np.argmin(masked))  # first minimum: lowest threshold wins
        candidate = Split(feature, float(sv[boundaries[idx] + 1]),
                          float(weighted[idx]))
        if best is None or candidate.weighted_gini < best.weighted_gini:
            best = candidate
    return best


@dataclass
class TreeNode:
    counts: tuple[int, int]  # (not-split, split) training samples here
    node_depth: int
    accuracy: float          # majority share of the node's samples
    coverage: float          # node total / root total
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    @property
    def total(self) -> int:
        return self.counts[0] + self.counts[1]

    @property
    def majority(self) -> bool:
        # Equal counts predict not-split, the conservative choice.
        return self.counts[1] > self.counts[0]

    @property
    def gini(self) -> float:
        return gini_impurity(self.counts)


def _node_stats(y: np.ndarray, root_total: int, depth: int
                ) -> tuple[tuple[int, int], float, float]:
    n_pos = int(y.sum())
    counts = (y.size - n_pos, n_pos)
    accuracy = max(counts) / y.size
    coverage = y.size / root_total
    return counts, accuracy, coverage


def grow_tree(X: np.ndarray, y: np.ndarray, max_depth: int = MAX_TREE_DEPTH,
              min_leaf: int = 1) -> TreeNode:
    """Recursive CART growth; stops on purity, depth, or no admissible split."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=bool)
    if y.size == 0:
        raise ValueError("cannot grow a tree from an empty sample set")

    root_total = y.size

    def grow(Xn: np.ndarray, yn: np.ndarray, depth: int) -> TreeNode:
        counts, accuracy, coverage = _node_stats(yn, root_total, depth)
        node = TreeNode(counts, depth, accuracy, coverage)
        if depth >= max_depth or counts[0] == 0 or counts[1] == 0:
            return node
        split = best_split(Xn, yn, min_leaf)
        if split is None:
            return node
        mask = Xn[:, split.feature] < split.threshold
        node.feature = split.feature
        node.threshold = split.threshold
        node.left = grow(Xn[mask], yn[mask], depth + 1)
        node.right = grow(Xn[~mask], yn[~mask], depth + 1)
        return node

    return grow(X, y, 0)


def route(node: TreeNode, row: np.ndarray) -> TreeNode:
    """Follow predicates from `node` to the leaf this row lands in."""
    while not node.is_leaf:
        node = node.left if row[node.feature] < node.threshold else node.right
    return node


def iter_nodes_bfs(root: TreeNode) -> list[TreeNode]:
    """All nodes in breadth-first, left-to-right order."""
    queue = [root]
    out = []
    while queue:
        node = queue.pop(0)
        out.append(node)
        if not node.is_leaf:
            queue.extend([node.left, node.right])
    return out


class CuSplitClassifier(BaseEstimator, ClassifierMixin):
    """CART split/not-split classifier with quantile binning built in.

    Parameters
    ----------
    max_depth : maximum node depth (root is depth 0).
    min_leaf_fraction : minimum leaf occupancy as a fraction of the
        training set; the count floor is ceil(fraction * n_samples).
    bin_count : equal-frequency bins for the binned features.
    binned_features : names of continuous features to bin before growth.
    feature_names : column names of X, in order.
    """

    def __init__(self, max_depth: int = MAX_TREE_DEPTH,
                 min_leaf_fraction: float = MIN_LEAF_FRACTION,
                 bin_count: int = DEFAULT_BIN_COUNT,
                 binned_features: tuple = DEFAULT_BINNED_FEATURES,
                 feature_names: tuple = FEATURE_NAMES):
        self.max_depth = max_depth
        self.min_leaf_fraction = min_leaf_fraction
        self.bin_count = bin_count
        self.binned_features = binned_features
        self.feature_names = feature_names

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        y = np.asarray(y).astype(bool)
        if X.shape[1] != len(self.feature_names):
            raise ValueError(
                f"expected {len(self.feature_names)} feature columns, got "
                f"{X.shape[1]}")
        self.classes_ = np.array([False, True])
        self.n_features_in_ = X.shape[1]
        self.n_samples_ = X.shape[0]
        self.min_leaf_count_ = max(
            1, int(np.ceil(self.min_leaf_fraction * self.n_samples_)))

        X = X.copy()
        self.bin_edges_ = {}
        self.bin_representatives_ = {}
        for name in self.binned_features:
            col = self.feature_names.index(name)
            edges = quantile_bin_edges(X[:, col], self.bin_count)
            reps = bin_representatives(X[:, col], edges)
            self.bin_edges_[name] = edges
            self.bin_representatives_[name] = reps
            X[:, col] = apply_bins(X[:, col], edges, reps)

        self.root_ = grow_tree(X, y, self.max_depth, self.min_leaf_count_)
        return self

    def predict(self, X):
        """Majority class of the leaf each row routes to, on raw values."""
        check_is_fitted(self, "root_")
        X = check_array(X, dtype=np.float64)
        return np.array([route(self.root_, row).majority for row in X])

    def predict_with_stats(self, X):
        """(majority, leaf accuracy, leaf coverage) per row."""
        check_is_fitted(self, "root_")
        X = check_array(X, dtype=np.float64)
        leaves = [route(self.root_, row) for row in X]
        return (np.array([lf.majority for lf in leaves]),
                np.array([lf.accuracy for lf in leaves]),
                np.array([lf.coverage for lf in leaves]))


@dataclass
class KFoldReport:
    k: int
    seed: int
    fold_sizes: list[int]
    fold_accuracies: list[float]
    mean_accuracy: float

    def as_dict(self) -> dict:
        return {
            "k": self.k, "seed": self.seed, "fold_sizes": self.fold_sizes,
            "fold_accuracies": self.fold_accuracies,
            "mean_accuracy": self.mean_accuracy,
        }


def kfold_validate(X, y, k: int = 5, seed: int = 0,
                   **classifier_params) -> KFoldReport:
    """k-fold cross validation with a seeded shuffle.

    Folds partition the data and differ in size by at most one; the same
    seed always produces the same assignment and accuracies.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=bool)
    if k < 2:
        raise ValueError("k must be at least 2")
    if y.size < k:
        raise ValueError(f"need at least k={k} samples, got {y.size}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(y.size)
    folds = np.array_split(order, k)
    accuracies = []
    for i, fold in enumerate(folds):
        train_idx = np.concatenate([f for j, f in enumerate(folds) if j != i])
        clf = CuSplitClassifier(**classifier_params)
        clf.fit(X[train_idx], y[train_idx])
        pred = clf.predict(X[fold])
        accuracies.append(float(np.mean(pred == y[fold])))
    return KFoldReport(
        k=k, seed=seed, fold_sizes=[len(f) for f in folds],
        fold_accuracies=accuracies,
        mean_accuracy=float(np.mean(accuracies)))


# ---------------------------------------------------------------------------
# Model files
# ---------------------------------------------------------------------------


@dataclass
class TreeModel:
    """A fitted per-depth classifier plus its training provenance."""

    cu_depth: int
    classifier: CuSplitClassifier
    provenance: dict = field(default_factory=dict)
    kfold: dict | None = None

    @property
    def root(self) -> TreeNode:
        return self.classifier.root_


def _node_to_dict(node: TreeNode) -> dict:
    out = {
        "counts": list(node.counts),
        "node_depth": node.node_depth,
        "accuracy": node.accuracy,
        "coverage": node.coverage,
    }
    if not node.is_leaf:
        out["feature"] = FEATURE_NAMES[node.feature]
        out["threshold"] = node.threshold
        out["left"] = _node_to_dict(node.left)
        out["right"] = _node_to_dict(node.right)
    return out


def _node_from_dict(data: dict) -> TreeNode:
    node = TreeNode(
        counts=(int(data["counts"][0]), int(data["counts"][1])),
        node_depth=int(data["node_depth"]),
        accuracy=float(data["accuracy"]),
        coverage=float(data["coverage"]),
    )
    if "feature" in data:
        node.feature = FEATURE_NAMES.index(data["feature"])
        node.threshold = float(data["threshold"])
        node.left = _node_from_dict(data["left"])
        node.right = _node_from_dict(data["right"])
    return node


def save_model(model: TreeModel, path) -> None:
    clf = model.classifier
    payload = {
        "format": MODEL_FORMAT,
        "cu_depth": model.cu_depth,
        "params": clf.get_params(),
        "n_samples": clf.n_samples_,
        "min_leaf_count": clf.min_leaf_count_,
        "bin_edges": {k: list(v) for k, v in clf.bin_edges_.items()},
        "bin_representatives": {
            k: list(v) for k, v in clf.bin_representatives_.items()},
        "provenance": model.provenance,
        "kfold": model.kfold,
        "root": _node_to_dict(clf.root_),
    }
    payload["params"]["binned_features"] = list(
        payload["params"]["binned_features"])
    payload["params"]["feature_names"] = list(
        payload["params"]["feature_names"])
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_model(path) -> TreeModel:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FORMAT} file")
    params = dict(payload["params"])
    params["binned_features"] = tuple(params["binned_features"])
    params["feature_names"] = tuple(params["feature_names"])
    clf = CuSplitClassifier(**params)
    clf.classes_ = np.array([False, True])
    clf.n_samples_ = int(payload["n_samples"])
    clf.n_features_in_ = len(params["feature_names"])
    clf.min_leaf_count_ = int(payload["min_leaf_count"])
    clf.bin_edges_ = {
        k: np.array(v) for k, v in payload["bin_edges"].items()}
    clf.bin_representatives_ = {
        k: np.array(v) for k, v in payload["bin_representatives"].items()}
    clf.root_ = _node_from_dict(payload["root"])
    return TreeModel(
        cu_depth=int(payload["cu_depth"]),
        classifier=clf,
        provenance=payload.get("provenance", {}),
        kfold=payload.get("kfold"),
    )
