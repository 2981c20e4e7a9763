"""CART trainer: Gini, split search vs. brute force, growth constraints,
prediction, k-fold validation, model files."""

import numpy as np
import pytest
from sklearn.base import clone

from rdoskip.cart import (
    CuSplitClassifier,
    TreeModel,
    best_split,
    gini_impurity,
    grow_tree,
    iter_nodes_bfs,
    kfold_validate,
    load_model,
    route,
    save_model,
)
from rdoskip.features import apply_bins


def brute_force_best_split(X, y, min_leaf=1):
    """Naive enumeration over every (feature, threshold) candidate.

    Candidates are the distinct column values (route left when value is
    strictly below); ties break on (feature, threshold) ascending.
    """
    n = len(y)
    parent = gini_impurity((n - int(sum(y)), int(sum(y))))
    best = None
    for feature in range(X.shape[1]):
        for threshold in sorted(set(X[:, feature]))[1:]:
            left = [bool(v) for v, keep in zip(y, X[:, feature] < threshold)
                    if keep]
            right = [bool(v) for v, keep in zip(y, X[:, feature] >= threshold)
                     if keep]
            n_l, n_r = len(left), len(right)
            if n_l < min_leaf or n_r < min_leaf:
                continue
            gini_l = 1.0 - ((n_l - sum(left)) / n_l) ** 2 \
                - (sum(left) / n_l) ** 2
            gini_r = 1.0 - ((n_r - sum(right)) / n_r) ** 2 \
                - (sum(right) / n_r) ** 2
            weighted = (n_l * gini_l + n_r * gini_r) / n
            if weighted >= parent:
                continue
            key = (weighted, feature, threshold)
            if best is None or key < best:
                best = key
    if best is None:
        return None
    return best  # (weighted_gini, feature, threshold)


class TestGini:
    def test_pure_node_is_zero(self):
        assert gini_impurity((100, 0)) == 0.0
        assert gini_impurity((0, 7)) == 0.0

    def test_even_split_is_half(self):
        assert gini_impurity((50, 50)) == 0.5

    def test_direct_substitution(self):
        assert gini_impurity((90, 10)) == pytest.approx(0.18, abs=1e-12)

    def test_empty_node_rejected(self):
        with pytest.raises(ValueError):
            gini_impurity((0, 0))

    def test_random_pairs_against_direct_formula(self):
        rng = np.random.default_rng(0)
        for _ in range(2000):
            n0, n1 = int(rng.integers(0, 5000)), int(rng.integers(0, 5000))
            if n0 + n1 == 0:
                continue
            p0, p1 = n0 / (n0 + n1), n1 / (n0 + n1)
            assert abs(gini_impurity((n0, n1)) - (1 - p0 * p0 - p1 * p1)) \
                <= 1e-12
            assert 0.0 <= gini_impurity((n0, n1)) <= 0.5


class TestBestSplit:
    def test_perfectly_separable(self):
        X = np.array([[1.0], [2.0], [3.0], [4.0]])
        y = np.array([False, False, True, True])
        split = best_split(X, y)
        assert split.feature == 0
        assert split.weighted_gini == 0.0
        # Threshold separates {1, 2} from {3, 4}.
        assert (X[:, 0] < split.threshold).tolist() == [True, True, False,
                                                        False]

    def test_pure_node_returns_none(self):
        X = np.array([[1.0], [2.0], [3.0]])
        assert best_split(X, np.array([True, True, True])) is None

    def test_constant_features_return_none(self):
        X = np.ones((6, 2))
        y = np.array([True, False] * 3)
        assert best_split(X, y) is None

    def test_min_leaf_veto(self):
        # The perfect split would isolate one sample; with min_leaf=2 the
        # best admissible split differs.
        X = np.array([[1.0], [2.0], [3.0], [4.0], [5.0], [6.0]])
        y = np.array([True, False, False, False, False, False])
        free = best_split(X, y, min_leaf=1)
        constrained = best_split(X, y, min_leaf=2)
        assert (X[:, 0] < free.threshold).sum() == 1
        assert constrained is None or \
            (X[:, 0] < constrained.threshold).sum() >= 2

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(13)
        for _ in range(40):
            n = int(rng.integers(10, 60))
            f = int(rng.integers(1, 4))
            # Small integer grids force plenty of exact ties.
            X = rng.integers(0, 6, (n, f)).astype(float)
            y = rng.random(n) < 0.5
            got = best_split(X, y, min_leaf=1)
            expected = brute_force_best_split(X, y, min_leaf=1)
            if expected is None:
                assert got is None
            else:
                w, feat, thr = expected
                assert got.feature == feat
                assert got.threshold == thr
                assert got.weighted_gini == w


def grown_random_tree(seed=1, n=600, max_depth=5, min_leaf=3):
    rng = np.random.default_rng(seed)
    X = np.column_stack([
        rng.integers(0, 40, n).astype(float),
        rng.uniform(0, 1, n),
        rng.integers(0, 3, n).astype(float),
    ])
    y = (X[:, 0] * 0.02 + X[:, 1] + rng.normal(0, 0.3, n)) > 1.0
    return X, y, grow_tree(X, y, max_depth=max_depth, min_leaf=min_leaf)


class TestGrowTree:
    def test_single_label_gives_single_leaf(self):
        X = np.random.default_rng(0).uniform(0, 1, (30, 2))
        root = grow_tree(X, np.ones(30, dtype=bool))
        assert root.is_leaf
        assert root.node_depth == 0
        assert root.counts == (0, 30)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            grow_tree(np.empty((0, 2)), np.empty(0, dtype=bool))

    def test_structural_invariants(self):
        for seed in (1, 2, 3):
            X, y, root = grown_random_tree(seed=seed)
            min_leaf = 3
            per_level = {}
            stack = [root]
            while stack:
                node = stack.pop()
                per_level[node.node_depth] = \
                    per_level.get(node.node_depth, 0) + 1
                assert node.node_depth <= 5
                if node.is_leaf:
                    assert node.total >= min_leaf
                else:
                    left, right = node.left, node.right
                    assert node.counts == (
                        left.counts[0] + right.counts[0],
                        left.counts[1] + right.counts[1])
                    child_gini = (left.total * left.gini
                                  + right.total * right.gini) / node.total
                    assert child_gini < node.gini
                    stack.extend([left, right])
            for level, count in per_level.items():
                assert count <= 2 ** level
            assert root.counts == (int((~y).sum()), int(y.sum()))
            assert root.coverage == 1.0
            leaves = [n for n in iter_nodes_bfs(root) if n.is_leaf]
            assert sum(n.coverage for n in leaves) == pytest.approx(
                1.0, abs=1e-12)

    def test_accuracy_definition(self):
        _, _, root = grown_random_tree(seed=4)
        for node in iter_nodes_bfs(root):
            assert node.accuracy == max(node.counts) / node.total
            assert 0.5 <= node.accuracy <= 1.0


class TestPredict:
    def test_single_leaf_tree(self):
        X = np.zeros((10, 2))
        y = np.array([True] * 7 + [False] * 3)
        root = grow_tree(X, y)
        assert route(root, np.array([123.0, -5.0])).majority is True

    def test_memorizes_separable_training_data(self):
        rng = np.random.default_rng(5)
        X = rng.permutation(32).reshape(32, 1).astype(float)
        y = X[:, 0] >= 16
        root = grow_tree(X, y, max_depth=5, min_leaf=1)
        for row, label in zip(X, y):
            assert route(root, row).majority == label

    def test_routing_matches_manual_trace(self):
        X, y, root = grown_random_tree(seed=6)
        rng = np.random.default_rng(7)
        for _ in range(200):
            row = np.array([rng.uniform(-5, 45), rng.uniform(-1, 2),
                            rng.integers(0, 3)], dtype=float)
            node = root
            while not node.is_leaf:
                node = (node.left if row[node.feature] < node.threshold
                        else node.right)
            assert route(root, row) is node


class TestKFold:
    def test_fold_sizes(self):
        rng = np.random.default_rng(8)
        X = rng.uniform(0, 1, (100, 2))
        y = rng.random(100) < 0.5
        report = kfold_validate(X, y, k=5, seed=1, feature_names=("a", "b"),
                                binned_features=())
        assert report.fold_sizes == [20] * 5

    def test_separable_data_scores_one(self):
        X = np.array([0.0] * 50 + [1.0] * 50).reshape(100, 1)
        y = X[:, 0] == 1.0
        report = kfold_validate(X, y, k=5, seed=0, feature_names=("a",),
                                binned_features=(), min_leaf_fraction=0.001)
        assert report.mean_accuracy == 1.0

    def test_deterministic_under_seed(self):
        rng = np.random.default_rng(9)
        X = rng.uniform(0, 1, (80, 3))
        y = rng.random(80) < 0.4
        params = dict(feature_names=("a", "b", "c"), binned_features=())
        r1 = kfold_validate(X, y, k=4, seed=5, **params)
        r2 = kfold_validate(X, y, k=4, seed=5, **params)
        assert r1 == r2

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            kfold_validate(np.zeros((3, 1)), np.zeros(3, dtype=bool), k=5)


class TestEstimator:
    def test_sklearn_clone_round_trip(self):
        clf = CuSplitClassifier(max_depth=4, bin_count=16)
        assert clone(clf).get_params() == clf.get_params()

    def test_fit_predict_on_planted_data(self, planted_dataset):
        X, y = planted_dataset.feature_matrix(2)
        clf = CuSplitClassifier().fit(X, y)
        assert clf.min_leaf_count_ == int(np.ceil(0.001 * len(y)))
        # The planted labels are noisy by construction; the Bayes rate is
        # 0.25 * 0.985 + 0.75 * 0.70 = 0.771.
        assert clf.score(X, y) > 0.74
        pred, acc, cov = clf.predict_with_stats(X)
        assert pred.shape == acc.shape == cov.shape == (len(y),)
        assert ((acc >= 0.5) & (acc <= 1.0)).all()

    def test_binned_thresholds_reproduce_binned_routing(self,
                                                        planted_dataset):
        # Routing raw values through the stored thresholds must agree with
        # routing the binned training matrix: thresholds are bin
        # representatives, not midpoints.
        X, y = planted_dataset.feature_matrix(2)
        clf = CuSplitClassifier().fit(X, y)
        Xb = X.copy()
        for name, edges in clf.bin_edges_.items():
            col = clf.feature_names.index(name)
            Xb[:, col] = apply_bins(X[:, col], edges,
                                    clf.bin_representatives_[name])
        for raw_row, binned_row in zip(X, Xb):
            assert route(clf.root_, raw_row) is route(clf.root_, binned_row)

    def test_wrong_column_count(self):
        clf = CuSplitClassifier()
        with pytest.raises(ValueError):
            clf.fit(np.zeros((10, 3)), np.zeros(10, dtype=bool))


class TestModelFiles:
    def test_round_trip(self, tmp_path, planted_dataset):
        X, y = planted_dataset.feature_matrix(2)
        clf = CuSplitClassifier().fit(X, y)
        model = TreeModel(cu_depth=2, classifier=clf,
                          provenance={"sequences": ["planted"],
                                      "n_samples": int(len(y))},
                          kfold={"k": 5, "mean_accuracy": 0.9})
        path = tmp_path / "model.json"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.cu_depth == 2
        assert loaded.provenance == model.provenance
        assert np.array_equal(loaded.classifier.predict(X), clf.predict(X))
        # Round-trip stability: a second save is byte-identical.
        path2 = tmp_path / "model2.json"
        save_model(loaded, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_rejects_other_files(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text('{"format": "something-else"}\n')
        with pytest.raises(ValueError):
            load_model(path)
