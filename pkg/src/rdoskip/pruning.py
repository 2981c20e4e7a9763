"""Manual tree pruning: keep only nodes that clear user-set accuracy and
coverage thresholds, and export the survivors as conjunctive skip rules.

Any node (internal or leaf) whose majority is not-split can become a rule;
its conjunction is the simplified root-to-node path.  A plot-data table
(node index vs. coverage and accuracy) helps pick the thresholds; when
nothing clears them, the thresholds must be lowered.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .cart import TreeModel, TreeNode, iter_nodes_bfs
from .criteria import (
    CriteriaBundle,
    Predicate,
    SkipCriterion,
    simplify_predicates,
    tautology,
)
from .features import FEATURE_NAMES


@dataclass(frozen=True)
class PruneThresholds:
    min_accuracy: float = 97.0  # percent
    min_coverage: float = 17.0  # percent

    def __post_init__(self):
        for value, name in ((self.min_accuracy, "min_accuracy"),
                            (self.min_coverage, "min_coverage")):
            if not 0.0 < value <= 100.0:
                raise ValueError(f"{name} must be in (0, 100], got {value}")


def criterion_accuracy(node: TreeNode) -> float:
    """Share of the node's samples labelled not-split (the skip action's
    success rate: a covered sample is misclassified only if it should split).
    """
    return node.counts[0] / node.total


def path_conjunction(model: TreeModel, node: TreeNode
                     ) -> tuple[Predicate, ...]:
    """Simplified conjunction of the branch conditions leading to `node`."""
    path = _find_path(model.root, node)
    if path is None:
        raise ValueError("node does not belong to this tree")
    predicates = []
    for parent, went_left in path:
        name = FEATURE_NAMES[parent.feature]
        op = "<" if went_left else ">="
        predicates.append(Predicate(name, op, parent.threshold))
    return simplify_predicates(predicates)


def _find_path(root: TreeNode, target: TreeNode
               ) -> list[tuple[TreeNode, bool]] | None:
    if root is target:
        return []
    if root.is_leaf:
        return None
    for child, went_left in ((root.left, True), (root.right, False)):
        sub = _find_path(child, target)
        if sub is not None:
            return [(root, went_left)] + sub
    return None


def harvest_criteria(model: TreeModel, thresholds: PruneThresholds
                     ) -> list[SkipCriterion]:
    """All nodes clearing both thresholds, as skip criteria in BFS order.

    Thresholds are inclusive.  An empty list is a valid outcome and means
    the thresholds must be lowered.
    """
    criteria = []
    for index, node in enumerate(iter_nodes_bfs(model.root)):
        if node.majority:  # split-majority nodes never become skip rules
            continue
        accuracy = criterion_accuracy(node)
        if accuracy * 100.0 < thresholds.min_accuracy:
            continue
        if node.coverage * 100.0 < thresholds.min_coverage:
            continue
        predicates = path_conjunction(model, node)
        if not predicates:
            predicates = (tautology(),)  # root node: covers everything
        criteria.append(SkipCriterion(
            cu_depth=model.cu_depth,
            predicates=predicates,
            accuracy=accuracy,
            coverage=node.coverage,
            source_node=(node.node_depth, index)))
    return criteria


def threshold_plot_data(model: TreeModel
                        ) -> list[tuple[int, float, float]]:
    """(node index, coverage %, accuracy %) per node, breadth-first.

    The accuracy column is the not-split share of the node, the quantity
    the pruning thresholds act on, so rows clearing both thresholds are
    exactly the nodes harvest_criteria would keep.
    """
    rows = []
    for index, node in enumerate(iter_nodes_bfs(model.root)):
        rows.append((index, node.coverage * 100.0,
                     criterion_accuracy(node) * 100.0))
    return rows


def write_plot_files(model: TreeModel, dat_path, csv_path) -> None:
    rows = threshold_plot_data(model)
    with open(dat_path, "w") as fh:
        fh.write("# node  coverage_pct  accuracy_pct\n")
        for index, cov, acc in rows:
            fh.write(f"{index} {cov!r} {acc!r}\n")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node", "coverage_pct", "accuracy_pct"])
        for index, cov, acc in rows:
            writer.writerow([index, repr(cov), repr(acc)])


def select_per_depth(criteria_by_depth: dict[int, list[SkipCriterion]]
                     ) -> dict[int, SkipCriterion]:
    """One criterion per depth: the widest coverage wins.

    Ties prefer higher accuracy, then fewer predicates, then harvest order.
    Depths with no surviving criteria stay absent (full RDO runs there).
    """
    selected = {}
    for depth, criteria in criteria_by_depth.items():
        if not criteria:
            continue
        best = min(
            enumerate(criteria),
            key=lambda item: (-item[1].coverage, -item[1].accuracy,
                              len(item[1].predicates), item[0]))
        selected[depth] = best[1]
    return selected


def select_bundle(models: dict[int, TreeModel], thresholds: PruneThresholds,
                  training_sequences: tuple[str, ...] = ()
                  ) -> CriteriaBundle:
    """Harvest + select across the per-depth models into one bundle."""
    harvested = {
        depth: harvest_criteria(model, thresholds)
        for depth, model in models.items()
    }
    return CriteriaBundle(
        by_depth=select_per_depth(harvested),
        min_accuracy=thresholds.min_accuracy,
        min_coverage=thresholds.min_coverage,
        training_sequences=tuple(training_sequences))
