"""High-level drivers: sequence encodes, dataset collection, training."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .cart import (
    DEFAULT_BIN_COUNT,
    MAX_TREE_DEPTH,
    MIN_LEAF_FRACTION,
    CuSplitClassifier,
    TreeModel,
    kfold_validate,
)
from .codec import EncoderConfig, Frame, FrameStats, RdoStats, encode_frame
from .criteria import CriteriaBundle
from .features import CU_DECISION_DEPTHS, Dataset

DEFAULT_QPS = (22, 27, 32, 37)

# Below this many samples a depth model is still trained, with a warning.
TRAIN_FLOOR = 200


@dataclass
class SequenceResult:
    """Totals of one (sequence, QP) encode over frames 1..N-1."""

    sequence_id: str
    base_qp: int
    bits: int = 0
    distortion: int = 0
    pixels: int = 0
    rd_cost: float = 0.0
    rdo: RdoStats = field(default_factory=RdoStats)
    frame_stats: list[FrameStats] = field(default_factory=list)
    wall_time: float = 0.0


def encode_sequence(sequence_id: str, frames: list[Frame], base_qp: int,
                    criteria: CriteriaBundle | None = None,
                    collector: list | None = None,
                    skip_log: list | None = None) -> SequenceResult:
    """Encode each frame against its predecessor (the leading frame is
    reference-only)."""
    if len(frames) < 2:
        raise ValueError("need at least 2 frames (reference + encoded)")
    config = EncoderConfig(base_qp=base_qp)
    result = SequenceResult(sequence_id=sequence_id, base_qp=base_qp)
    start = time.perf_counter()
    for reference, frame in zip(frames, frames[1:]):
        _, stats = encode_frame(
            frame, reference, config, criteria=criteria,
            collector=collector, skip_log=skip_log, sequence_id=sequence_id)
        result.frame_stats.append(stats)
        result.bits += stats.bits
        result.distortion += stats.distortion
        result.pixels += stats.pixels
        result.rd_cost += stats.rd_cost
        result.rdo.add(stats.rdo)
    result.wall_time = time.perf_counter() - start
    return result


def collect_dataset(sequences: list[tuple[str, list[Frame]]],
                    qps: tuple[int, ...] = DEFAULT_QPS) -> Dataset:
    """Full-RDO encodes of every (sequence, QP) pair, harvesting samples.

    The result is sorted by provenance, so assembly order (or a parallel
    merge) cannot change the dataset.
    """
    if not sequences:
        raise ValueError("no sequences given")
    dataset = Dataset()
    for sequence_id, frames in sequences:
        for qp in qps:
            collector: list = []
            encode_sequence(sequence_id, frames, qp, collector=collector)
            dataset.extend(collector)
    dataset.sort()
    return dataset


def train_models(dataset: Dataset,
                 max_depth: int = MAX_TREE_DEPTH,
                 min_leaf_fraction: float = MIN_LEAF_FRACTION,
                 bin_count: int = DEFAULT_BIN_COUNT,
                 kfold_k: int = 5,
                 kfold_seed: int = 0,
                 ) -> tuple[dict[int, TreeModel], list[str]]:
    """One tree per CU depth 0..2, with k-fold validation where possible.

    Returns the fitted models and a list of warnings (small or empty depth
    datasets).  Depths with no samples get no model.
    """
    models: dict[int, TreeModel] = {}
    warnings: list[str] = []
    for depth in CU_DECISION_DEPTHS:
        X, y = dataset.feature_matrix(depth)
        if X.shape[0] == 0:
            warnings.append(f"depth {depth}: no samples, model skipped")
            continue
        if X.shape[0] < TRAIN_FLOOR:
            warnings.append(
                f"depth {depth}: only {X.shape[0]} samples "
                f"(floor {TRAIN_FLOOR}), model may be unreliable")
        params = dict(max_depth=max_depth,
                      min_leaf_fraction=min_leaf_fraction,
                      bin_count=bin_count)
        kfold = None
        if X.shape[0] >= kfold_k:
            kfold = kfold_validate(X, y, k=kfold_k, seed=kfold_seed,
                                   **params).as_dict()
        else:
            warnings.append(
                f"depth {depth}: fewer samples than k={kfold_k}, "
                f"cross-validation skipped")
        clf = CuSplitClassifier(**params).fit(X, y)
        models[depth] = TreeModel(
            cu_depth=depth,
            classifier=clf,
            provenance={
                "sequences": dataset.sequence_ids(),
                "n_samples": int(X.shape[0]),
            },
            kfold=kfold)
    return models, warnings
