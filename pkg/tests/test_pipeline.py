"""Pipeline drivers: sequence encodes, dataset collection, model training."""

import pytest

from rdoskip.features import Dataset
from rdoskip.pipeline import (
    DEFAULT_QPS,
    collect_dataset,
    encode_sequence,
    train_models,
)
from rdoskip.sequences import SequenceSpec, generate_sequence

from conftest import make_planted_dataset


def test_default_qp_set():
    assert DEFAULT_QPS == (22, 27, 32, 37)


def test_encode_sequence_needs_two_frames():
    spec = SequenceSpec("f", "flat", 64, 64, 1, seed=0)
    with pytest.raises(ValueError):
        encode_sequence("f", generate_sequence(spec), 27)


def test_collect_dataset_rejects_empty_input():
    with pytest.raises(ValueError):
        collect_dataset([])


def test_collect_dataset_is_insertion_order_independent():
    specs = [SequenceSpec(f"s{i}", "mixed", 128, 128, 3, seed=i)
             for i in (1, 2)]
    named = [(s.name, generate_sequence(s)) for s in specs]
    forward = collect_dataset(named, qps=(27,))
    backward = collect_dataset(list(reversed(named)), qps=(27,))
    assert forward == backward


def test_train_models_warns_on_thin_and_missing_depths():
    dataset = make_planted_dataset(seed=3, n=150, depth=2)
    models, warnings = train_models(dataset)
    assert set(models) == {2}
    assert any("depth 0: no samples" in w for w in warnings)
    assert any("depth 1: no samples" in w for w in warnings)
    assert any("depth 2" in w and "floor" in w for w in warnings)
    assert models[2].kfold is not None
    assert models[2].provenance["n_samples"] == 150
