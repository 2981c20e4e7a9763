import numpy as np
import pytest

from rdoskip.codec import lambda_from_qp
from rdoskip.features import Dataset, FeatureVector, Sample
from rdoskip.pipeline import collect_dataset
from rdoskip.sequences import SequenceSpec, generate_sequence


def make_planted_dataset(seed: int = 23, n: int = 4000,
                         depth: int = 2) -> Dataset:
    """Synthetic depth-2 dataset where "bits < 50 and pm == 0" implies
    not-split with ~98.5% consistency and ~25% coverage.

    The bits column is built in two clusters (20..45 and 55..120) with an
    exact half of the samples in each, so equal-frequency binning always
    places an edge inside the (45, 55) gap and the rule boundary stays
    discoverable.  Outside the rule region labels lean split (70%), so no
    competing region clears a 97% accuracy bar.
    """
    assert n % 2 == 0
    rng = np.random.default_rng(seed)
    half = n // 2
    bits = np.concatenate([
        rng.integers(20, 46, half), rng.integers(55, 121, n - half)
    ]).astype(np.float64)
    bits = bits[rng.permutation(n)]
    pm = rng.choice([0, 1, 2], size=n, p=[0.5, 0.25, 0.25])
    sf = rng.random(n) < 0.3
    cbf = np.where(sf, False, rng.random(n) < 0.5)
    rdc = rng.uniform(50.0, 400.0, n)
    and_depth = rng.uniform(0.0, 3.0, n)
    base_qp = rng.choice([22, 27, 32, 37], size=n)
    qpo = rng.integers(1, 5, n)
    in_rule = (bits < 50) & (pm == 0)
    noise = rng.random(n)
    label = np.where(in_rule, noise < 0.015, noise < 0.7)

    dataset = Dataset()
    for i in range(n):
        qp = int(base_qp[i] + qpo[i])
        fv = FeatureVector(
            sf=bool(sf[i]), cbf=bool(cbf[i]), rdc=float(rdc[i]),
            bits=float(bits[i]), and_depth=float(and_depth[i]), qp=qp,
            lam=lambda_from_qp(qp), qpo=int(qpo[i]), pm=int(pm[i]))
        dataset.append(Sample(
            features=fv, depth=depth, label=bool(label[i]),
            sequence_id="planted", frame_index=i // 256,
            cu_x=(i % 256) * 8, cu_y=(i // 256) * 8))
    return dataset


@pytest.fixture(scope="session")
def planted_dataset() -> Dataset:
    return make_planted_dataset()


@pytest.fixture(scope="session")
def codec_dataset() -> Dataset:
    """Features collected from a small mixed sequence at two base QPs."""
    spec = SequenceSpec("trainmix", "mixed", 192, 192, 6, seed=17)
    frames = generate_sequence(spec)
    return collect_dataset([("trainmix", frames)], qps=(22, 32))
