"""Shared fixtures. The acceptance tests train on a real digit-image subset:
an MNIST IDX directory when one is available (RLAB_MNIST_DIR or ./data),
otherwise the bundled scikit-learn 8x8 digits with a frozen shuffle."""

import os
from pathlib import Path

import numpy as np
import pytest

from robustlab.data import Dataset, load_mnist_idx

TRAIN_N = 2048
EVAL_N = 512

_IDX_NAMES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "eval_images": "t10k-images-idx3-ubyte",
    "eval_labels": "t10k-labels-idx1-ubyte",
}


def _idx_dir():
    cands = []
    env = os.environ.get("RLAB_MNIST_DIR")
    if env:
        cands.append(Path(env))
    cands.append(Path("data"))
    for cand in cands:
        if all((cand / name).is_file() for name in _IDX_NAMES.values()):
            return cand
    return None


def _digits_fallback():
    from sklearn.datasets import load_digits

    raw = load_digits()
    x = raw.images.reshape(len(raw.images), -1).astype(np.float64)
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    y = np.eye(10)[raw.target]
    # frozen shuffle so the split never depends on library ordering
    perm = np.random.Generator(np.random.Philox(np.random.SeedSequence(1234))).permutation(len(x))
    x, y = x[perm], y[perm]
    n_train = 1280  # 1797 total; hold out 512 for evaluation
    train = Dataset(x[:n_train].copy(), y[:n_train].copy())
    eval_ = Dataset(x[n_train : n_train + EVAL_N].copy(), y[n_train : n_train + EVAL_N].copy())
    return train, eval_, "sklearn-digits-8x8"


@pytest.fixture(scope="session")
def acceptance_data():
    """(train, eval, source_tag) image datasets with unit-norm inputs."""
    found = _idx_dir()
    if found is None:
        return _digits_fallback()
    train = load_mnist_idx(found / _IDX_NAMES["train_images"], found / _IDX_NAMES["train_labels"])
    eval_ = load_mnist_idx(found / _IDX_NAMES["eval_images"], found / _IDX_NAMES["eval_labels"])
    return train.subset(TRAIN_N), eval_.subset(EVAL_N), f"mnist-idx:{found}"
