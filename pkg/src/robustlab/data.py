"""Datasets: synthetic unit-sphere data and the IDX image/label format.

Inputs live on the unit sphere by default, matching the distribution the
estimators and kernel formulas assume. Image data can optionally be kept at
raw [0, 1] scale for replicating pixel-space figures.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .network import FormatError

__all__ = ["Dataset", "generate_sphere_dataset", "load_mnist_idx"]

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

TASKS = ("two-class-halfspace", "scalar-regression")


@dataclass(frozen=True)
class Dataset:
    """Immutable bundle of inputs (n, d) and labels (n, o)."""

    inputs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.inputs.ndim != 2 or self.labels.ndim != 2:
            raise ValueError("inputs and labels must be 2-D")
        if self.inputs.shape[0] != self.labels.shape[0]:
            raise ValueError(
                f"inputs and labels disagree on n: {self.inputs.shape[0]} vs {self.labels.shape[0]}"
            )
        if self.inputs.shape[0] < 1:
            raise ValueError("dataset must be non-empty")
        if not (np.all(np.isfinite(self.inputs)) and np.all(np.isfinite(self.labels))):
            raise ValueError("dataset must be finite")
        self.inputs.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def n(self):
        return self.inputs.shape[0]

    @property
    def d(self):
        return self.inputs.shape[1]

    @property
    def o(self):
        return self.labels.shape[1]

    def subset(self, k):
        """First k points."""
        if not 1 <= k <= self.n:
            raise ValueError(f"subset size must be in [1, {self.n}], got {k}")
        return Dataset(self.inputs[:k].copy(), self.labels[:k].copy())

    def max_norm_error(self):
        """max_i | ||x_i|| - 1 |, for checking the unit-sphere invariant."""
        return float(np.abs(np.sqrt((self.inputs**2).sum(axis=1)) - 1.0).max())


def generate_sphere_dataset(n, d, task, rng):
    """n points uniform on the unit sphere in R^d with task-defined labels.

    two-class-halfspace: scalar labels sign(v.x) in {-1, +1} for a random
    fixed direction v. scalar-regression: scalar labels Uniform[0.5, 1.5].
    """
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n} d={d}")
    g = rng.generator.standard_normal((n, d))
    norms = np.sqrt((g**2).sum(axis=1))
    while np.any(norms == 0.0):  # zero-probability guard
        bad = norms == 0.0
        g[bad] = rng.generator.standard_normal((int(bad.sum()), d))
        norms = np.sqrt((g**2).sum(axis=1))
    inputs = g / norms[:, None]
    if task == "two-class-halfspace":
        v = rng.generator.standard_normal(d)
        v /= np.sqrt(v @ v)
        labels = np.where(inputs @ v >= 0.0, 1.0, -1.0)[:, None]
    else:
        labels = rng.generator.uniform(0.5, 1.5, size=(n, 1))
    return Dataset(inputs, labels)


def _read_idx(path, expect_magic, dims):
    with open(path, "rb") as fh:
        blob = fh.read()
    head = 4 + 4 * dims
    if len(blob) < head:
        raise FormatError(f"{path}: truncated IDX header")
    magic = struct.unpack(">I", blob[:4])[0]
    if magic != expect_magic:
        raise FormatError(f"{path}: bad IDX magic 0x{magic:08x}, expected 0x{expect_magic:08x}")
    shape = struct.unpack(f">{dims}I", blob[4:head])
    count = int(np.prod([int(s) for s in shape], dtype=np.int64))
    if len(blob) - head != count:
        raise FormatError(f"{path}: payload has {len(blob) - head} bytes, expected {count}")
    data = np.frombuffer(blob, dtype=np.uint8, offset=head)
    return shape, data


def load_mnist_idx(images_path, labels_path, unit_norm=True):
    """Load an IDX image/label pair as a Dataset with one-hot labels.

    Pixels are scaled to [0, 1] and, unless unit_norm is False, each flattened
    image is projected to the unit sphere. All-zero images cannot be projected
    and are rejected.
    """
    (n, rows, cols), pix = _read_idx(images_path, IDX_IMAGES_MAGIC, 3)
    (n_lab,), lab = _read_idx(labels_path, IDX_LABELS_MAGIC, 1)
    if n != n_lab:
        raise FormatError(f"image count {n} does not match label count {n_lab}")
    if n < 1:
        raise FormatError("empty IDX file")
    if lab.max(initial=0) > 9:
        raise FormatError(f"label byte {lab.max()} out of range 0..9")
    x = pix.reshape(n, rows * cols).astype(float) / 255.0
    if unit_norm:
        norms = np.sqrt((x**2).sum(axis=1))
        if np.any(norms == 0.0):
            bad = int(np.argmax(norms == 0.0))
            raise FormatError(f"image {bad} is all zeros and cannot be unit-normalized")
        x = x / norms[:, None]
    labels = np.zeros((n, 10))
    labels[np.arange(n), lab] = 1.0
    return Dataset(x, labels)
