"""Offline learning of the 3^d support correlation kernel from example signals."""
import json
import logging
from dataclasses import dataclass

import numpy as np

from .tensor_core import check_shape, neighbour_offsets, support_mask

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CorrelationKernel:
    """Average rate at which each immediate neighbour of a nonzero entry is nonzero.

    ``values[o + 1]`` holds the rate for offset ``o`` in ``{-1, 0, 1}^d``; the
    centre entry is always 0.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (3,) * v.ndim or v.ndim < 1:
            raise ValueError(f"kernel must have shape (3,)*d, got {v.shape}")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("kernel entries must be finite and nonnegative")
        if v[(1,) * v.ndim] != 0:
            raise ValueError("kernel centre must be 0")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def order(self):
        return self.values.ndim

    @classmethod
    def zeros(cls, order):
        return cls(np.zeros((3,) * order))

    def to_json(self):
        return {"order": self.order, "values": self.values.ravel().tolist()}

    @classmethod
    def from_json(cls, obj):
        d = int(obj["order"])
        return cls(np.asarray(obj["values"], dtype=float).reshape((3,) * d))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))


@dataclass(frozen=True)
class DatasetStats:
    J: int
    s_avg: float
    shape: tuple

    def to_json(self):
        return {"J": self.J, "s_avg": self.s_avg, "shape": list(self.shape)}


def _check_dataset(dataset):
    dataset = [np.asarray(x) for x in dataset]
    if not dataset:
        raise ValueError("empty dataset")
    shape = dataset[0].shape
    check_shape(shape)
    if any(x.shape != shape for x in dataset):
        raise ValueError("all signals in a dataset must share one shape")
    return dataset, shape


def average_sparsity(dataset, threshold=0.0):
    """Mean number of entries above ``threshold`` per signal."""
    dataset, _ = _check_dataset(dataset)
    return float(np.mean([support_mask(x, threshold).sum() for x in dataset]))


def neighbour_counts(mask):
    """``kappa`` for one support mask: count of nonzero neighbours at each offset."""
    d = mask.ndim
    kappa = np.zeros((3,) * d)
    for off in neighbour_offsets(d):
        # pairs (w, w + off) with both inside the grid
        src = tuple(slice(max(0, -o), n - max(0, o)) for o, n in zip(off, mask.shape))
        dst = tuple(slice(max(0, o), n - max(0, -o)) for o, n in zip(off, mask.shape))
        kappa[tuple(o + 1 for o in off)] = np.count_nonzero(mask[src] & mask[dst])
    return kappa


def learn_kernel(dataset, threshold=0.0):
    """Learn the support correlation kernel and dataset statistics.

    Each signal contributes its neighbour counts divided by its own support
    size; the kernel is the plain mean of those per-signal kernels. Signals
    with an empty support are skipped with a warning.
    """
    dataset, shape = _check_dataset(dataset)
    total = np.zeros((3,) * len(shape))
    used = 0
    for j, x in enumerate(dataset):
        mask = support_mask(x, threshold)
        s = int(mask.sum())
        if s == 0:
            log.warning("signal %d has empty support; excluded from the kernel", j)
            continue
        total += neighbour_counts(mask) / s
        used += 1
    if used == 0:
        raise ValueError("every signal in the dataset is zero")
    stats = DatasetStats(J=used, s_avg=average_sparsity(dataset, threshold), shape=shape)
    return CorrelationKernel(total / used), stats
