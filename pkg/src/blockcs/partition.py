"""Block partitions of a tensor grid.

A partition is the permutation ``z = Pi x`` of block compressed sensing kept as
index arrays, never as an ``n x n`` matrix. Two strategies:

* ``contiguous`` -- block chosen by the per-mode quotient ``i // (n/beta)``,
  i.e. rectangular tiles.
* ``comb`` -- block chosen by the per-mode residue ``i mod beta``, so each
  block is a regular sub-lattice with stride ``beta`` in every mode.

Block ids are the row-major linearisation of the per-mode block coordinates.
"""
from dataclasses import dataclass

import numpy as np

from .tensor_core import check_shape

STRATEGIES = ("contiguous", "comb")


@dataclass(frozen=True)
class PartitionSpec:
    dims: tuple
    factors: tuple
    strategy: str = "comb"

    def __post_init__(self):
        dims = check_shape(self.dims)
        factors = tuple(int(f) for f in np.atleast_1d(self.factors))
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "factors", factors)
        if len(factors) != len(dims):
            raise ValueError(f"need one factor per mode: dims {dims}, factors {factors}")
        for n, f in zip(dims, factors):
            if f <= 0 or n % f:
                raise ValueError(f"factor {f} does not divide extent {n}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown partition strategy {self.strategy!r}")

    @property
    def n_blocks(self):
        return int(np.prod(self.factors))

    @property
    def block_shape(self):
        return tuple(n // f for n, f in zip(self.dims, self.factors))

    def to_json(self):
        return {"dims": list(self.dims), "factors": list(self.factors), "strategy": self.strategy}

    @classmethod
    def from_json(cls, obj):
        return cls(tuple(obj["dims"]), tuple(obj["factors"]), obj.get("strategy", "comb"))


def factors_for(dims, beta):
    """Split ``beta`` into per-mode factors that divide ``dims``.

    Prime factors of ``beta`` are handed out largest first, each to the mode
    with the largest remaining block extent it divides (ties go to the lower
    mode). For a square 2-D grid this gives ``(2, 2)`` for 4 and ``(4, 4)``
    for 16.
    """
    dims = check_shape(dims)
    beta = int(beta)
    if beta <= 0:
        raise ValueError("beta must be positive")
    primes, rest, p = [], beta, 2
    while rest > 1:
        while rest % p == 0:
            primes.append(p)
            rest //= p
        p += 1
    factors = [1] * len(dims)
    for p in sorted(primes, reverse=True):
        extents = [n // f for n, f in zip(dims, factors)]
        ok = [i for i in range(len(dims)) if extents[i] % p == 0]
        if not ok:
            raise ValueError(f"beta={beta} cannot partition shape {dims} into equal blocks")
        best = max(ok, key=lambda i: (extents[i], -i))
        factors[best] *= p
    return tuple(factors)


class PartitionMap:
    """Bijection between flat signal indices and ``(block, intra-block)`` pairs."""

    def __init__(self, spec):
        self.spec = spec
        dims = np.array(spec.dims)
        factors = np.array(spec.factors)
        bshape = dims // factors
        grid = np.indices(spec.dims).reshape(len(spec.dims), -1)
        if spec.strategy == "comb":
            bcoord = grid % factors[:, None]
            icoord = grid // factors[:, None]
        else:
            bcoord = grid // bshape[:, None]
            icoord = grid % bshape[:, None]
        self.block_of = np.ravel_multi_index(tuple(bcoord), tuple(factors))
        self.intra_of = np.ravel_multi_index(tuple(icoord), tuple(bshape))
        # indices[b, i] = flat signal index of intra-block entry i of block b
        self.indices = np.empty((spec.n_blocks, int(np.prod(bshape))), dtype=np.intp)
        self.indices[self.block_of, self.intra_of] = np.arange(grid.shape[1])
        for arr in (self.block_of, self.intra_of, self.indices):
            arr.flags.writeable = False

    @property
    def n_blocks(self):
        return self.spec.n_blocks

    @property
    def block_shape(self):
        return self.spec.block_shape

    @property
    def block_size(self):
        return self.indices.shape[1]

    @property
    def size(self):
        return self.block_of.size

    def forward(self, flat):
        return int(self.block_of[flat]), int(self.intra_of[flat])

    def inverse(self, block, intra):
        return int(self.indices[block, intra])

    def _check_block(self, b):
        if not 0 <= b < self.n_blocks:
            raise IndexError(f"block id {b} not in [0, {self.n_blocks})")

    def gather(self, x, b):
        """Entries of block ``b`` of ``x`` as a tensor of the block shape."""
        self._check_block(b)
        x = np.asarray(x)
        if x.shape != self.spec.dims:
            raise ValueError(f"tensor shape {x.shape} does not match {self.spec.dims}")
        return x.ravel()[self.indices[b]].reshape(self.block_shape)

    def scatter(self, xb, b):
        """Full-shape tensor holding ``xb`` at the indices of block ``b``, zeros elsewhere."""
        self._check_block(b)
        xb = np.asarray(xb)
        if xb.size != self.block_size or (xb.ndim > 1 and xb.shape != self.block_shape):
            raise ValueError(f"block of shape {xb.shape} does not match {self.block_shape}")
        out = np.zeros(self.size, dtype=np.result_type(xb.dtype, float))
        out[self.indices[b]] = xb.ravel()
        return out.reshape(self.spec.dims)

    def stack(self, x):
        """``Pi x`` reshaped to ``(n_blocks, block_size)``."""
        return np.asarray(x).ravel()[self.indices]

    def unstack(self, z):
        """Inverse of :meth:`stack`."""
        z = np.asarray(z).reshape(self.indices.shape)
        out = np.empty(self.size, dtype=z.dtype)
        out[self.indices] = z
        return out.reshape(self.spec.dims)

    def block_sums(self, x):
        """Sum of the entries of each block, as a length ``n_blocks`` vector."""
        return np.bincount(self.block_of, weights=np.asarray(x).ravel(), minlength=self.n_blocks)


def build_partition(spec):
    return PartitionMap(spec)


def gather_block(x, pmap, b):
    return pmap.gather(x, b)


def scatter_block(xb, pmap, b):
    return pmap.scatter(xb, b)
