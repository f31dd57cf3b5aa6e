"""Block-diagonal sensing operators and the measurement model ``y_b = A_b z_b + v_b``."""
from dataclasses import dataclass, field

import numpy as np

from .partition import PartitionMap, PartitionSpec

ENSEMBLES = ("gaussian", "complex-gaussian")


@dataclass(frozen=True, eq=False)
class BlockSensor:
    """``beta`` blocks ``A_b`` of shape ``(m/beta, n/beta)`` stored as one 3-D array.

    Only the diagonal blocks are held, so the stored scalar count is exactly
    ``m n / beta``.
    """

    blocks: np.ndarray
    partition: PartitionMap
    noise_std: float = 1.0
    ensemble: str = "gaussian"
    seed: int | None = None

    def __post_init__(self):
        beta, mb, nb = self.blocks.shape
        if beta != self.partition.n_blocks or nb != self.partition.block_size:
            raise ValueError(
                f"blocks {self.blocks.shape} do not match partition with "
                f"{self.partition.n_blocks} blocks of {self.partition.block_size}"
            )
        if np.any(np.linalg.norm(self.blocks, axis=1) == 0):
            raise ValueError("sensor has a zero column")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        assert self.stored_scalars == self.m * self.n // self.beta
        self.blocks.flags.writeable = False

    @property
    def beta(self):
        return self.blocks.shape[0]

    @property
    def m_block(self):
        return self.blocks.shape[1]

    @property
    def n_block(self):
        return self.blocks.shape[2]

    @property
    def m(self):
        return self.beta * self.m_block

    @property
    def n(self):
        return self.beta * self.n_block

    @property
    def stored_scalars(self):
        return self.blocks.size

    @property
    def is_complex(self):
        return np.iscomplexobj(self.blocks)

    def header(self):
        """JSON header from which the matrices can be re-derived."""
        return {
            "m": self.m,
            "n": self.n,
            "beta": self.beta,
            "ensemble": self.ensemble,
            "seed": self.seed,
            "noise_std": self.noise_std,
            "partition": self.partition.spec.to_json(),
        }

    @classmethod
    def from_header(cls, obj):
        pmap = PartitionMap(PartitionSpec.from_json(obj["partition"]))
        return draw_sensor(obj["m"], obj["n"], obj["beta"], pmap, obj["seed"],
                           obj.get("ensemble", "gaussian"), noise_std=obj.get("noise_std", 1.0))

    def dense(self):
        """Assemble the full ``m x n`` matrix ``blkdiag(A_b) Pi``. Test sizes only."""
        out = np.zeros((self.m, self.n), dtype=self.blocks.dtype)
        for b in range(self.beta):
            rows = slice(b * self.m_block, (b + 1) * self.m_block)
            out[rows, self.partition.indices[b]] = self.blocks[b]
        return out


@dataclass
class MeasurementSet:
    """Per-block measurement vectors, stacked as ``y[b]`` in block-id order."""

    y: np.ndarray
    noise: np.ndarray | None = field(default=None, repr=False)

    @property
    def stacked(self):
        return self.y.ravel()


def draw_sensor(m, n, beta, partition=None, seed=None, ensemble="gaussian", noise_std=1.0):
    """Draw i.i.d. Gaussian blocks with unit-norm columns, deterministic per ``seed``.

    If ``partition`` is omitted a contiguous partition of a flat length-``n``
    signal is used.
    """
    m, n, beta = int(m), int(n), int(beta)
    if min(m, n, beta) <= 0:
        raise ValueError("m, n and beta must be positive")
    if m % beta or n % beta:
        raise ValueError(f"beta={beta} must divide m={m} and n={n}")
    if partition is None:
        partition = PartitionMap(PartitionSpec((n,), (beta,), "contiguous"))
    if partition.size != n or partition.n_blocks != beta:
        raise ValueError("partition does not match (n, beta)")
    if ensemble not in ENSEMBLES:
        raise ValueError(f"unknown ensemble {ensemble!r}")

    rng = np.random.default_rng(seed)
    size = (beta, m // beta, n // beta)
    blocks = rng.standard_normal(size)
    if ensemble == "complex-gaussian":
        blocks = blocks + 1j * rng.standard_normal(size)
    blocks /= np.linalg.norm(blocks, axis=1, keepdims=True)
    return BlockSensor(blocks, partition, float(noise_std), ensemble, seed)


def complex_noise(rng, size, sigma, is_complex):
    """White noise of per-entry variance ``sigma**2`` (circularly symmetric if complex)."""
    if is_complex:
        return sigma * (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2)
    return sigma * rng.standard_normal(size)


def clean_measurements(sensor, x):
    """Noise-free ``A_b z_b`` for every block, shape ``(beta, m/beta)``."""
    x = np.asarray(x)
    if x.shape != sensor.partition.spec.dims:
        raise ValueError(f"signal shape {x.shape} does not match {sensor.partition.spec.dims}")
    z = sensor.partition.stack(x)
    return np.einsum("bij,bj->bi", sensor.blocks, z)


def measure(sensor, x, sigma=None, seed=None):
    """Noisy block measurements of tensor ``x``; ``sigma`` defaults to the sensor's."""
    sigma = sensor.noise_std if sigma is None else float(sigma)
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    clean = clean_measurements(sensor, x)
    is_complex = np.iscomplexobj(clean)
    if sigma == 0:
        noise = np.zeros_like(clean)
    else:
        noise = complex_noise(np.random.default_rng(seed), clean.shape, sigma, is_complex)
    return MeasurementSet(clean + noise, noise)


def apply_block(sensor, b, z):
    z = np.asarray(z).ravel()
    if z.size != sensor.n_block:
        raise ValueError(f"block vector of length {z.size}, expected {sensor.n_block}")
    return sensor.blocks[b] @ z


def adjoint_block(sensor, b, r):
    r = np.asarray(r).ravel()
    if r.size != sensor.m_block:
        raise ValueError(f"measurement vector of length {r.size}, expected {sensor.m_block}")
    return sensor.blocks[b].conj().T @ r


def achieved_snr(sensor, x, sigma=None):
    """``||A Pi x||^2 / (m sigma^2)``."""
    sigma = sensor.noise_std if sigma is None else sigma
    energy = float(np.sum(np.abs(clean_measurements(sensor, x)) ** 2))
    return energy / (sensor.m * sigma**2)


def scale_to_snr(sensor, x, snr_db, sigma=None):
    """Rescale ``x`` so the noise-free measurements reach ``snr_db`` against ``sigma``."""
    snr = achieved_snr(sensor, x, sigma)
    if snr == 0:
        raise ValueError("signal produces zero measurement energy")
    return np.asarray(x) * np.sqrt(10 ** (snr_db / 10) / snr)
