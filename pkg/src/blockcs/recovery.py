"""Greedy sparse solvers and the two block reconstruction schemes.

``omp`` is classical orthogonal matching pursuit. ``lw_omp`` adds a log-odds
term from a per-entry support prior to the atom-selection score::

    score_k = |<a_k, r>|^2 / ||a_k||^2 + logit_scale * noise_var * logit(p_k)

``parallel_bcs`` runs ``omp`` on every block independently. ``serial_bcs``
solves the blocks one at a time with ``lw_omp``, spreading each recovered block
through the learned correlation kernel into the prior of its neighbours and
always moving next to the unsolved block with the largest prior mass.
"""
import logging
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .tensor_core import neighbour_offsets

log = logging.getLogger(__name__)


class RankDeficiencyWarning(RuntimeWarning):
    pass


@dataclass
class RecoveryConfig:
    max_iters: int | None = None
    residual_tol_factor: float = 1.0
    logit_scale: float = 1.0
    prior_clip: float = 1e-3
    noise_var: float = 1.0
    # floor on the stopping threshold relative to ||y||, for noiseless data
    rtol: float = 1e-10
    workers: int = 1

    def __post_init__(self):
        if not 0 < self.prior_clip < 0.5:
            raise ValueError("prior_clip must lie in (0, 0.5)")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.noise_var < 0:
            raise ValueError("noise_var must be nonnegative")


def default_max_iters(s_avg, beta, m_block, factor=1.5):
    """Per-block iteration budget ``ceil(factor * s_avg / beta)``, capped at ``m_block``."""
    return max(1, min(int(math.ceil(factor * s_avg / beta)), int(m_block)))


@dataclass
class SparseSolution:
    x: np.ndarray
    support: list
    residual: np.ndarray
    residual_norms: list

    @property
    def n_iter(self):
        return len(self.support)


def _greedy(y, A, bias, config):
    A = np.asarray(A)
    y = np.asarray(y).ravel()
    m, n = A.shape
    if y.size != m:
        raise ValueError(f"measurement length {y.size} does not match operator rows {m}")
    max_iters = m if config.max_iters is None else config.max_iters
    if max_iters > m:
        raise ValueError(f"max_iters={max_iters} exceeds the {m} available measurements")

    col_sq = np.sum(np.abs(A) ** 2, axis=0)
    tol = max(config.residual_tol_factor * math.sqrt(config.noise_var * m),
              config.rtol * np.linalg.norm(y))
    dtype = np.result_type(A.dtype, y.dtype, float)
    x = np.zeros(n, dtype=dtype)
    r = y.astype(dtype, copy=True)
    support, coef = [], np.zeros(0, dtype=dtype)
    blocked = np.zeros(n, dtype=bool)
    norms = [float(np.linalg.norm(r))]

    while len(support) < max_iters and norms[-1] > tol:
        score = np.abs(A.conj().T @ r) ** 2 / col_sq
        if bias is not None:
            score = score + bias
        score[blocked] = -np.inf
        chosen = None
        while True:
            k = int(np.argmax(score))
            if score[k] == -np.inf:
                break
            cols = support + [k]
            c, _, rank, _ = np.linalg.lstsq(A[:, cols], y, rcond=None)
            if rank == len(cols):
                chosen, coef = k, c
                break
            warnings.warn(f"atom {k} makes the selected columns rank deficient; skipped",
                          RankDeficiencyWarning, stacklevel=3)
            score[k] = -np.inf
            blocked[k] = True
        if chosen is None:
            break
        support.append(chosen)
        blocked[chosen] = True
        r = y - A[:, support] @ coef
        norms.append(float(np.linalg.norm(r)))
        assert norms[-1] <= norms[-2] * (1 + 1e-9) + 1e-12, "residual increased"

    x[support] = coef
    return SparseSolution(x, support, r, norms)


def omp(y, A, config=None):
    """Orthogonal matching pursuit on ``y = A x + v``.

    Stops after ``config.max_iters`` atoms (default: number of rows) or once
    ``||r|| <= residual_tol_factor * sqrt(noise_var * m)``.
    """
    return _greedy(y, A, None, config or RecoveryConfig())


def logit_bias(prior, config):
    """Additive selection bias ``logit_scale * noise_var * logit(p)``, shifted so its max is 0.

    The shift leaves every argmax unchanged and makes a uniform prior
    contribute exactly nothing.
    """
    eps = config.prior_clip
    p = np.clip(np.asarray(prior, dtype=float).ravel(), eps, 1 - eps)
    w = np.log(p) - np.log1p(-p)
    return config.logit_scale * config.noise_var * (w - w.max())


def lw_omp(y, A, prior, config=None):
    """Logit-weighted OMP: OMP whose selection score is biased by a support prior."""
    config = config or RecoveryConfig()
    prior = np.asarray(prior)
    if prior.size != np.shape(A)[1]:
        raise ValueError(f"prior of size {prior.size} does not match {np.shape(A)[1]} atoms")
    if np.any(prior < 0):
        raise ValueError("prior entries must be nonnegative")
    return _greedy(y, A, logit_bias(prior, config), config)


@dataclass
class RecoveryResult:
    x: np.ndarray
    supports: dict = field(default_factory=dict)
    residual_norms: dict = field(default_factory=dict)
    iterations: dict = field(default_factory=dict)
    block_ms: dict = field(default_factory=dict)
    order: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)

    def to_json(self, reconstruction_ref=None):
        return {
            "reconstruction": reconstruction_ref,
            "order": list(self.order),
            "iterations": {str(b): v for b, v in self.iterations.items()},
            "residual_norms": {str(b): v for b, v in self.residual_norms.items()},
            "block_ms": {str(b): v for b, v in self.block_ms.items()},
            "failures": {str(b): v for b, v in self.failures.items()},
        }


def _solve_block(solver, y_b, A_b, *args):
    t0 = time.perf_counter()
    try:
        sol = solver(y_b, A_b, *args)
        err = None
    except (ValueError, np.linalg.LinAlgError) as exc:
        sol, err = None, f"{type(exc).__name__}: {exc}"
    return sol, err, 1e3 * (time.perf_counter() - t0)


def _record(result, pmap, b, sol, err, ms):
    result.order.append(b)
    result.block_ms[b] = ms
    if err is not None:
        log.warning("block %d failed: %s", b, err)
        result.failures[b] = err
        result.supports[b] = []
        result.iterations[b] = 0
        result.residual_norms[b] = float("nan")
        return None
    result.supports[b] = [int(pmap.indices[b, k]) for k in sol.support]
    result.iterations[b] = sol.n_iter
    result.residual_norms[b] = sol.residual_norms[-1]
    return sol.x


def parallel_bcs(measurements, sensor, config=None, order=None):
    """Standard BCS: every block solved independently by OMP, then un-permuted.

    ``config.workers > 1`` solves blocks on a thread pool. ``order`` only
    changes the sequence in which blocks are visited; the result does not
    depend on it.
    """
    config = config or RecoveryConfig()
    pmap = sensor.partition
    y = np.asarray(measurements.y)
    if y.shape != (sensor.beta, sensor.m_block):
        raise ValueError(f"measurements of shape {y.shape} do not fit the sensor")
    blocks = list(range(sensor.beta)) if order is None else list(order)
    if config.workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            outs = list(pool.map(lambda b: _solve_block(omp, y[b], sensor.blocks[b], config), blocks))
    else:
        outs = [_solve_block(omp, y[b], sensor.blocks[b], config) for b in blocks]

    dtype = np.result_type(sensor.blocks.dtype, y.dtype, float)
    z = np.zeros((sensor.beta, sensor.n_block), dtype=dtype)
    result = RecoveryResult(x=None)
    for b, (sol, err, ms) in zip(blocks, outs):
        xb = _record(result, pmap, b, sol, err, ms)
        if xb is not None:
            z[b] = xb
    result.x = pmap.unstack(z)
    return result


def spread_prior(shape, flat_idx, magnitudes, kernel):
    """Kernel-weighted spread of sparse magnitudes onto their grid neighbours.

    Returns ``(targets, increments)``: adding ``increments`` at the flat
    ``targets`` equals adding the same-centred convolution of the sparse
    magnitude tensor with ``kernel``, at ``3^d`` updates per nonzero.
    """
    kernel = np.asarray(kernel)
    offsets = np.array(neighbour_offsets(kernel.ndim, include_centre=True))
    weights = kernel.ravel()  # row-major over {-1,0,1}^d, same order as offsets
    keep = weights != 0
    offsets, weights = offsets[keep], weights[keep]
    coords = np.array(np.unravel_index(np.asarray(flat_idx, dtype=np.intp), shape))
    tgt = coords[None, :, :] + offsets[:, :, None]          # (offsets, d, nonzeros)
    ok = np.all((tgt >= 0) & (tgt < np.array(shape)[None, :, None]), axis=1)
    inc = weights[:, None] * np.asarray(magnitudes)[None, :]
    tgt = np.moveaxis(tgt, 1, 0)[:, ok]
    return np.ravel_multi_index(tuple(tgt), shape), inc[ok]


def serial_bcs(measurements, sensor, kernel, s_avg, config=None):
    """Data-driven serial BCS.

    The prior starts flat at ``s_avg / n``. Block 0 is solved first; after each
    block the magnitude of its estimate, convolved with the kernel, is added
    to the prior, and the unsolved block with the largest prior sum (lowest id
    on ties) goes next.
    """
    config = config or RecoveryConfig()
    pmap = sensor.partition
    dims = pmap.spec.dims
    if kernel.order != len(dims):
        raise ValueError(f"kernel order {kernel.order} does not match signal order {len(dims)}")
    y = np.asarray(measurements.y)
    if y.shape != (sensor.beta, sensor.m_block):
        raise ValueError(f"measurements of shape {y.shape} do not fit the sensor")

    prior = np.full(pmap.size, float(s_avg) / pmap.size)
    mass = pmap.block_sums(prior)
    dtype = np.result_type(sensor.blocks.dtype, y.dtype, float)
    x_hat = np.zeros(pmap.size, dtype=dtype)
    result = RecoveryResult(x=None)
    unsolved = np.ones(sensor.beta, dtype=bool)
    b = 0
    for _ in range(sensor.beta):
        sol, err, ms = _solve_block(lw_omp, y[b], sensor.blocks[b], prior[pmap.indices[b]], config)
        xb = _record(result, pmap, b, sol, err, ms)
        if xb is not None:
            nz = np.flatnonzero(xb)
            idx = pmap.indices[b, nz]
            x_hat[idx] += xb[nz]
            tgt, inc = spread_prior(dims, idx, np.abs(xb[nz]), kernel.values)
            np.add.at(prior, tgt, inc)
            np.add.at(mass, pmap.block_of[tgt], inc)
        unsolved[b] = False
        if not unsolved.any():
            break
        b = int(np.argmax(np.where(unsolved, mass, -np.inf)))
    x_hat = x_hat.reshape(dims)
    result.x = x_hat
    return result
