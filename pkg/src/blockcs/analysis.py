"""Mutual coherence, Welch-type lower bounds and the OMP error bound."""
import csv
import json
import math
from dataclasses import asdict, dataclass

import numpy as np


class BoundUndefinedError(ValueError):
    """Raised when ``(s - 1) * mu >= 1`` and the OMP error bound does not apply."""


@dataclass(frozen=True)
class BoundParams:
    s: int
    sigma: float
    alpha: float = 0.5
    m: int = 2000
    n: int = 10_000


def mutual_coherence(A):
    """Largest normalised absolute inner product between two distinct columns."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[1] < 2:
        raise ValueError("need a matrix with at least two columns")
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise ValueError("coherence is undefined for a zero column")
    An = A / norms
    gram = np.abs(An.conj().T @ An)
    np.fill_diagonal(gram, 0.0)
    return float(min(gram.max(), 1.0))


def welch_bound(m, n):
    if not (1 <= m <= n and n >= 2):
        raise ValueError(f"invalid dimensions m={m}, n={n}")
    return math.sqrt((n - m) / (m * (n - 1)))


def block_coherence(sensor):
    """Coherence of a block-diagonal sensor: the largest per-block coherence."""
    if sensor.n_block < 2:
        raise ValueError("each block needs at least two columns")
    return max(mutual_coherence(Ab) for Ab in sensor.blocks)


def bcs_welch_bound(m, n, beta, exact_blocks=True):
    """Lower bound on the coherence of any block-diagonal ``m x n`` matrix with ``beta`` blocks.

    With ``exact_blocks=False`` the closed form is evaluated for any real
    ``beta`` with ``n / beta > 1``, as needed to draw a continuous curve.
    """
    if exact_blocks:
        if beta < 1 or int(beta) != beta or m % beta or n % beta:
            raise ValueError(f"beta={beta} must divide m={m} and n={n}")
        if n // beta < 2:
            raise ValueError("blocks need at least two columns")
    elif not (beta >= 1 and n / beta > 1):
        raise ValueError(f"invalid beta={beta} for n={n}")
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    return math.sqrt((n - m) / (m * (n / beta - 1)))


def omp_mse_bound(params, mu):
    """``2 (1 + alpha) s sigma^2 log(m) / (1 - (s - 1) mu)^2`` with natural log."""
    gap = 1.0 - (params.s - 1) * mu
    if gap <= 0:
        raise BoundUndefinedError(f"(s - 1) mu = {(params.s - 1) * mu:.4g} >= 1")
    return 2 * (1 + params.alpha) / gap**2 * params.s * params.sigma**2 * math.log(params.m)


def bound_curve(params, betas, exact_blocks=True):
    """Rows ``(beta, mu_lower_bound, mse_upper_bound)``; the bound is None where undefined."""
    rows = []
    for beta in betas:
        mu = bcs_welch_bound(params.m, params.n, beta, exact_blocks=exact_blocks)
        try:
            bound = omp_mse_bound(params, mu)
        except BoundUndefinedError:
            bound = None
        rows.append((beta, mu, bound))
    return rows


def write_bound_csv(path, rows, params, extra=None):
    """Write the curve CSV and a ``.json`` sidecar holding the parameters."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["beta", "mu_lower_bound", "mse_upper_bound"])
        for beta, mu, bound in rows:
            w.writerow([beta, repr(mu), "" if bound is None else repr(bound)])
    meta = {"params": asdict(params), "log": "natural"}
    if extra:
        meta.update(extra)
    with open(str(path).rsplit(".", 1)[0] + ".json", "w") as fh:
        json.dump(meta, fh, indent=2)
