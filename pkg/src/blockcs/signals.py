"""Synthetic clustered-sparse tensors and the NMSE estimator."""
import itertools
from dataclasses import asdict, dataclass

import numpy as np

from .tensor_core import check_shape, neighbour_offsets

AMPLITUDES = ("unit", "gaussian", "complex-gaussian")


@dataclass(frozen=True)
class ClusterSpec:
    dims: tuple
    num_clusters: int = 3
    cluster_radius: int = 1
    sparsity: int = 18
    amplitude: str = "gaussian"
    seed: int | None = None

    def __post_init__(self):
        dims = check_shape(self.dims)
        object.__setattr__(self, "dims", dims)
        n = int(np.prod(dims))
        if self.amplitude not in AMPLITUDES:
            raise ValueError(f"unknown amplitude distribution {self.amplitude!r}")
        if self.num_clusters < 1 or self.cluster_radius < 0 or self.sparsity < 1:
            raise ValueError("num_clusters, sparsity must be >= 1 and radius >= 0")
        if self.sparsity > n / 4:
            raise ValueError(f"sparsity {self.sparsity} exceeds n/4 = {n / 4}")
        if any(2 * self.cluster_radius + 1 > d for d in dims):
            raise ValueError(f"radius {self.cluster_radius} does not fit shape {dims}")
        if self.sparsity > self.num_clusters * (2 * self.cluster_radius + 1) ** len(dims):
            raise ValueError("clusters cannot hold the requested sparsity")

    def to_json(self):
        out = asdict(self)
        out["dims"] = list(self.dims)
        return out

    @classmethod
    def from_json(cls, obj):
        obj = dict(obj)
        obj["dims"] = tuple(obj["dims"])
        return cls(**obj)


def _draw_amplitudes(rng, k, kind):
    if kind == "unit":
        return rng.choice([-1.0, 1.0], size=k)
    if kind == "gaussian":
        return rng.standard_normal(k)
    return (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / np.sqrt(2)


def generate_clustered(spec, rng=None):
    """Draw one clustered-sparse tensor.

    Cluster centres are uniform over positions whose Chebyshev ball of
    ``cluster_radius`` lies inside the grid. Each cluster grows from its
    centre by repeatedly adding a random in-ball neighbour of the entries it
    already holds, so every cluster is connected under the 3^d - 1
    neighbourhood. The ``sparsity`` entries are shared out as evenly as the
    cluster capacities allow.
    """
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    dims, r, d = spec.dims, spec.cluster_radius, len(spec.dims)
    centres = [tuple(int(rng.integers(r, n - r)) for n in dims) for _ in range(spec.num_clusters)]
    quota = np.full(spec.num_clusters, spec.sparsity // spec.num_clusters)
    quota[: spec.sparsity % spec.num_clusters] += 1
    offsets = neighbour_offsets(d)

    taken = set()
    for c, q in zip(centres, quota):
        members = []
        if c in taken:
            # overlapping clusters: restart from a random free entry of the ball
            ball = [tuple(ci + o for ci, o in zip(c, off))
                    for off in itertools.product(range(-r, r + 1), repeat=d)]
            free = [p for p in ball if p not in taken]
            frontier = [free[int(rng.integers(len(free)))]] if free else []
        else:
            frontier = [c]
        while len(members) < q and frontier:
            p = frontier.pop(int(rng.integers(len(frontier))))
            if p in taken:
                continue
            taken.add(p)
            members.append(p)
            for off in offsets:
                nb = tuple(pi + o for pi, o in zip(p, off))
                if nb not in taken and all(abs(a - b) <= r for a, b in zip(nb, c)) and nb not in frontier:
                    frontier.append(nb)

    if len(taken) < 0.5 * spec.sparsity:
        raise ValueError("overlapping clusters left too few free entries")
    idx = sorted(taken)
    dtype = complex if spec.amplitude == "complex-gaussian" else float
    x = np.zeros(dims, dtype=dtype)
    x[tuple(np.array(idx).T)] = _draw_amplitudes(rng, len(idx), spec.amplitude)
    return x


def generate_dataset(spec, count, seed=0):
    """``count`` signals; signal ``j`` is drawn from ``default_rng([*seed, j])``."""
    key = [int(v) for v in np.atleast_1d(seed)]
    return [generate_clustered(spec, np.random.default_rng(key + [j])) for j in range(count)]


def nmse(X, X_hat):
    """``E||X - X_hat||_F^2 / E||X||_F^2`` over the trial set, as a ratio of means.

    Accepts single tensors or sequences of trials.
    """
    err, ref = error_energies(X, X_hat)
    if ref.sum() == 0:
        raise ValueError("all reference signals are zero")
    return float(err.mean() / ref.mean())


def error_energies(X, X_hat):
    """Per-trial squared errors and reference energies."""
    X = [np.asarray(X)] if isinstance(X, np.ndarray) else [np.asarray(x) for x in X]
    X_hat = [np.asarray(X_hat)] if isinstance(X_hat, np.ndarray) else [np.asarray(x) for x in X_hat]
    if len(X) != len(X_hat) or any(a.shape != b.shape for a, b in zip(X, X_hat)):
        raise ValueError("reference and estimate trials do not match")
    err = np.array([np.sum(np.abs(a - b) ** 2) for a, b in zip(X, X_hat)])
    ref = np.array([np.sum(np.abs(a) ** 2) for a in X])
    return err, ref
