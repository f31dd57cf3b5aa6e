"""Dense d-order tensors, index conversion and direct d-dimensional convolution.

Tensors are plain numpy arrays in C (row-major) order: the last index runs
fastest, so ``x.ravel()`` is the flat signal vector used everywhere else in
the package.
"""
import itertools
import json

import numpy as np

MAX_ORDER = 8


def check_shape(dims):
    """Validate a shape and return it as a tuple of ints."""
    dims = tuple(int(d) for d in np.atleast_1d(dims))
    if not dims:
        raise ValueError("shape must have order d >= 1")
    if len(dims) > MAX_ORDER:
        raise ValueError(f"order {len(dims)} exceeds the cap of {MAX_ORDER}")
    if any(d <= 0 for d in dims):
        raise ValueError(f"all extents must be positive, got {dims}")
    return dims


def as_tensor(data, dims=None):
    """Coerce ``data`` to a finite float or complex ndarray, optionally reshaped."""
    arr = np.asarray(data)
    if not (np.issubdtype(arr.dtype, np.floating) or np.issubdtype(arr.dtype, np.complexfloating)):
        arr = arr.astype(float)
    if dims is not None:
        dims = check_shape(dims)
        if arr.size != int(np.prod(dims)):
            raise ValueError(f"data of length {arr.size} does not fit shape {dims}")
        arr = arr.reshape(dims)
    else:
        check_shape(arr.shape)
    if not np.all(np.isfinite(arr)):
        raise ValueError("tensor entries must be finite")
    return arr


def flat_index(shape, multi):
    """Row-major flat position of ``multi`` in a tensor of ``shape``."""
    shape = check_shape(shape)
    multi = tuple(int(i) for i in np.atleast_1d(multi))
    if len(multi) != len(shape):
        raise IndexError(f"index {multi} has order {len(multi)}, shape has {len(shape)}")
    flat = 0
    for i, n in zip(multi, shape):
        if not 0 <= i < n:
            raise IndexError(f"index {multi} out of bounds for shape {shape}")
        flat = flat * n + i
    return flat


def multi_index(shape, flat):
    """Inverse of :func:`flat_index`."""
    shape = check_shape(shape)
    flat = int(flat)
    total = int(np.prod(shape))
    if not 0 <= flat < total:
        raise IndexError(f"flat index {flat} out of bounds for size {total}")
    out = []
    for n in reversed(shape):
        flat, i = divmod(flat, n)
        out.append(i)
    return tuple(reversed(out))


def _result_dtype(a, b):
    return np.result_type(a.dtype, b.dtype, float)


def convolve(a, b, mode="full"):
    """Direct d-dimensional convolution ``C(i) = sum_j A(j) B(i - j)``.

    ``mode="full"`` returns extents ``n_i + m_i - 1``. ``mode="same"`` keeps the
    shape of ``a`` with the centre of ``b`` aligned on each entry (zero padding
    outside ``a``); every extent of ``b`` must then be odd.

    The cost is one shifted multiply-add of ``a`` per kernel entry, so
    ``O(b.size * a.size)``.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != b.ndim:
        raise ValueError(f"order mismatch: {a.ndim} vs {b.ndim}")
    check_shape(a.shape)
    check_shape(b.shape)
    dtype = _result_dtype(a, b)

    if mode == "full":
        out = np.zeros(tuple(n + m - 1 for n, m in zip(a.shape, b.shape)), dtype=dtype)
        for q in np.ndindex(b.shape):
            w = b[q]
            if w == 0:
                continue
            region = tuple(slice(qi, qi + n) for qi, n in zip(q, a.shape))
            out[region] += w * a
        return out

    if mode != "same":
        raise ValueError(f"unknown convolution mode {mode!r}")
    if any(m % 2 == 0 for m in b.shape):
        raise ValueError(f"same-centered mode needs odd kernel extents, got {b.shape}")

    out = np.zeros(a.shape, dtype=dtype)
    centre = tuple(m // 2 for m in b.shape)
    for q in np.ndindex(b.shape):
        w = b[q]
        if w == 0:
            continue
        # out[j + q - c] += w * a[j], clipped to the grid of a
        dst, src = [], []
        for qi, ci, n in zip(q, centre, a.shape):
            s = qi - ci
            if abs(s) >= n:
                break
            if s >= 0:
                dst.append(slice(s, n))
                src.append(slice(0, n - s))
            else:
                dst.append(slice(0, n + s))
                src.append(slice(-s, n))
        else:
            out[tuple(dst)] += w * a[tuple(src)]
    return out


def support_mask(x, threshold=0.0):
    """Boolean mask of entries with magnitude strictly above ``threshold``."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    return np.abs(np.asarray(x)) > threshold


def extract_support(x, threshold=0.0):
    """Set of multi-indices whose entries exceed ``threshold`` in magnitude."""
    mask = support_mask(x, threshold)
    return frozenset(tuple(int(i) for i in idx) for idx in np.argwhere(mask))


def relative_threshold(x, rel=1e-9):
    """Support threshold used when comparing floating-point reconstructions."""
    x = np.asarray(x)
    return rel * float(np.abs(x).max()) if x.size else 0.0


def neighbour_offsets(order, include_centre=False):
    """All offsets in ``{-1, 0, 1}^order`` in row-major order."""
    offsets = itertools.product((-1, 0, 1), repeat=order)
    if include_centre:
        return list(offsets)
    return [o for o in offsets if any(o)]


# -- serialization ---------------------------------------------------------

def tensor_to_json(x):
    x = np.asarray(x)
    flat = x.ravel()
    if np.iscomplexobj(flat):
        data = [[float(v.real), float(v.imag)] for v in flat]
    else:
        data = [float(v) for v in flat]
    return {"dims": list(x.shape), "data": data}


def tensor_from_json(obj):
    dims = check_shape(obj["dims"])
    data = obj["data"]
    if data and isinstance(data[0], (list, tuple)):
        pairs = np.asarray(data, dtype=float).reshape(-1, 2)
        arr = pairs[:, 0] + 1j * pairs[:, 1]
    else:
        arr = np.asarray(data, dtype=float)
    return as_tensor(arr, dims)


def save_tensor(path, x):
    with open(path, "w") as fh:
        json.dump(tensor_to_json(x), fh)


def load_tensor(path):
    with open(path) as fh:
        return tensor_from_json(json.load(fh))
