"""Brute-force reference implementations, deliberately independent of the package code."""
import itertools

import numpy as np


def conv_full_loop(A, B):
    """Nested-loop full convolution C(i) = sum_j A(j) B(i - j)."""
    out_shape = tuple(n + m - 1 for n, m in zip(A.shape, B.shape))
    C = np.zeros(out_shape, dtype=np.result_type(A, B, float))
    for i in itertools.product(*(range(k) for k in out_shape)):
        acc = 0
        for j in itertools.product(*(range(n) for n in A.shape)):
            q = tuple(a - b for a, b in zip(i, j))
            if all(0 <= qq < m for qq, m in zip(q, B.shape)):
                acc += A[j] * B[q]
        C[i] = acc
    return C


def conv_same_loop(A, B):
    """Same-centred convolution by explicit sums with zero padding."""
    c = tuple(m // 2 for m in B.shape)
    C = np.zeros(A.shape, dtype=np.result_type(A, B, float))
    for i in itertools.product(*(range(n) for n in A.shape)):
        acc = 0
        for j in itertools.product(*(range(n) for n in A.shape)):
            q = tuple(ii - jj + cc for ii, jj, cc in zip(i, j, c))
            if all(0 <= qq < m for qq, m in zip(q, B.shape)):
                acc += A[j] * B[q]
        C[i] = acc
    return C


def kernel_loop(dataset):
    """Neighbour-count kernel by scanning every nonzero and each of its neighbours."""
    d = dataset[0].ndim
    total = np.zeros((3,) * d)
    used = 0
    for X in dataset:
        support = [idx for idx in itertools.product(*(range(n) for n in X.shape)) if X[idx] != 0]
        if not support:
            continue
        kappa = np.zeros((3,) * d)
        for w in support:
            for off in itertools.product((-1, 0, 1), repeat=d):
                z = tuple(a + o for a, o in zip(w, off))
                if all(0 <= zz < n for zz, n in zip(z, X.shape)) and X[z] != 0:
                    kappa[tuple(o + 1 for o in off)] += 1
            kappa[(1,) * d] = 0
        total += kappa / len(support)
        used += 1
    return total / used


def coherence_pairs(A):
    """Mutual coherence by looping over every column pair."""
    n = A.shape[1]
    best = 0.0
    for k in range(n):
        for l in range(n):
            if k != l:
                v = abs(np.vdot(A[:, k], A[:, l])) / (np.linalg.norm(A[:, k]) * np.linalg.norm(A[:, l]))
                best = max(best, v)
    return best
