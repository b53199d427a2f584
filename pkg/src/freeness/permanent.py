"""
Permanents by Ryser's inclusion-exclusion formula with Gray-code ordering.

    perm(A) = (-1)^n sum_{S subset [n]} (-1)^{|S|} prod_i sum_{j in S} a_ij

Walking the subsets in reflected Gray-code order changes one column per step,
so the row sums are updated in O(n) and the whole sum costs O(2^n n).
"""

from __future__ import annotations

import numpy as np

MAX_ORDER = 30


def permanent(a) -> complex:
    """Permanent of a square matrix."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"permanent needs a square matrix, got shape {a.shape}")
    return complex(permanent_batch(a[None])[0])


def permanent_batch(a) -> np.ndarray:
    """Permanents of a stack of square matrices, shape ``(B, n, n)``.

    The Gray-code walk is shared across the batch so the Python loop runs
    ``2^n`` times regardless of ``B``.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise ValueError(f"expected shape (B, n, n), got {a.shape}")
    b, n, _ = a.shape
    if n == 0:
        return np.ones(b, dtype=np.complex128)
    if n > MAX_ORDER:
        raise ValueError(f"order {n} exceeds the supported maximum {MAX_ORDER}")
    if n == 1:
        return a[:, 0, 0].copy()

    row_sums = np.zeros((b, n), dtype=np.complex128)
    in_set = np.zeros(n, dtype=bool)
    total = np.zeros(b, dtype=np.complex128)
    sign = -1.0  # (-1)^{|S|}, |S| = 1 after the first flip
    for k in range(1, 1 << n):
        # column that flips between Gray codes k-1 and k
        j = (k & -k).bit_length() - 1
        if in_set[j]:
            row_sums -= a[:, :, j]
        else:
            row_sums += a[:, :, j]
        in_set[j] = not in_set[j]
        total += sign * np.prod(row_sums, axis=1)
        sign = -sign
    return total if n % 2 == 0 else -total
