"""Binary expansion of bounded data and dyadic cell bookkeeping.

Coordinates live on [-1, 1]. A depth-D expansion splits that interval into
2^D dyadic pieces; the sign digit at depth d says which half of the current
piece the value falls in, written as -1/+1. A p-variate row is summarised
by a single integer cell index packing all p*D digits: digit (j, d) of the
row occupies bit (j-1)*D + (d-1), set when the digit is +1.

Intervals are half open on the left, so 0.0 lands in the upper half; the
topmost interval is closed so 1.0 is representable.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError, DomainError

MAX_BITS = 24


def _as_rng(seed: int | np.random.Generator | None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _check_depth(depth: int) -> int:
    if not isinstance(depth, (int, np.integer)) or depth < 1:
        raise DomainError(f"depth must be a positive integer, got {depth!r}")
    return int(depth)


def _check_bits(nbits: int) -> None:
    if nbits > MAX_BITS:
        raise DomainError(
            f"p*depth = {nbits} exceeds the supported limit of {MAX_BITS} bits"
        )


def _sample_array(sample, *, copula_scale: bool = False) -> np.ndarray:
    x = np.asarray(sample, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise DataError("sample must be a nonempty (n, p) array")
    if not np.isfinite(x).all():
        raise DataError("sample contains non-finite values")
    if copula_scale and (x.min() < -1.0 or x.max() > 1.0):
        raise DomainError("copula-scale sample must lie in [-1, 1]")
    return x


def empirical_copula(sample, seed: int | np.random.Generator | None = None) -> np.ndarray:
    """Rank-transform each column onto the symmetric grid 2k/(n+1) - 1.

    Parameters
    ----------
    sample : array_like, shape (n, p)
        Raw observations. Ties within a column are broken by a seeded
        random permutation among the tied entries.
    seed : int, numpy Generator or None
        Source of the tie-breaking randomness. A fixed seed makes the
        output deterministic; for tie-free data the output does not
        depend on the seed at all.

    Returns
    -------
    ndarray, shape (n, p)
        Each column is a permutation of the grid 2k/(n+1) - 1, k = 1..n,
        so every value sits strictly inside (-1, 1).
    """
    x = _sample_array(sample)
    rng = _as_rng(seed)
    n, p = x.shape
    ranks = np.empty((n, p), dtype=np.int64)
    stub = np.arange(1, n + 1, dtype=np.int64)
    for j in range(p):
        order = np.lexsort((rng.random(n), x[:, j]))
        ranks[order, j] = stub
    return 2.0 * ranks / (n + 1) - 1.0


def interval_index(u, depth: int):
    """Index in [0, 2^depth) of the dyadic interval containing ``u``.

    Intervals are ordered low to high; accepts scalars or arrays.
    """
    depth = _check_depth(depth)
    arr = np.asarray(u, dtype=float)
    if not np.isfinite(arr).all():
        raise DomainError("value must be finite")
    if arr.min() < -1.0 or arr.max() > 1.0:
        raise DomainError("value must lie in [-1, 1]")
    width = 1 << depth
    k = np.minimum(((arr + 1.0) * 0.5 * width).astype(np.int64), width - 1)
    return int(k) if arr.ndim == 0 else k


def binary_expand(u: float, depth: int) -> np.ndarray:
    """Sign digits (A_1, ..., A_depth) of a scalar in [-1, 1], each -1 or +1."""
    depth = _check_depth(depth)
    k = interval_index(float(u), depth)
    shifts = np.arange(depth - 1, -1, -1)
    bits = (k >> shifts) & 1
    return (2 * bits - 1).astype(np.int8)


def reconstruct(signs) -> float:
    """Partial sum of 2^-d * A_d; lies within 2^-depth of the expanded value."""
    s = np.asarray(signs, dtype=float).ravel()
    weights = 0.5 ** np.arange(1, s.size + 1)
    return float(s @ weights)


def _pack_intervals(k: np.ndarray, depth: int) -> np.ndarray:
    """Pack per-dimension interval indices (..., p) into cell indices (...,)."""
    k = np.asarray(k, dtype=np.int64)
    p = k.shape[-1]
    _check_bits(p * depth)
    cells = np.zeros(k.shape[:-1], dtype=np.int64)
    for j in range(p):
        for d in range(depth):
            bit = (k[..., j] >> (depth - 1 - d)) & 1
            cells |= bit << (j * depth + d)
    return cells


def cells_of(sample, depth: int) -> np.ndarray:
    """Cell index of every row of a copula-scale sample, shape (n,)."""
    depth = _check_depth(depth)
    u = _sample_array(sample, copula_scale=True)
    return _pack_intervals(interval_index(u, depth), depth)


def cell_of(row, depth: int) -> int:
    """Cell index of a single p-variate row on the copula scale."""
    r = np.asarray(row, dtype=float).ravel()
    return int(cells_of(r[None, :], depth)[0])


def count_cells(sample, depth: int) -> np.ndarray:
    """Histogram of cell indices over all 2^(p*depth) cells.

    ``sample`` must already be on the copula scale (see
    :func:`empirical_copula`). Returns an int64 vector summing to n.
    """
    depth = _check_depth(depth)
    u = _sample_array(sample, copula_scale=True)
    p = u.shape[1]
    _check_bits(p * depth)
    cells = cells_of(u, depth)
    return np.bincount(cells, minlength=1 << (p * depth)).astype(np.int64)


def cells_from_ranks(ranks, size: int, depth: int) -> np.ndarray:
    """Cell indices straight from 1-based ranks, exact integer arithmetic.

    Equivalent to expanding 2k/(size+1) - 1 but with no rounding step;
    ``ranks`` has shape (..., p).
    """
    depth = _check_depth(depth)
    k = np.asarray(ranks, dtype=np.int64)
    if k.min() < 1 or k.max() > size:
        raise DomainError("ranks must lie in 1..size")
    intervals = (k * (1 << depth)) // (size + 1)
    return _pack_intervals(intervals, depth)


def signs_to_mask(signs) -> int:
    """Pack a (p, depth) array of -1/+1 digits into its bit representation."""
    s = np.asarray(signs, dtype=np.int64)
    if s.ndim != 2:
        raise DataError("signs must be a (p, depth) array")
    if not np.isin(s, (-1, 1)).all():
        raise DomainError("signs must be -1 or +1")
    _check_bits(s.size)
    bits = (s.ravel() + 1) // 2
    return int((bits << np.arange(s.size)).sum())


def mask_to_signs(mask: int, p: int, depth: int) -> np.ndarray:
    """Inverse of :func:`signs_to_mask`; returns a (p, depth) array of -1/+1."""
    depth = _check_depth(depth)
    nbits = p * depth
    _check_bits(nbits)
    if not 0 <= mask < (1 << nbits):
        raise DomainError(f"mask {mask} out of range for p={p}, depth={depth}")
    bits = (mask >> np.arange(nbits)) & 1
    return (2 * bits - 1).astype(np.int8).reshape(p, depth)


def cell_midpoints(p: int, depth: int) -> np.ndarray:
    """Midpoint coordinates of every cell, shape (2^(p*depth), p).

    The midpoint of a cell is exactly the truncated sign expansion
    sum_d 2^-d * A_d in each coordinate.
    """
    depth = _check_depth(depth)
    nbits = p * depth
    _check_bits(nbits)
    cells = np.arange(1 << nbits, dtype=np.int64)
    out = np.zeros((cells.size, p))
    for j in range(p):
        for d in range(1, depth + 1):
            a = 2.0 * ((cells >> (j * depth + d - 1)) & 1) - 1.0
            out[:, j] += a / (1 << d)
    return out
