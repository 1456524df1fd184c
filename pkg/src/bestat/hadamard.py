"""Fast Walsh-Hadamard machinery for symmetry statistics.

An interaction index is a p x D matrix of 0/1 flags packed into an integer
mask (bit (j-1)*D + (d-1) set when digit (j, d) participates). The symmetry
statistic of a mask is the signed count

    S_mask = sum over cells of count(cell) * walsh_value(mask, cell),

where ``walsh_value`` is the product of the -1/+1 digits the mask selects.
All of this is exact integer arithmetic; the fast transform computes every
mask at once in O(p*D * 2^(p*D)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DomainError, ShapeError
from .expansion import MAX_BITS, _check_bits, _check_depth

__all__ = [
    "popcount",
    "parity_sign",
    "walsh_value",
    "fwht",
    "fwht_symmetry",
    "inverse_symmetry",
    "naive_symmetry",
    "InteractionSet",
    "SymmetryVector",
    "unif_set",
    "cross2_set",
    "jointcross3_set",
    "joint_cross_set",
    "spearman_set",
    "custom_set",
    "full_symmetry",
    "select",
    "interaction_matrix",
    "format_interaction",
]


def popcount(values):
    """Number of set bits; accepts scalars or arrays of nonnegative ints."""
    arr = np.asarray(values)
    if arr.size and arr.min() < 0:
        raise DomainError("popcount expects nonnegative integers")
    out = np.bitwise_count(arr.astype(np.uint64)).astype(np.int64)
    return int(out) if arr.ndim == 0 else out


def parity_sign(values):
    """(-1)^popcount as an int64 scalar or array."""
    out = 1 - 2 * (popcount(values) & 1)
    return int(out) if np.ndim(values) == 0 else out


def walsh_value(mask, cell):
    """Sign the interaction ``mask`` assigns to points of ``cell``.

    Equals (-1)^popcount(mask AND NOT cell): a -1 for every selected digit
    whose cell bit is 0. The all-ones cell is +1 for every mask.
    """
    m = np.asarray(mask, dtype=np.int64)
    c = np.asarray(cell, dtype=np.int64)
    if (m.size and m.min() < 0) or (c.size and c.min() < 0):
        raise DomainError("mask and cell must be nonnegative")
    out = parity_sign(m & ~c)
    return int(out) if (m.ndim == 0 and c.ndim == 0) else out


def fwht(x, axis: int = -1) -> np.ndarray:
    """Unnormalised Walsh-Hadamard transform along ``axis`` (Sylvester order).

    Entry a of the output is sum_c (-1)^popcount(a & c) x[c]. Integer input
    stays integer, so results are exact; applying the transform twice
    multiplies the input by its length.
    """
    arr = np.asarray(x)
    y = np.moveaxis(arr, axis, -1)
    n = y.shape[-1]
    if n == 0 or n & (n - 1):
        raise ShapeError(f"transform length must be a power of two, got {n}")
    _check_bits(n.bit_length() - 1)
    y = y.copy()
    h = 1
    while h < n:
        v = y.reshape(y.shape[:-1] + (n // (2 * h), 2, h))
        s = v[..., 0, :] + v[..., 1, :]
        d = v[..., 0, :] - v[..., 1, :]
        y = np.stack((s, d), axis=-2).reshape(y.shape)
        h *= 2
    return np.moveaxis(y, -1, axis)


def fwht_symmetry(counts, axis: int = -1) -> np.ndarray:
    """All 2^(p*D) symmetry statistics of a cell-count (or probability) vector.

    Entry ``mask`` is S_mask; entry 0 is the plain total. Exact for integer
    counts. This is the signed-transform route; :func:`naive_symmetry` is the
    direct per-cell route used to cross-check it.
    """
    arr = np.asarray(counts)
    out = fwht(arr, axis=axis)
    n = out.shape[axis]
    shape = [1] * out.ndim
    shape[axis] = n
    return out * parity_sign(np.arange(n)).reshape(shape)


def inverse_symmetry(s, axis: int = -1) -> np.ndarray:
    """Inverse of :func:`fwht_symmetry` up to the factor 2^(p*D).

    Feeding it a symmetry vector returns the cell counts times the number of
    cells, exactly for integer input.
    """
    arr = np.asarray(s)
    n = arr.shape[axis]
    shape = [1] * arr.ndim
    shape[axis] = n
    return fwht(arr * parity_sign(np.arange(n)).reshape(shape), axis=axis)


def naive_symmetry(mask: int, cells) -> int:
    """Direct O(n) evaluation of one symmetry statistic from raw cell indices."""
    c = np.asarray(cells, dtype=np.int64)
    if c.size == 0:
        return 0
    return int(walsh_value(int(mask), c).sum())


@dataclass(frozen=True, eq=False)
class InteractionSet:
    """An ordered family of interaction masks over a (p, depth) digit grid.

    ``masks`` is strictly increasing, which matches the flat vec ordering of
    the packed 0/1 matrices.
    """

    kind: str
    p: int
    depth: int
    masks: np.ndarray

    def __post_init__(self):
        masks = np.asarray(self.masks, dtype=np.int64)
        object.__setattr__(self, "masks", masks)
        nbits = self.p * self.depth
        _check_bits(nbits)
        if masks.ndim != 1 or masks.size == 0:
            raise DataError("an interaction set needs at least one mask")
        if masks.min() < 0 or masks.max() >= (1 << nbits):
            raise DomainError("mask out of range for the (p, depth) grid")
        if (np.diff(masks) <= 0).any():
            raise DataError("masks must be strictly increasing")

    @property
    def size(self) -> int:
        return int(self.masks.size)

    def __len__(self) -> int:
        return self.size


def unif_set(p: int, depth: int) -> InteractionSet:
    """Every nontrivial interaction: 2^(p*depth) - 1 members."""
    depth = _check_depth(depth)
    nbits = p * depth
    _check_bits(nbits)
    return InteractionSet("unif", p, depth, np.arange(1, 1 << nbits))


def joint_cross_set(p_x: int, p_y: int, depth: int) -> InteractionSet:
    """Interactions pairing a nonzero x-block with a nonzero y-block.

    The x-block covers dimensions 1..p_x (low bits), the y-block the rest.
    For p_x = p_y = 1 this is the bivariate cross family; for (2, 1) the
    trivariate joint cross family.
    """
    depth = _check_depth(depth)
    if p_x < 1 or p_y < 1:
        raise DomainError("both blocks need at least one dimension")
    nbits = (p_x + p_y) * depth
    _check_bits(nbits)
    mx = np.arange(1, 1 << (p_x * depth), dtype=np.int64)
    my = np.arange(1, 1 << (p_y * depth), dtype=np.int64)
    masks = (mx[None, :] | (my[:, None] << (p_x * depth))).ravel()
    if (p_x, p_y) == (1, 1):
        kind = "cross2"
    elif (p_x, p_y) == (2, 1):
        kind = "jointcross3"
    else:
        kind = f"jointcross{p_x}|{p_y}"
    return InteractionSet(kind, p_x + p_y, depth, masks)


def cross2_set(depth: int) -> InteractionSet:
    """Bivariate cross interactions: both dimensions active, (2^depth - 1)^2 members."""
    return joint_cross_set(1, 1, depth)


def jointcross3_set(depth: int) -> InteractionSet:
    """Trivariate joint cross: nonzero block on dims 1-2 paired with nonzero dim 3."""
    return joint_cross_set(2, 1, depth)


def spearman_set(depth: int) -> InteractionSet:
    """Bivariate single-digit pairs (d1, d2), one active digit per dimension."""
    depth = _check_depth(depth)
    _check_bits(2 * depth)
    masks = [
        (1 << (d1 - 1)) | (1 << (depth + d2 - 1))
        for d2 in range(1, depth + 1)
        for d1 in range(1, depth + 1)
    ]
    return InteractionSet("spearman", 2, depth, np.sort(np.asarray(masks, dtype=np.int64)))


def custom_set(masks, p: int, depth: int) -> InteractionSet:
    """Caller-supplied masks, deduplicated and sorted into vec order."""
    arr = np.unique(np.asarray(masks, dtype=np.int64))
    return InteractionSet("custom", p, depth, arr)


@dataclass(eq=False)
class SymmetryVector:
    """Symmetry statistics aligned with an ordered mask list.

    ``scale`` is "sum" (the integer S) or "mean" (S / n).
    """

    masks: np.ndarray
    values: np.ndarray
    scale: str
    n: int
    p: int
    depth: int

    def __post_init__(self):
        if self.scale not in ("sum", "mean"):
            raise DomainError(f"unknown scale {self.scale!r}")
        if len(self.masks) != len(self.values):
            raise ShapeError("masks and values must have equal length")

    @property
    def size(self) -> int:
        return int(len(self.values))

    def to_mean(self) -> "SymmetryVector":
        if self.scale == "mean":
            return self
        return SymmetryVector(
            self.masks, np.asarray(self.values, dtype=float) / self.n,
            "mean", self.n, self.p, self.depth,
        )

    def to_sum(self) -> "SymmetryVector":
        if self.scale == "sum":
            return self
        values = np.asarray(self.values, dtype=float) * self.n
        return SymmetryVector(
            self.masks, np.rint(values).astype(np.int64),
            "sum", self.n, self.p, self.depth,
        )


def full_symmetry(counts, p: int, depth: int) -> SymmetryVector:
    """Sum-scale symmetry vector over every mask, from a cell-count vector."""
    c = np.asarray(counts, dtype=np.int64)
    nbits = p * _check_depth(depth)
    if c.shape != (1 << nbits,):
        raise ShapeError(
            f"counts must have length 2^(p*depth) = {1 << nbits}, got {c.shape}"
        )
    values = fwht_symmetry(c)
    return SymmetryVector(np.arange(c.size, dtype=np.int64), values, "sum", int(c.sum()), p, depth)


def select(sym: SymmetryVector, subset: InteractionSet) -> SymmetryVector:
    """Restrict a symmetry vector to the masks of ``subset`` (order preserved)."""
    if (subset.p, subset.depth) != (sym.p, sym.depth):
        raise ShapeError("interaction set and symmetry vector disagree on (p, depth)")
    pos = np.searchsorted(sym.masks, subset.masks)
    safe = np.minimum(pos, sym.masks.size - 1)
    bad = (pos >= sym.masks.size) | (sym.masks[safe] != subset.masks)
    if bad.any():
        missing = int(np.asarray(subset.masks)[np.argmax(bad)])
        raise IndexError(f"mask {missing} not present in the symmetry vector")
    return SymmetryVector(
        subset.masks.copy(), sym.values[pos], sym.scale, sym.n, sym.p, sym.depth
    )


def interaction_matrix(mask: int, p: int, depth: int) -> np.ndarray:
    """The (p, depth) 0/1 matrix a mask packs."""
    depth = _check_depth(depth)
    nbits = p * depth
    _check_bits(nbits)
    if not 0 <= mask < (1 << nbits):
        raise DomainError(f"mask {mask} out of range for p={p}, depth={depth}")
    bits = (mask >> np.arange(nbits)) & 1
    return bits.reshape(p, depth).astype(np.int8)


def format_interaction(mask: int, p: int, depth: int) -> str:
    """Render a mask as its 0/1 matrix, one dimension per line."""
    mat = interaction_matrix(mask, p, depth)
    return "\n".join(" ".join(str(int(b)) for b in row) for row in mat)
