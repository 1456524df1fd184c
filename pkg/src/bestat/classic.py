"""Classic dependence statistics as forms in the symmetry vector.

The chi-square, Spearman and max-statistic tests all reduce to simple
functions of selected symmetry statistics, which makes their relationships
to the adaptive test transparent and keeps every test on one code path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DomainError, ShapeError
from .expansion import _check_depth
from .hadamard import InteractionSet, SymmetryVector, spearman_set


def _require_n(sym: SymmetryVector) -> int:
    if sym.n <= 0:
        raise DataError("symmetry vector has no observations behind it")
    return sym.n


def chi2_stat(sym: SymmetryVector) -> float:
    """Sum of squared symmetry statistics over the set, divided by n.

    On a cross set for bivariate copula data with balanced margins this
    equals the Pearson chi-square of the 2^depth x 2^depth contingency
    table against the uniform expectation.
    """
    n = _require_n(sym)
    s = np.asarray(sym.to_sum().values, dtype=float)
    return float(s @ s / n)


def spearman_weight(depth: int) -> np.ndarray:
    """Weights 2^-(d1+d2) aligned with the mask order of spearman_set(depth)."""
    depth = _check_depth(depth)
    iset = spearman_set(depth)
    weights = np.empty(iset.size)
    for i, mask in enumerate(iset.masks):
        low = int(mask) & ((1 << depth) - 1)
        high = int(mask) >> depth
        d1 = low.bit_length()
        d2 = high.bit_length()
        weights[i] = 2.0 ** -(d1 + d2)
    return weights


def spearman_proj(sym: SymmetryVector) -> tuple[float, float]:
    """Spearman statistics from the single-digit pair family.

    Returns (rho_approx, q_rho): the truncated rank correlation
    3 * r' S / n and its quadratic form (r' S)^2 / n. ``sym`` must be
    aligned with spearman_set(depth).
    """
    n = _require_n(sym)
    if sym.p != 2:
        raise DomainError("the Spearman projection is bivariate")
    expected = spearman_set(sym.depth).masks
    if sym.size != expected.size or (np.asarray(sym.masks) != expected).any():
        raise ShapeError("symmetry vector is not aligned with spearman_set(depth)")
    r = spearman_weight(sym.depth)
    s = np.asarray(sym.to_sum().values, dtype=float)
    proj = float(r @ s)
    return 3.0 * proj / n, proj * proj / n


def max_bet_stat(sym: SymmetryVector) -> tuple[float, int]:
    """Largest |mean symmetry| over the set and the mask attaining it.

    Ties resolve to the smallest mask (the masks are in increasing order).
    """
    _require_n(sym)
    values = np.asarray(sym.to_mean().values, dtype=float)
    idx = int(np.argmax(np.abs(values)))
    return float(abs(values[idx])), int(sym.masks[idx])


@dataclass(frozen=True, eq=False)
class QuadraticTestSpec:
    """A quadratic form S' W S / n over an interaction set.

    kind "identity" needs no weight; "diagonal" takes a weight vector,
    "rank_one" a projection vector v (giving (v'S)^2 / n), and "matrix" a
    full caller-supplied weight matrix for forms like distance correlation.
    """

    iset: InteractionSet
    kind: str = "identity"
    weight: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("identity", "diagonal", "rank_one", "matrix"):
            raise DomainError(f"unknown quadratic kind {self.kind!r}")
        if self.kind == "identity":
            if self.weight is not None:
                raise ShapeError("identity form takes no weight")
            return
        w = np.asarray(self.weight, dtype=float)
        k = self.iset.size
        wanted = (k, k) if self.kind == "matrix" else (k,)
        if w.shape != wanted:
            raise ShapeError(f"weight shape {w.shape} does not match the set size {k}")
        object.__setattr__(self, "weight", w)


def quadratic_stat(sym: SymmetryVector, spec: QuadraticTestSpec) -> float:
    """Evaluate a QuadraticTestSpec on a symmetry vector over the same set."""
    n = _require_n(sym)
    if sym.size != spec.iset.size or (np.asarray(sym.masks) != spec.iset.masks).any():
        raise ShapeError("symmetry vector is not aligned with the spec's set")
    s = np.asarray(sym.to_sum().values, dtype=float)
    if spec.kind == "identity":
        return float(s @ s / n)
    if spec.kind == "diagonal":
        return float((spec.weight * s) @ s / n)
    if spec.kind == "rank_one":
        proj = float(spec.weight @ s)
        return proj * proj / n
    return float(s @ spec.weight @ s / n)
