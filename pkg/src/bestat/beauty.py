"""Characteristic-function approximation from dyadic cell probabilities.

Truncating each coordinate's binary expansion at depth D replaces a
distribution on [-1, 1]^p by a lattice of cell midpoints, and the
characteristic function of the truncated vector has two equivalent forms:
a direct sum over cells, and a sum over interaction masks pairing the
oscillatory basis value psi with the sign mean. Both are implemented and
must agree to floating precision.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, ShapeError
from .expansion import _check_depth, cell_midpoints
from .hadamard import fwht_symmetry
from .moments import validate_probs


def _infer_p(n_cells: int, depth: int) -> int:
    nbits = n_cells.bit_length() - 1
    if nbits % depth:
        raise ShapeError(
            f"cell count {n_cells} is not 2^(p*depth) for depth={depth}"
        )
    return nbits // depth


def binary_euler_check(a: int, x: float) -> float:
    """|exp(i a x) - (cos x + i a sin x)| for a sign a; zero up to rounding."""
    if a not in (-1, 1):
        raise DomainError("a must be -1 or +1")
    lhs = np.exp(1j * a * float(x))
    rhs = np.cos(float(x)) + 1j * a * np.sin(float(x))
    return float(abs(lhs - rhs))


def psi(mask: int, t, depth: int) -> complex:
    """Oscillatory basis value of one interaction mask at frequency ``t``.

    Product over digits (j, d) of cos(t_j / 2^d) when the digit is inactive
    and i*sin(t_j / 2^d) when active. ``t`` has one entry per dimension.
    """
    depth = _check_depth(depth)
    tv = np.atleast_1d(np.asarray(t, dtype=float))
    if tv.ndim != 1 or not np.isfinite(tv).all():
        raise DomainError("t must be a finite vector")
    p = tv.size
    nbits = p * depth
    if not 0 <= mask < (1 << nbits):
        raise DomainError(f"mask {mask} out of range for p={p}, depth={depth}")
    out = complex(1.0)
    for j in range(p):
        for d in range(1, depth + 1):
            x = tv[j] / (1 << d)
            if (mask >> (j * depth + d - 1)) & 1:
                out *= 1j * np.sin(x)
            else:
                out *= np.cos(x)
    return out


def _psi_all(t: np.ndarray, depth: int) -> np.ndarray:
    """psi for every mask at once, shape (2^(p*depth),)."""
    p = t.size
    nbits = p * depth
    masks = np.arange(1 << nbits)
    out = np.ones(masks.size, dtype=complex)
    for i in range(nbits):
        j, d = divmod(i, depth)
        x = t[j] / (1 << (d + 1))
        active = ((masks >> i) & 1).astype(bool)
        out *= np.where(active, 1j * np.sin(x), np.cos(x))
    return out


def phi_approx(probs, t, depth: int, route: str = "cells") -> complex:
    """Characteristic function of the depth-``depth`` truncation.

    Parameters
    ----------
    probs : array_like, length 2^(p*depth)
        Cell probabilities (the dimension p is inferred from the length).
    t : float or array_like, length p
        Frequency vector.
    depth : int
        Expansion depth of the cells.
    route : {"cells", "interactions"}
        "cells" sums probs * exp(i t'u) over cell midpoints u; the
        "interactions" route pairs psi values with sign means. The two
        agree to floating precision.
    """
    pr = validate_probs(probs)
    depth = _check_depth(depth)
    p = _infer_p(pr.size, depth)
    tv = np.atleast_1d(np.asarray(t, dtype=float))
    if tv.shape != (p,):
        raise ShapeError(f"t must have {p} entries, got shape {tv.shape}")
    if not np.isfinite(tv).all():
        raise DomainError("t must be finite")
    if route == "cells":
        mids = cell_midpoints(p, depth)
        return complex((pr * np.exp(1j * (mids @ tv))).sum())
    if route == "interactions":
        mu = fwht_symmetry(pr)
        return complex(_psi_all(tv, depth) @ mu)
    raise DomainError(f"unknown route {route!r}")


def phi_table(probs, depth: int, t_values, direction=None) -> list[tuple[float, float, float]]:
    """Rows (t, Re phi, Im phi) along the ray t * direction.

    ``direction`` defaults to the all-ones vector; it is not normalised, so
    scalar t multiplies it directly.
    """
    pr = validate_probs(probs)
    depth = _check_depth(depth)
    p = _infer_p(pr.size, depth)
    if direction is None:
        direction = np.ones(p)
    dv = np.asarray(direction, dtype=float)
    if dv.shape != (p,):
        raise ShapeError(f"direction must have {p} entries")
    rows = []
    for t in np.asarray(t_values, dtype=float):
        value = phi_approx(pr, t * dv, depth)
        rows.append((float(t), value.real, value.imag))
    return rows
