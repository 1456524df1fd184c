"""Exact moments of the interaction sign vector and their consistency checks.

For a cell-probability vector p_c the random sign vector A (one entry per
interaction mask) has mean mu = W p_c and second moment Sigma = W diag(p_c) W',
where W is the signed Walsh transform from :mod:`bestat.hadamard`. Several
closed-form identities tie mu, Sigma and p_c together; each one gets a
checker here so the transform conventions can be validated numerically.
Dense linear algebra keeps these test-scale: p*depth is capped at 12 bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DomainError, ShapeError, SingularityError
from .hadamard import fwht, fwht_symmetry, parity_sign

MAX_DENSE_BITS = 12


@dataclass(frozen=True, eq=False)
class MomentPair:
    """Mean vector and second-moment matrix of the interaction signs."""

    mu: np.ndarray
    sigma: np.ndarray


def validate_probs(probs, tol: float = 1e-12) -> np.ndarray:
    """Check a cell-probability vector: power-of-two length, nonnegative, sums to 1."""
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0 or p.size & (p.size - 1):
        raise ShapeError("probabilities must be a 1-d vector of power-of-two length")
    if not np.isfinite(p).all() or p.min() < 0:
        raise DomainError("probabilities must be finite and nonnegative")
    if abs(p.sum() - 1.0) > tol:
        raise DomainError(f"probabilities sum to {p.sum()!r}, not 1")
    return p


def _check_dense(n: int) -> None:
    nbits = n.bit_length() - 1
    if nbits > MAX_DENSE_BITS:
        raise DomainError(
            f"dense moment computations are capped at {MAX_DENSE_BITS} bits, got {nbits}"
        )


def moments_from_probs(probs) -> MomentPair:
    """Exact (mu, Sigma) of the sign vector for a cell-probability vector.

    mu[0] is always 1 and every diagonal entry of Sigma is 1.
    """
    p = validate_probs(probs)
    _check_dense(p.size)
    mu = fwht_symmetry(p)
    par = parity_sign(np.arange(p.size))
    half = fwht(np.diag(p), axis=0) * par[:, None]
    sigma = fwht(half, axis=1) * par[None, :]
    return MomentPair(mu=mu, sigma=sigma)


def _solve(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        x = np.linalg.solve(matrix, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularityError("moment matrix is singular") from exc
    if not np.isfinite(x).all() or not np.allclose(matrix @ x, rhs, atol=1e-8):
        raise SingularityError("moment matrix is numerically singular")
    return x


def identity_a_residual(mp: MomentPair) -> float:
    """|mu' Sigma^-1 mu - 1|; zero in exact arithmetic for any positive probs."""
    x = _solve(mp.sigma, mp.mu)
    return float(abs(mp.mu @ x - 1.0))


def identity_b_values(mp: MomentPair, probs) -> tuple[float, float, float]:
    """Three expressions for the same harmonic-mean quantity.

    Returns (harmonic, hotelling, inverse):
      harmonic  = 2^(-2pD) * sum over cells of 1/p_cell,
      hotelling = 1 + mu_L' (Sigma_L - mu_L mu_L')^-1 mu_L,
      inverse   = (1 - mu_L' Sigma_L^-1 mu_L)^-1,
    where the L blocks drop the constant mask 0. All three agree for any
    strictly positive probability vector.
    """
    p = validate_probs(probs)
    if p.size != mp.mu.size:
        raise ShapeError("probs and moment pair disagree on cell count")
    if p.min() <= 0.0:
        raise SingularityError("a zero cell probability makes the harmonic sum diverge")
    n = p.size
    harmonic = float((1.0 / p).sum() / (float(n) ** 2))
    mu_l = mp.mu[1:]
    sigma_l = mp.sigma[1:, 1:]
    centered = sigma_l - np.outer(mu_l, mu_l)
    hotelling = float(1.0 + mu_l @ _solve(centered, mu_l))
    inverse = float(1.0 / (1.0 - mu_l @ _solve(sigma_l, mu_l)))
    return harmonic, hotelling, inverse


def identity_c_check(mp: MomentPair, slack: float = 1e-12) -> bool | None:
    """Second-moment band check with the dimension constant c = (N-2)/sqrt(N-1).

    Verifies |mu_L' Sigma_L mu_L - ||mu_L||^2| <= c * ||mu_L||^3 whenever the
    precondition ||mu_L|| <= 1/sqrt(N-1) holds. Returns None (not applicable,
    distinct from failure) when the precondition does not hold.
    """
    n = mp.mu.size
    mu_l = mp.mu[1:]
    norm = float(np.linalg.norm(mu_l))
    if norm > 1.0 / np.sqrt(n - 1):
        return None
    c = (n - 2) / np.sqrt(n - 1)
    quad = float(mu_l @ mp.sigma[1:, 1:] @ mu_l)
    return bool(abs(quad - norm**2) <= c * norm**3 + slack)


def identity_d_gap(mp: MomentPair) -> float | None:
    """Relative gap ||(Sigma_L - mu mu')^-1 mu - mu|| / ||mu||.

    Shrinks linearly with ||mu_L|| near the uniform distribution. Returns
    None when mu_L is exactly zero (the gap is undefined there).
    """
    mu_l = mp.mu[1:]
    norm = float(np.linalg.norm(mu_l))
    if norm == 0.0:
        return None
    centered = mp.sigma[1:, 1:] - np.outer(mu_l, mu_l)
    g = _solve(centered, mu_l)
    return float(np.linalg.norm(g - mu_l) / norm)


def subsample_covariance(counts, r: int) -> np.ndarray:
    """Exact covariance of one size-r subsample's mean symmetry vector.

    ``counts`` are full-sample cell counts (summing to n) with the cell
    assignments held fixed, and the subsample is drawn without replacement.
    The covariance is

        (n - r) / (r (n - 1)) * (W diag(p_hat) W' - sbar sbar')

    with the constant mask-0 row and column removed. ``r = n`` gives the
    zero matrix.
    """
    c = np.asarray(counts, dtype=np.int64)
    if c.ndim != 1 or c.size == 0 or c.size & (c.size - 1):
        raise ShapeError("counts must be a 1-d vector of power-of-two length")
    if c.min() < 0:
        raise DataError("counts must be nonnegative")
    n = int(c.sum())
    if n < 1:
        raise DataError("counts must sum to a positive total")
    if not isinstance(r, (int, np.integer)) or not 1 <= r <= n:
        raise DomainError(f"subsample size r={r!r} must lie in 1..n={n}")
    _check_dense(c.size)
    if r == n:
        return np.zeros((c.size - 1, c.size - 1))
    phat = c / n
    mp = moments_from_probs(phat)
    full = mp.sigma - np.outer(mp.mu, mp.mu)
    factor = (n - r) / (r * (n - 1.0))
    return factor * full[1:, 1:]
