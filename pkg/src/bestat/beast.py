"""Adaptive interaction search with Monte Carlo calibration.

The test statistic soft-thresholds two estimates of the mean symmetry
vector, the full-sample one and an average over re-ranked subsamples, and
measures their agreement. Large values flag a reproducible interaction.
P-values come from simulating the same pipeline on independent uniform
data; those null draws are cached on disk keyed by an exact fingerprint.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .classic import chi2_stat, max_bet_stat, spearman_proj
from .errors import (
    CacheError,
    ConfigError,
    DataError,
    DomainError,
    ShapeError,
)
from .expansion import (
    _check_depth,
    _sample_array,
    cells_from_ranks,
    cells_of,
    count_cells,
    empirical_copula,
)
from .hadamard import (
    InteractionSet,
    SymmetryVector,
    full_symmetry,
    fwht_symmetry,
    interaction_matrix,
    joint_cross_set,
    select,
    spearman_set,
    unif_set,
)

SCHEMA_VERSION = 1
CACHE_ENV = "BESTAT_CACHE_DIR"
METHODS = ("beast", "chi2", "spearman", "maxbet", "oracle")


@dataclass(frozen=True)
class BeastConfig:
    """Knobs of the adaptive test and its null calibration.

    ``lam`` is either the string "auto" (resolved to the default threshold
    for the data size at hand) or a fixed nonnegative float. ``set`` picks
    the interaction family; None selects the joint cross family splitting
    the last dimension off, which is the bivariate cross family for p = 2.
    """

    depth: int = 3
    set: InteractionSet | None = None
    lam: float | str = "auto"
    m: int = 128
    r: int = 24
    null_sims: int = 2000
    seed: int | None = None

    def __post_init__(self):
        _check_depth(self.depth)
        for name in ("m", "r", "null_sims"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")
        if isinstance(self.lam, str):
            if self.lam != "auto":
                raise DomainError(f"lam must be 'auto' or a nonnegative float, got {self.lam!r}")
        elif not (np.isfinite(self.lam) and self.lam >= 0):
            raise DomainError(f"lam must be nonnegative, got {self.lam!r}")


def auto_lambda(n: int, p: int, depth: int) -> float:
    """Default soft threshold sqrt(p * depth * ln 2 / (8 n))."""
    depth = _check_depth(depth)
    if n < 1 or p < 1:
        raise DomainError("n and p must be positive")
    return math.sqrt(p * depth * math.log(2.0) / (8.0 * n))


def soft_threshold(x, lam: float):
    """sign(x) * max(|x| - lam, 0), elementwise."""
    if not (np.isfinite(lam) and lam >= 0):
        raise DomainError(f"threshold must be nonnegative, got {lam!r}")
    arr = np.asarray(x, dtype=float)
    return np.sign(arr) * np.maximum(np.abs(arr) - lam, 0.0)


def resolve_lambda(cfg: BeastConfig, n: int, p: int) -> float:
    if isinstance(cfg.lam, str):
        return auto_lambda(n, p, cfg.depth)
    return float(cfg.lam)


def resolve_set(cfg: BeastConfig, p: int) -> InteractionSet:
    """The interaction family a config uses on p-dimensional data."""
    if cfg.set is not None:
        if cfg.set.p != p or cfg.set.depth != cfg.depth:
            raise ConfigError(
                f"configured set is for (p={cfg.set.p}, depth={cfg.set.depth}), "
                f"data has (p={p}, depth={cfg.depth})"
            )
        return cfg.set
    if p >= 2:
        return joint_cross_set(p - 1, 1, cfg.depth)
    return unif_set(1, cfg.depth)


def _method_set(cfg: BeastConfig, method: str, p: int) -> InteractionSet:
    if method == "spearman":
        if p != 2:
            raise ConfigError("the spearman method is bivariate")
        return spearman_set(cfg.depth)
    return resolve_set(cfg, p)


def _fresh_seed() -> int:
    return int(np.random.SeedSequence().generate_state(1, np.uint64)[0] >> 1)


def _streams(seed: int | None) -> tuple[np.random.SeedSequence, ...]:
    """Tie-break, subsample and null child streams for one master seed."""
    return tuple(np.random.SeedSequence(seed).spawn(3))


def derive_null_seed(seed: int) -> int:
    """Deterministic seed for the null simulation tied to a master seed."""
    child = _streams(seed)[2]
    return int(child.generate_state(1, np.uint64)[0] >> 1)


def _mean_values(v) -> np.ndarray:
    if isinstance(v, SymmetryVector):
        return np.asarray(v.to_mean().values, dtype=float)
    return np.asarray(v, dtype=float)


def beast_statistic(s_full, s_sub, lam: float) -> float:
    """Thresholded agreement between the two mean symmetry estimates.

    Both inputs are mean-scale vectors over the same masks. Returns
    t(s_full)'t(s_sub) / ||t(s_full)|| with t the soft threshold, and 0
    when the full-sample vector is thresholded away entirely.
    """
    a = soft_threshold(_mean_values(s_full), lam)
    b = soft_threshold(_mean_values(s_sub), lam)
    if a.shape != b.shape:
        raise ShapeError(f"vector lengths differ: {a.shape} vs {b.shape}")
    norm = float(np.linalg.norm(a))
    if norm == 0.0:
        return 0.0
    return float(a @ b / norm)


def _subsample_matrix(
    u: np.ndarray, depth: int, m: int, r: int, rng: np.random.Generator, rerank: bool = True
) -> np.ndarray:
    """Mean symmetry vector of every subsample, shape (m, 2^(p*depth)).

    Assumes ``u`` is tie-free within each column (copula-scale data is).
    """
    n, p = u.shape
    ncells = 1 << (p * depth)
    idx = np.argsort(rng.random((m, n)), axis=1)[:, :r]
    if rerank:
        sub = u[idx]
        ranks = sub.argsort(axis=1).argsort(axis=1) + 1
        cells = cells_from_ranks(ranks, r, depth)
    else:
        cells = cells_of(u, depth)[idx]
    offset = np.arange(m, dtype=np.int64)[:, None] * ncells
    counts = np.bincount((cells + offset).ravel(), minlength=m * ncells).reshape(m, ncells)
    return fwht_symmetry(counts, axis=1) / r


def subsample_mean_matrix(sample, cfg: BeastConfig, seed=None, rerank: bool = True) -> np.ndarray:
    """Per-subsample mean symmetry vectors over the configured set, (m, set size).

    Rows are subsamples of size cfg.r drawn without replacement. With
    ``rerank`` each subsample is rank-transformed afresh before expansion;
    ``rerank=False`` keeps the full-sample cell assignments fixed, the
    right mode for covariance checks under known margins.
    """
    x = _sample_array(sample)
    n, p = x.shape
    if n < cfg.r:
        raise DataError(f"sample has n={n} rows, fewer than the subsample size r={cfg.r}")
    master = cfg.seed if seed is None else seed
    tie_ss, sub_ss, _ = _streams(master)
    u = empirical_copula(x, np.random.default_rng(tie_ss))
    iset = resolve_set(cfg, p)
    mat = _subsample_matrix(u, cfg.depth, cfg.m, cfg.r, np.random.default_rng(sub_ss), rerank)
    return mat[:, iset.masks]


def subsample_means(sample, cfg: BeastConfig, seed=None) -> SymmetryVector:
    """Average of the re-ranked subsample symmetry vectors (mean scale)."""
    x = _sample_array(sample)
    n, p = x.shape
    mat = subsample_mean_matrix(x, cfg, seed=seed)
    iset = resolve_set(cfg, p)
    return SymmetryVector(
        iset.masks.copy(), mat.mean(axis=0), "mean", n, p, cfg.depth
    )


def oracle_weights(sampler, draws: int, cfg: BeastConfig, seed=None) -> SymmetryVector:
    """Mean symmetry weights estimated from a known sampler.

    ``sampler(n, rng)`` must return an (n, p) array of draws from the
    alternative. The weights are the copula-scale mean symmetry vector of
    ``draws`` simulated rows, over the configured interaction set.
    """
    if draws < 1:
        raise DomainError("draws must be positive")
    master = cfg.seed if seed is None else seed
    rng = np.random.default_rng(master)
    x = _sample_array(sampler(draws, rng))
    p = x.shape[1]
    u = empirical_copula(x, rng)
    counts = count_cells(u, cfg.depth)
    full = full_symmetry(counts, p, cfg.depth)
    iset = resolve_set(cfg, p)
    return select(full, iset).to_mean()


def oracle_statistic(mu_tilde, s_full) -> float:
    """Projection of the mean symmetry vector onto fixed oracle weights.

    Returns w's / ||w|| for mean-scale vectors over the same masks.
    """
    w = _mean_values(mu_tilde)
    s = _mean_values(s_full)
    if w.shape != s.shape:
        raise ShapeError(f"vector lengths differ: {w.shape} vs {s.shape}")
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        raise DomainError("oracle weights are identically zero")
    return float(w @ s / norm)


def _statistic_from_parts(
    u: np.ndarray,
    sel: SymmetryVector,
    cfg: BeastConfig,
    method: str,
    lam: float,
    rng: np.random.Generator,
    oracle_w: np.ndarray | None = None,
) -> float:
    if method == "chi2":
        return chi2_stat(sel)
    if method == "spearman":
        return spearman_proj(sel)[1]
    if method == "maxbet":
        return max_bet_stat(sel)[0]
    sbar = _mean_values(sel)
    if method == "beast":
        mat = _subsample_matrix(u, cfg.depth, cfg.m, cfg.r, rng)
        sub = mat.mean(axis=0)[np.asarray(sel.masks)]
        return beast_statistic(sbar, sub, lam)
    if method == "oracle":
        return oracle_statistic(oracle_w, sbar)
    raise ConfigError(f"unknown method {method!r}")


def _statistic_from_u(
    u: np.ndarray,
    cfg: BeastConfig,
    method: str,
    iset: InteractionSet,
    lam: float,
    rng: np.random.Generator,
    oracle_w: np.ndarray | None = None,
) -> float:
    n, p = u.shape
    counts = count_cells(u, cfg.depth)
    sel = select(full_symmetry(counts, p, cfg.depth), iset)
    return _statistic_from_parts(u, sel, cfg, method, lam, rng, oracle_w)


def _oracle_vector(mu_tilde, iset: InteractionSet) -> np.ndarray:
    if mu_tilde is None:
        raise ConfigError("the oracle method needs mu_tilde weights")
    if isinstance(mu_tilde, SymmetryVector):
        if (np.asarray(mu_tilde.masks) != iset.masks).any():
            raise ShapeError("oracle weights are not aligned with the interaction set")
        return _mean_values(mu_tilde)
    w = np.asarray(mu_tilde, dtype=float)
    if w.shape != (iset.size,):
        raise ShapeError("oracle weights are not aligned with the interaction set")
    return w


def _oracle_digest(w: np.ndarray | None) -> str | None:
    if w is None:
        return None
    return hashlib.sha256(np.ascontiguousarray(w).tobytes()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Null distribution, fingerprinting, disk cache
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class NullDistribution:
    """Sorted Monte Carlo null values plus the fingerprint that made them."""

    values: np.ndarray
    fingerprint: dict

    @property
    def null_sims(self) -> int:
        return int(self.values.size)

    def matches(self, fp: dict) -> bool:
        """Statistical compatibility: every fingerprint field but the seed."""
        a = {k: v for k, v in self.fingerprint.items() if k != "seed"}
        b = {k: v for k, v in fp.items() if k != "seed"}
        return a == b


def _fingerprint(
    method: str,
    n: int,
    p: int,
    cfg: BeastConfig,
    lam: float,
    iset: InteractionSet,
    seed: int,
    oracle_digest: str | None = None,
) -> dict:
    fp = {
        "method": method,
        "n": int(n),
        "p": int(p),
        "depth": int(cfg.depth),
        "set_kind": iset.kind,
        "set_size": iset.size,
        "lam": float(lam),
        "m": int(cfg.m),
        "r": int(cfg.r),
        "null_sims": int(cfg.null_sims),
        "seed": int(seed),
    }
    if oracle_digest is not None:
        fp["oracle_digest"] = oracle_digest
    return fp


def _map_indexed(fn, count: int, threads: int) -> list:
    """Run fn(0..count-1); results are position-ordered, so the worker count
    never changes the output."""
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            return list(pool.map(fn, range(count)))
    return [fn(i) for i in range(count)]


def simulate_null(
    cfg: BeastConfig,
    n: int,
    p: int,
    method: str = "beast",
    mu_tilde=None,
    threads: int = 1,
) -> NullDistribution:
    """Monte Carlo null distribution of a method's statistic.

    Draws cfg.null_sims independent samples of n uniform p-vectors, pushes
    each through the full pipeline (rank transform included), and returns
    the sorted statistics. Every replicate gets its own child stream of the
    master seed, so the result does not depend on the worker count.
    """
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}")
    if n < 1 or p < 1:
        raise DataError("n and p must be positive")
    if method == "beast" and n < cfg.r:
        raise DataError(f"n={n} is smaller than the subsample size r={cfg.r}")
    iset = _method_set(cfg, method, p)
    lam = resolve_lambda(cfg, n, p)
    oracle_w = _oracle_vector(mu_tilde, iset) if method == "oracle" else None
    seed = cfg.seed if cfg.seed is not None else _fresh_seed()
    children = np.random.SeedSequence(seed).spawn(cfg.null_sims)

    def one(i: int) -> float:
        rng = np.random.default_rng(children[i])
        x = rng.uniform(-1.0, 1.0, (n, p))
        u = empirical_copula(x, rng)
        return _statistic_from_u(u, cfg, method, iset, lam, rng, oracle_w)

    values = np.sort(np.asarray(_map_indexed(one, cfg.null_sims, threads)))
    fp = _fingerprint(method, n, p, cfg, lam, iset, seed, _oracle_digest(oracle_w))
    return NullDistribution(values=values, fingerprint=fp)


def p_value(stat: float, null: NullDistribution) -> float:
    """Add-one Monte Carlo p-value: (1 + #{null >= stat}) / (sims + 1)."""
    v = np.asarray(null.values)
    return float((1 + int(np.count_nonzero(v >= stat))) / (v.size + 1))


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "bestat"


def cache_path(fp: dict, cache_dir=None) -> Path:
    digest = hashlib.sha256(json.dumps(fp, sort_keys=True).encode()).hexdigest()[:20]
    base = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    return base / f"null-{digest}.json"


def save_null(null: NullDistribution, cache_dir=None) -> Path:
    """Write a null distribution to its fingerprinted cache file."""
    path = cache_path(null.fingerprint, cache_dir)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format": "bestat-null",
        "schema_version": SCHEMA_VERSION,
        "fingerprint": null.fingerprint,
        "values": [float(v) for v in null.values],
    }
    text = json.dumps(payload, sort_keys=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(text + "\n")
    os.replace(tmp, path)
    return path


def load_null(path) -> NullDistribution:
    """Read a cache file back; raises CacheError on any corruption."""
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise CacheError(f"unreadable null cache {path}: {exc}") from exc
    if not isinstance(obj, dict) or obj.get("format") != "bestat-null":
        raise CacheError(f"{path} is not a null cache file")
    if obj.get("schema_version") != SCHEMA_VERSION:
        raise CacheError(f"{path} has unsupported schema {obj.get('schema_version')!r}")
    fp = obj.get("fingerprint")
    values = obj.get("values")
    if not isinstance(fp, dict) or not isinstance(values, list):
        raise CacheError(f"{path} is missing its fingerprint or values")
    arr = np.asarray(values, dtype=float)
    if arr.size != fp.get("null_sims") or (np.diff(arr) < 0).any():
        raise CacheError(f"{path} holds inconsistent null values")
    return NullDistribution(values=arr, fingerprint=fp)


def load_or_simulate(
    cfg: BeastConfig,
    n: int,
    p: int,
    method: str = "beast",
    cache_dir=None,
    mu_tilde=None,
    threads: int = 1,
) -> tuple[NullDistribution, bool, Path]:
    """Cache-aware null distribution: (null, was_a_hit, path).

    A hit requires exact fingerprint equality; a corrupted or mismatched
    file is regenerated in place.
    """
    if cfg.seed is None:
        raise ConfigError("caching a null distribution needs an explicit seed")
    iset = _method_set(cfg, method, p)
    lam = resolve_lambda(cfg, n, p)
    oracle_w = _oracle_vector(mu_tilde, iset) if method == "oracle" else None
    fp = _fingerprint(method, n, p, cfg, lam, iset, cfg.seed, _oracle_digest(oracle_w))
    path = cache_path(fp, cache_dir)
    if path.exists():
        try:
            null = load_null(path)
            if null.fingerprint == fp:
                return null, True, path
        except CacheError:
            pass
    null = simulate_null(cfg, n, p, method, mu_tilde=mu_tilde, threads=threads)
    save_null(null, cache_dir)
    return null, False, path


# ---------------------------------------------------------------------------
# Test driver and reporting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InteractionSummary:
    """One interaction's interpretation numbers."""

    mask: int
    s: int
    z: float
    white: int
    blue: int

    def matrix(self, p: int, depth: int) -> np.ndarray:
        return interaction_matrix(self.mask, p, depth)


def interaction_summary(mask: int, s: int, n: int) -> InteractionSummary:
    """Region counts and the normal-scale value of one symmetry statistic.

    ``white`` counts the points with positive interaction sign, (n + s)/2;
    ``blue`` the rest; z = s / sqrt(n).
    """
    if n <= 0:
        raise DataError("n must be positive")
    s = int(s)
    if abs(s) > n:
        raise DomainError(f"|S| = {abs(s)} cannot exceed n = {n}")
    if (n + s) % 2:
        raise DomainError(f"S = {s} and n = {n} must have the same parity")
    return InteractionSummary(
        mask=int(mask),
        s=s,
        z=s / math.sqrt(n),
        white=(n + s) // 2,
        blue=(n - s) // 2,
    )


@dataclass(frozen=True)
class TestResult:
    """Everything a test run produced, parameters echoed included."""

    method: str
    statistic: float
    p_value: float
    n: int
    p: int
    depth: int
    set_kind: str
    set_size: int
    lam: float | None
    m: int
    r: int
    null_sims: int
    seed: int
    null_seed: int
    cache_hit: bool | None
    top_interactions: list[InteractionSummary] = field(default_factory=list)


def _top_interactions(sel: SymmetryVector, k: int) -> list[InteractionSummary]:
    s = np.asarray(sel.to_sum().values)
    order = np.lexsort((np.asarray(sel.masks), -np.abs(s)))
    take = order[: max(0, min(k, s.size))]
    return [interaction_summary(int(sel.masks[i]), int(s[i]), sel.n) for i in take]


def run_test(
    sample,
    cfg: BeastConfig,
    method: str = "beast",
    *,
    null: NullDistribution | None = None,
    cache_dir=None,
    mu_tilde=None,
    top_k: int = 3,
    threads: int = 1,
) -> TestResult:
    """Run one independence test end to end.

    Parameters
    ----------
    sample : array_like, shape (n, p), p >= 2
        Raw data; the rank transform is applied internally.
    cfg : BeastConfig
        Depth, interaction set, threshold and calibration settings. A None
        seed draws a fresh one and echoes it in the result.
    method : {"beast", "chi2", "spearman", "maxbet", "oracle"}
        Statistic to compute. "oracle" also needs ``mu_tilde`` weights.
    null : NullDistribution, optional
        Pre-simulated null draws; must match the run's fingerprint apart
        from the seed. Otherwise the null is simulated here (and cached
        under ``cache_dir`` when that is given).
    top_k : int
        How many interaction summaries to report.

    Returns
    -------
    TestResult
        Statistic, add-one Monte Carlo p-value, echoed parameters, and the
        ``top_k`` largest |S| interactions with their region counts.
    """
    x = _sample_array(sample)
    n, p = x.shape
    if p < 2:
        raise DataError("independence testing needs at least two columns")
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}")
    if method == "beast" and n < cfg.r:
        raise DataError(f"sample has n={n} rows, fewer than the subsample size r={cfg.r}")
    seed = cfg.seed if cfg.seed is not None else _fresh_seed()
    tie_ss, sub_ss, _ = _streams(seed)
    iset = _method_set(cfg, method, p)
    lam = resolve_lambda(cfg, n, p)
    oracle_w = _oracle_vector(mu_tilde, iset) if method == "oracle" else None

    u = empirical_copula(x, np.random.default_rng(tie_ss))
    counts = count_cells(u, cfg.depth)
    sel = select(full_symmetry(counts, p, cfg.depth), iset)
    stat = _statistic_from_parts(
        u, sel, cfg, method, lam, np.random.default_rng(sub_ss), oracle_w
    )

    null_seed = derive_null_seed(seed)
    cache_hit: bool | None = None
    if null is not None:
        fp = _fingerprint(method, n, p, cfg, lam, iset, null_seed, _oracle_digest(oracle_w))
        if not null.matches(fp):
            raise CacheError("supplied null distribution does not match this run's fingerprint")
    else:
        null_cfg = replace(cfg, seed=null_seed)
        if cache_dir is not None:
            null, cache_hit, _ = load_or_simulate(
                null_cfg, n, p, method, cache_dir, mu_tilde=oracle_w, threads=threads
            )
        else:
            null = simulate_null(null_cfg, n, p, method, mu_tilde=oracle_w, threads=threads)

    return TestResult(
        method=method,
        statistic=float(stat),
        p_value=p_value(stat, null),
        n=n,
        p=p,
        depth=cfg.depth,
        set_kind=iset.kind,
        set_size=iset.size,
        lam=float(lam) if method == "beast" else None,
        m=cfg.m,
        r=cfg.r,
        null_sims=null.null_sims,
        seed=int(seed),
        null_seed=int(null.fingerprint.get("seed", null_seed)),
        cache_hit=cache_hit,
        top_interactions=_top_interactions(sel, top_k),
    )


def most_frequent_interaction(sample, cfg: BeastConfig, seed=None) -> tuple[int, float]:
    """Modal per-subsample winner: (mask, frequency).

    Each re-ranked subsample votes for its largest |mean symmetry| mask;
    the mode and its vote share are returned. Ties resolve to the smallest
    mask at both stages.
    """
    x = _sample_array(sample)
    p = x.shape[1]
    mat = subsample_mean_matrix(x, cfg, seed=seed)
    iset = resolve_set(cfg, p)
    winners = np.argmax(np.abs(mat), axis=1)
    votes = np.bincount(winners, minlength=iset.size)
    best = int(np.argmax(votes))
    return int(iset.masks[best]), float(votes[best] / cfg.m)
