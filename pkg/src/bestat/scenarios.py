"""Dependence scenarios and the power estimation harness.

Every scenario maps a noise level kappa in [0, 1] to a joint distribution;
kappa = 0 is the strongest signal. Samplers draw from a passed Generator in
a fixed order, so one seed pins the whole grid. The two independence
scenarios ignore kappa and exist for size checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .beast import (
    METHODS,
    BeastConfig,
    _fresh_seed,
    _map_indexed,
    _method_set,
    _oracle_vector,
    _statistic_from_parts,
    load_or_simulate,
    oracle_weights,
    p_value,
    resolve_lambda,
    simulate_null,
)
from .errors import ConfigError, DataError, DomainError
from .expansion import count_cells, empirical_copula
from .hadamard import full_symmetry, select


def _check_kappa(kappa: float) -> float:
    kappa = float(kappa)
    if not (0.0 <= kappa <= 1.0):
        raise DomainError(f"kappa must lie in [0, 1], got {kappa!r}")
    return kappa


def _bivariate_normal(n, kappa, rng):
    a = math.sqrt(0.4 - 0.3 * kappa)
    b = math.sqrt(0.6 + 0.3 * kappa)
    e = rng.standard_normal((n, 3))
    return np.column_stack((a * e[:, 0] + b * e[:, 1], a * e[:, 0] + b * e[:, 2]))


def _parabolic(n, kappa, rng):
    x = rng.uniform(-1.0, 1.0, n)
    y = 0.25 * x**2 + (0.4 * kappa + 0.1) * rng.standard_normal(n)
    return np.column_stack((x, y))


def _circle(n, kappa, rng):
    theta = rng.uniform(-math.pi, math.pi, n)
    s = 0.6 * kappa + 0.1
    x = np.cos(theta) + s * rng.standard_normal(n)
    y = np.sin(theta) + s * rng.standard_normal(n)
    return np.column_stack((x, y))


def _checkerboard(n, kappa, rng):
    w = rng.integers(1, 4, n).astype(float)
    x = w + (0.3 * kappa + 0.05) * rng.standard_normal(n)
    v1 = rng.choice(np.array([2.0, 4.0]), n)
    v2 = rng.choice(np.array([1.0, 3.0, 5.0]), n)
    y = np.where(w == 2.0, v1, v2) + (1.2 * kappa + 0.2) * rng.standard_normal(n)
    return np.column_stack((x, y))


def _linear3(n, kappa, rng):
    x12 = rng.standard_normal((n, 2))
    h = math.sqrt(0.68 + 0.64 * kappa - 0.32 * kappa**2)
    y = 0.4 * (1.0 - kappa) * (x12[:, 0] + x12[:, 1]) + h * rng.standard_normal(n)
    return np.column_stack((x12, y))


def _sphere(n, kappa, rng):
    g = rng.standard_normal((n, 3))
    g = g / np.linalg.norm(g, axis=1, keepdims=True)
    y = g[:, 2] + (0.7 * kappa + 0.3) * rng.standard_normal(n)
    return np.column_stack((g[:, 0], g[:, 1], y))


def _sine3(n, kappa, rng):
    u = rng.uniform(0.0, 1.0, (n, 2))
    y = np.sin(4.0 * math.pi * (u[:, 0] + u[:, 1])) + (2.0 * kappa + 0.2) * rng.standard_normal(n)
    return np.column_stack((u, y))


def _double_helix(n, kappa, rng):
    theta = rng.uniform(-math.pi, math.pi, n)
    sign = rng.choice(np.array([-1.0, 1.0]), n)
    c0 = 0.4 * kappa + 0.5
    x = sign * np.cos(theta) + c0 * rng.standard_normal(n)
    y = sign * np.sin(theta) + c0 * rng.standard_normal(n)
    z = theta + c0 * rng.standard_normal(n)
    return np.column_stack((x, y, z))


def _independence(n, kappa, rng):
    return rng.standard_normal((n, 2))


def _independence3(n, kappa, rng):
    return rng.standard_normal((n, 3))


@dataclass(frozen=True)
class Scenario:
    name: str
    p: int
    sample: Callable[[int, float, np.random.Generator], np.ndarray]


SCENARIOS = {
    sc.name: sc
    for sc in (
        Scenario("bivariate_normal", 2, _bivariate_normal),
        Scenario("parabolic", 2, _parabolic),
        Scenario("circle", 2, _circle),
        Scenario("checkerboard", 2, _checkerboard),
        Scenario("linear3", 3, _linear3),
        Scenario("sphere", 3, _sphere),
        Scenario("sine3", 3, _sine3),
        Scenario("double_helix", 3, _double_helix),
        Scenario("independence", 2, _independence),
        Scenario("independence3", 3, _independence3),
    )
}


def scenario_names() -> tuple[str, ...]:
    return tuple(SCENARIOS)


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise ConfigError(
            f"unknown scenario {name!r}; known: {', '.join(SCENARIOS)}"
        ) from None


def sample_scenario(name: str, n: int, kappa: float, seed=None) -> np.ndarray:
    """One (n, p) draw from a named scenario at noise level kappa."""
    sc = get_scenario(name)
    kappa = _check_kappa(kappa)
    if n < 1:
        raise DataError("n must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return sc.sample(n, kappa, rng)


@dataclass(frozen=True)
class PowerRow:
    scenario: str
    kappa: float
    method: str
    n: int
    replicates: int
    power: float
    se: float


@dataclass(frozen=True)
class PowerGrid:
    rows: list[PowerRow]
    seed: int
    alpha: float

    def row(self, kappa: float, method: str) -> PowerRow:
        for r in self.rows:
            if r.method == method and math.isclose(r.kappa, kappa):
                return r
        raise KeyError((kappa, method))


def power_csv(grid: PowerGrid) -> str:
    """Delimited text for a power grid, floats at full precision."""
    lines = ["scenario,kappa,method,n,replicates,power,se"]
    for r in grid.rows:
        lines.append(
            f"{r.scenario},{r.kappa!r},{r.method},{r.n},{r.replicates},"
            f"{r.power!r},{r.se!r}"
        )
    return "\n".join(lines) + "\n"


def estimate_power(
    scenario: str,
    kappas,
    n: int,
    methods,
    cfg: BeastConfig,
    *,
    replicates: int = 200,
    alpha: float = 0.05,
    oracle_draws: int = 100_000,
    cache_dir=None,
    threads: int = 1,
    progress=None,
) -> PowerGrid:
    """Rejection rates of several methods over a kappa grid.

    The design is paired: each replicate draws one sample and every method
    scores that same sample, so method comparisons share the sampling
    noise. Null distributions are simulated once per method (the uniform
    null does not depend on kappa); the oracle gets per-kappa weights from
    ``oracle_draws`` fresh draws and its own null per kappa. Seeds for
    every stage descend from cfg.seed through a fixed spawn layout, so
    results are independent of the worker count and of which other methods
    run.
    """
    sc = get_scenario(scenario)
    kappas = [_check_kappa(k) for k in kappas]
    methods = list(methods)
    if not kappas or not methods:
        raise ConfigError("need at least one kappa and one method")
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}; known: {', '.join(METHODS)}")
    if len(set(methods)) != len(methods):
        raise ConfigError("methods must be distinct")
    if "spearman" in methods and sc.p != 2:
        raise ConfigError("the spearman method is bivariate")
    if replicates < 1:
        raise DataError("replicates must be positive")
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    if n < cfg.r and "beast" in methods:
        raise DataError(f"n={n} is smaller than the subsample size r={cfg.r}")

    def say(msg: str):
        if progress is not None:
            progress(msg)

    p = sc.p
    master = cfg.seed if cfg.seed is not None else _fresh_seed()
    null_root, oracle_root, rep_root = np.random.SeedSequence(master).spawn(3)
    lam = resolve_lambda(cfg, n, p)
    sets = {m: _method_set(cfg, m, p) for m in methods}

    def null_for(method: str, seed_ss, mu=None):
        seed = int(seed_ss.generate_state(1, np.uint64)[0] >> 1)
        c = replace(cfg, seed=seed)
        if cache_dir is not None:
            null, hit, _ = load_or_simulate(
                c, n, p, method, cache_dir, mu_tilde=mu, threads=threads
            )
            say(f"null[{method}]: {'cache hit' if hit else 'simulated'} "
                f"({null.null_sims} sims)")
            return null
        say(f"null[{method}]: simulating {c.null_sims} draws")
        return simulate_null(c, n, p, method, mu_tilde=mu, threads=threads)

    # one null per non-oracle method, shared across the kappa grid
    null_children = null_root.spawn(len(METHODS))
    nulls = {
        m: null_for(m, null_children[METHODS.index(m)])
        for m in methods
        if m != "oracle"
    }

    oracle_w: dict[float, np.ndarray] = {}
    oracle_nulls = {}
    if "oracle" in methods:
        oracle_children = oracle_root.spawn(len(kappas))
        for k_idx, kappa in enumerate(kappas):
            w_ss, n_ss = oracle_children[k_idx].spawn(2)
            say(f"oracle weights for kappa={kappa:g} from {oracle_draws} draws")
            w = oracle_weights(
                lambda nn, rng, _k=kappa: sc.sample(nn, _k, rng),
                oracle_draws,
                cfg,
                seed=w_ss,
            )
            oracle_w[kappa] = _oracle_vector(w, sets["oracle"])
            oracle_nulls[kappa] = null_for("oracle", n_ss, mu=oracle_w[kappa])

    rows: list[PowerRow] = []
    kappa_children = rep_root.spawn(len(kappas))
    for k_idx, kappa in enumerate(kappas):
        rep_children = kappa_children[k_idx].spawn(replicates)

        def one(j: int, _kappa=kappa, _children=rep_children) -> dict[str, float]:
            data_ss, beast_ss = _children[j].spawn(2)
            rng = np.random.default_rng(data_ss)
            x = sc.sample(n, _kappa, rng)
            u = empirical_copula(x, rng)
            full = full_symmetry(count_cells(u, cfg.depth), p, cfg.depth)
            out = {}
            for m in methods:
                out[m] = _statistic_from_parts(
                    u,
                    select(full, sets[m]),
                    cfg,
                    m,
                    lam,
                    np.random.default_rng(beast_ss),
                    oracle_w.get(_kappa),
                )
            return out

        stats = _map_indexed(one, replicates, threads)
        for m in methods:
            null = oracle_nulls[kappa] if m == "oracle" else nulls[m]
            rej = sum(1 for s in stats if p_value(s[m], null) <= alpha)
            power = rej / replicates
            se = math.sqrt(power * (1.0 - power) / replicates)
            rows.append(PowerRow(scenario, kappa, m, n, replicates, power, se))
        say(f"kappa={kappa:g}: " + ", ".join(
            f"{r.method}={r.power:.3f}" for r in rows[-len(methods):]
        ))

    return PowerGrid(rows=rows, seed=int(master), alpha=float(alpha))
