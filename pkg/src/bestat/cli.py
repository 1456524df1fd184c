"""Command line interface.

Subcommands:

* ``test``    one independence test on a delimited data file, JSON report
* ``power``   rejection-rate grid for a scenario, delimited output
* ``null``    prebuild and cache a null distribution
* ``beauty``  approximate characteristic function along a ray
* ``expand``  per-row dyadic cells of the rank-transformed data

A ``--config`` file supplies ``key=value`` defaults; explicit flags win.
File outputs are written atomically and, for a fixed seed, repeat runs of
the same command produce byte-identical files. Without ``--seed`` a fresh
one is generated and logged. Figures land next to ``--out`` unless
``--no-figures`` is given.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from .beast import (
    CACHE_ENV,
    BeastConfig,
    _fresh_seed,
    _streams,
    default_cache_dir,
    derive_null_seed,
    load_or_simulate,
    run_test,
)
from .beauty import phi_table
from .errors import BestatError, ConfigError, DataError
from .expansion import cells_of, count_cells, empirical_copula, interval_index
from .figures import save_beauty_figure, save_interaction_figure, save_power_figure
from .hadamard import joint_cross_set
from .scenarios import estimate_power, power_csv, scenario_names

CLI_METHODS = ("beast", "chi2", "spearman", "maxbet")
MAX_CLI_DEPTH = 6


# ---------------------------------------------------------------------------
# Option plumbing: argparse values override config-file values override
# defaults. Every flag is declared with default=None so "not given" is
# distinguishable.
# ---------------------------------------------------------------------------


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_lam(text: str):
    if text.strip().lower() == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"--lam takes 'auto' or a number, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


_IO = {
    "seed": (int, None),
    "out": (str, None),
    "threads": (int, 1),
    "no_figures": (_parse_bool, False),
    "verbose": (_parse_bool, False),
}
_STAT = {
    "depth": (int, 3),
    "lam": (_parse_lam, "auto"),
    "m": (int, 128),
    "r": (int, 24),
    "null_sims": (int, 2000),
}
_CACHE = {
    "cache_dir": (str, None),
    "no_cache": (_parse_bool, False),
}

SCHEMAS = {
    "test": {
        **_IO, **_STAT, **_CACHE,
        "x": (str, None),
        "y": (str, None),
        "method": (str, "beast"),
        "top_k": (int, 3),
        "delimiter": (str, None),
    },
    "power": {
        **_IO, **_STAT, **_CACHE,
        "kappas": (str, "0,0.25,0.5,0.75,1"),
        "methods": (str, "beast,chi2,maxbet"),
        "n": (int, 128),
        "replicates": (int, 200),
        "alpha": (float, 0.05),
        "oracle_draws": (int, 100_000),
    },
    "null": {
        "seed": (int, None),
        "threads": (int, 1),
        "verbose": (_parse_bool, False),
        **_STAT,
        "cache_dir": (str, None),
        "method": (str, "beast"),
        "n": (int, 128),
        "px": (int, 1),
        "py": (int, 1),
    },
    "beauty": {
        "seed": (int, None),
        "out": (str, None),
        "verbose": (_parse_bool, False),
        "no_figures": (_parse_bool, False),
        "depth": (int, 3),
        "cols": (str, None),
        "delimiter": (str, None),
        "t_max": (float, 8.0),
        "t_steps": (int, 33),
        "direction": (str, None),
    },
    "expand": {
        "seed": (int, None),
        "out": (str, None),
        "verbose": (_parse_bool, False),
        "depth": (int, 3),
        "cols": (str, None),
        "delimiter": (str, None),
    },
}


def _read_config(path) -> dict[str, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _merge(args: argparse.Namespace, schema: dict) -> SimpleNamespace:
    conf = _read_config(args.config) if getattr(args, "config", None) else {}
    unknown = sorted(set(conf) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    vals = {}
    for key, (parse, default) in schema.items():
        v = getattr(args, key, None)
        if v is None and key in conf:
            try:
                v = parse(conf[key])
            except BestatError:
                raise
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"config key {key}: {exc}") from exc
        vals[key] = default if v is None else v
    for key, v in vars(args).items():
        if key not in vals and key not in ("config", "command"):
            vals[key] = v
    return SimpleNamespace(**vals)


def _setup_logging(verbose: bool) -> logging.Logger:
    log = logging.getLogger("bestat")
    if not log.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
        log.addHandler(handler)
    log.setLevel(logging.DEBUG if verbose else logging.INFO)
    log.propagate = False
    return log


def _ensure_seed(seed, log: logging.Logger) -> int:
    if seed is not None:
        return int(seed)
    seed = _fresh_seed()
    log.warning("no --seed given; generated seed %d (pass --seed %d to reproduce)", seed, seed)
    return seed


def _check_cli_depth(depth: int) -> int:
    if not 1 <= int(depth) <= MAX_CLI_DEPTH:
        raise ConfigError(f"--depth must lie in 1..{MAX_CLI_DEPTH}, got {depth}")
    return int(depth)


def _cache_dir_opt(opt):
    if getattr(opt, "no_cache", False):
        return None
    return Path(opt.cache_dir) if opt.cache_dir else default_cache_dir()


def _write_text_atomic(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)
    return path


def _figure_path(out, kind: str) -> Path:
    out = Path(out)
    return out.with_name(f"{out.stem}-{kind}.png")


# ---------------------------------------------------------------------------
# Data loading and column selection
# ---------------------------------------------------------------------------


def _load_table(path, delimiter=None):
    """Delimited file -> (header or None, float matrix).

    The delimiter is sniffed from the first line (comma, semicolon or tab,
    else whitespace); a header is assumed when the first row has any
    non-numeric cell.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DataError(f"{path} is empty")
    if delimiter is None:
        counts = {d: lines[0].count(d) for d in (",", ";", "\t")}
        delimiter = max(counts, key=counts.get) if max(counts.values()) else None
    if delimiter is None:
        rows = [ln.split() for ln in lines]
    else:
        rows = [r for r in csv.reader(lines, delimiter=delimiter)]
    width = len(rows[0])
    if width == 0 or any(len(r) != width for r in rows):
        raise DataError(f"{path} has ragged rows")

    def numeric(cell: str) -> bool:
        try:
            float(cell)
            return True
        except ValueError:
            return False

    header = None
    body = rows
    if not all(numeric(c) for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        body = rows[1:]
        if not body:
            raise DataError(f"{path} has a header but no data rows")
    try:
        data = np.asarray([[float(c) for c in r] for r in body], dtype=float)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    return header, data


def _resolve_columns(spec: str, header, ncols: int, what: str) -> list[int]:
    tokens = [t.strip() for t in spec.split(",") if t.strip()]
    if not tokens:
        raise ConfigError(f"--{what} must name at least one column")
    out = []
    for tok in tokens:
        if header is not None and tok in header:
            idx = header.index(tok)
        else:
            try:
                idx = int(tok)
            except ValueError:
                hint = f"; file columns: {', '.join(header)}" if header else ""
                raise ConfigError(f"--{what}: unknown column {tok!r}{hint}") from None
            if idx < 0:
                idx += ncols
            if not 0 <= idx < ncols:
                raise ConfigError(f"--{what}: column {tok} out of range for {ncols} columns")
        out.append(idx)
    if len(set(out)) != len(out):
        raise ConfigError(f"--{what} lists a column twice")
    return out


def _column_names(header, indices) -> list[str]:
    if header is not None:
        return [header[i] for i in indices]
    return [f"c{i}" for i in indices]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_test(opt, log: logging.Logger) -> int:
    depth = _check_cli_depth(opt.depth)
    if opt.method not in CLI_METHODS:
        raise ConfigError(f"unknown method {opt.method!r}; known: {', '.join(CLI_METHODS)}")
    header, data = _load_table(opt.file, opt.delimiter)
    ncols = data.shape[1]
    if ncols < 2:
        raise DataError("independence testing needs at least two columns")
    xi = _resolve_columns(opt.x, header, ncols, "x") if opt.x else list(range(ncols - 1))
    yi = _resolve_columns(opt.y, header, ncols, "y") if opt.y else [ncols - 1]
    overlap = sorted(set(xi) & set(yi))
    if overlap:
        raise ConfigError(f"x and y overlap on column(s) {overlap}")
    sample = data[:, xi + yi]
    seed = _ensure_seed(opt.seed, log)
    iset = None if opt.method == "spearman" else joint_cross_set(len(xi), len(yi), depth)
    cfg = BeastConfig(
        depth=depth, set=iset, lam=opt.lam, m=opt.m, r=opt.r,
        null_sims=opt.null_sims, seed=seed,
    )
    res = run_test(
        sample, cfg, opt.method,
        cache_dir=_cache_dir_opt(opt), top_k=opt.top_k, threads=opt.threads,
    )
    if res.cache_hit is not None:
        log.info("null cache %s", "hit" if res.cache_hit else "miss, simulated and stored")
    log.info(
        "method=%s n=%d p=%d statistic=%.6g p_value=%.6g",
        res.method, res.n, res.p, res.statistic, res.p_value,
    )
    report = {
        "format": "bestat-report",
        "schema_version": 1,
        "command": "test",
        "input": {
            "file": str(opt.file),
            "n": res.n,
            "p": res.p,
            "x_columns": xi,
            "y_columns": yi,
            "x_names": _column_names(header, xi),
            "y_names": _column_names(header, yi),
        },
        "params": {
            "method": res.method,
            "depth": res.depth,
            "lam": res.lam,
            "m": res.m,
            "r": res.r,
            "null_sims": res.null_sims,
            "set_kind": res.set_kind,
            "set_size": res.set_size,
            "seed": res.seed,
            "null_seed": res.null_seed,
            "top_k": opt.top_k,
            "threads": opt.threads,
        },
        "result": {
            "statistic": res.statistic,
            "p_value": res.p_value,
            "top_interactions": [
                {
                    "mask": t.mask,
                    "digits": t.matrix(res.p, res.depth).tolist(),
                    "s": t.s,
                    "z": t.z,
                    "white": t.white,
                    "blue": t.blue,
                }
                for t in res.top_interactions
            ],
        },
    }
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if opt.out:
        _write_text_atomic(opt.out, text)
        log.info("wrote %s", opt.out)
        if not opt.no_figures and res.top_interactions:
            fig = save_interaction_figure(
                sample, res.top_interactions[0].mask, depth,
                _figure_path(opt.out, "interaction"),
                seed=np.random.default_rng(_streams(seed)[0]),
            )
            log.info("wrote %s", fig)
    else:
        sys.stdout.write(text)
    return 0


def cmd_power(opt, log: logging.Logger) -> int:
    depth = _check_cli_depth(opt.depth)
    methods = [t.strip() for t in opt.methods.split(",") if t.strip()]
    kappas = _float_list(opt.kappas)
    seed = _ensure_seed(opt.seed, log)
    cfg = BeastConfig(
        depth=depth, lam=opt.lam, m=opt.m, r=opt.r,
        null_sims=opt.null_sims, seed=seed,
    )
    grid = estimate_power(
        opt.scenario, kappas, opt.n, methods, cfg,
        replicates=opt.replicates, alpha=opt.alpha,
        oracle_draws=opt.oracle_draws, cache_dir=_cache_dir_opt(opt),
        threads=opt.threads, progress=log.info,
    )
    text = power_csv(grid)
    if opt.out:
        _write_text_atomic(opt.out, text)
        log.info("wrote %s", opt.out)
        if not opt.no_figures:
            fig = save_power_figure(grid, _figure_path(opt.out, "power"))
            log.info("wrote %s", fig)
    else:
        sys.stdout.write(text)
    return 0


def cmd_null(opt, log: logging.Logger) -> int:
    depth = _check_cli_depth(opt.depth)
    if opt.method not in CLI_METHODS:
        raise ConfigError(f"unknown method {opt.method!r}; known: {', '.join(CLI_METHODS)}")
    if opt.px < 1 or opt.py < 1:
        raise ConfigError("--px and --py must be positive")
    p = opt.px + opt.py
    seed = _ensure_seed(opt.seed, log)
    null_seed = derive_null_seed(seed)
    iset = None if opt.method == "spearman" else joint_cross_set(opt.px, opt.py, depth)
    cfg = BeastConfig(
        depth=depth, set=iset, lam=opt.lam, m=opt.m, r=opt.r,
        null_sims=opt.null_sims, seed=null_seed,
    )
    cache = Path(opt.cache_dir) if opt.cache_dir else default_cache_dir()
    null, hit, path = load_or_simulate(cfg, opt.n, p, opt.method, cache, threads=opt.threads)
    log.info(
        "null for method=%s n=%d p=%d: %s (%d values, seed %d -> null seed %d)",
        opt.method, opt.n, p, "already cached" if hit else "simulated",
        null.null_sims, seed, null_seed,
    )
    sys.stdout.write(f"{path}\n")
    return 0


def cmd_beauty(opt, log: logging.Logger) -> int:
    depth = _check_cli_depth(opt.depth)
    if opt.t_steps < 1:
        raise ConfigError("--t-steps must be positive")
    header, data = _load_table(opt.file, opt.delimiter)
    cols = (
        _resolve_columns(opt.cols, header, data.shape[1], "cols")
        if opt.cols else list(range(data.shape[1]))
    )
    sample = data[:, cols]
    seed = _ensure_seed(opt.seed, log)
    u = empirical_copula(sample, np.random.default_rng(_streams(seed)[0]))
    probs = count_cells(u, depth) / u.shape[0]
    direction = np.asarray(_float_list(opt.direction)) if opt.direction else None
    t_values = np.linspace(0.0, opt.t_max, opt.t_steps)
    table = phi_table(probs, depth, t_values, direction)
    lines = ["t,re,im"]
    lines.extend(f"{t!r},{re!r},{im!r}" for t, re, im in table)
    text = "\n".join(lines) + "\n"
    if opt.out:
        _write_text_atomic(opt.out, text)
        log.info("wrote %s", opt.out)
        if not opt.no_figures:
            fig = save_beauty_figure(table, _figure_path(opt.out, "beauty"))
            log.info("wrote %s", fig)
    else:
        sys.stdout.write(text)
    return 0


def cmd_expand(opt, log: logging.Logger) -> int:
    depth = _check_cli_depth(opt.depth)
    header, data = _load_table(opt.file, opt.delimiter)
    cols = (
        _resolve_columns(opt.cols, header, data.shape[1], "cols")
        if opt.cols else list(range(data.shape[1]))
    )
    sample = data[:, cols]
    names = _column_names(header, cols)
    seed = _ensure_seed(opt.seed, log)
    u = empirical_copula(sample, np.random.default_rng(_streams(seed)[0]))
    k = interval_index(u, depth)
    cells = cells_of(u, depth)
    head = [f"u_{c}" for c in names] + [f"k_{c}" for c in names] + ["cell"]
    lines = [",".join(head)]
    for i in range(u.shape[0]):
        parts = [repr(float(v)) for v in u[i]]
        parts.extend(str(int(v)) for v in k[i])
        parts.append(str(int(cells[i])))
        lines.append(",".join(parts))
    text = "\n".join(lines) + "\n"
    if opt.out:
        _write_text_atomic(opt.out, text)
        log.info("wrote %s", opt.out)
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {
    "test": cmd_test,
    "power": cmd_power,
    "null": cmd_null,
    "beauty": cmd_beauty,
    "expand": cmd_expand,
}


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_config_arg(sp):
    sp.add_argument("--config", metavar="FILE",
                    help="key=value defaults file; explicit flags win")


def _add_stat_args(sp):
    sp.add_argument("--depth", type=int, help=f"expansion depth, 1..{MAX_CLI_DEPTH} (default 3)")
    sp.add_argument("--lam", type=_parse_lam,
                    help="soft threshold, a number or 'auto' (default auto)")
    sp.add_argument("--m", type=int, help="number of subsamples (default 128)")
    sp.add_argument("--r", type=int, help="subsample size (default 24)")
    sp.add_argument("--null-sims", dest="null_sims", type=int,
                    help="Monte Carlo null size (default 2000)")


def _add_io_args(sp, out_help: str):
    sp.add_argument("--seed", type=int, help="master seed; generated and logged if omitted")
    sp.add_argument("--out", metavar="PATH", help=out_help)
    sp.add_argument("--threads", type=int, help="worker threads (default 1)")
    sp.add_argument("-v", "--verbose", action="store_const", const=True,
                    help="debug logging")


def _add_figure_arg(sp):
    sp.add_argument("--no-figures", dest="no_figures", action="store_const", const=True,
                    help="skip the figure next to --out")


def _add_cache_args(sp, with_disable: bool = True):
    sp.add_argument("--cache-dir", dest="cache_dir", metavar="DIR",
                    help=f"null cache directory (default ${CACHE_ENV} or ~/.cache/bestat)")
    if with_disable:
        sp.add_argument("--no-cache", dest="no_cache", action="store_const", const=True,
                        help="neither read nor write the null cache")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bestat",
        description="Binary expansion statistics: independence tests, "
                    "power studies and expansion inspection.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="independence test on a delimited data file")
    t.add_argument("file", help="CSV/TSV data file, header optional")
    t.add_argument("--x", help="x columns, comma-separated names or indices (default: all but last)")
    t.add_argument("--y", help="y columns (default: the last column)")
    t.add_argument("--method", choices=CLI_METHODS, help="test statistic (default beast)")
    t.add_argument("--top-k", dest="top_k", type=int,
                   help="interactions to report (default 3)")
    t.add_argument("--delimiter", help="field delimiter (default: sniffed)")
    _add_config_arg(t)
    _add_stat_args(t)
    _add_io_args(t, "JSON report path (default: stdout)")
    _add_figure_arg(t)
    _add_cache_args(t)

    pw = sub.add_parser("power", help="rejection-rate grid for a scenario")
    pw.add_argument("scenario", choices=scenario_names(), help="data generating scenario")
    pw.add_argument("--kappas", help="noise levels in [0,1], comma-separated (default 0,0.25,0.5,0.75,1)")
    pw.add_argument("--methods", help="methods to compare (default beast,chi2,maxbet)")
    pw.add_argument("--n", type=int, help="sample size per replicate (default 128)")
    pw.add_argument("--replicates", type=int, help="replicates per kappa (default 200)")
    pw.add_argument("--alpha", type=float, help="test level (default 0.05)")
    pw.add_argument("--oracle-draws", dest="oracle_draws", type=int,
                    help="draws behind the oracle weights (default 100000)")
    _add_config_arg(pw)
    _add_stat_args(pw)
    _add_io_args(pw, "CSV path (default: stdout)")
    _add_figure_arg(pw)
    _add_cache_args(pw)

    nl = sub.add_parser("null", help="prebuild a cached null distribution")
    nl.add_argument("--method", choices=CLI_METHODS, help="statistic to calibrate (default beast)")
    nl.add_argument("--n", type=int, help="sample size (default 128)")
    nl.add_argument("--px", type=int, help="x block width (default 1)")
    nl.add_argument("--py", type=int, help="y block width (default 1)")
    _add_config_arg(nl)
    _add_stat_args(nl)
    nl.add_argument("--seed", type=int, help="master seed the later test run will use")
    nl.add_argument("--threads", type=int, help="worker threads (default 1)")
    nl.add_argument("-v", "--verbose", action="store_const", const=True, help="debug logging")
    _add_cache_args(nl, with_disable=False)

    be = sub.add_parser("beauty", help="approximate characteristic function along a ray")
    be.add_argument("file", help="CSV/TSV data file, header optional")
    be.add_argument("--cols", help="columns to use (default: all)")
    be.add_argument("--delimiter", help="field delimiter (default: sniffed)")
    be.add_argument("--t-max", dest="t_max", type=float, help="largest t (default 8)")
    be.add_argument("--t-steps", dest="t_steps", type=int, help="grid points (default 33)")
    be.add_argument("--direction", help="ray direction, comma-separated (default: all ones)")
    _add_config_arg(be)
    be.add_argument("--depth", type=int, help=f"expansion depth, 1..{MAX_CLI_DEPTH} (default 3)")
    be.add_argument("--seed", type=int, help="tie-break seed; generated and logged if omitted")
    be.add_argument("--out", metavar="PATH", help="CSV path (default: stdout)")
    be.add_argument("-v", "--verbose", action="store_const", const=True, help="debug logging")
    _add_figure_arg(be)

    ex = sub.add_parser("expand", help="per-row dyadic cells of the rank-transformed data")
    ex.add_argument("file", help="CSV/TSV data file, header optional")
    ex.add_argument("--cols", help="columns to use (default: all)")
    ex.add_argument("--delimiter", help="field delimiter (default: sniffed)")
    _add_config_arg(ex)
    ex.add_argument("--depth", type=int, help=f"expansion depth, 1..{MAX_CLI_DEPTH} (default 3)")
    ex.add_argument("--seed", type=int, help="tie-break seed; generated and logged if omitted")
    ex.add_argument("--out", metavar="PATH", help="CSV path (default: stdout)")
    ex.add_argument("-v", "--verbose", action="store_const", const=True, help="debug logging")

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    log = _setup_logging(bool(getattr(args, "verbose", False)))
    try:
        opt = _merge(args, SCHEMAS[args.command])
        log.setLevel(logging.DEBUG if opt.verbose else logging.INFO)
        return COMMANDS[args.command](opt, log)
    except BestatError as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
