"""``svlab`` command line: scans, landscapes, thresholds and self-validation.

Exit codes: 0 success, 1 usage or I/O error, 2 numerical warning (partial
convergence or a failed tail tolerance).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import __version__, parity, pseudospin, validation
from .gaussian import DomainError, SymmetricGaussianState, a_from_squeezing

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_USAGE, EXIT_WARN = 0, 1, 2

DEFAULTS = {
    "parity-scan": {"n": 3, "a_min": 1.0, "a_max": 3.0, "a_count": 50, "spacing": "linear"},
    "parity-landscape": {"n": 3, "a": 1.5, "p_min": -1.5, "p_max": 1.5, "p_count": 101},
    "pseudospin-scan": {
        "r_min": 0.0, "r_max": 3.0, "r_count": 7, "spacing": "linear",
        "cutoff": "auto", "tail_tol": pseudospin.TAIL_TOL, "starts": 20,
    },
    "f-sequence": {"n_min": 0, "n_max": 1000, "fit_min": None, "fit_max": None},
    "threshold": {"n": 3},
    "validate": {"cutoff": None},
}
SHARED_DEFAULTS = {"out": None, "format": "csv", "threads": None, "seed": 0, "gnuplot": False}


class UsageError(Exception):
    pass


def _grid(lo, hi, count, spacing):
    if count < 1:
        raise UsageError("grid count must be >= 1")
    if hi < lo:
        raise UsageError(f"grid upper end {hi} is below lower end {lo}")
    if count == 1:
        return np.array([float(lo)])
    if spacing == "log":
        if lo <= 0:
            raise UsageError("log spacing needs a positive lower end")
        return np.geomspace(lo, hi, count)
    return np.linspace(lo, hi, count)


def _threads(value):
    if value is None:
        value = os.environ.get("SVLAB_THREADS") or os.cpu_count() or 1
    value = int(value)
    if value < 1:
        raise UsageError("--threads must be >= 1")
    return value


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(cfg, columns, rows, metadata=None, extra_lines=()):
    """Write '#' metadata lines, a header and the rows; returns the text written."""
    buf = io.StringIO()
    # thread count is excluded so output is identical for any pool size
    recorded = {k: v for k, v in cfg.items() if k != "threads"}
    meta = {"tool": "svlab", "version": __version__, "config": recorded}
    if metadata:
        meta.update(metadata)
    buf.write("# " + json.dumps(meta, sort_keys=True, default=str) + "\n")
    for line in extra_lines:
        buf.write("# " + line + "\n")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if cfg.get("out"):
        path = Path(cfg["out"])
        path.write_text(text, newline="")
        if cfg.get("gnuplot"):
            _write_gnuplot(path, cfg["command"], columns)
    else:
        sys.stdout.write(text)
    return text


def _write_gnuplot(path, command, columns):
    x, y = {
        "parity-scan": ("a", "s_opt"),
        "parity-landscape": ("p0", "p1"),
        "pseudospin-scan": ("r", "s3_optimized"),
        "f-sequence": ("n", "f"),
    }[command]
    xi, yi = columns.index(x) + 1, columns.index(y) + 1
    lines = ["set datafile separator ','", "set key autotitle columnhead"]
    if command == "parity-landscape":
        lines += ["set view map", f"splot '{path.name}' using {xi}:{yi}:{columns.index('violation') + 1} with pm3d"]
    elif command == "f-sequence":
        lines += ["set logscale xy", f"plot '{path.name}' using {xi}:{yi} with points"]
    else:
        lines += [f"plot '{path.name}' using {xi}:{yi} with lines"]
    path.with_suffix(".gp").write_text("\n".join(lines) + "\n")


def cmd_parity_scan(cfg):
    a_grid = _grid(cfg["a_min"], cfg["a_max"], cfg["a_count"], cfg["spacing"])
    if a_grid[0] < 1:
        raise UsageError("a grid must start at a >= 1")
    rows = parity.scan_vs_a(int(cfg["n"]), a_grid)
    columns = ["a", "s_opt", "q0", "q1", "p0", "p1", "residual", "converged", "seed"]
    out = [
        [row.a, row.s_opt, *row.settings.as_array(), row.residual, row.converged, row.seed] for row in rows
    ]
    write_csv(cfg, columns, out, {"residual_tol": parity.RESIDUAL_TOL, "xatol": parity.XATOL})
    return EXIT_OK if all(row.converged for row in rows) else EXIT_WARN


def cmd_parity_landscape(cfg):
    grid = _grid(cfg["p_min"], cfg["p_max"], cfg["p_count"], "linear")
    values = parity.landscape(int(cfg["n"]), float(cfg["a"]), grid, grid)
    columns = ["p0", "p1", "S", "violation"]
    out = [
        [grid[i], grid[j], values[i, j], max(values[i, j], 1.0)]
        for i in range(grid.size) for j in range(grid.size)
    ]
    islands = count_islands(values)
    write_csv(cfg, columns, out, {"violation_islands": islands, "max_S": float(values.max())})
    return EXIT_OK


def count_islands(values, level=1.0):
    """Connected components (4-neighbour) of grid cells with ``S > level``."""
    _, count = ndimage.label(np.asarray(values) > level)
    return int(count)


def _pseudospin_row(r, cfg):
    cutoff = None if cfg["cutoff"] in (None, "auto") else int(cfg["cutoff"])
    tail_tol = float(cfg["tail_tol"])
    state = pseudospin.ghz_state_fock(r, cutoff, tail_tol, check_tail=False)
    tail_ok = state.norm_deficit <= tail_tol
    s_fixed = pseudospin.svetlichny_fixed_settings(state)
    opt = pseudospin.optimize_pseudospin_settings(state, n_starts=int(cfg["starts"]), seed=int(cfg["seed"]))
    a = a_from_squeezing(r)
    s_parity = parity.optimize_settings(SymmetricGaussianState(3, a)).s_opt
    residual = pseudospin.residual_norm(r, state.cutoff, tail_tol=math.inf)
    return [
        r, a, state.cutoff, s_fixed, opt.s_opt, s_parity, residual, state.norm_deficit, tail_ok, opt.converged,
        " ".join(f"{x:.12g}" for x in opt.settings.flat()),
    ]


def cmd_pseudospin_scan(cfg):
    r_grid = _grid(cfg["r_min"], cfg["r_max"], cfg["r_count"], cfg["spacing"])
    if r_grid[0] < 0:
        raise UsageError("r grid must be non-negative")
    with ThreadPoolExecutor(_threads(cfg["threads"])) as pool:
        rows = list(pool.map(lambda r: _pseudospin_row(float(r), cfg), r_grid))
    columns = [
        "r", "a", "cutoff", "s3_fixed", "s3_optimized", "s3_parity_optimal", "residual_norm",
        "norm_deficit", "tail_ok", "converged", "settings",
    ]
    write_csv(cfg, columns, rows, {"tail_tol": cfg["tail_tol"]})
    return EXIT_OK if all(row[8] for row in rows) else EXIT_WARN


def cmd_f_sequence(cfg):
    lo, hi = int(cfg["n_min"]), int(cfg["n_max"])
    if lo < 0 or hi < lo:
        raise UsageError("need 0 <= n_min <= n_max")
    ns = np.arange(lo, hi + 1)
    with ThreadPoolExecutor(_threads(cfg["threads"])) as pool:
        fs = pseudospin.f_sequence(ns, pool)
    fit_min = cfg["fit_min"] if cfg["fit_min"] is not None else 0.5 * (max(lo, 1) + hi)
    fit_max = cfg["fit_max"] if cfg["fit_max"] is not None else hi
    positive = ns > 0
    prefactor, exponent = pseudospin.fit_power_law(ns[positive], fs[positive], (fit_min, fit_max))
    summary = f"fit window=[{fit_min}, {fit_max}] prefactor={prefactor!r} exponent={exponent!r}"
    write_csv(cfg, ["n", "f"], zip(ns.tolist(), fs.tolist()), {"shell_margin": pseudospin.SHELL_MARGIN},
              extra_lines=[summary])
    print(summary, file=sys.stderr)
    return EXIT_OK


def cmd_threshold(cfg):
    n = int(cfg["n"])
    if n % 2 == 0 or n < 3:
        raise UsageError(f"threshold is defined only for odd n >= 3 (even n violates for every a > 1), got n={n}")
    try:
        value = parity.threshold(n)
    except DomainError as exc:
        print(f"svlab threshold: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"{value:.6f}")
    return EXIT_OK


def cmd_validate(cfg):
    cutoff = cfg["cutoff"]
    results = validation.run_all(cutoff=None if cutoff in (None, "auto") else int(cutoff))
    for res in results:
        print(f"{'PASS' if res.passed else 'FAIL'}  {res.name}: {res.detail}")
    return EXIT_OK if all(res.passed for res in results) else EXIT_USAGE


COMMANDS = {
    "parity-scan": cmd_parity_scan,
    "parity-landscape": cmd_parity_landscape,
    "pseudospin-scan": cmd_pseudospin_scan,
    "f-sequence": cmd_f_sequence,
    "threshold": cmd_threshold,
    "validate": cmd_validate,
}


def build_parser():
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--out", help="output path (default: stdout)")
    shared.add_argument("--format", choices=["csv"])
    shared.add_argument("--threads", type=int, help="worker threads (default: $SVLAB_THREADS or CPU count)")
    shared.add_argument("--config", help="TOML file; flags override its values")
    shared.add_argument("--seed", type=int, help="seed for randomized optimizer starts")
    shared.add_argument("--gnuplot", action="store_true", default=None, help="also write a .gp plot script")

    parser = argparse.ArgumentParser(prog="svlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"svlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parity-scan", parents=[shared], help="optimal parity S_n versus a")
    p.add_argument("--n", type=int)
    p.add_argument("--a-min", type=float)
    p.add_argument("--a-max", type=float)
    p.add_argument("--a-count", type=int)
    p.add_argument("--spacing", choices=["linear", "log"])

    p = sub.add_parser("parity-landscape", parents=[shared], help="S_n over a (p0, p1) grid")
    p.add_argument("--n", type=int)
    p.add_argument("--a", type=float)
    p.add_argument("--p-min", type=float)
    p.add_argument("--p-max", type=float)
    p.add_argument("--p-count", type=int)

    p = sub.add_parser("pseudospin-scan", parents=[shared], help="three-mode pseudospin S_3 versus r")
    p.add_argument("--r-min", type=float)
    p.add_argument("--r-max", type=float)
    p.add_argument("--r-count", type=int)
    p.add_argument("--spacing", choices=["linear", "log"])
    p.add_argument("--cutoff", help="'auto' or an even total photon number")
    p.add_argument("--tail-tol", type=float)
    p.add_argument("--starts", type=int, help="random multi-starts for the angle search")

    p = sub.add_parser("f-sequence", parents=[shared], help="shell sums f(n) and their power-law fit")
    p.add_argument("--n-min", type=int)
    p.add_argument("--n-max", type=int)
    p.add_argument("--fit-min", type=float)
    p.add_argument("--fit-max", type=float)

    p = sub.add_parser("threshold", parents=[shared], help="violation threshold a_n for odd n")
    p.add_argument("--n", type=int)
    p.add_argument("n_pos", nargs="?", type=int, metavar="N")

    p = sub.add_parser("validate", parents=[shared], help="run the cross-oracle checks")
    p.add_argument("--cutoff", help="force the Fock cutoff used by the tail check")
    return parser


def resolve_config(args):
    """Merge defaults, the optional TOML file (top level or a per-command table) and flags."""
    cfg = dict(SHARED_DEFAULTS)
    cfg.update(DEFAULTS[args.command])
    if args.config:
        with open(args.config, "rb") as fh:
            data = tomllib.load(fh)
        section = data.get(args.command, {})
        for source in (data, section):
            for key, value in source.items():
                if isinstance(value, dict):
                    continue
                cfg[key.replace("-", "_")] = value
    for key, value in vars(args).items():
        if key in ("command", "config", "n_pos") or value is None:
            continue
        cfg[key] = value
    if getattr(args, "n_pos", None) is not None:
        cfg["n"] = args.n_pos
    cfg["command"] = args.command
    if cfg.get("seed") is not None and int(cfg["seed"]) < 0:
        raise UsageError("--seed must be non-negative")
    if "starts" in cfg and int(cfg["starts"]) < 1:
        raise UsageError("--starts must be >= 1")
    if cfg.get("cutoff") not in (None, "auto"):
        try:
            cutoff = int(cfg["cutoff"])
        except ValueError:
            raise UsageError(f"cutoff must be 'auto' or an even integer, got {cfg['cutoff']!r}") from None
        if cutoff < 0 or cutoff % 2:
            raise UsageError(f"cutoff must be a non-negative even integer, got {cutoff}")
    return cfg


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except (UsageError, OSError, tomllib.TOMLDecodeError, ValueError) as exc:
        print(f"svlab {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (pseudospin.PrecisionError, pseudospin.TailToleranceError) as exc:
        print(f"svlab {args.command}: {exc}", file=sys.stderr)
        return EXIT_WARN


if __name__ == "__main__":
    sys.exit(main())
