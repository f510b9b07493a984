"""Command-line front end: ``lastzero <subcommand> [flags]``.

Every run writes a table (CSV or JSON) plus a manifest that echoes the
parameters, the tool version, the seed, a timestamp and the argument
vector. ``lastzero replay MANIFEST`` reruns a manifest and reproduces the
table byte for byte.

Exit codes: 0 success, 2 invalid arguments, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .asymptotics import ModerateScale, RGrid, crossing_scan, ldp_scan, md_scan
from .distribution import (
    CrossingWindow,
    DriftedBMParams,
    LimitLaw,
    crossing_log_probability,
    crossing_probability,
    last_zero_cdf,
    last_zero_mean,
    last_zero_pdf,
    last_zero_variance,
    limit_law_cdf,
    limit_law_mean,
    limit_law_variance,
)
from .errors import ConvergenceError, NumericalDomainError
from .montecarlo import McConfig, estimate_crossing, estimate_last_zero_cdf
from .quadrature import DEFAULT_CONFIG, QuadratureConfig
from .sampling import RngSeed, sample_last_zero, sample_limit_law

__all__ = ["main", "run", "COLUMNS"]

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
# probabilities whose log falls below this are only reported as logs
LOG_FLOOR = -700.0

COLUMNS = {
    "cdf": ["mu", "t", "a", "cdf"],
    "pdf": ["mu", "t", "a", "pdf"],
    "moments": ["mu", "t", "r", "mean", "variance", "r2_variance"],
    "crossing": ["mu", "a", "b", "psi", "log_psi"],
    "limit-law": ["mu", "a", "G", "mean", "variance"],
    "sample": ["index", "value"],
    "mc": ["target", "a", "b", "p_hat", "stderr", "n", "closed_form", "z_score"],
    "ldp": ["r", "raw_log", "scaled", "theory", "abs_err", "extrapolated"],
    "md": ["r", "skipped", "raw_log", "scaled", "theory", "abs_err", "extrapolated"],
    "crossing-scan": ["r", "raw_log", "scaled", "theory", "abs_err", "extrapolated",
                      "scaled_2", "theory_2", "abs_err_2", "extrapolated_2"],
}


class UsageError(Exception):
    """Invalid command-line input; the message names the flag."""


def _require(cond, flag, message):
    if not cond:
        raise UsageError(f"{flag}: {message}")


def _count(text):
    """Integer flag that also accepts forms like ``1e6``."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if not value.is_integer():
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    return int(value)


# -- parser ------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _columns_help(name):
    return "columns: " + ",".join(COLUMNS[name])


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", metavar="PATH", help="output file (default: standard output)")
    common.add_argument("--tol", type=float, metavar="REL",
                        help=f"relative quadrature tolerance (default {DEFAULT_CONFIG.rel_tol:g}); "
                             "the absolute tolerance is scaled by the same factor")

    parser = _Parser(prog="lastzero", description=__doc__.split("\n")[0],
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"lastzero {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text,
                              description=f"{help_text}.\n\n{_columns_help(name)}",
                              formatter_class=argparse.RawDescriptionHelpFormatter)

    p = add("cdf", "distribution function of the last zero T")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--a", type=float)
    p.add_argument("--grid", type=_count, metavar="N", help="N evenly spaced points on [0, t]")

    p = add("pdf", "density of the last zero T")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--a", type=float)
    p.add_argument("--grid", type=_count, metavar="N",
                   help="N cell midpoints of [0, t] (the density is infinite at 0 and t)")

    p = add("moments", "mean and variance of T for drift mu*sqrt(r)")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--r", type=float, default=1.0)

    p = add("crossing", "probability of a zero inside [a, b]")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)

    p = add("limit-law", "distribution function or moments of the limit law Y")
    p.add_argument("--mu", type=float, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--a", type=float)
    g.add_argument("--moments", action="store_true")

    p = add("sample", "exact inverse-transform variates of T or Y")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--t", type=float)
    p.add_argument("--n", type=_count, required=True)
    p.add_argument("--seed", type=_count, required=True)
    p.add_argument("--stream-id", type=_count, default=0)
    p.add_argument("--limit-law", action="store_true", help="sample Y instead of T")

    p = add("mc", "Monte Carlo estimate against the closed form")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--t", type=float, required=True, help="simulation horizon")
    p.add_argument("--n-paths", type=_count, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--seed", type=_count, required=True)
    p.add_argument("--stream-id", type=_count, default=0)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--cdf-at", type=float, metavar="A")
    g.add_argument("--crossing", type=float, nargs=2, metavar=("A", "B"))
    p.add_argument("--no-bridge", action="store_true")

    for name, text in (("ldp", "large-deviation scan of log P(T >= z) / r"),
                       ("md", "moderate-deviation scan"),
                       ("crossing-scan", "scan of both crossing-probability limits")):
        p = add(name, text)
        p.add_argument("--mu", type=float, required=True)
        if name == "crossing-scan":
            p.add_argument("--a", type=float, required=True)
            p.add_argument("--b", type=float, required=True)
        else:
            p.add_argument("--t", type=float, required=True)
            p.add_argument("--z", type=float, required=True)
        if name == "md":
            p.add_argument("--beta", type=float, required=True)
        p.add_argument("--r-min", type=float, default=RGrid.r_min)
        p.add_argument("--r-max", type=float, default=RGrid.r_max)
        p.add_argument("--r-points", type=_count, default=RGrid.points)

    p = sub.add_parser("replay", help="rerun the command recorded in a manifest",
                       description="rerun the command recorded in a manifest")
    p.add_argument("manifest", metavar="MANIFEST")
    p.add_argument("--out", metavar="PATH", help="output file (overrides the manifest)")
    return parser


# -- validation --------------------------------------------------------------

def _validate(ns):
    mu = getattr(ns, "mu", None)
    if mu is not None:
        _require(math.isfinite(mu) and mu != 0.0, "--mu", "mu must be nonzero and finite")
    t = getattr(ns, "t", None)
    if t is not None:
        _require(math.isfinite(t) and t > 0, "--t", "t must be positive and finite")
    if ns.tol is not None:
        _require(0 < ns.tol < 1, "--tol", "tol must lie in (0, 1)")
    cmd = ns.command
    if cmd in ("cdf", "pdf"):
        _require(ns.a is not None or ns.grid is not None, "--a", "give --a or --grid")
        _require(ns.a is None or ns.grid is None, "--grid", "--grid excludes --a")
        if ns.grid is not None:
            _require(ns.grid >= (2 if cmd == "cdf" else 1), "--grid", "grid needs more points")
        if ns.a is not None:
            _require(math.isfinite(ns.a), "--a", "a must be finite")
    elif cmd == "moments":
        _require(ns.r > 0 and math.isfinite(ns.r), "--r", "r must be positive")
    elif cmd in ("crossing", "crossing-scan"):
        _require(ns.a > 0, "--a", "a must be positive")
        _require(ns.b > ns.a and math.isfinite(ns.b), "--b", "b must exceed a")
    elif cmd == "limit-law":
        if ns.a is not None:
            _require(not math.isnan(ns.a), "--a", "a must be a number")
    elif cmd == "sample":
        _require(ns.n >= 1, "--n", "n must be at least 1")
        _require(ns.limit_law or ns.t is not None, "--t", "t is required unless --limit-law")
        _require(0 <= ns.seed < 2 ** 64, "--seed", "seed must be an unsigned 64-bit integer")
        _require(0 <= ns.stream_id < 2 ** 64, "--stream-id", "stream id must be an unsigned 64-bit integer")
    elif cmd == "mc":
        _require(ns.n_paths >= 100, "--n-paths", "n_paths must be at least 100")
        _require(ns.dt > 0, "--dt", "dt must be positive")
        _require(0 <= ns.seed < 2 ** 64, "--seed", "seed must be an unsigned 64-bit integer")
        _require(0 <= ns.stream_id < 2 ** 64, "--stream-id", "stream id must be an unsigned 64-bit integer")
        if ns.crossing is not None:
            a, b = ns.crossing
            _require(0 < a < b, "--crossing", "window needs 0 < A < B")
            _require(b <= ns.t, "--crossing", "B must not exceed the horizon --t")
        else:
            _require(0 <= ns.cdf_at <= ns.t, "--cdf-at", "A must lie in [0, t]")
        _require(ns.dt <= ns.t / 10, "--dt", "dt must be at most t/10")
    if cmd in ("ldp", "md", "crossing-scan"):
        _require(ns.r_min > 0, "--r-min", "r_min must be positive")
        _require(ns.r_max > ns.r_min and math.isfinite(ns.r_max), "--r-max", "r_max must exceed r_min")
        _require(ns.r_points >= 2, "--r-points", "r_points must be at least 2")
        if cmd == "ldp":
            _require(0 < ns.z <= ns.t, "--z", "z must lie in (0, t]")
        if cmd == "md":
            _require(ns.z > 0, "--z", "z must be positive")
            _require(0 < ns.beta < 1, "--beta", "beta must lie in (0, 1)")


# -- commands ----------------------------------------------------------------

def _quad(ns):
    if ns.tol is None:
        return DEFAULT_CONFIG
    scale = ns.tol / DEFAULT_CONFIG.rel_tol
    return QuadratureConfig(abs_tol=DEFAULT_CONFIG.abs_tol * scale, rel_tol=ns.tol)


def _points(ns):
    if ns.grid is None:
        return [ns.a]
    if ns.command == "cdf":
        return list(np.linspace(0.0, ns.t, ns.grid))
    return list((np.arange(ns.grid) + 0.5) * ns.t / ns.grid)


def _cmd_cdf(ns, quad):
    p = DriftedBMParams(ns.mu, ns.t)
    return [dict(mu=ns.mu, t=ns.t, a=a, cdf=last_zero_cdf(p, a, quad)) for a in _points(ns)]


def _cmd_pdf(ns, quad):
    p = DriftedBMParams(ns.mu, ns.t)
    return [dict(mu=ns.mu, t=ns.t, a=a, pdf=last_zero_pdf(p, a, quad)) for a in _points(ns)]


def _cmd_moments(ns, quad):
    p = DriftedBMParams.scaled(ns.mu, ns.r, ns.t)
    var = last_zero_variance(p)
    return [dict(mu=ns.mu, t=ns.t, r=ns.r, mean=last_zero_mean(p), variance=var,
                 r2_variance=ns.r * ns.r * var)]


def _cmd_crossing(ns, quad):
    w = CrossingWindow(ns.a, ns.b)
    log_psi = crossing_log_probability(ns.mu, w, quad)
    psi = crossing_probability(ns.mu, w, quad) if log_psi >= LOG_FLOOR else None
    return [dict(mu=ns.mu, a=ns.a, b=ns.b, psi=psi, log_psi=log_psi)]


def _cmd_limit_law(ns, quad):
    law = LimitLaw(ns.mu)
    if ns.moments:
        return [dict(mu=ns.mu, a=None, G=None, mean=limit_law_mean(law),
                     variance=limit_law_variance(law))]
    return [dict(mu=ns.mu, a=ns.a, G=limit_law_cdf(law, ns.a, quad), mean=None, variance=None)]


def _cmd_sample(ns, quad):
    seed = RngSeed(ns.seed, ns.stream_id)
    if ns.limit_law:
        values = sample_limit_law(LimitLaw(ns.mu), ns.n, seed, quad=quad)
    else:
        values = sample_last_zero(DriftedBMParams(ns.mu, ns.t), ns.n, seed, quad=quad)
    return [dict(index=i, value=float(v)) for i, v in enumerate(values)]


def _cmd_mc(ns, quad):
    cfg = McConfig(ns.n_paths, ns.dt, RngSeed(ns.seed, ns.stream_id), not ns.no_bridge)
    if ns.crossing is not None:
        w = CrossingWindow(*ns.crossing)
        est = estimate_crossing(ns.mu, w, cfg, horizon=ns.t)
        exact = crossing_probability(ns.mu, w, quad)
        target, a, b = "crossing", w.a, w.b
    else:
        p = DriftedBMParams(ns.mu, ns.t)
        est = estimate_last_zero_cdf(p, ns.cdf_at, cfg)
        exact = last_zero_cdf(p, ns.cdf_at, quad)
        target, a, b = "cdf", ns.cdf_at, None
    z = (est.p_hat - exact) / est.stderr if est.stderr > 0 else None
    return [dict(target=target, a=a, b=b, p_hat=est.p_hat, stderr=est.stderr, n=est.n,
                 closed_form=exact, z_score=z)]


def _grid(ns):
    return RGrid(ns.r_min, ns.r_max, ns.r_points)


def _scan_rows(table, second=False):
    rows = []
    for row in table.rows:
        out = dict(r=row.r, raw_log=row.raw_log, scaled=row.scaled, theory=row.theory,
                   abs_err=row.abs_err, extrapolated=table.extrapolated)
        if row.skipped:
            out.update(raw_log=None, scaled=None, abs_err=None)
        if second:
            out.update(scaled_2=row.scaled_2, theory_2=row.theory_2, abs_err_2=row.abs_err_2,
                       extrapolated_2=table.extrapolated_2)
        out["skipped"] = int(row.skipped)
        rows.append(out)
    return rows


def _cmd_ldp(ns, quad):
    return _scan_rows(ldp_scan(ns.mu, ns.t, ns.z, _grid(ns), quad))


def _cmd_md(ns, quad):
    return _scan_rows(md_scan(ns.mu, ns.t, ns.z, ModerateScale(ns.beta), _grid(ns), quad))


def _cmd_crossing_scan(ns, quad):
    return _scan_rows(crossing_scan(ns.mu, CrossingWindow(ns.a, ns.b), _grid(ns), quad), second=True)


_COMMANDS = {
    "cdf": _cmd_cdf, "pdf": _cmd_pdf, "moments": _cmd_moments, "crossing": _cmd_crossing,
    "limit-law": _cmd_limit_law, "sample": _cmd_sample, "mc": _cmd_mc, "ldp": _cmd_ldp,
    "md": _cmd_md, "crossing-scan": _cmd_crossing_scan,
}


# -- output ------------------------------------------------------------------

def _cell(value):
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, int, np.integer)):
        return str(int(value))
    return "%.17e" % float(value)


def _json_value(value):
    if value is None or isinstance(value, str):
        return value
    if isinstance(value, (bool, int, np.integer)):
        return value if not isinstance(value, np.integer) else int(value)
    value = float(value)
    return value if math.isfinite(value) else repr(value)


def render_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def render_json(columns, rows, manifest) -> str:
    body = {"manifest": manifest,
            "rows": [{c: _json_value(row.get(c)) for c in columns} for row in rows]}
    return json.dumps(body, indent=2) + "\n"


def _manifest(ns, argv):
    params = {k: v for k, v in vars(ns).items() if k not in ("format", "out", "command")}
    return {
        "tool": "lastzero",
        "version": __version__,
        "command": ns.command,
        "params": params,
        "seed": getattr(ns, "seed", None),
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "argv": list(argv),
    }


def _write(path, text):
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)


def _replay_argv(ns):
    try:
        with open(ns.manifest, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, ValueError) as exc:
        raise UsageError(f"MANIFEST: cannot read manifest: {exc}")
    manifest = doc.get("manifest", doc)
    argv = manifest.get("argv")
    if not isinstance(argv, list) or not argv:
        raise UsageError("MANIFEST: manifest has no argv")
    out = []
    skip = False
    for item in argv:
        if skip:
            skip = False
            continue
        if item == "--out":
            skip = True
            continue
        if item.startswith("--out="):
            continue
        out.append(item)
    if ns.out is not None:
        out += ["--out", ns.out]
    return out


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run the command line ``argv`` (without the program name); returns the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        try:
            ns = parser.parse_args(argv)
        except SystemExit as exc:  # --help / --version
            return int(exc.code or 0)
        if ns.command == "replay":
            return run(_replay_argv(ns))
        _validate(ns)
        rows = _COMMANDS[ns.command](ns, _quad(ns))
    except UsageError as exc:
        print(f"lastzero: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, NumericalDomainError) as exc:
        print(f"lastzero: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"lastzero: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    columns = COLUMNS[ns.command]
    manifest = _manifest(ns, argv)
    if ns.format == "json":
        _write(ns.out, render_json(columns, rows, manifest))
    else:
        _write(ns.out, render_csv(columns, rows))
        text = json.dumps(manifest, indent=2) + "\n"
        if ns.out is None:
            sys.stderr.write(text)
        else:
            _write(ns.out + ".manifest.json", text)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
