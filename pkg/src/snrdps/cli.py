"""Command-line front end: bound curves, rate scans and the oracle suite.

Exit codes: 0 success, 1 verification failure, 2 usage or I/O error.
Relative output paths are resolved against ``$SNRDPS_OUTPUT_DIR`` when it
is set.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

import numpy as np

from snrdps.bounds import DEFAULT_EBIT_POINTS, eph_bound
from snrdps.keyrate import RRDPS, SNRDPS, ChannelModel, RateModel
from snrdps.linalg import InvalidInputError
from snrdps.povm import ProtocolParams
from snrdps.verify import CHECKS, DEFAULT_SEED, run_checks

log = logging.getLogger("snrdps")

OUTPUT_DIR_ENV = "SNRDPS_OUTPUT_DIR"
BOUNDS_HEADER = ["e_bit", "e_ph_bound", "nu", "L", "cardR"]
RATE_HEADER = ["km", "eta", "mu_opt", "L_mu", "Q", "q0", "q1", "q2", "qtail",
               "G_raw", "G", "protocol"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def fmt(value) -> str:
    """12 significant digits; ``None`` becomes an empty field."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, str):
        return value
    return f"{float(value):.12g}"


def resolve_output(path: str) -> Path:
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def write_csv(path: Path, header, rows) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc


def _write_extras(args, out: Path, kind: str) -> None:
    from snrdps import plotting

    try:
        if args.plot_script:
            script = out.with_name(out.stem + "_plot.py")
            script.write_text(plotting.plot_script(kind, out.name))
            log.info("wrote %s", script)
        if args.figure:
            png = out.with_suffix(".png")
            (plotting.plot_bounds if kind == "bounds" else plotting.plot_rates)(out, png)
            log.info("wrote %s", png)
    except OSError as exc:
        raise UsageError(f"cannot write next to {out}: {exc}") from exc


def _params(L: int, t: int) -> ProtocolParams:
    try:
        return ProtocolParams(L, t)
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from exc


# -- bounds ----------------------------------------------------------------

def bounds_rows(params: ProtocolParams, nu: int, n_rows: int = DEFAULT_EBIT_POINTS,
                with_rrdps: bool = False):
    for x in np.linspace(0.0, 0.5, n_rows):
        row = [x, eph_bound(params, nu, float(x)), nu, params.L, params.card_r]
        if with_rrdps:
            row.append(min(nu / params.card_r, 0.5))
        yield row


def cmd_bounds(args) -> int:
    for nu in args.nu:
        if nu not in (1, 2):
            raise UsageError("--nu must be 1 or 2")
    header = BOUNDS_HEADER + (["e_ph_rrdps"] if args.with_rrdps else [])
    rows = []
    for t in args.t:
        params = _params(args.L, t)
        for nu in args.nu:
            log.info("bound curve %s nu=%d", params, nu)
            rows.extend(bounds_rows(params, nu, args.rows, args.with_rrdps))
    out = resolve_output(args.out or "bounds.csv")
    write_csv(out, header, rows)
    log.info("wrote %s (%d rows)", out, len(rows))
    _write_extras(args, out, "bounds")
    return EXIT_OK


# -- rate ------------------------------------------------------------------

def km_grid(lo: float, hi: float, step: float) -> np.ndarray:
    if step <= 0:
        raise UsageError("--km-step must be positive")
    if lo < 0 or hi < lo:
        raise UsageError("need 0 <= --km-min <= --km-max")
    n = int(np.floor((hi - lo) / step + 1e-9))
    return lo + step * np.arange(n + 1)


def rate_row(pt) -> list:
    a = pt.alloc
    return [pt.fiber_km, pt.eta, pt.mu_opt, pt.L_mu, pt.Q,
            None if a is None else a.q0, None if a is None else a.q1,
            None if a is None else a.q2, None if a is None else a.qtail,
            pt.G_raw, pt.G, pt.protocol]


def cmd_rate(args) -> int:
    if not 0 <= args.ebit < 0.5:
        raise UsageError("--ebit must lie in [0, 0.5)")
    try:
        channel = ChannelModel(args.eta0, args.atten_db_km)
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from exc
    kms = km_grid(args.km_min, args.km_max, args.km_step)
    t = args.t[0]
    if len(args.t) > 1:
        raise UsageError("rate scans take a single --t")
    protocols = [SNRDPS, RRDPS] if args.protocol == "both" else [args.protocol]
    points = []
    for protocol in protocols:
        params = _params(args.L, t) if protocol == SNRDPS else ProtocolParams.round_robin(2 * t)
        log.info("rate scan %s %s, e_bit=%g, %d distances", protocol, params, args.ebit, len(kms))
        model = RateModel(params, args.ebit, channel, protocol)
        points.extend(model.scan(kms))
    order = {SNRDPS: 0, RRDPS: 1}
    points.sort(key=lambda p: (p.fiber_km, order[p.protocol]))
    out = resolve_output(args.out or "rate.csv")
    write_csv(out, RATE_HEADER, (rate_row(p) for p in points))
    log.info("wrote %s (%d rows)", out, len(points))
    _write_extras(args, out, "rate")
    return EXIT_OK


# -- verify ----------------------------------------------------------------

def cmd_verify(args) -> int:
    lemma1_Ls = None
    if args.L is not None:
        if not 3 <= args.L <= 8:
            raise UsageError("the lemma1 check takes 3 <= --L <= 8")
        lemma1_Ls = [args.L]
    try:
        reports = run_checks(args.check, seed=args.seed, corrupt=args.corrupt,
                             lemma1_Ls=lemma1_Ls)
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from exc
    width = max(len(r.name) for r in reports)
    iwidth = max(len(r.instance) for r in reports)
    for r in reports:
        status = "ok" if r.ok else "FAIL"
        kind = "control" if r.control else "check"
        print(f"{status:4}  {r.name:{width}}  {kind:7}  {r.instance:{iwidth}}  "
              f"dev={r.deviation:.3e}  tol={r.tolerance:.0e}  seed={r.seed}")
    n_bad = sum(not r.ok for r in reports)
    print(f"{len(reports) - n_bad}/{len(reports)} as expected")
    if args.out:
        out = resolve_output(args.out)
        write_csv(out, ["name", "instance", "control", "deviation", "tolerance", "passed",
                        "seed"],
                  ([r.name, r.instance, str(r.control), r.deviation, r.tolerance,
                    str(r.passed), r.seed] for r in reports))
    return EXIT_OK if n_bad == 0 else EXIT_FAIL


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="snrdps", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_help):
        p.add_argument("--L", type=int, default=32, help="block length (default 32)")
        p.add_argument("--t", type=int, nargs="+", default=[1],
                       help="half delay count; |R| = 2t (default 1)")
        p.add_argument("--out", help=out_help)
        p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                       help="accepted for uniformity; bounds and rates are deterministic")
        p.add_argument("--plot-script", action="store_true",
                       help="also write <out>_plot.py that plots the CSV")
        p.add_argument("--figure", action="store_true", help="also render <out>.png")

    b = sub.add_parser("bounds", help="phase-error bound curves")
    common(b, "CSV path (default bounds.csv)")
    b.add_argument("--nu", type=int, nargs="+", default=[1, 2], help="photon numbers (1, 2)")
    b.add_argument("--rows", type=int, default=DEFAULT_EBIT_POINTS,
                   help="bit-error-rate samples per curve")
    b.add_argument("--with-rrdps", action="store_true",
                   help="add the round-robin reference column nu/|R|")
    b.set_defaults(func=cmd_bounds)

    r = sub.add_parser("rate", help="key rate versus distance with optimised intensity")
    common(r, "CSV path (default rate.csv)")
    r.add_argument("--ebit", type=float, default=0.02, help="bit error rate (default 0.02)")
    r.add_argument("--eta0", type=float, default=0.1, help="detector efficiency")
    r.add_argument("--atten-db-km", type=float, default=0.2, help="fibre loss in dB/km")
    r.add_argument("--km-min", type=float, default=0.0)
    r.add_argument("--km-max", type=float, default=200.0)
    r.add_argument("--km-step", type=float, default=1.0)
    r.add_argument("--protocol", choices=[SNRDPS, RRDPS, "both"], default=SNRDPS,
                   help="rrdps uses L = |R| + 1 with the same |R| = 2t")
    r.set_defaults(func=cmd_rate)

    v = sub.add_parser("verify", help="run the brute-force oracle suite")
    v.add_argument("--check", nargs="+", choices=sorted(CHECKS), help="subset of checks")
    v.add_argument("--L", type=int, help="restrict the lemma1 (dial) check to one block length")
    v.add_argument("--seed", type=int, default=DEFAULT_SEED)
    v.add_argument("--out", help="optional CSV report")
    v.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"snrdps: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
