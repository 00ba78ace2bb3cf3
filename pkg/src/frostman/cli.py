"""Command-line front end.

Subcommands: points, level-set, energy, net-measure, frostman, density,
fourier, sweep, convolve2.  Global flags: --config (JSON mirroring the
sweep configuration), --out, --threads, --seed.

Exit codes: 0 success, 1 configuration error, 2 numerical-certification
failure (truncation tail too large or support containment violated).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import CertificationError, ConfigError
from .expansions import ExpansionParams, build_level_set, enumerate_points
from .fourier import energy_via_fourier, fourth_moment, moment_reports_to_csv
from .measures import convolve_squared, iterate_functional_equation, make_mu
from .netmeasure import cover_to_json, frostman_ratio_table, m_infty, ratio_table_to_csv
from .riesz import energy, energy_reports_to_csv
from .sweep import SweepConfig, emit_report, run_sweep
from .expansions import IntervalUnion


def _write(out_dir: str, name: str, payload, binary: bool = False) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    mode = "wb" if binary else "w"
    with open(path, mode, newline=None if binary else "") as fh:
        fh.write(payload)
    return path


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse failures are configuration errors
        raise ConfigError(message)


def _params(args, c_default: float = 1.0) -> ExpansionParams:
    c = c_default if args.c is None else args.c
    try:
        return ExpansionParams(args.lam, args.alpha, args.n, c)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _add_param_flags(p, alpha_default=1.5):
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--alpha", type=float, default=alpha_default)
    p.add_argument("--n", "--k", dest="n", type=int, required=True)
    p.add_argument("--c", type=float, default=None)


def _load_set(args) -> IntervalUnion:
    if args.input:
        with open(args.input) as fh:
            return IntervalUnion.from_csv(fh.read())
    return build_level_set(_params(args))


def main(argv=None) -> int:
    shared = _Parser(add_help=False)
    shared.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    shared.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    shared.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    shared.add_argument("--config", default=argparse.SUPPRESS, help="JSON config (sweep)")
    ap = _Parser(prog="frostman", description=__doc__)
    ap.set_defaults(out=".", threads=1, seed=0, config=None)
    ap.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    ap.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    ap.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    ap.add_argument("--config", default=argparse.SUPPRESS, help="JSON config (sweep)")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def addcmd(name, help):
        return sub.add_parser(name, help=help, parents=[shared])

    p = addcmd("points", "enumerate expansion points to CSV")
    _add_param_flags(p)

    p = addcmd("level-set", "level-n interval union to CSV")
    _add_param_flags(p)

    p = addcmd("energy", "s-energy of the level measure")
    _add_param_flags(p)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--method", choices=["pairwise", "fourier"], default="pairwise")

    p = addcmd("net-measure", "dyadic net measure of a set")
    _add_param_flags(p)
    p.add_argument("--input", default=None, help="interval CSV instead of level set")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--max-depth", type=int, default=20)

    p = addcmd("frostman", "Frostman ratio table of a set")
    _add_param_flags(p)
    p.add_argument("--input", default=None)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--depths", default="0:6", help="level range lo:hi")

    p = addcmd("density", "iterated self-similar density")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--depth", type=int, default=40)
    p.add_argument("--resolution", type=int, default=2**16)
    p.add_argument("--binary", action="store_true", help="also write GRD1 binary")

    p = addcmd("fourier", "majorant moment integrals")
    _add_param_flags(p)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--power", choices=["second", "fourth"], default="fourth")

    addcmd("sweep", "run a (lambda, k) sweep from --config")

    p = addcmd("convolve2", "convolution-squared density")
    _add_param_flags(p)
    p.add_argument("--resolution", type=int, default=2**14)

    try:
        args = ap.parse_args(argv)
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except CertificationError as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    out = args.out
    cmd = args.command
    if cmd == "points":
        pts = enumerate_points(_params(args))
        path = _write(out, "points.csv", pts.to_csv())
        print(f"{len(pts)} distinct points -> {path}")
    elif cmd == "level-set":
        E = build_level_set(_params(args))
        path = _write(out, "level_set.csv", E.to_csv())
        print(f"{len(E)} intervals, measure {E.measure:.6g} -> {path}")
    elif cmd == "energy":
        p = _params(args)
        if args.method == "pairwise":
            rep = energy(make_mu(p), args.s, params=p)
        else:
            rep = energy_via_fourier(p.lam, p.alpha, p.n, args.s, c=p.c)
        path = _write(out, "energy.csv", energy_reports_to_csv([rep]))
        print(f"energy[s={args.s}] = {rep.value:.8g} ({rep.method}) -> {path}")
    elif cmd == "net-measure":
        E = _load_set(args)
        res = m_infty(E, args.t, args.max_depth)
        path = _write(out, "net_measure.json", cover_to_json(res))
        print(f"M_t = {res.value:.8g} (exact={res.exact}) -> {path}")
    elif cmd == "frostman":
        E = _load_set(args)
        lo, hi = (int(x) for x in args.depths.split(":"))
        table = frostman_ratio_table(E, args.t, args.eps, (lo, hi))
        path = _write(out, "frostman_ratios.csv", ratio_table_to_csv(table))
        print(f"min ratio {min(r for (_, _, r) in table):.8g} -> {path}")
    elif cmd == "density":
        g = iterate_functional_equation(args.lam, args.depth, args.resolution)
        path = _write(out, "density.csv", g.to_csv())
        print(f"density mass {g.mass:.12g} -> {path}")
        if args.binary:
            bpath = _write(out, "density.grd1", g.to_binary(), binary=True)
            print(f"binary -> {bpath}")
    elif cmd == "fourier":
        p = _params(args)
        rep = fourth_moment(p.lam, p.alpha, p.n, args.s, power=args.power, c=p.c)
        path = _write(out, "fourier_moments.csv", moment_reports_to_csv([rep]))
        print(f"{args.power} moment total {rep.total:.8g} -> {path}")
    elif cmd == "sweep":
        if not args.config:
            raise ConfigError("sweep requires --config pointing to a JSON file")
        with open(args.config) as fh:
            cfg = SweepConfig.from_json(fh.read())
        if args.seed:
            cfg = SweepConfig(**{**cfg.__dict__, "seed": args.seed})
        rows = run_sweep(cfg, threads=args.threads)
        paths = emit_report(rows, out, plot_data=True)
        print(f"{len(rows)} rows -> {paths[0]}")
    elif cmd == "convolve2":
        p = _params(args, c_default=0.25)
        g = convolve_squared(p.lam, p.alpha, p.n, c=p.c, m=args.resolution)
        path = _write(out, "convolution_squared.csv", g.to_csv())
        print(f"mass {g.mass:.12g} -> {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
