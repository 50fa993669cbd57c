"""Command line entry point: ``oldroydb <subcommand> ...``.

Exit status 0 on success, 1 when ``verify`` finds a failing identity, 2 on a
validation error (JSON line on stderr) and 3 on blow-up (partial artifacts
are written and flagged).
"""
from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from . import io
from . import linear_modes as lm
from . import littlewood_paley as lp
from . import solver as so
from . import spectral as sp

log = logging.getLogger("oldroydb")

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_BLOWUP = 0, 1, 2, 3
FIELDS = ("u", "tau", "gamma")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error("usage", message)
        sys.exit(EXIT_INVALID)


def _emit_error(code, message):
    sys.stderr.write(json.dumps({"code": code, "message": message}) + "\n")


def _threads():
    try:
        return max(1, int(os.environ.get("OLDB_THREADS", "1")))
    except ValueError:
        return 1


# -- simulate -----------------------------------------------------------------------


def norm_columns(cfg):
    """``(field, p, s, band)`` tuples of the norm-series CSV."""
    n, p = cfg.n, float(cfg.p)
    return [
        ("u", 2.0, n / 2 - 1, "low"),
        ("u", p, n / p - 1, "high"),
        ("tau", 2.0, n / 2 - 1, "low"),
        ("tau", p, n / p, "high"),
        ("gamma", 2.0, n / 2 + 1, "low"),
        ("gamma", p, n / p, "high"),
    ]


def _meta(cfg, status="ok", **extra):
    meta = {"seed": cfg.seed, "n": cfg.n, "N": cfg.N, "b": io.fmt(cfg.b), "dt": io.fmt(cfg.dt),
            "j0": cfg.j0, "p": io.fmt(cfg.p), "status": status}
    meta.update(extra)
    return meta


def write_trajectory(outdir, traj, status="ok", **extra):
    cfg, part = traj.config, traj.partition
    outdir = Path(outdir)
    meta = _meta(cfg, status, **extra)
    cols = norm_columns(cfg)
    header = ["time"] + [f"{f}_{lp.BesovSpec(s, p).label(band)}" for f, p, s, band in cols]
    rows = []
    for i, t in enumerate(traj.times):
        rows.append([t] + [lp.besov_from_blocks(traj.blocks[(f, p)][i], part, s, band) for f, p, s, band in cols])
    io.write_csv(outdir / "norms.csv", header, rows, meta)

    keys = sorted(traj.blocks, key=lambda k: (FIELDS.index(k[0]), k[1]))
    bheader = ["time"] + [f"{f}_L{p:g}_j{j}" for f, p in keys for j in part.blocks]
    brows = [[t] + [x for k in keys for x in traj.blocks[k][i]] for i, t in enumerate(traj.times)]
    io.write_csv(outdir / "blocks.csv", bheader, brows, meta)

    inv = [[t, d["div"], d["sym"], d["real"]] for t, d in zip(traj.times, traj.invariants)]
    io.write_csv(outdir / "invariants.csv", ["time", "div", "sym", "real"], inv, meta)
    for k, st in enumerate(traj.states):
        io.write_state(outdir / f"snap_{k:05d}.oldb", st)
    with io.atomic_open(outdir / "config.cfg") as fh:
        fh.write(io.config_to_text(cfg))


def _overrides(args):
    ov = dict(kv.split("=", 1) for kv in args.set or [])
    for flag, key in (("N", "grid.N"), ("n", "grid.n"), ("dt", "integrator.dt"), ("t_end", "integrator.t_end"),
                      ("b", "physics.b"), ("seed", "initial.seed"), ("j0", "output.j0")):
        val = getattr(args, flag, None)
        if val is not None:
            ov[key] = str(val)
    return ov


def cmd_simulate(args):
    cfg = io.read_config(args.config, _overrides(args))
    outdir = Path(args.out)
    log.info("simulate seed=%d N=%d dt=%g t_end=%g", cfg.seed, cfg.N, cfg.dt, cfg.t_end)
    try:
        traj = so.simulate(cfg)
    except so.BlowUpError as err:
        if err.trajectory is not None:
            write_trajectory(outdir, err.trajectory, status="blowup", blowup_time=io.fmt(err.t))
        _emit_error("blowup", str(err))
        return EXIT_BLOWUP
    io.write_state(outdir / "final.oldb", traj.final_state)
    write_trajectory(outdir, traj)
    return EXIT_OK


# -- modes ----------------------------------------------------------------------------


def cmd_modes(args):
    if not 0 < args.r_min < args.r_max or args.points < 2:
        raise ValueError("need 0 < r_min < r_max and at least two points")
    rows = lm.sweep(args.r_min, args.r_max, args.points, alpha=args.alpha, beta=args.beta, mu=args.mu)
    header = ["r", "re_lambda_plus", "im_lambda_plus", "re_lambda_minus", "im_lambda_minus", "regime"]
    meta = {"alpha": io.fmt(args.alpha), "beta": io.fmt(args.beta), "mu": io.fmt(args.mu)}
    _write_or_print(args.out, header, rows, meta)
    return EXIT_OK


def _write_or_print(out, header, rows, meta):
    if out:
        io.write_csv(out, header, rows, meta)
    else:
        for k, v in meta.items():
            print(f"# {k}={v}")
        print(",".join(header))
        for row in rows:
            print(",".join(io.fmt(x) for x in row))


# -- verify ---------------------------------------------------------------------------


def cmd_verify(args):
    state = io.read_state(args.snapshot)
    part = lp.build_partition(state.grid, args.j0)
    raw_div = so.divergence_residual(io.read_state(args.snapshot, project=False).u)
    try:
        report = dg.identity_suite(state, part)
    except dg.PreconditionError as err:
        log.warning("identity suite skipped: %s", err)
        names = ["cancellation"] + [f"transport_{t}" for t in ("u", "tau", "gamma", "w")]
        report = dict.fromkeys(names, float("nan"))
        report["symmetry"] = so.symmetry_residual(state.tau)
    report["divergence"] = raw_div
    rows, ok = [], True
    for name, value in report.items():
        tol = args.tol_invariant if name in ("divergence", "symmetry") else args.tol
        passed = value <= tol
        ok &= passed
        rows.append([name, value, tol, "PASS" if passed else "FAIL"])
    _write_or_print(args.out, ["identity", "residual", "tolerance", "status"], rows, {"snapshot": args.snapshot})
    return EXIT_OK if ok else EXIT_FAIL


# -- xfun -----------------------------------------------------------------------------


def load_trajectory(rundir):
    """Rebuild the norm channels of a ``simulate`` output directory."""
    rundir = Path(rundir)
    cfg = io.read_config(rundir / "config.cfg")
    part = lp.build_partition(cfg.grid, cfg.j0)
    _, header, rows = io.read_csv(rundir / "blocks.csv")
    data = np.array(rows, dtype=float)
    traj = so.Trajectory(cfg, part, times=list(data[:, 0]))
    col = 1
    while col < len(header):
        f, ptag, _ = header[col].split("_", 2)
        p = float(ptag[1:])
        traj.blocks[(f, p)] = list(data[:, col : col + part.nblocks])
        col += part.nblocks
    return traj


def cmd_xfun(args):
    traj = load_trajectory(args.run)
    xf = dg.hybrid_functional(traj, args.p, args.j0)
    header = ["time"] + list(dg.X_COMPONENTS) + ["X", "ratio"]
    total, ratio = xf.total, xf.ratio
    rows = [[t] + [xf.components[k][i] for k in dg.X_COMPONENTS] + [total[i], ratio[i]]
            for i, t in enumerate(xf.times)]
    meta = _meta(traj.config, monotone=xf.monotone, xfun_p=io.fmt(xf.p), xfun_j0=xf.j0)
    _write_or_print(args.out or str(Path(args.run) / "xfun.csv"), header, rows, meta)
    return EXIT_OK


# -- scaling --------------------------------------------------------------------------


def _parse_eps(text):
    return [io._parse_value(x, float) for x in text.split(",") if x.strip()]


def cmd_scaling(args):
    grid = sp.Grid(args.n, args.N)
    fit = dg.scaling_fit(args.width, _parse_eps(args.eps), args.p, grid, args.j0, args.amplitude, _threads())
    rows = [[e, v, np.exp(fit.intercept) * e**fit.slope] for e, v in zip(fit.eps, fit.norms)]
    meta = {"n": args.n, "N": args.N, "p": io.fmt(args.p), "j0": args.j0, "width": io.fmt(args.width),
            "slope": io.fmt(fit.slope), "intercept": io.fmt(fit.intercept), "rms": io.fmt(fit.residual),
            "expected": io.fmt(fit.expected)}
    _write_or_print(args.out, ["eps", "norm", "fit"], rows, meta)
    return EXIT_OK


# -- besov ----------------------------------------------------------------------------


def cmd_besov(args):
    state = io.read_state(args.snapshot)
    part = lp.build_partition(state.grid, args.j0)
    f = {"u": state.u, "tau": state.tau, "gamma": so.gamma_of(state.tau)}[args.field]
    norms = lp.block_norms(f, part, args.p)
    band = None if args.band == "all" else args.band
    rows = [[j, v, 2.0 ** (args.s * j) * v] for j, v, m in zip(part.blocks, norms, part.mask(band)) if m]
    total = lp.besov_from_blocks(norms, part, args.s, band)
    meta = {"field": args.field, "norm": lp.BesovSpec(args.s, args.p).label(band), "total": io.fmt(total)}
    _write_or_print(args.out, ["j", "block_norm", "weighted"], rows, meta)
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------


def build_parser():
    p = _Parser(prog="oldroydb", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run the pseudo-spectral solver")
    s.add_argument("--config", help="sectioned key-value config file")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--seed", type=int)
    s.add_argument("--N", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--dt", type=float)
    s.add_argument("--t-end", dest="t_end", type=float)
    s.add_argument("--b", type=float)
    s.add_argument("--j0", type=int)
    s.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config entry")
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("modes", help="eigenvalue table of the linear symbol")
    m.add_argument("--r-min", dest="r_min", type=float, default=0.1)
    m.add_argument("--r-max", dest="r_max", type=float, default=100.0)
    m.add_argument("--points", type=int, default=500)
    m.add_argument("--alpha", type=float, default=1.0)
    m.add_argument("--beta", type=float, default=1.0)
    m.add_argument("--mu", type=float, default=1.0)
    m.add_argument("--out")
    m.set_defaults(func=cmd_modes)

    v = sub.add_parser("verify", help="exact-identity suite on a state snapshot")
    v.add_argument("--snapshot", required=True)
    v.add_argument("--j0", type=int, default=2)
    v.add_argument("--tol", type=float, default=1e-10)
    v.add_argument("--tol-invariant", dest="tol_invariant", type=float, default=1e-9)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    x = sub.add_parser("xfun", help="hybrid functional series of a simulate run")
    x.add_argument("--run", required=True, help="simulate output directory")
    x.add_argument("--p", type=float)
    x.add_argument("--j0", type=int)
    x.add_argument("--out")
    x.set_defaults(func=cmd_xfun)

    c = sub.add_parser("scaling", help="oscillating-data norm against eps")
    c.add_argument("--eps", default="1/8,1/16,1/32,1/64")
    c.add_argument("--n", type=int, default=2)
    c.add_argument("--N", type=int, default=256)
    c.add_argument("--p", type=float, default=3.0)
    c.add_argument("--width", type=float, default=1.0)
    c.add_argument("--j0", type=int, default=0)
    c.add_argument("--amplitude", type=float, default=1.0)
    c.add_argument("--out")
    c.set_defaults(func=cmd_scaling)

    b = sub.add_parser("besov", help="block norms of a snapshot field")
    b.add_argument("--snapshot", required=True)
    b.add_argument("--field", choices=FIELDS, default="u")
    b.add_argument("--s", type=float, default=0.0)
    b.add_argument("--p", type=float, default=2.0)
    b.add_argument("--band", choices=("all", "low", "high"), default="all")
    b.add_argument("--j0", type=int, default=2)
    b.add_argument("--out")
    b.set_defaults(func=cmd_besov)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError, configparser.Error, KeyError) as err:
        _emit_error(type(err).__name__, str(err))
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
