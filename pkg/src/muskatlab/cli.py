"""Command-line front end: ``muskat <subcommand> --config FILE``.

Exit status is 0 when every requested check passes, 1 when a check fails
and 2 for usage, configuration or input errors.  Every run also writes
``report.json`` into the output directory.
"""
import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .config import parse_config
from .core import initial_profile
from .diagnostics import (DecayFit, DiagnosticsSnapshot, fit_power_law,
                          snapshot_columns, snapshot_row)
from .errors import MuskatError, OnInterface
from .evolution import (Stepper, StepperConfig, TrajectoryRecord,
                        read_checkpoint, run, write_checkpoint)
from .quadrature import QuadParams, velocity_at
from . import checks

SUBCOMMANDS = ("spectrum", "evolve", "verify", "decay", "velocity-field")


class UsageError(Exception):
    code = "USAGE_ERROR"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_csv(path, header_lines, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_csv(path):
    """Returns ``(header_lines, columns, rows)`` with rows as strings."""
    header, rows, columns = [], [], None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                header.append(line[1:].strip())
                continue
            rec = next(csv.reader([line]))
            if columns is None:
                columns = rec
            else:
                rows.append(rec)
    return header, columns, rows


def _headers(exp, sub, extra=()):
    return [f"muskatlab {sub}", *extra, *exp.header_lines()]


def _stepper_config(exp, linear_only):
    st = exp["stepper"]
    dg = exp["diagnostics"]
    return StepperConfig(
        dt_max=st["dt_max"], tol=st["tol"], dt_min=st["dt_min"],
        nonlinear_mode=st["nonlinear_mode"], series_L=st["series_L"],
        dealias=st["dealias"], linear_only=linear_only or st["linear_only"],
        t_first=dg["t_first"], per_decade=dg["per_decade"],
        quad=QuadParams(periods=st["periods"], refine=st["refine"]))


# ---------------------------------------------------------------------------
# subcommands

def cmd_spectrum(exp, args, out):
    from .spectrum import _sym_eig, det_A0_closed, det_A0_direct

    cfg = exp.fluid
    sp = exp["spectrum"]
    lo = max(sp["xi_min"], 0.0)
    if lo > 0:
        xi = np.geomspace(lo, sp["xi_max"], sp["count"])
    else:
        xi = np.linspace(0.0, sp["xi_max"], sp["count"])
    lam, _, sq = _sym_eig(xi, cfg)
    closed = det_A0_closed(xi, cfg)
    cond = sq.max() / sq.min()
    rows = []
    for m, x in enumerate(xi):
        rows.append([x, *lam[m], closed[m], det_A0_direct(x, cfg, dps=40),
                     cond])
    cols = ["xi", *[f"lambda_{k + 1}" for k in range(cfg.n)],
            "det_closed", "det_direct", "cond_P"]
    write_csv(out / "spectrum.csv", _headers(exp, "spectrum"), cols, rows)
    return 0, {"rows": len(rows)}


def _initial_state(exp):
    return initial_profile(exp["initial"]["kind"], exp.profile_params(),
                           exp.grid, exp.fluid)


def cmd_evolve(exp, args, out):
    cfg, grid = exp.fluid, exp.grid
    sc = _stepper_config(exp, args.linear_only)
    s_list = tuple(exp["diagnostics"]["s_list"])
    T = exp["stepper"]["T_final"]
    every = exp["output"]["checkpoint_every"]
    record = None
    extra = []
    if args.resume:
        state, ck_cfg, err_accum, steps = read_checkpoint(args.resume)
        if (ck_cfg != cfg or state.grid != grid):
            raise UsageError("checkpoint configuration or grid does not match "
                             "the config file")
        record = TrajectoryRecord(metadata={"resumed_from": float(state.t)},
                                  steps=int(steps), err_accum=float(err_accum))
        extra.append(f"resumed-from-t: {_fmt(state.t)}")
    else:
        state = _initial_state(exp)
    counter = {"n": 0}

    def checkpoint(st, rec):
        counter["n"] += 1
        if every and counter["n"] % every == 0:
            write_checkpoint(out / f"checkpoint_{counter['n']:04d}.bin", st,
                             cfg, rec.err_accum, rec.steps)

    stepper = Stepper(cfg, grid, sc)
    record = run(state, cfg, sc, T, s_list=s_list, stepper=stepper,
                 gamma=exp["initial"]["gamma"], checkpoint=checkpoint,
                 record=record)
    write_checkpoint(out / "checkpoint_final.bin", record.final, cfg,
                     record.err_accum, record.steps)
    cols = snapshot_columns(cfg.n, s_list, with_h=True)
    rows = [snapshot_row(s, s_list) for s in record.snapshots]
    if not args.resume:
        extra.append(f"smallness: {_fmt(record.metadata['smallness'])}")
    extra.append("energy: sum_j jump_j (||g_j||^2 + 2 d_j int g_j), "
                 "finite part of the layered energy")
    write_csv(out / "trajectory.csv", _headers(exp, "evolve", extra), cols,
              rows)
    info = {"steps": record.steps, "err_accum": record.err_accum,
            "samples": len(rows),
            "events": [list(map(str, e)) for e in record.events]}
    return 0, info


def cmd_decay(exp, args, out):
    path = out / "trajectory.csv"
    if not path.exists():
        raise UsageError(f"{path} not found; run 'evolve' first")
    _, cols, rows = read_csv(path)
    data = np.array([[float(v) for v in r] for r in rows]) if rows \
        else np.zeros((0, len(cols)))
    t = data[:, cols.index("t")] if len(data) else np.zeros(0)
    window = exp["diagnostics"]["decay_window"]
    fits = []
    for s in exp["diagnostics"]["s_list"]:
        name = f"wiener_s{float(s):g}_k"
        idx = [i for i, c in enumerate(cols) if c.startswith(name)]
        norms = data[:, idx].sum(axis=1) if len(data) else np.zeros(0)
        fits.append(fit_power_law(t, norms, s=s, window=window))
    cols_out = ["s", "t0", "t1", "beta_hat", "half_width", "residual",
                "target"]
    write_csv(out / "decay.csv", _headers(exp, "decay"), cols_out,
              [[f.s, f.t0, f.t1, f.beta_hat, f.half_width, f.residual,
                f.target] for f in fits])
    return 0, {"fits": [f.__dict__ for f in fits]}


def cmd_velocity(exp, args, out):
    cfg = exp.fluid
    state = _initial_state(exp)
    ve = exp["velocity"]
    st = exp["stepper"]
    qp = QuadParams(periods=st["periods"], refine=st["refine"])
    h = ve["fd_step"]
    xs = np.linspace(ve["x1"][0], ve["x1"][1], int(ve["x1"][2]))
    ys = np.linspace(ve["x2"][0], ve["x2"][1], int(ve["x2"][2]))
    rows, skipped = [], 0
    for x1 in xs:
        for x2 in ys:
            try:
                u = velocity_at((x1, x2), state, cfg, qp).u
                ux = (velocity_at((x1 + h, x2), state, cfg, qp).u[0]
                      - velocity_at((x1 - h, x2), state, cfg, qp).u[0])
                uy = (velocity_at((x1, x2 + h), state, cfg, qp).u[1]
                      - velocity_at((x1, x2 - h), state, cfg, qp).u[1])
                div = (ux + uy) / (2 * h)
            except OnInterface:
                skipped += 1
                u, div = (np.nan, np.nan), np.nan
            rows.append([x1, x2, u[0], u[1], div])
    write_csv(out / "velocity.csv",
              _headers(exp, "velocity-field",
                       ["rows with nan lie within dx/2 of an interface"]),
              ["x1", "x2", "u1", "u2", "div_estimate"], rows)
    return 0, {"points": len(rows), "on_interface": skipped}


def cmd_verify(exp, args, out):
    results = checks.run_all(exp, linear_only=args.linear_only)
    cols = ["check", "passed", "measured", "threshold", "detail"]
    write_csv(out / "verify.csv", _headers(exp, "verify"), cols,
              [[r.name, r.passed, r.measured, r.threshold, r.detail]
               for r in results])
    failed = [r.name for r in results if not r.passed]
    return (1 if failed else 0), {
        "checks": [r.as_dict() for r in results], "failed": failed}


COMMANDS = {
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "verify": cmd_verify,
    "decay": cmd_decay,
    "velocity-field": cmd_velocity,
}


# ---------------------------------------------------------------------------
# entry point

def build_parser():
    p = argparse.ArgumentParser(
        prog="muskat",
        description="Layered Muskat interface laboratory.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, metavar="PATH")
    p.add_argument("--out", metavar="DIR",
                   help="output directory (default: [output] directory)")
    p.add_argument("--seed", type=int, metavar="U64",
                   help="override [initial] seed")
    p.add_argument("--threads", type=int, metavar="N",
                   help="worker threads (default: $MUSKAT_THREADS or 1)")
    p.add_argument("--linear-only", action="store_true",
                   help="drop the nonlinear term")
    p.add_argument("--resume", metavar="CHECKPOINT",
                   help="continue 'evolve' from a checkpoint file")
    return p


def _threads(args):
    if args.threads is not None:
        return args.threads
    env = os.environ.get("MUSKAT_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"MUSKAT_THREADS={env!r} is not an integer")
    return 1


def _write_report(out, payload):
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    out = Path(args.out) if args.out else None
    payload = {"subcommand": args.subcommand}
    try:
        exp = parse_config(args.config)
        if out is None:
            out = Path(exp["output"]["directory"])
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise UsageError("--seed must be an unsigned 64-bit integer")
            exp.values["initial"]["seed"] = args.seed
        if args.resume and args.subcommand != "evolve":
            raise UsageError("--resume only applies to 'evolve'")
        n_threads = _threads(args)
        if n_threads < 1:
            raise UsageError("--threads must be >= 1")
        out.mkdir(parents=True, exist_ok=True)
        payload["config_sha256"] = exp.sha256()
        with threadpool_limits(limits=n_threads):
            code, info = COMMANDS[args.subcommand](exp, args, out)
        payload.update(status="ok" if code == 0 else "check_failed",
                       exit_code=code, **info)
    except (MuskatError, UsageError, OSError) as exc:
        code = 2
        err = {"code": getattr(exc, "code", "IO_ERROR"), "message": str(exc)}
        err.update({k: v for k, v in getattr(exc, "details", {}).items()})
        payload.update(status="error", exit_code=2, error=err)
        print(f"muskat: error [{err['code']}]: {exc}", file=sys.stderr)
    _write_report(out if out is not None else Path("out"), payload)
    return code


if __name__ == "__main__":
    sys.exit(main())
