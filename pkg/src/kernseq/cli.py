"""Command-line interface.

Subcommands: critval, monitor, retro, simulate, diagnose.  Exit codes:
0 success / no alarm, 2 alarm raised before the horizon, 1 error.

All randomness flows from --seed; each subcommand derives its own stream by
hashing the subcommand name into the seed sequence, and each replication
gets an independent sub-stream indexed by replication number.
"""

from __future__ import annotations

import argparse
import json
import sys
import zlib

import numpy as np

from . import harness, limits, monitor, retro, spectrum
from .diagnostics import moment_test, vector_moment_test
from .kernels import kernel_from_json, kernel_to_json, resolve_kernel
from .monitor import MonitorConfig
from .ustat import BoundaryParams


class CliError(Exception):
    pass


def derive_seed(seed: int, subcommand: str) -> int:
    return (int(seed) ^ zlib.crc32(subcommand.encode())) & 0xFFFFFFFF


def parse_csv(path: str) -> np.ndarray:
    """Rows of comma-separated reals; an optional non-numeric header row."""
    rows = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            try:
                vals = [float(c) for c in cells]
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise CliError(f"{path}: non-numeric cell at line {lineno}")
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise CliError(f"{path}: ragged row at line {lineno} "
                               f"({len(vals)} cells, expected {width})")
            rows.append(vals)
    if not rows:
        raise CliError(f"{path}: no data rows")
    return np.asarray(rows, dtype=float)


def _kernel_arg(text: str):
    named = harness.DEFAULT_KERNELS.get(text)
    if named is not None:
        return named
    return kernel_from_json(text)


def _split_training(args) -> tuple[np.ndarray, np.ndarray | None]:
    """Training/monitoring from two files, or one file plus --m rows."""
    if args.training and args.stream:
        return parse_csv(args.training), parse_csv(args.stream)
    if args.training and args.m:
        data = parse_csv(args.training)
        if not (2 <= args.m < len(data)):
            raise CliError(f"--m {args.m} out of range for {len(data)} rows")
        return data[: args.m], data[args.m :]
    if args.training:
        return parse_csv(args.training), None
    raise CliError("need --training (optionally with --stream or --m)")


def _write_json(obj, path: str | None):
    text = json.dumps(obj, indent=2)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_critval(args) -> int:
    seed = derive_seed(args.seed, "critval")
    if args.spectrum_in:
        with open(args.spectrum_in) as fh:
            est = spectrum.SpectrumEstimate.from_json(fh.read())
        lam = est.lambdas
    else:
        training, _ = _split_training(args)
        kernel = resolve_kernel(_kernel_arg(args.kernel), training)
        est = spectrum.estimate_spectrum(kernel, training)
        lam = est.lambdas
    if args.spectrum_out:
        _write_json(est.to_json(), args.spectrum_out)
    if args.horizon:
        a0 = args.horizon / est.m
        u0 = a0 / (1.0 + a0)
    else:
        u0 = 1.0
    cv = limits.monitor_critical_value(
        spectrum.truncate_lambdas(lam), args.scheme, beta=args.beta, u0=u0,
        alpha=args.alpha, cw=args.cw, bw=args.bw, grid_n=args.grid_n,
        reps=args.reps, seed=seed)
    kind = {"d1": limits.GAMMA, "d2": limits.GAMMA_BAR,
            "d3": limits.GAMMA_WINDOW}[args.scheme]
    _write_json({"kind": kind, "alpha": args.alpha, "critical_value": cv,
                 "reps": args.reps, "grid_n": args.grid_n, "seed": args.seed},
                args.out)
    return 0


def cmd_monitor(args) -> int:
    training, stream = _split_training(args)
    if stream is None:
        raise CliError("monitor needs a stream (--stream or --m split)")
    if args.critval_json:
        with open(args.critval_json) as fh:
            c = float(json.load(fh)["critical_value"])
    elif args.c is not None:
        c = args.c
    else:
        raise CliError("monitor needs --c or --critval-json")
    bmode = "short" if args.short_boundary else "standard"
    cfg = MonitorConfig(kernel=_kernel_arg(args.kernel), scheme=args.scheme,
                        boundary=BoundaryParams(beta=args.beta, mode=bmode,
                                                M=args.horizon if bmode == "short" else None),
                        horizon=args.horizon, critical_value=c,
                        cw=args.cw, bw=args.bw, max_page_lag=args.max_page_lag)
    events, stop = monitor.run(cfg, training, stream)
    sink = open(args.events, "w") if args.events else sys.stdout
    try:
        for ev in events:
            print(ev.to_json(), file=sink)
    finally:
        if sink is not sys.stdout:
            sink.close()
    alarmed = any(ev.alarm for ev in events)
    if alarmed:
        print(f"alarm at k={int(stop)}")
        return 2
    print("no alarm")
    return 0


def cmd_retro(args) -> int:
    data = parse_csv(args.data)
    seed = derive_seed(args.seed, "retro")
    result = retro.retro_test(_kernel_arg(args.kernel), data, zeta=args.zeta,
                              alpha=args.alpha,
                              sim_cfg={"grid_n": args.grid_n, "reps": args.reps,
                                       "seed": seed})
    _write_json({"stat": result.statistic, "k_hat": result.argmax_k,
                 "cv": result.critical_value, "reject": result.reject},
                args.out)
    return 0


def cmd_simulate(args) -> int:
    seed = derive_seed(args.seed, "simulate")
    k_star = "random" if args.k_star == "random" else int(args.k_star)
    spec = harness.ScenarioSpec(m=args.m, M=args.horizon, d=args.d,
                                alternative=args.alternative,
                                strength=args.strength, k_star=k_star,
                                reps=args.reps, seed=seed)
    kernels = {}
    for name in args.kernels.split(","):
        kernels[name] = _kernel_arg(name)
    rows = harness.run_table(kernels, args.schemes.split(","), spec,
                             betas=[float(b) for b in args.betas.split(",")],
                             alpha=args.alpha, cw=args.cw, bw=args.bw,
                             cv_reps=args.cv_reps,
                             size_adjusted=args.size_adjusted)
    csv_text = harness.report_csv(rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(csv_text)
    print(harness.report_text(rows), end="")
    return 0


def cmd_diagnose(args) -> int:
    data = parse_csv(args.data)
    seed = derive_seed(args.seed, "diagnose")
    if data.shape[1] == 1:
        res = moment_test(data[:, 0], args.order, alpha=args.alpha, B=args.B,
                          seed=seed)
    else:
        reduce = args.column if args.column is not None else "l2"
        res = vector_moment_test(data, args.order, alpha=args.alpha, B=args.B,
                                 seed=seed, reduce=reduce)
    _write_json({"order_k": res.order_k, "psi_k": res.psi_k, "Q": res.Q,
                 "threshold": res.threshold,
                 "decide_infinite_moment": res.decide_infinite_moment},
                args.out)
    return 0


def _add_common(p, *, kernel=True):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output file (default stdout)")
    if kernel:
        p.add_argument("--kernel", default="h2",
                       help="h1|h2|h3 or a kernel JSON object")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kernseq",
                                 description="changepoint monitoring with "
                                             "U-statistic detectors")
    ap.add_argument("--config", default=None,
                    help="JSON file of flag defaults (flags override)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("critval", help="Monte Carlo critical value from training data")
    _add_common(p)
    p.add_argument("--training", default=None)
    p.add_argument("--stream", default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--scheme", choices=["d1", "d2", "d3"], default="d1")
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--horizon", type=int, default=None,
                   help="closed horizon M (omit for open-ended)")
    p.add_argument("--cw", type=float, default=1.0)
    p.add_argument("--bw", type=float, default=0.5)
    p.add_argument("--grid-n", type=int, default=None)
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--spectrum-out", default=None)
    p.add_argument("--spectrum-in", default=None)
    p.set_defaults(func=cmd_critval)

    p = sub.add_parser("monitor", help="run the stopping rule over a stream")
    _add_common(p)
    p.add_argument("--training", default=None)
    p.add_argument("--stream", default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--scheme", choices=["d1", "d2", "d3"], default="d1")
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--critval-json", default=None)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--short-boundary", action="store_true")
    p.add_argument("--cw", type=float, default=1.0)
    p.add_argument("--bw", type=float, default=0.5)
    p.add_argument("--max-page-lag", type=int, default=None)
    p.add_argument("--events", default=None, help="JSONL event sink")
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("retro", help="retrospective in-sample changepoint test")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--zeta", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--grid-n", type=int, default=4096)
    p.add_argument("--reps", type=int, default=2000)
    p.set_defaults(func=cmd_retro)

    p = sub.add_parser("simulate", help="replication study over synthetic scenarios")
    _add_common(p, kernel=False)
    p.add_argument("--m", type=int, default=200)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--alternative", default="null",
                   choices=["null", "location", "scale", "tail"])
    p.add_argument("--strength", default="strong", choices=["strong", "weak"])
    p.add_argument("--k-star", default="random")
    p.add_argument("--kernels", default="h2")
    p.add_argument("--schemes", default="d1")
    p.add_argument("--betas", default="0.0")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--cv-reps", type=int, default=2000)
    p.add_argument("--cw", type=float, default=1.0)
    p.add_argument("--bw", type=float, default=0.5)
    p.add_argument("--size-adjusted", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("diagnose", help="randomised moment-existence test")
    _add_common(p, kernel=False)
    p.add_argument("--data", required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--B", type=int, default=2000)
    p.add_argument("--column", type=int, default=None,
                   help="test a single coordinate instead of the L2 norm")
    p.set_defaults(func=cmd_diagnose)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    # config-file defaults: parse once to find --config, then re-parse
    pre, _ = ap.parse_known_args(argv)
    if getattr(pre, "config", None):
        with open(pre.config) as fh:
            defaults = json.load(fh)
        for action in ap._subparsers._group_actions[0].choices.values():
            known = {a.dest for a in action._actions}
            action.set_defaults(**{k: v for k, v in defaults.items() if k in known})
    try:
        args = ap.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI surface converts to exit code
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
