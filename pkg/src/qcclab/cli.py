"""Command-line front end: solve coding programs, run verification
suites, execute rounding protocols, and emit exponent curves.

Exit codes: 0 all checks pass, 1 a check failed, 2 input error,
3 solver failure.  Flags override the QCC_SEED / QCC_TOL environment
variables.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import channels as ch
from . import divergence as dv
from . import operators as op
from . import protocols as pr
from . import sdp

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_SOLVER_ERROR = 3


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    return default if raw is None else int(raw)


def _env_float(name: str, default: float) -> float:
    raw = os.environ.get(name)
    return default if raw is None else float(raw)


def _load_channel(path: str) -> ch.KrausChannel:
    try:
        return ch.load_channel(path)
    except (OSError, ValueError, KeyError) as exc:
        raise SystemExit2(f"cannot load channel from {path}: {exc}")


class SystemExit2(Exception):
    """Input error carrying a message (mapped to exit code 2)."""


def _emit(record: dict, out_path: str = None) -> None:
    text = json.dumps(record, indent=2, sort_keys=True, default=float)
    print(text)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")


# --- corpus -------------------------------------------------------------------


def build_corpus(random_count: int, seed: int) -> list:
    """Zoo channels plus seeded random CPTP maps (dims at most 3)."""
    zoo = [
        ch.identity_channel(2),
        ch.identity_channel(3),
        ch.depolarizing(2, 0.25),
        ch.depolarizing(2, 0.75),
        ch.depolarizing(3, 0.5),
        ch.dephasing(0.3),
        ch.amplitude_damping(0.4),
        ch.replacer(np.eye(2) / 2, 2),
        ch.replacer(np.diag([0.7, 0.3]).astype(complex), 2),
        ch.classical(np.array([[0.8, 0.3], [0.2, 0.7]])),
        ch.measurement_channel(ch.computational_povm(2)),
        ch.measurement_channel(ch.trine_povm()),
    ]
    out = list(zoo)
    for k in range(random_count):
        dims = [(2, 2), (2, 3), (3, 2), (3, 3)][k % 4]
        out.append(ch.random_cptp(dims[0], dims[1], seed=seed + k))
    return out


# --- solve --------------------------------------------------------------------


def cmd_solve(args) -> int:
    tol = args.tol
    if args.program == "dh":
        rho = op.load_matrix(args.rho)
        sigma = op.load_matrix(args.sigma)
        value = sdp.hypothesis_test_value(rho, sigma, args.eps, tol=tol)
        _emit({"program": "dh", "eps": args.eps, "value": value,
               "tolerance": tol}, args.out)
        return EXIT_OK
    channel = _load_channel(args.channel)
    if args.program == "ns":
        sol = sdp.ns_success(channel, args.m, tol=tol)
    elif args.program == "mc":
        sol = sdp.mc_success(channel, args.m, tol=tol)
    elif args.program == "ns-fixed":
        rho = op.load_matrix(args.rho)
        sol = sdp.ns_success_fixed(channel, args.m, rho, tol=tol)
    elif args.program == "mc-dual":
        rho = op.load_matrix(args.rho)
        value = sdp.mc_success_dual_fixed(channel, args.m, rho, tol=tol)
        _emit({"program": "MC-dual", "channel": channel.name, "M": args.m,
               "value": value, "tolerance": tol}, args.out)
        return EXIT_OK
    else:
        raise SystemExit2(f"unknown program {args.program!r}")
    record = sol.record()
    record["tolerance"] = tol
    _emit(record, args.out)
    return EXIT_OK


# --- verify -------------------------------------------------------------------


def _verify_rows(corpus, m_list, seed, tol):
    rows = []

    def add(check, instance, measured, bound, ok):
        rows.append({
            "check": check, "instance": instance,
            "measured": float(measured), "bound": float(bound),
            "slack": float(bound - measured), "pass": bool(ok),
            "seed": seed, "tolerance": tol,
        })

    for channel in corpus:
        for m in m_list:
            ns = sdp.ns_success(channel, m)
            mc = sdp.mc_success(channel, m)
            name = f"{channel.name},M={m}"
            add("sandwich-upper", name, ns.value, mc.value + 1e-6,
                ns.value <= mc.value + 1e-6)
            add("sandwich-lower", name, (1 - 1 / m) * mc.value,
                ns.value + 1e-6, (1 - 1 / m) * mc.value <= ns.value + 1e-6)
            add("ns-floor", name, 1.0 / m, ns.value + 1e-9,
                ns.value >= 1.0 / m - 1e-9)
            add("gap", name, max(ns.gap, mc.gap), 1e-7,
                max(ns.gap, mc.gap) <= 1e-7)
            if _is_measurement(channel):
                m_prime = min(m, 4)
                try:
                    rep = pr.qc_sequential_protocol(channel, ns, m_prime)
                    add("sequential-exact", name, rep.max_residual, 1e-9, True)
                except pr.ProtocolError:
                    add("sequential-exact", name, 1.0, 1e-9, False)
    return rows


def _is_measurement(channel) -> bool:
    choi = ch.choi_of(channel).operator
    d_r, d_b = channel.dim_in, channel.dim_out
    t = choi.reshape(d_r, d_b, d_r, d_b)
    off = t.copy()
    for b in range(d_b):
        off[:, b, :, b] = 0.0
    return float(np.abs(off).max()) < 1e-10


def cmd_verify(args) -> int:
    corpus = build_corpus(args.random_channels, args.seed)
    rows = _verify_rows(corpus, args.m_list, args.seed, args.tol)
    n_fail = sum(1 for r in rows if not r["pass"])
    report = {
        "rows": rows,
        "summary": {"total": len(rows), "failed": n_fail},
        "exit_status": EXIT_OK if n_fail == 0 else EXIT_CHECK_FAILED,
    }
    _emit(report, args.out)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else
                                    ["check", "instance", "measured", "bound",
                                     "slack", "pass", "seed", "tolerance"])
            writer.writeheader()
            writer.writerows(rows)
    return report["exit_status"]


# --- round --------------------------------------------------------------------


def cmd_round(args) -> int:
    channel = _load_channel(args.channel)
    if args.protocol == "qc":
        ns = sdp.ns_success(channel, args.m, tol=args.tol)
        report = pr.qc_sequential_protocol(channel, ns, args.m_prime)
    elif args.protocol == "hn":
        ns = sdp.ns_success(channel, args.m, tol=args.tol)
        report = pr.hn_protocol(channel, ns, args.m_prime, c=args.c)
    elif args.protocol == "mult":
        rho = (op.load_matrix(args.rho) if args.rho
               else np.eye(channel.dim_in) / channel.dim_in)
        ns = sdp.ns_success_fixed(channel, args.m, rho, tol=args.tol)
        report = pr.multiplicative_protocol(channel, ns, samples=args.samples,
                                            seed=args.seed)
    else:
        raise SystemExit2(f"unknown protocol {args.protocol!r}")
    _emit(report.to_dict(), args.out)
    if args.csv:
        pr.write_reports_csv(args.csv, [report])
    return EXIT_OK


# --- exponent -----------------------------------------------------------------


def cmd_exponent(args) -> int:
    channel = _load_channel(args.channel)
    rates = [float(r) for r in args.rates.split(",")]
    if any(r < 0 for r in rates):
        raise SystemExit2("rates must be nonnegative")
    alphas = ([float(a) for a in args.alphas.split(",")]
              if args.alphas else None)
    curve = dv.mutual_info_curve(channel, alphas=alphas, seed=args.seed)
    rows = []
    for r in rates:
        row = {"rate": r, "exponent": curve.exponent(r),
               "seed": args.seed, "tolerance": args.tol}
        for n in (1, 2):
            m = max(2, round(math.exp(n * r)))
            try:
                chan_n = ch.power(channel, n)
                val = sdp.ns_success(chan_n, m).value
                row[f"trend_n{n}"] = -math.log(val) / n
            except (sdp.SolverError, ch.ChannelError):
                row[f"trend_n{n}"] = ""
        rows.append(row)
    check = dv.converse_bound_check(channel, max(2, round(math.exp(rates[-1]))),
                                    alphas=[0.5, 1.0, 2.0])
    fields = list(rows[0].keys())
    writer = csv.DictWriter(sys.stdout, fieldnames=fields)
    writer.writeheader()
    writer.writerows(rows)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=fields)
            w.writeheader()
            w.writerows(rows)
    print(json.dumps({"converse_check": check}, indent=2, sort_keys=True,
                     default=float))
    return EXIT_OK if check["pass"] else EXIT_CHECK_FAILED


# --- chernoff -----------------------------------------------------------------


def cmd_chernoff(args) -> int:
    channel = _load_channel(args.channel)
    rho = (op.load_matrix(args.rho) if args.rho
           else np.eye(channel.dim_in) / channel.dim_in)
    ns = sdp.ns_success_fixed(channel, args.m, rho, tol=args.tol)
    sampler = pr.design_operator_sampler(channel, ns)
    report = pr.matrix_chernoff_check(sampler, delta=args.delta,
                                      trials=args.trials, seed=args.seed)
    _emit(report, args.out)
    return EXIT_OK if report["pass"] else EXIT_CHECK_FAILED


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    seed_default = _env_int("QCC_SEED", 0)
    tol_default = _env_float("QCC_TOL", 1e-7)

    parser = argparse.ArgumentParser(
        prog="qcclab",
        description="One-shot quantum channel coding laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=seed_default)
        p.add_argument("--tol", type=float, default=tol_default)
        p.add_argument("--out", default=None, help="write the JSON record here")

    p_solve = sub.add_parser("solve", help="solve a coding program")
    p_solve.add_argument("program",
                         choices=["ns", "mc", "ns-fixed", "mc-dual", "dh"])
    p_solve.add_argument("--channel", help="channel JSON file")
    p_solve.add_argument("--M", dest="m", type=int, default=2)
    p_solve.add_argument("--rho", help="state JSON file")
    p_solve.add_argument("--sigma", help="state JSON file (dh)")
    p_solve.add_argument("--eps", type=float, default=0.0)
    common(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_verify = sub.add_parser("verify", help="run the invariant suites")
    p_verify.add_argument("--random-channels", type=int, default=10)
    p_verify.add_argument("--M-list", dest="m_list", type=int, nargs="+",
                          default=[2, 4, 8])
    p_verify.add_argument("--csv", default=None)
    common(p_verify)
    p_verify.set_defaults(func=cmd_verify)

    p_round = sub.add_parser("round", help="run a rounding protocol")
    p_round.add_argument("protocol", choices=["qc", "hn", "mult"])
    p_round.add_argument("--channel", required=True)
    p_round.add_argument("--M", dest="m", type=int, default=2)
    p_round.add_argument("--M-prime", dest="m_prime", type=int, default=2)
    p_round.add_argument("--c", type=float, default=1.0)
    p_round.add_argument("--rho", default=None)
    p_round.add_argument("--samples", type=int, default=50)
    p_round.add_argument("--csv", default=None)
    common(p_round)
    p_round.set_defaults(func=cmd_round)

    p_exp = sub.add_parser("exponent", help="strong converse exponent curve")
    p_exp.add_argument("--channel", required=True)
    p_exp.add_argument("--rates", required=True,
                       help="comma-separated rates in nats")
    p_exp.add_argument("--alphas", default=None,
                       help="comma-separated alpha grid")
    common(p_exp)
    p_exp.set_defaults(func=cmd_exponent)

    p_ch = sub.add_parser("chernoff", help="matrix Chernoff tail check")
    p_ch.add_argument("--channel", required=True)
    p_ch.add_argument("--M", dest="m", type=int, default=2)
    p_ch.add_argument("--rho", default=None)
    p_ch.add_argument("--delta", type=float, required=True)
    p_ch.add_argument("--trials", type=int, default=1000)
    common(p_ch)
    p_ch.set_defaults(func=cmd_chernoff)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT_ERROR if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except SystemExit2 as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (ValueError, KeyError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (sdp.SolverError,) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER_ERROR
    except pr.ProtocolError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
