"""Command-line front end.

Every subcommand writes either JSON or CSV (first line ``# {json}`` with the
run metadata) to standard output or to ``--out``.  Exit codes: 0 on success,
2 on a flag error, 3 on a computation error, in which case a JSON object with
an ``error`` code is written to standard error.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import __version__
from ._grid import default_K
from .errors import FrozenRDEError
from .serialize import FORMAT_VERSION, csv_text, to_json

EXIT_OK, EXIT_FLAGS, EXIT_COMPUTE = 0, 2, 3


# -- flag types -----------------------------------------------------------

def _theta(s: str) -> float:
    v = _float(s)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"theta must lie in (0, 1), got {s}")
    return v


def _float(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be finite: {s}")
    return v


def _nonneg(s: str) -> float:
    v = _float(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {s}")
    return v


def _pos(s: str) -> float:
    v = _float(s)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {s}")
    return v


def _int_at_least(lo: int):
    def parse(s: str) -> int:
        try:
            v = int(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {s}") from None
        if v < lo:
            raise argparse.ArgumentTypeError(f"must be >= {lo}, got {s}")
        return v
    return parse


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(to_json({"error": "flag_error", "message": message}) + "\n")
        raise SystemExit(EXIT_FLAGS)


# -- subcommands ----------------------------------------------------------

def _meta(command: str, defaults: dict) -> dict:
    return {"command": command, "version": __version__, "format_version": FORMAT_VERSION,
            "defaults": defaults}


def cmd_theta_star(a) -> str:
    from .critical import THETA_STAR_BRACKET, theta_star

    r = theta_star(a.tol)
    out = _meta("theta-star", {"tol": a.tol, "bracket": list(THETA_STAR_BRACKET)})
    out.update({"theta_star": r.value, "bracket": list(r.bracket), "residual": r.residual,
                "iterations": r.iterations})
    return to_json(out)


def cmd_signature(a) -> str:
    from .signature import compute_signature

    sig = compute_signature(a.theta, a.c, a.n - 1)
    meta = _meta("signature", {})
    meta.update({"theta": a.theta, "c": a.c, "n": a.n, "limit": sig.limit,
                 "tail_bound": sig.tail_bound})
    if a.format == "json":
        meta["values"] = sig.values
        return to_json(meta)
    return csv_text(meta, ["n", "f"], ((i, v) for i, v in enumerate(sig.values)))


def cmd_find_chat(a) -> str:
    from .critical import F_TOL, SCAN_HI, SCAN_LO, SCAN_POINTS, c_upper_bound, find_c_hat

    r = find_c_hat(a.theta, a.tol)
    out = _meta("find-chat", {"tol": a.tol, "f_tol": F_TOL,
                              "scan": {"lo": SCAN_LO, "hi": SCAN_HI, "points": SCAN_POINTS}})
    out.update({"theta": a.theta, "c_hat": r.value, "bracket": list(r.bracket),
                "residual": r.residual, "iterations": r.iterations,
                "c_upper_bound": c_upper_bound(a.theta)})
    return to_json(out)


def cmd_sweep_chat(a) -> str:
    from .critical import GATE_TOL, _threads, cached_theta_star, sweep_c_hat

    if a.theta_min > a.theta_max:
        raise _FlagError("--theta-min must not exceed --theta-max")
    workers = a.workers if a.workers is not None else _threads()
    rows = sweep_c_hat(a.theta_min, a.theta_max, a.step, workers=workers)
    meta = _meta("sweep-chat", {"gate_tol": GATE_TOL, "find_tol": 1e-12})
    meta.update({"theta_min": a.theta_min, "theta_max": a.theta_max, "step": a.step,
                 "theta_star": cached_theta_star()})
    norm = [(t, math.nan if c is None else c, s) for t, c, s in rows]
    if a.format == "json":
        meta["rows"] = [{"theta": t, "c_hat": c, "status": s} for t, c, s in norm]
        return to_json(meta)
    return csv_text(meta, ["theta", "c_hat", "status"], norm)


def cmd_profile_finf(a) -> str:
    from .critical import F_TOL, c_upper_bound, count_upcrossings, profile_f_infinity

    c_max = c_upper_bound(a.theta) if a.c_max is None else a.c_max
    if c_max <= 0:
        raise _FlagError("c_max must be positive (default is theta(2theta-1)/(1+theta)^2)")
    cs, vals = profile_f_infinity(a.theta, np.linspace(0.0, c_max, a.points))
    level = 1.0 / (1.0 + a.theta)
    meta = _meta("profile-finf", {"f_tol": F_TOL, "points": a.points})
    meta.update({"theta": a.theta, "c_max": c_max, "level": level,
                 "summary": count_upcrossings(cs, vals, level)})
    if a.format == "json":
        meta["c"], meta["f_inf"] = cs, vals
        return to_json(meta)
    return csv_text(meta, ["c", "f_inf"], zip(cs, vals))


def cmd_check_solution(a) -> str:
    from .signature import (bivariate_rde_residual_f, c_from_signature,
                            check_signature_conditions, compute_signature)

    K = default_K(a.theta)
    N = a.n + 2 * K
    sig = compute_signature(a.theta, a.c, N)
    rep = check_signature_conditions(sig, a.tol)
    res = [bivariate_rde_residual_f(sig, None, a.c, k) for k in range(a.n + 1)]
    out = _meta("check-solution", {"tol": a.tol, "N": N})
    out.update({"theta": a.theta, "c": a.c, "n": a.n, "conditions": rep.to_dict(),
                "c_recovered": c_from_signature(sig),
                "residuals": res, "max_abs_residual": float(np.max(np.abs(res)))})
    return to_json(out)


def cmd_bivariate(a) -> str:
    from .bivariate import diagonal_measure, from_signature, marginal_error
    from .critical import cached_theta_star, find_c_hat
    from .dynamics import apply_T2
    from .signature import check_signature_conditions, compute_signature

    K = default_K(a.theta) if a.K is None else a.K
    c = a.c
    if c is None:
        c = find_c_hat(a.theta).value if a.theta > cached_theta_star() else 0.0
    if c == 0:
        m = diagonal_measure(a.theta, K)
        cond = None
    else:
        sig = compute_signature(a.theta, c, 2 * K + 10)
        cond = check_signature_conditions(sig).to_dict()
        m = from_signature(sig, K=K)
    t2 = apply_T2(m)
    out = _meta("bivariate", {"K": K})
    out.update({
        "theta": a.theta, "c": c, "K": K,
        "verdicts": {
            "signature_conditions": cond,
            "total_minus_one": m.total() - 1.0,
            "min_mass": float(np.min(m.table)),
            "marginal_error": marginal_error(m),
            "trunc_mass": m.trunc_mass,
            "m2_violation": m.m2_violation(),
            "invariance_gap": float(np.abs(t2.table - m.table).max()),
            "off_diagonal_mass": m.off_diagonal_mass(),
        },
        "measure": m.to_dict(),
    })
    return to_json(out)


def cmd_iterate(a) -> str:
    from .dynamics import endogeny_probe

    K = default_K(a.theta) if a.K is None else a.K
    p = endogeny_probe(a.theta, K, a.max_steps, a.tol)
    meta = _meta("iterate", {"K": K, "tol": a.tol, "max_steps": a.max_steps})
    meta.update(p.to_dict())
    if a.format == "json":
        return to_json(meta)
    return p.trace.to_csv(a.stride, meta)


def cmd_simulate(a) -> str:
    from . import rtp_sim as R

    if a.frozen:
        res = [R.frozen_iteration(a.theta, a.depth, a.seed + i, a.rounds) for i in range(a.samples)]
        meta = _meta("simulate", {"rounds": a.rounds, "window": a.window, "mode": "frozen"})
        meta.update({"theta": a.theta, "depth": a.depth, "seed": a.seed, "instances": a.samples,
                     "all_inclusions_ok": all(all(r.inclusions_ok.values()) for r in res),
                     "all_sandwich_ok": all(r.sandwich_ok for r in res),
                     "fraction_F2_nonempty": float(np.mean([r.frozen_set_sizes[2] > 0 for r in res])),
                     "window": a.window,
                     "fraction_F2_nonempty_in_window":
                         float(np.mean([r.nonempty_within(2, a.window) for r in res])),
                     "results": [r.to_dict() for r in res]})
        return to_json(meta)
    if a.bivariate:
        y, y2 = R.sample_bivariate_many(a.theta, a.depth, a.samples, a.seed)
        meta = _meta("simulate", {"mode": "bivariate"})
        meta.update({"theta": a.theta, "seed": a.seed})
        meta.update(R.summarize_difference(y, y2, a.depth).to_dict())
        if a.format == "json":
            return to_json(meta)
        return csv_text(meta, ["sample_id", "Y", "Y_prime"],
                        ((i, y[i], y2[i]) for i in range(y.size)))
    y = R.sample_roots(a.theta, a.depth, a.samples, a.seed)
    meta = _meta("simulate", {"mode": "univariate"})
    meta.update({"theta": a.theta, "depth": a.depth, "seed": a.seed, "n": int(y.size),
                 "mass_at_infinity": float(np.mean(np.isinf(y)))})
    if a.format == "json":
        return to_json(meta)
    return csv_text(meta, ["sample_id", "Y"], ((i, y[i]) for i in range(y.size)))


class _FlagError(Exception):
    pass


# -- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="frozen-rde", description="Burning-time equations of frozen percolation.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_, formats=("json",)):
        s = sub.add_parser(name, help=help_)
        s.set_defaults(func=fn)
        s.add_argument("--out", help="write output to this path instead of stdout")
        s.add_argument("--format", choices=formats, default=formats[0])
        return s

    s = add("theta-star", cmd_theta_star, "critical point of the endogeny transition")
    s.add_argument("--tol", type=_pos, default=1e-10)

    s = add("signature", cmd_signature, "signature sequence f(0..n-1)", ("csv", "json"))
    s.add_argument("--theta", type=_theta, required=True)
    s.add_argument("--c", type=_nonneg, required=True)
    s.add_argument("--n", type=_int_at_least(1), required=True)

    s = add("find-chat", cmd_find_chat, "non-diagonal parameter c_hat(theta)")
    s.add_argument("--theta", type=_theta, required=True)
    s.add_argument("--tol", type=_pos, default=1e-12)

    s = add("sweep-chat", cmd_sweep_chat, "c_hat over a theta grid", ("csv", "json"))
    s.add_argument("--theta-min", type=_theta, required=True)
    s.add_argument("--theta-max", type=_theta, required=True)
    s.add_argument("--step", type=_pos, required=True)
    s.add_argument("--workers", type=_int_at_least(1), default=None,
                   help="process count (default: FROZEN_RDE_THREADS or CPU count)")

    s = add("profile-finf", cmd_profile_finf, "f_inf as a function of c", ("csv", "json"))
    s.add_argument("--theta", type=_theta, required=True)
    s.add_argument("--c-max", type=_pos, default=None)
    s.add_argument("--points", type=_int_at_least(2), default=401)

    s = add("check-solution", cmd_check_solution, "admissibility conditions and residuals")
    s.add_argument("--theta", type=_theta, required=True)
    s.add_argument("--c", type=_nonneg, required=True)
    s.add_argument("--n", type=_int_at_least(0), required=True)
    s.add_argument("--tol", type=_pos, default=1e-9)

    s = add("bivariate", cmd_bivariate, "bivariate grid measure with verdicts")
    s.add_argument("--theta", type=_theta, required=True)
    s.add_argument("--c", type=_nonneg, default=None,
                   help="default: c_hat above the critical point, else 0")
    s.add_argument("--K", type=_int_at_least(2), default=None)

    s = add("iterate", cmd_iterate, "endogeny probe trace", ("csv", "json"))
    s.add_argument("--theta", type=_theta, required=True)
    s.add_argument("--K", type=_int_at_least(2), default=None)
    s.add_argument("--max-steps", type=_int_at_least(1), default=10_000)
    s.add_argument("--tol", type=_pos, default=1e-9)
    s.add_argument("--stride", type=_int_at_least(1), default=1)

    s = add("simulate", cmd_simulate, "Monte Carlo on the recursive tree", ("csv", "json"))
    s.add_argument("--theta", type=_theta, required=True)
    s.add_argument("--depth", type=_int_at_least(1), required=True)
    s.add_argument("--samples", type=_int_at_least(1), required=True)
    s.add_argument("--seed", type=_int_at_least(0), required=True)
    mode = s.add_mutually_exclusive_group()
    mode.add_argument("--bivariate", action="store_true")
    mode.add_argument("--frozen", action="store_true")
    s.add_argument("--rounds", type=_int_at_least(2), default=6)
    s.add_argument("--window", type=_int_at_least(1), default=3,
                   help="top tree levels inspected for the frozen-set frequency")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "simulate" and args.frozen and args.format != "json":
        args.format = "json"
    try:
        text = args.func(args)
    except _FlagError as exc:
        sys.stderr.write(to_json({"error": "flag_error", "message": str(exc)}) + "\n")
        return EXIT_FLAGS
    except FrozenRDEError as exc:
        sys.stderr.write(to_json(exc.to_dict()) + "\n")
        return EXIT_COMPUTE
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
