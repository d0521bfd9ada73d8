"""Command-line entry point.

Every run writes CSV (to ``--out`` or stdout). Failures print one line of the
form ``error: kind=<kind> message=<text>`` on stderr and exit nonzero.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from ..errors import ConditioningError, DegenerateDistribution, InvalidArgument, UnestimableError
from .config import default_scenario, load_scenario
from .output import emit_csv, to_csv
from .sweeps import best_per_param, run_bounds_sweep, run_pareto_sweep, run_symbol_spacing_sweep

EXIT_CODES = {InvalidArgument: 2, UnestimableError: 3, ConditioningError: 4,
              DegenerateDistribution: 4, OSError: 5}
KINDS = {InvalidArgument: "invalid-argument", UnestimableError: "unestimable",
         ConditioningError: "numerical-conditioning", DegenerateDistribution: "degenerate-distribution",
         OSError: "io"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidArgument(message)


def _snr_list(text: str) -> tuple[float, ...]:
    """Comma-separated values or a range start:stop:step (stop inclusive)."""
    try:
        if ":" in text:
            a, b, c = (float(x) for x in text.split(":"))
            return tuple(float(x) for x in np.round(np.arange(a, b + c / 2, c), 10))
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise InvalidArgument(f"bad --snr-db value {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ofdmpilots", description="Pilot design bounds for OFDM ranging and capacity.")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "bounds": "capacity, outage and ranging RMSE versus SNR",
        "pareto": "capacity/outage/RMSE over layout parameter x alpha",
        "symtime": "capacity versus pilot spacing in time",
        "zzb": "ranging RMSE versus SNR only",
        "capacity": "capacity and outage versus SNR only",
    }
    for name, text in helps.items():
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", metavar="PATH")
        s.add_argument("--snr-db", metavar="LIST", type=str)
        s.add_argument("--trials", type=int)
        s.add_argument("--seed", type=int)
        s.add_argument("--out", metavar="PATH")
        s.add_argument("--threads", type=int)
        s.add_argument("--ranging-mode", choices=["known", "unknown"])
    return p


def _join_negative(argv: list[str]) -> list[str]:
    # "--snr-db -10,0" would otherwise read -10,0 as an option
    out = []
    for i, tok in enumerate(argv):
        if i and argv[i - 1] == "--snr-db" and tok.startswith("-"):
            out[-1] = f"--snr-db={tok}"
        else:
            out.append(tok)
    return out


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative(argv))
    scn = load_scenario(args.config) if args.config else default_scenario()
    over = {}
    if args.snr_db is not None:
        over["snr_db"] = _snr_list(args.snr_db)
        if not over["snr_db"]:
            raise InvalidArgument("--snr-db is empty")
    if args.trials is not None:
        if args.trials < 1:
            raise InvalidArgument("--trials must be at least 1")
        over["trials"] = args.trials
    if args.seed is not None:
        over["seed"] = args.seed
    if args.threads is not None:
        if args.threads < 1:
            raise InvalidArgument("--threads must be at least 1")
        over["threads"] = args.threads
    if args.ranging_mode is not None:
        over["ranging_mode"] = args.ranging_mode
    scn = scn.with_(**over)

    if args.command == "bounds":
        res = run_bounds_sweep(scn)
    elif args.command == "zzb":
        res = run_bounds_sweep(scn, capacity=False)
    elif args.command == "capacity":
        res = run_bounds_sweep(scn, ranging=False)
    elif args.command == "pareto":
        res = run_pareto_sweep(scn)
        for snr, (param, alpha) in sorted(res.best.items()):
            print(f"best snr_db={snr!r} layout_param={param} alpha={alpha!r}", file=sys.stderr)
            for p, r in sorted(best_per_param(res, snr).items()):
                print(f"curve_max snr_db={snr!r} layout_param={p} alpha={r.alpha!r} "
                      f"cap={r.cap_mean_bpshz!r} rmse_m={r.rmse_m!r}", file=sys.stderr)
    else:
        res = run_symbol_spacing_sweep(scn)
    if args.out:
        emit_csv(res, args.out)
    else:
        sys.stdout.write(to_csv(res))
    return 0


def main(argv=None) -> int:
    try:
        return run(argv)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except Exception as exc:
        kind, code = "internal", 1
        for cls in EXIT_CODES:
            if isinstance(exc, cls):
                kind, code = KINDS[cls], EXIT_CODES[cls]
                break
        msg = " ".join(str(exc).split())
        print(f"error: kind={kind} message={msg}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
