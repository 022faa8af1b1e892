"""Command-line front end.

Exit codes for ``idprank test``: 0 = greater, 1 = not greater,
2 = indeterminate, 64 = unreadable or malformed input, 65 = invalid
parameters.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from pathlib import Path

from . import __version__
from .baselines import bb_test
from .idp import DEFAULT_S, Approx, Outcome, TestConfig, choose_s, idp_decide, posterior_samples
from .ranks import TieMode, mww_test
from .simulation import ExperimentSpec, TestKind, delta_grid, emit_tables, run_experiment

EXIT_CODES = {Outcome.GREATER: 0, Outcome.NOT_GREATER: 1, Outcome.INDETERMINATE: 2}
EXIT_INPUT = 64
EXIT_PARAM = 65

_NUMBER = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?")


class InputError(Exception):
    """Input file missing, unreadable or malformed."""


class ParamError(Exception):
    """Parameter outside its valid range."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would read as "indeterminate"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARAM, f"{self.prog}: error: {message}\n")


def read_sample(path: str) -> list[float]:
    """One real per line; blank lines and ``#`` comments are skipped."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    values = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not _NUMBER.fullmatch(line):
            raise InputError(f"{path}:{lineno}: not a decimal number: {raw.strip()!r}")
        value = float(line)
        if not math.isfinite(value):
            raise InputError(f"{path}:{lineno}: value out of range")
        values.append(value)
    if not values:
        raise InputError(f"{path}: no observations")
    return values


def _resolve_s(args) -> float:
    if args.rho is not None:
        try:
            return choose_s(args.rho)
        except ValueError as exc:
            raise ParamError(str(exc)) from None
    return DEFAULT_S if args.s is None else args.s


def _config(args, s: float) -> TestConfig:
    try:
        return TestConfig(s=s, gamma=args.gamma, c=args.c, mc_samples=args.mc_samples,
                          seed=args.seed, ties=args.ties, approx=args.approx)
    except ValueError as exc:
        raise ParamError(str(exc)) from None


def _render(fields: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(fields, indent=2) + "\n"
    cells = {k: (repr(v) if isinstance(v, float) else str(v)) for k, v in fields.items()}
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["field", "value"])
        writer.writerows(cells.items())
        return buf.getvalue()
    width = max(len(k) for k in cells)
    return "".join(f"{k:<{width}}  {v}\n" for k, v in cells.items())


def cmd_test(args) -> int:
    x = read_sample(args.x)
    y = read_sample(args.y)
    config = _config(args, _resolve_s(args))
    decision = idp_decide(x, y, config)
    b = decision.bounds
    mww = mww_test(x, y, config.gamma, ties=config.ties)
    bb = bb_test(x, y, config.gamma, config.c, config.mc_samples, rng=config.seed, ties=config.ties)
    fields = {
        "decision": decision.outcome.value,
        "n1": len(x),
        "n2": len(y),
        "s": config.s,
        "gamma": config.gamma,
        "c": config.c,
        "mc_samples": config.mc_samples,
        "seed": config.seed,
        "ties": config.ties.value,
        "approx": config.approx.value,
        "lower_mean": b.lower_mean,
        "upper_mean": b.upper_mean,
        "lower_var": b.lower_var,
        "upper_var": b.upper_var,
        "lower_prob": b.lower_prob,
        "upper_prob": b.upper_prob,
        "lower_prob_se": b.lower_prob_se,
        "upper_prob_se": b.upper_prob_se,
        "mww_u": mww.statistic,
        "mww_p_value": mww.p_value,
        "mww_reject": mww.decision,
        "bb_prob": bb.prob,
        "bb_greater": bb.decision,
    }
    sys.stdout.write(_render(fields, args.format))
    return EXIT_CODES[decision.outcome]


def cmd_simulate(args) -> int:
    try:
        tests = tuple(TestKind.parse(t) for t in args.tests.split(",") if t.strip())
        spec = ExperimentSpec(
            delta_grid=delta_grid(args.delta_min, args.delta_max, args.steps),
            n1=args.n1, n2=args.n2, runs=args.runs, gamma=args.gamma,
            k0=args.k0, k1=args.k1, s=_resolve_s(args), mc_samples=args.mc_samples,
            seed=args.seed, generator=args.generator, tests=tests, approx=args.approx,
            mww_continuity=args.mww_continuity,
        )
    except ValueError as exc:
        raise ParamError(str(exc)) from None
    if args.shards < 1 or args.workers < 1:
        raise ParamError("shards and workers must be >= 1")
    report = emit_tables(run_experiment(spec, shards=args.shards, workers=args.workers), args.format)
    _write(report, args.out)
    return 0


def cmd_posterior(args) -> int:
    x = read_sample(args.x)
    y = read_sample(args.y)
    config = _config(args, _resolve_s(args))
    low, up = posterior_samples(x, y, config)
    if args.format == "json":
        report = json.dumps({"g_low": low.tolist(), "g_up": up.tolist()}) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["g_low", "g_up"])
        writer.writerows((repr(float(a)), repr(float(b))) for a, b in zip(low, up))
        report = buf.getvalue()
    _write(report, args.out)
    return 0


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot write {out}: {exc}") from None


def _add_prior_args(p, with_decision: bool = True) -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument("--s", type=float, help=f"prior strength (default sqrt(2)-1 = {DEFAULT_S:.6f})")
    group.add_argument("--rho", type=float, help="imprecision after one pair; sets s via choose_s")
    p.add_argument("--mc-samples", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ties", choices=[t.value for t in TieMode], default=TieMode.MIDRANK.value)
    if with_decision:
        p.add_argument("--gamma", type=float, default=0.05)
        p.add_argument("--c", type=float, default=0.5)
        p.add_argument("--approx", choices=[a.value for a in Approx], default=Approx.MONTE_CARLO.value)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="idprank", description="Imprecise Dirichlet process rank-sum test")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("test", help="test P(X <= Y) > c on two data files")
    p.add_argument("--x", required=True, metavar="FILE")
    p.add_argument("--y", required=True, metavar="FILE")
    _add_prior_args(p)
    p.add_argument("--format", choices=["text", "json", "csv"], default="text")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="run the location-shift Monte Carlo experiment")
    p.add_argument("--delta-min", type=float, default=-1.5)
    p.add_argument("--delta-max", type=float, default=1.5)
    p.add_argument("--steps", type=int, default=31)
    p.add_argument("--n1", type=int, default=20)
    p.add_argument("--n2", type=int, default=20)
    p.add_argument("--runs", type=int, default=2000)
    p.add_argument("--gamma", type=float, default=0.05)
    p.add_argument("--k0", type=float)
    p.add_argument("--k1", type=float)
    p.add_argument("--tests", default="IDP,MWW,BBDP,FiftyFifty")
    p.add_argument("--generator", default="gaussian-shift",
                   help="gaussian-shift | student-t:DF | gaussian-scale:SIGMA")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--s", type=float)
    group.add_argument("--rho", type=float)
    p.add_argument("--mc-samples", type=int, default=4000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--approx", choices=[a.value for a in Approx], default=Approx.MONTE_CARLO.value)
    p.add_argument("--mww-continuity", action="store_true", help="continuity-corrected MWW z statistic")
    p.add_argument("--shards", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("posterior", help="dump paired (g_low, g_up) posterior draws")
    p.add_argument("--x", required=True, metavar="FILE")
    p.add_argument("--y", required=True, metavar="FILE")
    _add_prior_args(p, with_decision=False)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(func=cmd_posterior, gamma=0.05, c=0.5, approx=Approx.MONTE_CARLO.value)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # usage errors, --help and --version; report as a return code
        return exc.code if isinstance(exc.code, int) else EXIT_PARAM
    try:
        return args.func(args)
    except InputError as exc:
        print(f"idprank: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ParamError as exc:
        print(f"idprank: invalid parameter: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
