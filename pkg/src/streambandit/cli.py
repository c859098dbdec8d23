"""Command-line entry point: ``streambandit {run,sweep,verify}``.

Flags mirror a flat ``key=value`` config file given with ``--config``; flags
win over the file. Exit status: 0 pass, 1 failed verification, 2 bad
configuration.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import reports_to_json
from .env import ConfigError
from .experiment import ExperimentSpec, run, sweep
from .simulate import BACKEND
from .verify import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(float(tok)) for tok in str(text).split(",") if tok.strip())


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in str(text).split(",") if tok.strip())


def _flag(text) -> bool:
    if isinstance(text, bool):
        return text
    return str(text).strip().lower() in ("1", "true", "yes", "on")


# key -> (converter, ExperimentSpec field)
OPTIONS = {
    "policy": (str, "policy"),
    "n": (int, "n"),
    "m": (_ints, "m"),
    "T": (_ints, "T"),
    "alpha": (float, "alpha"),
    "delta": (float, "delta"),
    "means": (_floats, "means"),
    "family": (str, "family"),
    "k": (int, "k"),
    "best_pos": (int, "best_pos"),
    "eps": (float, "eps"),
    "gap_range": (_floats, "gap_range"),
    "best_mean": (float, "best_mean"),
    "instance_seed": (int, "instance_seed"),
    "perm_seed": (int, "perm_seed"),
    "trials": (int, "trials"),
    "seed": (int, "seed"),
    "out": (str, "out"),
    "jobs": (int, "jobs"),
    "trace": (_flag, "trace"),
    "backend": (str, "backend"),
}


def read_config(path: str) -> dict:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in OPTIONS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def build_spec(args: argparse.Namespace) -> ExperimentSpec:
    merged = read_config(args.config) if args.config else {}
    for key in OPTIONS:
        v = getattr(args, key, None)
        if v is not None and v is not False:
            merged[key] = v
    kwargs = {}
    for key, value in merged.items():
        conv, field_name = OPTIONS[key]
        try:
            kwargs[field_name] = conv(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: cannot parse {value!r}") from None
    for required in ("m", "T"):
        if required not in kwargs:
            raise ConfigError(f"{required}: required")
    if "gap_range" in kwargs and len(kwargs["gap_range"]) != 2:
        raise ConfigError("gap_range: expected LOW,HIGH")
    return ExperimentSpec(**kwargs)


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value file; flags override it")
    p.add_argument("--policy", help="auto, large, small or plain-ucb (default auto)")
    p.add_argument("--n", help="number of arms (implied by --means)")
    p.add_argument("--m", help="memory size, or comma list for sweeps")
    p.add_argument("--T", help="horizon, or comma list for sweeps")
    p.add_argument("--alpha", help="trade-off exponent, >= 1 (default 1)")
    p.add_argument("--delta", help="UCB confidence parameter (default 1/T^2)")
    p.add_argument("--means", help="explicit comma-separated arm means")
    p.add_argument("--family", help="hard family: I, Iprime or I0")
    p.add_argument("--k", help="head length of the hard family")
    p.add_argument("--best-pos", dest="best_pos", help="best-arm position i in the head")
    p.add_argument("--eps", help="override the derived family epsilon")
    p.add_argument("--gap-range", dest="gap_range", help="LOW,HIGH uniform gap range")
    p.add_argument("--best-mean", dest="best_mean", help="best mean for --gap-range (default 0.9)")
    p.add_argument("--instance-seed", dest="instance_seed", help="seed for drawing the gaps")
    p.add_argument("--perm-seed", dest="perm_seed", help="shuffle the stream order with this seed")
    p.add_argument("--trials", help="Monte Carlo trials per point (default 1)")
    p.add_argument("--seed", help="master seed (default 0)")
    p.add_argument("--out", help="CSV output path (stdout if omitted)")
    p.add_argument("--jobs", help="worker processes (default 1)")
    p.add_argument("--trace", action="store_true", default=None, help="write per-round event log")
    p.add_argument("--backend", choices=("compiled", "python"), help=f"trial backend (default {BACKEND})")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="streambandit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    _add_experiment_flags(sub.add_parser("run", help="run trials at one (m, T) point"))
    _add_experiment_flags(sub.add_parser("sweep", help="run a T and/or m grid and fit log-log slopes"))
    v = sub.add_parser("verify", help="run a bound-verification suite")
    v.add_argument("suite", choices=SUITES)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", help="JSON report path (stdout if omitted)")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    if args.command == "verify":
        reports = run_suite(args.suite, seed=args.seed)
        text = reports_to_json(reports) + "\n"
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        failed = [r.name for r in reports if not r.passed]
        for name in failed:
            print(f"FAIL: {name}", file=sys.stderr)
        return EXIT_FAIL if failed else EXIT_OK

    try:
        spec = build_spec(args)
        table = run(spec) if args.command == "run" else sweep(spec)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if spec.out is None:
        sys.stdout.write(table.to_csv())
    for fit in table.fits:
        if "slope" in fit:
            print(json.dumps({k: fit[k] for k in ("variable", "fixed", "metric", "slope",
                                                   "ratio_first_to_last")}), file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
