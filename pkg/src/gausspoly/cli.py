"""Command line entry point ``gausspoly``.

Exit codes: 0 success, 1 report I/O failure, 2 bad input, 3 a computed
object failed its numerical contract.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .ensemble import Ensemble, EnsembleConfig, sample_ensemble
from .errors import (
    ConfigurationError,
    NumericalContractError,
    PreconditionError,
    ReportIOError,
)
from .experiments import DEFAULTS, EXPERIMENTS, ExperimentConfig, report_summarize, run
from .l1norm import minkowski_norm


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_set(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigurationError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = _parse_value(value.strip())
    return out


def _write_text(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc}") from exc


def _load_ensemble(args) -> Ensemble:
    if args.ensemble:
        try:
            with open(args.ensemble) as fh:
                return Ensemble.from_json(fh.read())
        except OSError as exc:
            raise ReportIOError(f"cannot read {args.ensemble}: {exc}") from exc
    if args.n is None or args.N is None:
        raise ConfigurationError("give --ensemble or both --n and --N")
    return sample_ensemble(EnsembleConfig(args.n, args.N, args.seed))


def cmd_sample(args) -> None:
    E = sample_ensemble(EnsembleConfig(args.n, args.N, args.seed))
    _write_text(E.to_json() + "\n", args.out)


def cmd_norm(args) -> None:
    E = _load_ensemble(args)
    if args.vertex is not None:
        if not 0 <= args.vertex < E.N:
            raise ConfigurationError(f"--vertex must lie in [0, {E.N})")
        y = E.At[args.vertex]
    elif args.y is not None:
        y = np.array([float(v) for v in args.y.split(",")])
    else:
        raise ConfigurationError("give --y or --vertex")
    cert = minkowski_norm(E, y)
    body = {
        "value": cert.value,
        "beta": cert.beta.beta.tolist(),
        "dual": cert.dual.tolist(),
        "dual_gap": cert.dual_gap,
        "residual": cert.residual,
    }
    _write_text(json.dumps(body, indent=1) + "\n", args.out)


def cmd_run(args) -> None:
    base: dict = {"experiment": args.experiment, "ensemble": {"n": 50, "N": 100, "seed": 0}}
    if args.config:
        try:
            with open(args.config) as fh:
                base = json.load(fh)
        except OSError as exc:
            raise ReportIOError(f"cannot read {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{args.config} is not valid JSON: {exc}") from exc
        if base.get("experiment", args.experiment) != args.experiment:
            raise ConfigurationError(
                f"config names experiment {base['experiment']!r}, command line {args.experiment!r}"
            )
        base["experiment"] = args.experiment
    ens = dict(base.get("ensemble", {}))
    for key in ("n", "N", "seed"):
        if getattr(args, key) is not None:
            ens[key] = getattr(args, key)
    base["ensemble"] = ens
    if args.trials is not None:
        base["trials"] = args.trials
    if args.out is not None:
        base["output"] = args.out
    base["constants"] = {**base.get("constants", {}), **_parse_set(args.set)}
    base["workers"] = args.workers
    config = ExperimentConfig.from_dict(base)
    report = run(config)
    if config.output is None:
        sys.stdout.write(json.dumps(report, indent=1, sort_keys=True) + "\n")


def cmd_defaults(args) -> None:
    names = [args.experiment] if args.experiment else list(EXPERIMENTS)
    for name in names:
        if name not in DEFAULTS:
            raise ConfigurationError(f"unknown experiment {name!r}")
    body = {name: DEFAULTS[name] for name in names}
    _write_text(json.dumps(body, indent=1) + "\n", None)


def cmd_summarize(args) -> None:
    _write_text(report_summarize(args.reports), args.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gausspoly", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="sample an ensemble and print it as JSON")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("norm", help="evaluate the polytope norm of one vector")
    s.add_argument("--ensemble", help="ensemble JSON written by 'sample'")
    s.add_argument("--n", type=int)
    s.add_argument("--N", type=int)
    s.add_argument("--seed", type=int, default=0)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--y", help="comma separated coordinates")
    g.add_argument("--vertex", type=int, help="use generator X_j (0-based)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_norm)

    s = sub.add_parser("run", help="run a seeded batch experiment")
    s.add_argument("experiment", choices=EXPERIMENTS)
    s.add_argument("--config", help="JSON experiment config")
    s.add_argument("--n", type=int)
    s.add_argument("--N", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--trials", type=int)
    s.add_argument("--out", help="report path (default: stdout)")
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a constant")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("defaults", help="print default constants")
    s.add_argument("experiment", nargs="?")
    s.set_defaults(func=cmd_defaults)

    s = sub.add_parser("summarize", help="merge reports into a CSV table")
    s.add_argument("reports", nargs="+")
    s.add_argument("--out")
    s.set_defaults(func=cmd_summarize)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalContractError as exc:
        print(f"numerical contract violated: {exc}", file=sys.stderr)
        return 3
    except ReportIOError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
