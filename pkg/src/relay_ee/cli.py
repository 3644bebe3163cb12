"""Command line: ``relay-ee generate | run | sweep``.

Configuration comes from an optional JSON file (SystemConfig fields, plus
sweep fields for ``sweep``) with flags taking precedence. The seed falls
back to ``$RELAY_EE_SEED`` when ``--seed`` is absent.

Exit codes: 0 success, 1 invalid input, 2 infeasible power budget,
3 oracle size guard rail.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

from relay_ee.channel import ConfigError, SystemConfig, channel_to_dict, draw_channels, load_channels
from relay_ee.pipeline import GuardRailError, Scheme, run_scheme
from relay_ee.power import InfeasibleBudget
from relay_ee.sweep import AXES, INTEGER_AXES, SweepSpec, fmt, linear_grid, monte_carlo, write_csv

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_GUARD_RAIL = 0, 1, 2, 3
SEED_ENV = "RELAY_EE_SEED"
SWEEP_KEYS = {"axis", "from", "to", "steps", "trials", "schemes", "jobs"}
RUN_COLUMNS = ("seed", "scheme", "ee", "se", "delta", "p_trans", "p_total", "iterations", "converged", "budget_binding")

# flag dest -> SystemConfig field
OVERRIDES = {
    "num_subcarriers": int,
    "num_users": int,
    "num_relays": int,
    "avg_cnr_db": float,
    "p_max_w": float,
    "p_static_w": float,
    "xi": float,
    "eta": float,
    "bandwidth_hz": float,
    "noise_psd": float,
}


def _read_json(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return doc


def _seed_from(args, fallback):
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env, 0)
        except ValueError:
            raise ConfigError(f"${SEED_ENV}={env!r} is not an integer") from None
    return fallback


def resolve(args, base: SystemConfig | None = None) -> tuple[SystemConfig, dict]:
    """Merge defaults < JSON file < flags. Returns (config, sweep fields)."""
    fields = (base or SystemConfig()).to_dict()
    sweep = {}
    if args.config:
        doc = _read_json(args.config)
        sweep = {k: doc.pop(k) for k in list(doc) if k in SWEEP_KEYS}
        fields.update(doc)
        if "num_users" in doc and "alpha" not in doc:
            fields["alpha"] = [1.0] * int(doc["num_users"])
    for name in OVERRIDES:
        value = getattr(args, name, None)
        if value is not None:
            fields[name] = value
    if args.num_users is not None and args.alpha is None:
        if len(fields["alpha"]) != args.num_users:
            fields["alpha"] = [1.0] * args.num_users
    if args.alpha is not None:
        fields["alpha"] = args.alpha
    fields["seed"] = _seed_from(args, fields["seed"])
    return SystemConfig.from_dict(fields), sweep


def _alpha(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(":", ",").split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad alpha {text!r}; use e.g. 1:1:2") from None


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits unsigned")
    return v


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="JSON file with config fields")
    p.add_argument("--seed", type=_u64, metavar="U64", help=f"channel seed (default ${SEED_ENV}, then file)")
    p.add_argument("--print-config", action="store_true", help="print the resolved config as JSON and exit")
    g = p.add_argument_group("config overrides")
    g.add_argument("--N", dest="num_subcarriers", type=int)
    g.add_argument("--K", dest="num_users", type=int)
    g.add_argument("--L", dest="num_relays", type=int)
    g.add_argument("--cnr-db", dest="avg_cnr_db", type=float)
    g.add_argument("--p-max", dest="p_max_w", type=float)
    g.add_argument("--p-static", dest="p_static_w", type=float)
    g.add_argument("--xi", type=float)
    g.add_argument("--eta", type=float)
    g.add_argument("--bandwidth", dest="bandwidth_hz", type=float)
    g.add_argument("--noise-psd", type=float)
    g.add_argument("--alpha", type=_alpha, help="rate weights, e.g. 1:1:2")


class _Parser(argparse.ArgumentParser):
    # usage errors are validation errors; exit code 2 means infeasible here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relay-ee", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="draw a channel realization and write it as JSON")
    _add_config_flags(p)
    p.add_argument("--out", metavar="PATH", help="output file (default stdout)")

    p = sub.add_parser("run", help="run one scheme on one channel realization")
    _add_config_flags(p)
    p.add_argument("--channels", metavar="PATH", help="channel JSON from 'generate' (default: draw from seed)")
    p.add_argument("--scheme", default="proposed", choices=[s.value for s in Scheme])
    p.add_argument("--out", metavar="PATH", help="append a CSV row to this file")

    p = sub.add_parser("sweep", help="Monte-Carlo sweep of one parameter, CSV output")
    _add_config_flags(p)
    p.add_argument("--axis", choices=sorted(AXES))
    p.add_argument("--from", dest="start", type=float)
    p.add_argument("--to", dest="stop", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--scheme", help="comma-separated schemes (default proposed)")
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", metavar="PATH", help="CSV file (default stdout)")
    return parser


def _print_config(config: SystemConfig, extra: dict | None = None) -> None:
    doc = config.to_dict()
    if extra:
        doc.update(extra)
    print(json.dumps(doc, indent=1))


def cmd_generate(args) -> int:
    config, _ = resolve(args)
    if args.print_config:
        _print_config(config)
        return EXIT_OK
    text = json.dumps(channel_to_dict(config, draw_channels(config)), indent=1) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_run(args) -> int:
    ch = None
    base = None
    if args.channels:
        base, ch = load_channels(args.channels)
    config, _ = resolve(args, base)
    if args.print_config:
        _print_config(config)
        return EXIT_OK
    if ch is None:
        ch = draw_channels(config)
    t0 = time.perf_counter()
    result = run_scheme(args.scheme, config, ch)
    elapsed = time.perf_counter() - t0
    sol = result.solution
    alpha = config.alpha
    print(f"scheme        {result.scheme.value}")
    print(f"seed          {config.seed}")
    print(f"EE            {fmt(sol.ee)} bit/Hz/J")
    print(f"SE            {fmt(sol.sum_rate)} bit/s/Hz")
    print(f"delta         {fmt(sol.delta)}")
    print(f"P_trans       {fmt(sol.p_trans)} W")
    print(f"P_total       {fmt(sol.p_total)} W (budget {'binding' if sol.budget_binding else 'slack'})")
    print(f"kappa         {result.iterations} ({result.termination})")
    for k, r in enumerate(sol.rates):
        print(f"R_{k + 1:<3d}         {fmt(float(r))}  R/alpha={fmt(float(r) / alpha[k])}")
    print(f"elapsed       {elapsed:.3f} s")
    if args.out:
        _append_run_row(Path(args.out), config, result)
    return EXIT_OK


def _append_run_row(path: Path, config, result) -> None:
    sol = result.solution
    header = list(RUN_COLUMNS) + [f"r_user_{k + 1}" for k in range(config.num_users)]
    row = [
        str(config.seed),
        result.scheme.value,
        fmt(sol.ee),
        fmt(sol.sum_rate),
        fmt(sol.delta),
        fmt(sol.p_trans),
        fmt(sol.p_total),
        str(result.iterations),
        str(result.converged).lower(),
        str(sol.budget_binding).lower(),
    ] + [fmt(float(r)) for r in sol.rates]
    new = not path.exists() or path.stat().st_size == 0
    with path.open("a", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(header)
        w.writerow(row)


def cmd_sweep(args) -> int:
    config, sweep = resolve(args)
    axis = args.axis or sweep.get("axis")
    start = args.start if args.start is not None else sweep.get("from")
    stop = args.stop if args.stop is not None else sweep.get("to")
    steps = args.steps if args.steps is not None else sweep.get("steps", 1)
    trials = args.trials if args.trials is not None else sweep.get("trials", 1)
    jobs = args.jobs if args.jobs is not None else sweep.get("jobs", 1)
    schemes = args.scheme.split(",") if args.scheme else sweep.get("schemes", ["proposed"])
    if isinstance(schemes, str):
        schemes = schemes.split(",")
    if axis is None or start is None:
        raise ConfigError("sweep needs --axis and --from (or the same keys in --config)")
    stop = start if stop is None else stop
    if args.print_config:
        _print_config(config, {"axis": axis, "from": start, "to": stop, "steps": steps, "trials": trials,
                               "schemes": list(schemes), "jobs": jobs})
        return EXIT_OK
    try:
        schemes = tuple(Scheme(s.strip()).value for s in schemes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    grid = linear_grid(float(start), float(stop), int(steps), integer=axis in INTEGER_AXES)
    spec = SweepSpec(axis, grid, int(trials), schemes, config)
    points = monte_carlo(spec, jobs=max(1, int(jobs)))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_csv(points, fh)
    else:
        write_csv(points, sys.stdout)
    skipped = sum(p.trials - p.trials_ok for p in points)
    if skipped:
        print(f"note: {skipped} trial(s) skipped as infeasible", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "run": cmd_run, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except GuardRailError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD_RAIL
    except InfeasibleBudget as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
