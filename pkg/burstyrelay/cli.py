#!/usr/bin/env python3
"""
Command-line surface: ``formulas``, ``sweep``, ``check`` and ``simulate``.

Exit codes: 0 success, 1 usage or configuration error, 2 check disagreement,
3 any other runtime failure.
"""
import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass

import pandas as pd
import sympy as sy
from beartype import beartype
from loguru import logger

from burstyrelay.aliases import Any, Dict, List, Tuple, Optional, Sequence
from burstyrelay.core import AntennaConfig, Number, classify, to_rational, validate_config
from burstyrelay.dof import (
    DEFAULT_GRID_SIZE,
    achievable_cap,
    achievable_region,
    interference_free_check,
    necessary_condition,
    no_relay_dof,
    numeric_necessity_oracle,
    outer_bounds,
    outer_region,
)
from burstyrelay.errors import ConfigError, NoSchemeError
from burstyrelay.field import DEFAULT_PRIME
from burstyrelay.schemes import scheme_for
from burstyrelay.sim import (
    DEFAULT_DRAIN,
    DEFAULT_SLOTS,
    SimConfig,
    estimate_dof,
    make_sim,
    read_trace,
    run,
    run_forced,
    write_slot_log,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DISAGREEMENT = 2
EXIT_RUNTIME = 3

OUTPUT_DIR_ENV = "BURSTYRELAY_OUTPUT_DIR"

CSV_COLUMNS = [
    "p",
    "M",
    "N",
    "L",
    "ind_bound",
    "sum_bound",
    "achievable_per_user",
    "empirical_dof_user1",
    "empirical_dof_user2",
    "stderr",
]


@dataclass(frozen=True)
class RunSpec:
    """A simulation or sweep description, usually loaded from JSON."""

    M: int
    N: int
    L: int
    p: sy.Rational = sy.Rational(1, 5)
    epsilon: sy.Rational = sy.Rational(1, 100)
    slots: int = DEFAULT_SLOTS
    drain: int = DEFAULT_DRAIN
    prime: int = DEFAULT_PRIME
    seed: int = 0
    repetitions: int = 1
    workers: int = 1
    throttle: bool = True
    opportunistic: bool = False
    simulate: bool = False
    p_min: sy.Rational = sy.Integer(0)
    p_max: sy.Rational = sy.Integer(1)
    p_steps: int = 11
    L_list: Optional[Tuple[int, ...]] = None
    minimal_M: bool = False

    def __post_init__(self) -> None:
        validate_config(self.config)
        for name in ("p", "epsilon", "p_min", "p_max"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ConfigError(f"{name} out of range: {value}")
        if self.p_min > self.p_max:
            raise ConfigError(f"p_min {self.p_min} exceeds p_max {self.p_max}")
        if self.p_steps < 1:
            raise ConfigError(f"p_steps must be at least 1, got {self.p_steps}")
        if self.repetitions < 1 or self.workers < 1:
            raise ConfigError("repetitions and workers must be positive")
        if self.L_list is not None and any(L < 0 for L in self.L_list):
            raise ConfigError("L_list entries must be non-negative")

    @property
    def config(self) -> AntennaConfig:
        return AntennaConfig(self.M, self.N, self.L)

    @classmethod
    @beartype
    def from_dict(cls, doc: Dict[str, Any]) -> "RunSpec":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(doc) - names)
        if unknown:
            raise ConfigError(f"unknown run spec keys: {', '.join(unknown)}")
        missing = [key for key in ("M", "N", "L") if key not in doc]
        if missing:
            raise ConfigError(f"run spec is missing {', '.join(missing)}")
        values: Dict[str, Any] = {}
        for key, value in doc.items():
            if key in ("p", "epsilon", "p_min", "p_max"):
                if isinstance(value, bool) or not isinstance(value, (int, float, str)):
                    raise ConfigError(f"{key} must be a number, got {value!r}")
                values[key] = to_rational(value)
            elif key == "L_list":
                values[key] = tuple(int(L) for L in value) if value is not None else None
            elif key in ("throttle", "opportunistic", "simulate", "minimal_M"):
                if not isinstance(value, bool):
                    raise ConfigError(f"{key} must be a boolean")
                values[key] = value
            else:
                if not isinstance(value, int) or isinstance(value, bool):
                    raise ConfigError(f"{key} must be an integer, got {value!r}")
                values[key] = value
        return cls(**values)

    @classmethod
    @beartype
    def from_json(cls, text: str) -> "RunSpec":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"run spec is not valid JSON: {err}") from err
        if not isinstance(doc, dict):
            raise ConfigError("run spec must be a JSON object")
        return cls.from_dict(doc)

    def p_grid(self) -> List[sy.Rational]:
        if self.p_steps == 1:
            return [self.p_min]
        step = (self.p_max - self.p_min) / (self.p_steps - 1)
        return [self.p_min + k * step for k in range(self.p_steps)]

    def sim_config(self, p: Optional[sy.Rational] = None, config: Optional[AntennaConfig] = None) -> SimConfig:
        return make_sim(
            config or self.config,
            self.p if p is None else p,
            self.epsilon,
            slots=self.slots,
            drain=self.drain,
            prime=self.prime,
            seed=self.seed,
            throttle=self.throttle,
            opportunistic=self.opportunistic,
        )


PRESETS: Dict[str, Dict[str, Any]] = {
    # With and without the relay on the same shape.
    "fig2": {"M": 4, "N": 1, "L": 2, "L_list": [0, 2], "p_min": "0.05", "p_max": "0.95", "p_steps": 19},
    # Smallest M of the cooperative regime for each relay size.
    "fig3": {
        "M": 4,
        "N": 1,
        "L": 2,
        "L_list": [2, 4, 8],
        "minimal_M": True,
        "p_min": "0.05",
        "p_max": "0.95",
        "p_steps": 19,
    },
}


def _fmt(value: sy.Rational) -> str:
    return f"{value} ({float(value):.6g})"


def output_path(path: str) -> str:
    if os.path.isabs(path):
        return path
    return os.path.join(os.environ.get(OUTPUT_DIR_ENV, "."), path)


@beartype
def cmd_formulas(config: AntennaConfig, p: Number) -> List[str]:
    p = to_rational(p)
    bounds = outer_bounds(config, p)
    regime = classify(config)
    lines = [
        f"config            {config}  p={p}",
        f"regime            {regime.value}",
        f"individual cap    {_fmt(bounds.individual_cap)}",
        f"sum cap           {_fmt(bounds.sum_cap)}",
        f"no-relay cap      {_fmt(no_relay_dof(config, p))}",
        f"outer region      {outer_region(config, p)}",
    ]
    try:
        lines.append(f"achievable        {_fmt(achievable_cap(config, p))}")
        lines.append(f"achievable region {achievable_region(config, p)}")
        lines.append(f"interference-free {interference_free_check(config, p)}")
    except NoSchemeError:
        lines.append("achievable        NA")
        lines.append("interference-free NA")
    return lines


def _sweep_point(spec: RunSpec, config: AntennaConfig, p: sy.Rational) -> Dict[str, Any]:
    bounds = outer_bounds(config, p)
    row: Dict[str, Any] = {
        "p": float(p),
        "M": config.M,
        "N": config.N,
        "L": config.L,
        "ind_bound": float(bounds.individual_cap),
        "sum_bound": float(bounds.sum_cap),
        "achievable_per_user": "NA",
        "empirical_dof_user1": "NA",
        "empirical_dof_user2": "NA",
        "stderr": "NA",
    }
    try:
        row["achievable_per_user"] = float(achievable_cap(config, p))
    except NoSchemeError:
        logger.warning(f"No scheme for {config}; marking p={p} row NA")
        return row
    if spec.simulate:
        try:
            estimate = estimate_dof(spec.sim_config(p, config), spec.repetitions, spec.workers)
        except ConfigError as err:
            logger.warning(f"Cannot simulate {config} at p={p}: {err}; empirical columns NA")
            return row
        row["empirical_dof_user1"] = estimate.mean[1]
        row["empirical_dof_user2"] = estimate.mean[2]
        row["stderr"] = max(estimate.stderr.values())
    return row


@beartype
def cmd_sweep(spec: RunSpec) -> pd.DataFrame:
    relay_sizes = spec.L_list if spec.L_list is not None else (spec.L,)
    rows = []
    for L in relay_sizes:
        M = 2 * spec.N + L if spec.minimal_M else spec.M
        config = AntennaConfig(M, spec.N, L)
        logger.info(f"Sweeping {config} over {spec.p_steps} values of p")
        for p in spec.p_grid():
            rows.append(_sweep_point(spec, config, p))
    frame = pd.DataFrame(rows, columns=CSV_COLUMNS)
    return frame.sort_values(["L", "p"], kind="stable").reset_index(drop=True)


@beartype
def cmd_check(M_max: int, N_max: int, L_max: int, grid: int = DEFAULT_GRID_SIZE) -> Tuple[int, List[AntennaConfig]]:
    """Scanned count and every configuration where the predicate and the oracle disagree."""
    if grid < 2:
        raise ConfigError(f"grid size must be at least 2, got {grid}")
    if M_max < 1 or N_max < 1 or L_max < 0:
        raise ConfigError("ranges need M_max, N_max >= 1 and L_max >= 0")
    scanned = 0
    disagreements: List[AntennaConfig] = []
    for M in range(1, M_max + 1):
        for N in range(1, N_max + 1):
            for L in range(0, L_max + 1):
                config = AntennaConfig(M, N, L)
                scanned += 1
                if necessary_condition(config) != numeric_necessity_oracle(config, grid):
                    disagreements.append(config)
    logger.info(f"Checked {scanned} configurations on a {grid}-point grid")
    return scanned, disagreements


@beartype
def summarize(metrics: Any) -> List[str]:
    lines = [
        f"empirical dof     user1 {metrics.empirical_dof[1]:.4f}  user2 {metrics.empirical_dof[2]:.4f}  "
        f"sum {metrics.sum_dof:.4f}",
        f"emitted/decoded   user1 {metrics.emitted_fresh[1]}/{metrics.decoded_fresh[1]}  "
        f"user2 {metrics.emitted_fresh[2]}/{metrics.decoded_fresh[2]}",
        f"stability         {metrics.verdict}"
        + (f" (queue {metrics.first_violation[0]}, window {metrics.first_violation[1]})" if metrics.first_violation else ""),
    ]
    for name, peak in sorted(metrics.queue_max.items()):
        lines.append(f"queue max         {name} {peak}")
    return lines


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="burstyrelay", description="Bursty MIMO interference channel with an in-band relay.")
    parser.add_argument("--verbose", action="store_true", help="Log per-slot events at DEBUG level.")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    formulas = commands.add_parser("formulas", help="Evaluate the closed-form DoF expressions.")
    for name in ("M", "N", "L"):
        formulas.add_argument(name, type=int)
    formulas.add_argument("p", type=str)

    def run_flags(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--config", type=str, help="JSON run spec.")
        sub.add_argument("--seed", type=int)
        sub.add_argument("--slots", type=int)
        sub.add_argument("--drain", type=int)
        sub.add_argument("--prime", type=int)
        sub.add_argument("--repetitions", type=int)

    sweep = commands.add_parser("sweep", help="Sweep p and write the results as CSV.")
    run_flags(sweep)
    sweep.add_argument("--preset", choices=sorted(PRESETS))
    sweep.add_argument("--simulate", action="store_true", help="Fill the empirical columns.")
    sweep.add_argument("--csv", type=str, help="Output path (default: stdout).")

    check = commands.add_parser("check", help="Compare the closed-form condition with the numeric oracle.")
    check.add_argument("M_max", type=int)
    check.add_argument("N_max", type=int)
    check.add_argument("L_max", type=int)
    check.add_argument("--grid", type=int, default=DEFAULT_GRID_SIZE)

    simulate = commands.add_parser("simulate", help="Run the scheme of a configuration.")
    run_flags(simulate)
    simulate.add_argument("--M", type=int)
    simulate.add_argument("--N", type=int)
    simulate.add_argument("--L", type=int)
    simulate.add_argument("--p", type=str)
    simulate.add_argument("--epsilon", type=str)
    simulate.add_argument("--no-throttle", action="store_true")
    simulate.add_argument("--opportunistic", action="store_true")
    simulate.add_argument("--trace", type=str, help='Forced traffic trace, one "s1 s2" line per slot.')
    simulate.add_argument("--log", type=str, help="Write the slot log as JSON lines.")
    return parser


def _load_spec(args: argparse.Namespace, base: Optional[Dict[str, Any]] = None) -> RunSpec:
    doc: Dict[str, Any] = dict(base or {})
    if args.config:
        with open(args.config, "r", encoding="utf-8") as handle:
            try:
                loaded = json.load(handle)
            except json.JSONDecodeError as err:
                raise ConfigError(f"{args.config} is not valid JSON: {err}") from err
        if not isinstance(loaded, dict):
            raise ConfigError(f"{args.config} must hold a JSON object")
        doc.update(loaded)
    overrides = {
        "seed": args.seed,
        "slots": args.slots,
        "drain": args.drain,
        "prime": args.prime,
        "repetitions": args.repetitions,
        "M": getattr(args, "M", None),
        "N": getattr(args, "N", None),
        "L": getattr(args, "L", None),
        "p": getattr(args, "p", None),
        "epsilon": getattr(args, "epsilon", None),
    }
    doc.update({key: value for key, value in overrides.items() if value is not None})
    if getattr(args, "no_throttle", False):
        doc["throttle"] = False
    if getattr(args, "opportunistic", False):
        doc["opportunistic"] = True
    if getattr(args, "simulate", False):
        doc["simulate"] = True
    return RunSpec.from_dict(doc)


@beartype
def cmd_simulate(
    spec: RunSpec,
    trace_path: Optional[str] = None,
    log_path: Optional[str] = None,
    trace_drain: int = 0,
) -> List[str]:
    """
    Run the scheme of ``spec`` and return the report lines. With a trace, the
    report lists every decode event instead of the summary.
    """
    if trace_path is not None:
        trace = read_trace(trace_path)
        metrics = run_forced(
            spec.config,
            scheme_for(spec.config),
            trace,
            drain=trace_drain,
            prime=spec.prime,
            seed=spec.seed,
        )
        lines = [
            f"slot {event.slot}: {event.node} decodes {event.symbol} ({event.stream_class})"
            for event in metrics.decode_events
        ]
    elif spec.repetitions > 1:
        estimate = estimate_dof(spec.sim_config(), spec.repetitions, spec.workers)
        return [
            f"empirical dof     user1 {estimate.mean[1]:.4f} ± {estimate.stderr[1]:.4f}  "
            f"user2 {estimate.mean[2]:.4f} ± {estimate.stderr[2]:.4f}",
            f"stability         {', '.join(estimate.verdicts)}",
        ]
    else:
        metrics = run(dataclasses.replace(spec.sim_config(), record_log=log_path is not None))
        lines = []
    lines += summarize(metrics)
    if log_path is not None:
        path = output_path(log_path)
        write_slot_log(metrics, path)
        lines.append(f"slot log          {path}")
    return lines


def dispatch(args: argparse.Namespace) -> int:
    if args.command == "formulas":
        for line in cmd_formulas(AntennaConfig(args.M, args.N, args.L), args.p):
            print(line)
        return EXIT_OK
    if args.command == "check":
        scanned, disagreements = cmd_check(args.M_max, args.N_max, args.L_max, args.grid)
        print(f"scanned {scanned} configurations, {len(disagreements)} disagreements")
        for config in disagreements:
            print(f"  disagreement at {config}")
        return EXIT_DISAGREEMENT if disagreements else EXIT_OK
    if args.command == "sweep":
        base = PRESETS[args.preset] if args.preset else None
        if base is None and not args.config:
            raise ConfigError("sweep needs --config or --preset")
        frame = cmd_sweep(_load_spec(args, base))
        if args.csv:
            path = output_path(args.csv)
            frame.to_csv(path, index=False)
            logger.info(f"Wrote {len(frame)} rows to {path}")
        else:
            frame.to_csv(sys.stdout, index=False)
        return EXIT_OK
    assert args.command == "simulate"
    for line in cmd_simulate(_load_spec(args), args.trace, args.log, args.drain or 0):
        print(line)
    return EXIT_OK


@beartype
def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if args.verbose else "INFO")
    try:
        return dispatch(args)
    except (ConfigError, NoSchemeError, OSError) as err:
        logger.error(str(err))
        return EXIT_USAGE
    except Exception as err:  # pylint: disable=broad-except
        logger.exception(f"Runtime failure: {err}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
