"""Command-line entry point: ``franson {qm,scan,verify,timing,config}``.

Structured results go to stdout as JSON, bulk data to CSV files. Exit
status is 0 on success, 1 when a verification check fails and 2 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field, fields, replace

import numpy as np

from franson.analysis import FitFailure, fit_fringe, scan_fringes
from franson.montecarlo import DEFAULT_BATCH_SIZE, RunSpec
from franson.quantum import (
    DEFAULT_LAMBDA_P_UM,
    ExperimentSetting,
    SettingPhases,
    qm_probabilities,
    qm_probabilities_from_state,
    setting_from_arm_imbalance,
)
from franson.suites import SUITES, run_suite
from franson.timing import TimingScales, check_window, time_difference_histogram

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2

_SCALE_KEYS = ("pulse_width_ns", "arm_delay_ns", "coherence_time_ns")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    lambda_p_um: float = DEFAULT_LAMBDA_P_UM
    scales: TimingScales = field(default_factory=TimingScales)
    seed: int = 0
    n_trials: int = 1_000_000
    batch_size: int = DEFAULT_BATCH_SIZE
    window_ns: float = 0.5
    output_path: str | None = None

    def __post_init__(self):
        if self.scales.lambda_p_um != self.lambda_p_um:
            object.__setattr__(self, "scales", replace(self.scales, lambda_p_um=self.lambda_p_um))
        RunSpec(self.seed, self.n_trials, self.batch_size)
        check_window(self.window_ns, self.scales.arm_delay_ns)

    def to_dict(self) -> dict:
        return {
            "lambda_p_um": self.lambda_p_um,
            "scales": {k: getattr(self.scales, k) for k in _SCALE_KEYS},
            "seed": self.seed,
            "n_trials": self.n_trials,
            "batch_size": self.batch_size,
            "window_ns": self.window_ns,
            "output_path": self.output_path,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        values = dict(data)
        lambda_p = float(values.get("lambda_p_um", DEFAULT_LAMBDA_P_UM))
        scales = values.pop("scales", None) or {}
        if not isinstance(scales, dict):
            raise ConfigError("'scales' must be an object")
        bad = set(scales) - set(_SCALE_KEYS)
        if bad:
            raise ConfigError(f"unknown scales keys: {sorted(bad)}")
        try:
            values["scales"] = TimingScales(**{k: float(v) for k, v in scales.items()}, lambda_p_um=lambda_p)
            return cls(**values)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def load_config(path: str | None) -> Config:
    if path is None:
        return Config()
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return Config.from_dict(data)


def _emit(payload: dict) -> None:
    print(json.dumps({"schema_version": SCHEMA_VERSION, **payload}, indent=2))


def _effective_config(args) -> Config:
    cfg = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    for attr, key in (("lambda_p", "lambda_p_um"), ("n_trials", "n_trials"), ("batch_size", "batch_size"),
                      ("window", "window_ns"), ("out", "output_path")):
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = value
    if not overrides:
        return cfg
    return Config.from_dict({**cfg.to_dict(), **overrides})


def cmd_qm(args, cfg: Config) -> int:
    if args.sum_phase is not None:
        if not math.isfinite(args.sum_phase):
            raise ConfigError("--sum-phase must be finite")
        setting = ExperimentSetting.from_total_phase(args.sum_phase, cfg.lambda_p_um)
        total = args.sum_phase
    else:
        setting = setting_from_arm_imbalance(args.delta_l, cfg.lambda_p_um)
        total = setting.total_phase
    closed = qm_probabilities(setting)
    # split the total symmetrically; only the sum is physical
    projected = qm_probabilities_from_state(SettingPhases(total / 2, total / 2))
    _emit({
        "command": "qm",
        "setting": {
            "delta_l_um": setting.delta_l,
            "lambda_p_um": setting.lambda_p,
            "total_phase": total,
            "delta": setting.delta,
        },
        "closed_form": closed.to_dict(),
        "projection": projected.to_dict(),
        "max_abs_diff": closed.max_abs_diff(projected),
    })
    return EXIT_OK


def scan_grid(start: float, stop: float, step: float) -> np.ndarray:
    if not (math.isfinite(start) and math.isfinite(stop) and math.isfinite(step)):
        raise ConfigError("scan bounds must be finite")
    if not step > 0:
        raise ConfigError(f"--step must be positive, got {step}")
    if not start < stop:
        raise ConfigError(f"--from must be less than --to, got {start} >= {stop}")
    if start < 0:
        raise ConfigError("arm imbalance cannot be negative")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


def _open_output(path: str | None, what: str):
    if not path:
        raise ConfigError(f"{what} needs an output file (--out or output_path in config)")
    try:
        return open(path, "w", newline="")
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from exc


def cmd_scan(args, cfg: Config) -> int:
    grid = scan_grid(args.start, args.stop, args.step)
    fh = _open_output(cfg.output_path, "scan")
    with fh:
        spec = RunSpec(cfg.seed, cfg.n_trials, cfg.batch_size)
        scan = scan_fringes(grid, spec, cfg.scales, threads=args.threads)
        fh.write(scan.csv_text())
    fits = {}
    for channel in (1, 2):
        try:
            fits[f"p{channel}"] = fit_fringe(scan, channel).to_dict()
        except (FitFailure, ValueError) as exc:
            fits[f"p{channel}"] = {"error": str(exc)}
    _emit({
        "command": "scan",
        "csv": cfg.output_path,
        "n_points": len(grid),
        "n_per_point": cfg.n_trials,
        "seed": cfg.seed,
        "lambda_p_um": cfg.lambda_p_um,
        "fit": fits,
    })
    return EXIT_OK


def cmd_verify(args, cfg: Config) -> int:
    n = args.n if args.n is not None else cfg.n_trials
    results = run_suite(args.suite, n=n, seed=cfg.seed, scales=cfg.scales, window=cfg.window_ns, threads=args.threads)
    passed = all(c.passed for checks in results.values() for c in checks)
    _emit({
        "command": "verify",
        "suite": args.suite,
        "n": n,
        "seed": cfg.seed,
        "passed": passed,
        "checks": [{"suite": s, **c.to_dict()} for s, checks in results.items() for c in checks],
    })
    return EXIT_OK if passed else EXIT_VERIFY_FAILED


def cmd_timing(args, cfg: Config) -> int:
    fh = _open_output(cfg.output_path, "timing")
    with fh:
        hist = time_difference_histogram(
            cfg.n_trials, cfg.scales, cfg.window_ns, seed=cfg.seed, batch_size=cfg.batch_size, threads=args.threads
        )
        fh.write(hist.csv_text())
    _emit({"command": "timing", "csv": cfg.output_path, "seed": cfg.seed, **hist.summary()})
    return EXIT_OK


def cmd_config(args, cfg: Config) -> int:
    print(cfg.to_json())
    return EXIT_OK


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _threads(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("threads must be >= 0")
    return value


def build_parser() -> argparse.ArgumentParser:
    # Global flags are accepted before or after the subcommand; SUPPRESS keeps
    # an omitted sub-level flag from clobbering the top-level value.
    def add_globals(p, default):
        p.add_argument("--seed", type=_seed, default=default, help="base RNG seed")
        p.add_argument("--config", default=default, help="JSON configuration file (flags win)")
        p.add_argument("--threads", type=_threads, default=default, help="worker threads, 0 = auto; results do not depend on it")

    parser = argparse.ArgumentParser(prog="franson", description=__doc__.splitlines()[0])
    add_globals(parser, None)
    common = argparse.ArgumentParser(add_help=False)
    add_globals(common, argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("qm", parents=[common], help="quantum-mechanical outcome probabilities")
    sel = p.add_mutually_exclusive_group(required=True)
    sel.add_argument("--sum-phase", type=float, help="total phase phi_A + phi_B, radians")
    sel.add_argument("--delta-l", type=float, help="arm imbalance, um")
    p.add_argument("--lambda-p", type=float, help="pump wavelength, um")
    p.set_defaults(func=cmd_qm)

    p = sub.add_parser("scan", parents=[common], help="Monte Carlo fringe scan over arm imbalance")
    p.add_argument("--from", dest="start", type=float, required=True, help="first arm imbalance, um")
    p.add_argument("--to", dest="stop", type=float, required=True, help="last arm imbalance, um")
    p.add_argument("--step", type=float, required=True, help="grid step, um")
    p.add_argument("--n-per-point", dest="n_trials", type=_positive_int, help="trials per grid point")
    p.add_argument("--batch-size", type=_positive_int)
    p.add_argument("--lambda-p", type=float, help="pump wavelength, um")
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("verify", parents=[common], help="run an invariant suite")
    p.add_argument("--suite", required=True, choices=sorted(SUITES) + ["all"])
    p.add_argument("--n", type=_positive_int, help="sample size for statistical checks")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("timing", parents=[common], help="arrival-time difference histogram")
    p.add_argument("--n", dest="n_trials", type=_positive_int, help="number of pairs")
    p.add_argument("--window", type=float, help="coincidence window, ns")
    p.add_argument("--batch-size", type=_positive_int)
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(func=cmd_timing)

    p = sub.add_parser("config", parents=[common], help="print the effective configuration as JSON")
    p.set_defaults(func=cmd_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.threads = args.threads if args.threads is not None else 1
    try:
        cfg = _effective_config(args)
        return args.func(args, cfg)
    except (ConfigError, ValueError) as exc:
        print(f"franson {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
