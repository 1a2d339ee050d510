"""Command-line front end.

    gwtw run SPEC.json       one trial -> trace.csv, outcome.csv
    gwtw sweep SPEC.json     sweep block -> sweep.csv (+ order_stats.csv)
    gwtw validate            oracle / property self-checks

Exit codes: 0 ok, 2 config error, 3 I/O error, 4 validation failure.
"""
import argparse
import json
import sys
from dataclasses import dataclass
from typing import Optional

from . import report, validate
from ._jit import BACKEND
from .config import DEFAULT_HORIZON, ConfigError, SimConfig
from .metrics import SWEEP_AXES, apply_axis, mixed_spread_experiment, run_trial, sweep

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_VALIDATION = 0, 2, 3, 4

_CONFIG_KEYS = {"n_u", "n_s", "n_c", "alpha", "lambda", "kappa", "sigma", "f", "tau",
                "horizon", "seed", "sample_interval"}
_TOP_KEYS = _CONFIG_KEYS | {"model", "trials", "output", "measure_at", "sweep"}
_SWEEP_KEYS = {"axis", "values", "trials"}
_REQUIRED = ("n_u", "n_s", "n_c", "kappa")


@dataclass
class SweepSpec:
    axis: str
    values: list
    trials: int


@dataclass
class ExperimentSpec:
    model: str
    config: SimConfig
    trials: int = 20
    sweep: Optional[SweepSpec] = None
    output: str = "gwtw-out"
    measure_at: Optional[float] = None


def _check_int(name, value, lo=1):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(name, f"expected an integer, got {value!r}")
    if value < lo:
        raise ConfigError(name, f"must be >= {lo}, got {value}")


def _check_number(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(name, f"expected a number, got {value!r}")


def parse_spec(text):
    """Parse and validate a JSON experiment document, applying defaults."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<document>", f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("<document>", "top level must be a JSON object")
    for key in doc:
        if key not in _TOP_KEYS:
            raise ConfigError(key, "unknown key")

    model = doc.get("model", "web")
    if model not in ("web", "video"):
        raise ConfigError("model", f"expected 'web' or 'video', got {model!r}")
    if "sigma" in doc and "f" in doc:
        raise ConfigError("f", "give either sigma or f, not both")

    # validate the fields that are present before complaining about absent ones
    kwargs = {}
    for key in sorted(_CONFIG_KEYS & doc.keys()):
        value = doc[key]
        if key in ("alpha", "lambda", "horizon", "sample_interval", "f"):
            _check_number(key, value)
        else:
            _check_int(key, value, lo=0 if key == "seed" else 1)
        kwargs["lam" if key == "lambda" else key] = value
    for key in _REQUIRED:
        if key not in doc:
            raise ConfigError(key, "required key is missing")
    if model == "web" and "tau" not in doc:
        raise ConfigError("tau", "required key is missing for the web model")
    if "sigma" not in doc and "f" not in doc:
        raise ConfigError("sigma", "give sigma (uniform spread) or f (mixed spread)")
    kwargs.setdefault("horizon", DEFAULT_HORIZON[model])
    if model == "video":
        kwargs.setdefault("tau", 1)
    config = SimConfig(**kwargs)

    trials = doc.get("trials", 20)
    _check_int("trials", trials)
    output = doc.get("output", "gwtw-out")
    if not isinstance(output, str) or not output:
        raise ConfigError("output", "expected a non-empty path string")
    measure_at = doc.get("measure_at")
    if measure_at is not None:
        _check_number("measure_at", measure_at)
        if measure_at <= 0:
            raise ConfigError("measure_at", f"must be > 0, got {measure_at}")

    sweep_spec = None
    if "sweep" in doc:
        block = doc["sweep"]
        if not isinstance(block, dict):
            raise ConfigError("sweep", "expected an object")
        for key in block:
            if key not in _SWEEP_KEYS:
                raise ConfigError(f"sweep.{key}", "unknown key")
        axis = block.get("axis")
        if axis not in SWEEP_AXES:
            raise ConfigError("sweep.axis", f"expected one of {', '.join(SWEEP_AXES)}, got {axis!r}")
        values = block.get("values")
        if not isinstance(values, list) or not values:
            raise ConfigError("sweep.values", "expected a non-empty list")
        for v in values:
            if axis in ("tau", "sigma"):
                _check_int("sweep.values", v)
            else:
                _check_number("sweep.values", v)
        sweep_trials = block.get("trials", trials)
        _check_int("sweep.trials", sweep_trials)
        sweep_spec = SweepSpec(axis, values, sweep_trials)
        # every point must be a valid config before anything runs
        for v in values:
            try:
                apply_axis(config, axis, v)
            except ConfigError as exc:
                raise ConfigError("sweep.values", f"value {v!r}: {exc}") from None
    return ExperimentSpec(model, config, trials, sweep_spec, output, measure_at)


def load_spec(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from None
    return parse_spec(text)


def _override(spec, args):
    if args.seed is not None:
        spec.config = spec.config.replace(seed=args.seed)
    if args.trials is not None:
        _check_int("--trials", args.trials)
        spec.trials = args.trials
        if spec.sweep is not None:
            spec.sweep.trials = args.trials
    if args.out is not None:
        spec.output = args.out
    return spec


def cmd_run(spec, jobs=1):
    if spec.sweep is not None:
        raise ConfigError("sweep", "`run` takes a spec without a sweep block; use `gwtw sweep`")
    outcome = run_trial(spec.config, 0, spec.model)
    return report.write_files(spec.output, {
        "trace.csv": report.trace_csv(outcome.trace),
        "outcome.csv": report.outcome_csv([outcome]),
    })


def cmd_sweep(spec, jobs=1):
    if spec.sweep is None:
        raise ConfigError("sweep", "`sweep` needs a sweep block")
    s = spec.sweep
    result = sweep(spec.config, s.axis, s.values, s.trials, spec.model, jobs)
    files = {"sweep.csv": report.sweep_csv(result)}
    if spec.measure_at is not None and spec.model == "web":
        rows = []
        for v in s.values:
            per_trial = mixed_spread_experiment(apply_axis(spec.config, s.axis, v), spec.measure_at, s.trials)
            rows.append((v, s.trials, per_trial.mean(axis=0)))
        files["order_stats.csv"] = report.order_stats_csv(rows)
    return report.write_files(spec.output, files)


def cmd_validate(seed=0, out=None):
    out = out or sys.stdout
    print(f"kernel backend: {BACKEND}", file=out)
    checks = validate.run_all(seed)
    for c in checks:
        print(c.line(), file=out)
    return all(c.passed for c in checks)


def build_parser():
    parser = argparse.ArgumentParser(prog="gwtw", description="Go-With-The-Winner server selection simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "run one trial and write trace.csv/outcome.csv"),
                        ("sweep", "run a parameter sweep and write sweep.csv")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("spec", help="JSON experiment spec")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for trials")
    p = sub.add_parser("validate", help="run oracle and property self-checks")
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            ok = cmd_validate(args.seed)
            return EXIT_OK if ok else EXIT_VALIDATION
        if args.jobs < 1:
            raise ConfigError("--jobs", f"must be >= 1, got {args.jobs}")
        spec = _override(load_spec(args.spec), args)
        fn = cmd_run if args.command == "run" else cmd_sweep
        for path in fn(spec, args.jobs):
            print(path)
        return EXIT_OK
    except ConfigError as exc:
        print(f"gwtw: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"gwtw: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
