"""Command-line front end: ``sweep``, ``plot``, ``verify`` and ``point``.

Scenario settings come from a flat ``key = value`` file (``#`` starts a
comment) and/or flags; flags win.  Exit codes: 0 success, 1 failed
verification, 2 configuration or input error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, DomainError, NumericError
from .mathcore import OptimizerSpec, QuadratureSpec
from .sweep import (
    Axis,
    CsvParseError,
    DbConvention,
    Estimator,
    PlotStyle,
    ScenarioPoint,
    SweepConfig,
    emit_plot_script,
    evaluate_point,
    correlation_sweep,
    turbulence_sweep,
    point_seed,
    run_sweep,
)
from .verify import SUITES, run_suite

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("fsosecrecy")

_FLOAT_KEYS = ("gamma_b_db", "gamma_e_db", "rho", "sigma_tb2", "sigma_te2", "noise_sigma",
               "start", "stop", "rel_tol", "abs_tol", "truncation_quantile")
_INT_KEYS = ("steps", "seed", "samples", "exact_samples", "workers")
_STR_KEYS = ("axis", "estimators", "series", "db_convention", "out", "preset")
KNOWN_KEYS = frozenset(_FLOAT_KEYS + _INT_KEYS + _STR_KEYS)
_POINT_KEYS = ("gamma_b_db", "gamma_e_db", "rho", "sigma_tb2", "sigma_te2", "noise_sigma")


def read_config_file(path) -> dict:
    """Parse a flat ``key = value`` file into a dict of raw strings."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
        out[key] = value
    return out


def _convert(settings: dict) -> dict:
    out = {}
    for key, value in settings.items():
        if value is None:
            continue
        try:
            if key in _FLOAT_KEYS:
                out[key] = float(value)
            elif key in _INT_KEYS:
                out[key] = int(value)
            else:
                out[key] = str(value)
        except ValueError:
            raise ConfigError(f"bad value for {key}: {value!r}") from None
    return out


def merge_settings(args: argparse.Namespace) -> dict:
    """Config file values overridden by any flag given on the command line."""
    settings = read_config_file(args.config) if getattr(args, "config", None) else {}
    for key in KNOWN_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            settings[key] = v
    return _convert(settings)


def _parse_estimators(text: str) -> tuple[Estimator, ...]:
    try:
        return tuple(Estimator(e.strip()) for e in text.split(",") if e.strip())
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _parse_series(text: str) -> tuple[str, tuple[float, ...]]:
    """``rho=0,0.1,0.5`` -> ``("rho", (0.0, 0.1, 0.5))``."""
    if "=" not in text:
        raise ConfigError(f"series must look like name=v1,v2,...; got {text!r}")
    key, values = text.split("=", 1)
    try:
        return key.strip(), tuple(float(v) for v in values.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"bad series values in {text!r}") from None


def _scenario_point(s: dict) -> ScenarioPoint:
    fields = {k: s[k] for k in _POINT_KEYS if k in s}
    try:
        conv = DbConvention(s.get("db_convention", DbConvention.POWER_10LOG10.value))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return ScenarioPoint(db_convention=conv, **fields)


def _quad_spec(s: dict) -> QuadratureSpec:
    kw = {k: s[k] for k in ("rel_tol", "abs_tol", "truncation_quantile") if k in s}
    return QuadratureSpec(**kw)


def _check_axis_not_fixed(axis: str, s: dict) -> None:
    if axis in s:
        raise ConfigError(f"{axis} is the sweep axis and cannot also be fixed")


def build_sweep_config(s: dict) -> SweepConfig:
    if "seed" not in s:
        raise ConfigError("sweeps need an explicit seed (--seed or 'seed = ...')")
    extra = {}
    if "samples" in s:
        extra["mc_samples"] = s["samples"]
    for key in ("exact_samples", "workers"):
        if key in s:
            extra[key] = s[key]
    if "out" in s:
        extra["output_path"] = s["out"]
    estimators = _parse_estimators(s["estimators"]) if "estimators" in s else None

    preset = s.get("preset")
    if preset is not None:
        if preset not in ("correlation", "turbulence"):
            raise ConfigError(f"unknown preset {preset!r}")
        make = correlation_sweep if preset == "correlation" else turbulence_sweep
        cfg = make(s["seed"], estimators, **extra) if estimators else make(s["seed"], **extra)
        overrides = {k: s[k] for k in ("start", "stop", "steps") if k in s}
        _check_axis_not_fixed(cfg.axis.value, s)
        given = {k: s[k] for k in _POINT_KEYS if k in s}
        if "db_convention" in s:
            given["db_convention"] = _scenario_point(s).db_convention
        overrides["fixed"] = replace(cfg.fixed, **given)
        if "series" in s:
            overrides["series_key"], overrides["series_values"] = _parse_series(s["series"])
        return replace(cfg, quad=_quad_spec(s), **overrides)

    missing = [k for k in ("axis", "start", "stop", "steps") if k not in s]
    if missing:
        raise ConfigError(f"missing sweep settings: {', '.join(missing)}")
    try:
        axis = Axis(s["axis"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _check_axis_not_fixed(axis.value, s)
    fixed = _scenario_point(s)
    series_key, series_values = _parse_series(s["series"]) if "series" in s else (None, ())
    if series_key is not None and series_key not in ScenarioPoint.__dataclass_fields__:
        raise ConfigError(f"unknown series parameter {series_key!r}")
    return SweepConfig(
        axis=axis, start=s["start"], stop=s["stop"], steps=s["steps"], seed=s["seed"], fixed=fixed,
        estimators=estimators or (Estimator.LOWER_BOUND_QUADRATURE,),
        series_key=series_key, series_values=series_values, quad=_quad_spec(s), **extra,
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_sweep(args) -> int:
    cfg = build_sweep_config(merge_settings(args))
    table = run_sweep(cfg)
    if cfg.output_path is None:
        sys.stdout.write(table.to_csv())
    else:
        log.info("wrote %d rows to %s", len(table.rows), cfg.output_path)
    return EXIT_OK


def cmd_plot(args) -> int:
    out = emit_plot_script(args.csv, PlotStyle(args.style), args.out)
    print(out)
    return EXIT_OK


def cmd_verify(args) -> int:
    checks = run_suite(args.suite)
    for c in checks:
        print(json.dumps(c.as_dict()))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VERIFY


def cmd_point(args) -> int:
    s = merge_settings(args)
    estimators = _parse_estimators(s.get("estimators", ",".join(e.value for e in Estimator)))
    needs_seed = {Estimator.LOWER_BOUND_MC, Estimator.EXACT_MC} & set(estimators)
    if needs_seed and "seed" not in s:
        raise ConfigError("Monte Carlo estimators need an explicit seed")
    p = _scenario_point(s)
    seed = s.get("seed", 0)
    vals = evaluate_point(p, estimators, lambda e: point_seed(seed, 0, 0, e),
                          s.get("samples", 10 ** 6), s.get("exact_samples", 10 ** 4), _quad_spec(s),
                          OptimizerSpec())
    for est in estimators:
        value, err = vals[est]
        print(json.dumps({"estimator": est.value, "value_bits": value, "err_bits": err}))
    return EXIT_OK


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat 'key = value' settings file")
    p.add_argument("--gamma-b-db", dest="gamma_b_db", type=float, help="average SNR at Bob (dB)")
    p.add_argument("--gamma-e-db", dest="gamma_e_db", type=float, help="average SNR at Eve (dB)")
    p.add_argument("--rho", type=float, help="log-domain fading correlation in [0, 1)")
    p.add_argument("--sigma-tb2", dest="sigma_tb2", type=float, help="Rytov variance at Bob")
    p.add_argument("--sigma-te2", dest="sigma_te2", type=float, help="Rytov variance at Eve")
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float, help="receiver noise std")
    p.add_argument("--db-convention", dest="db_convention", choices=[c.value for c in DbConvention])
    p.add_argument("--estimators", help="comma list of " + ", ".join(e.value for e in Estimator))
    p.add_argument("--seed", type=int, help="random seed (required for Monte Carlo)")
    p.add_argument("--samples", type=int, help="Monte Carlo samples for the lower bound")
    p.add_argument("--exact-samples", dest="exact_samples", type=int, help="Monte Carlo samples for the exact rate")
    p.add_argument("--rel-tol", dest="rel_tol", type=float, help="quadrature relative tolerance")
    p.add_argument("--abs-tol", dest="abs_tol", type=float, help="quadrature absolute tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fsosecrecy", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="sweep one parameter and write a CSV")
    _add_scenario_flags(sw)
    sw.add_argument("--preset", choices=["correlation", "turbulence"], help="preset experiment shape")
    sw.add_argument("--axis", choices=[a.value for a in Axis])
    sw.add_argument("--start", type=float)
    sw.add_argument("--stop", type=float)
    sw.add_argument("--steps", type=int)
    sw.add_argument("--series", help="curve family, e.g. rho=0,0.1,0.5,0.9")
    sw.add_argument("--workers", type=int, help="worker processes for axis points")
    sw.add_argument("--out", help="CSV path (stdout if omitted)")
    sw.set_defaults(func=cmd_sweep)

    pl = sub.add_parser("plot", help="plot script or SVG from a sweep CSV")
    pl.add_argument("csv")
    pl.add_argument("--style", choices=[s.value for s in PlotStyle], default=PlotStyle.GNUPLOT_SCRIPT.value)
    pl.add_argument("--out")
    pl.set_defaults(func=cmd_plot)

    ve = sub.add_parser("verify", help="run self-checks and print JSON lines")
    ve.add_argument("suite", choices=sorted(SUITES) + ["all"])
    ve.set_defaults(func=cmd_verify)

    pt = sub.add_parser("point", help="evaluate all estimators at one scenario")
    _add_scenario_flags(pt)
    pt.set_defaults(func=cmd_point)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DomainError, CsvParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
