"""Parameter sweeps over the averaged secrecy rates, CSV output and plotting."""

from __future__ import annotations

import csv
import enum
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .average import (
    ScenarioConfig,
    average_secrecy_capacity_exact,
    average_secrecy_lower_bound,
    monte_carlo_lower_bound,
)
from .channel import LinkParams
from .errors import ConfigError, FsoSecrecyError, NumericError
from .fading import CorrelatedFadingPair
from .mathcore import OptimizerSpec, QuadratureSpec
from .secrecy import awgn_secrecy_lower_bound


class Axis(str, enum.Enum):
    GAMMA_B_DB = "gamma_b_db"
    RHO = "rho"
    SIGMA_TB2 = "sigma_tb2"
    GAMMA_E_DB = "gamma_e_db"


class Estimator(str, enum.Enum):
    LOWER_BOUND_QUADRATURE = "lower_bound_quadrature"
    LOWER_BOUND_MC = "lower_bound_mc"
    EXACT_MC = "exact_mc"
    AWGN_BASELINE = "awgn_baseline"


class DbConvention(str, enum.Enum):
    POWER_10LOG10 = "power_10log10"
    AMPLITUDE_20LOG10 = "amplitude_20log10"


def snr_from_db(db: float, convention: DbConvention = DbConvention.POWER_10LOG10) -> float:
    """Linear ``S / sigma`` from its dB value under the chosen convention."""
    scale = 10.0 if DbConvention(convention) is DbConvention.POWER_10LOG10 else 20.0
    return 10.0 ** (db / scale)


AXIS_UNITS = {
    Axis.GAMMA_B_DB: "dB",
    Axis.GAMMA_E_DB: "dB",
    Axis.RHO: "1",
    Axis.SIGMA_TB2: "1",
}

# parameters that only change the fading law (the AWGN baseline ignores them)
_FADING_KEYS = {"rho", "sigma_tb2", "sigma_te2"}


@dataclass(frozen=True)
class ScenarioPoint:
    """Flat, picklable description of one scenario."""

    gamma_b_db: float = 10.0
    gamma_e_db: float = 0.0
    rho: float = 0.0
    sigma_tb2: float = 1.0
    sigma_te2: float = 1.0
    noise_sigma: float = 1.0
    db_convention: DbConvention = DbConvention.POWER_10LOG10

    def scenario(self, quad: QuadratureSpec, opt: OptimizerSpec) -> ScenarioConfig:
        return ScenarioConfig(
            LinkParams.from_snr(snr_from_db(self.gamma_b_db, self.db_convention), self.noise_sigma),
            LinkParams.from_snr(snr_from_db(self.gamma_e_db, self.db_convention), self.noise_sigma),
            CorrelatedFadingPair.from_variances(self.sigma_tb2, self.sigma_te2, self.rho),
            quad,
            opt,
        )


@dataclass(frozen=True)
class SweepConfig:
    axis: Axis
    start: float
    stop: float
    steps: int
    seed: int
    fixed: ScenarioPoint = field(default_factory=ScenarioPoint)
    estimators: tuple[Estimator, ...] = (Estimator.LOWER_BOUND_QUADRATURE,)
    series_key: str | None = None
    series_values: tuple[float, ...] = ()
    mc_samples: int = 10 ** 6
    exact_samples: int = 10 ** 4
    workers: int = 1
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    opt: OptimizerSpec = field(default_factory=OptimizerSpec)
    output_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "axis", Axis(self.axis))
        object.__setattr__(self, "estimators", tuple(Estimator(e) for e in self.estimators))
        if not self.steps >= 2:
            raise ConfigError("steps must be >= 2")
        if not self.start < self.stop:
            raise ConfigError("start must be < stop")
        if not self.estimators:
            raise ConfigError("at least one estimator is required")
        if len(set(self.estimators)) != len(self.estimators):
            raise ConfigError("estimators must not repeat")
        if self.seed is None:
            raise ConfigError("a random seed is required")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.series_key is not None:
            if self.series_key not in {f for f in ScenarioPoint.__dataclass_fields__ if f != "db_convention"}:
                raise ConfigError(f"unknown series parameter {self.series_key!r}")
            if self.series_key == self.axis.value:
                raise ConfigError("series parameter must differ from the sweep axis")
            if not self.series_values:
                raise ConfigError("series parameter given without values")

    def axis_values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.steps)

    def series(self) -> list[tuple[str, dict]]:
        """``(label, overrides)`` per curve family member."""
        if self.series_key is None:
            return [("", {})]
        return [(f"{self.series_key}={v:g}", {self.series_key: float(v)}) for v in self.series_values]


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

_EST_CODE = {e: i for i, e in enumerate(Estimator)}


def point_seed(seed: int, point: int, series: int, estimator: Estimator) -> int:
    """Independent seed for one (axis point, series member, estimator) cell.

    Depends on positions only, so the order or process in which points are
    evaluated never changes the draws.
    """
    ss = np.random.SeedSequence([int(seed), point, series, _EST_CODE[estimator]])
    return int(ss.generate_state(1, np.uint64)[0])


def evaluate_point(p: ScenarioPoint, estimators, seed_of, mc_samples: int, exact_samples: int,
                   quad: QuadratureSpec, opt: OptimizerSpec) -> dict:
    """All requested estimators at one scenario; ``seed_of(estimator)`` gives seeds.

    Returns ``{estimator: (value, err)}``.
    """
    cfg = p.scenario(quad, opt)
    out = {}
    for est in estimators:
        est = Estimator(est)
        if est is Estimator.LOWER_BOUND_QUADRATURE:
            r = average_secrecy_lower_bound(cfg)
        elif est is Estimator.LOWER_BOUND_MC:
            r = monte_carlo_lower_bound(cfg, mc_samples, seed_of(est))
        elif est is Estimator.EXACT_MC:
            r = average_secrecy_capacity_exact(cfg, exact_samples, seed_of(est))
        else:
            out[est] = (awgn_secrecy_lower_bound(cfg.link_b, cfg.link_e), 0.0)
            continue
        out[est] = (r.value, r.err_est)
    return out


def _point_task(args):
    cfg, i, axis_value = args
    row = {}
    for j, (label, overrides) in enumerate(cfg.series()):
        p = replace(cfg.fixed, **{cfg.axis.value: float(axis_value)}, **overrides)
        try:
            vals = evaluate_point(p, cfg.estimators, lambda e: point_seed(cfg.seed, i, j, e),
                                  cfg.mc_samples, cfg.exact_samples, cfg.quad, cfg.opt)
        except NumericError as exc:
            raise NumericError(f"at {cfg.axis.value}={axis_value!r} {label}: {exc}") from exc
        for est, v in vals.items():
            row[(est, label)] = v
    return row


def _columns(cfg: SweepConfig) -> list[tuple[str, Estimator, str, bool]]:
    """``(header, estimator, series_label, is_error)`` for every data column."""
    cols = []
    series = cfg.series()
    for est in cfg.estimators:
        members = series
        if est is Estimator.AWGN_BASELINE and cfg.series_key in _FADING_KEYS:
            members = series[:1]
        for label, _ in members:
            tag = f"[{label}]" if label and members is series else ""
            cols.append((f"{est.value}{tag} (bits)", est, label, False))
            if est is not Estimator.AWGN_BASELINE:
                cols.append((f"{est.value}_err{tag} (bits)", est, label, True))
    return cols


@dataclass(frozen=True)
class SweepTable:
    header: list[str]
    rows: list[list[float]]

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow([repr(float(x)) for x in r])
        return buf.getvalue()

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


def run_sweep(cfg: SweepConfig) -> SweepTable:
    """Evaluate every estimator at every axis point (and series member).

    Points may run in worker processes; rows always come back in axis order
    and are bit-identical for any worker count.
    """
    xs = cfg.axis_values()
    tasks = [(cfg, i, float(x)) for i, x in enumerate(xs)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            results = list(ex.map(_point_task, tasks))
    else:
        results = [_point_task(t) for t in tasks]

    cols = _columns(cfg)
    header = [f"{cfg.axis.value} ({AXIS_UNITS[cfg.axis]})"] + [c[0] for c in cols]
    rows = []
    for x, res in zip(xs, results):
        row = [float(x)]
        for _, est, label, is_err in cols:
            key = (est, label) if (est, label) in res else (est, cfg.series()[0][0])
            row.append(res[key][1 if is_err else 0])
        rows.append(row)
    table = SweepTable(header, rows)
    if cfg.output_path:
        table.write(cfg.output_path)
    return table


# ---------------------------------------------------------------------------
# plotting
# ---------------------------------------------------------------------------

class PlotStyle(str, enum.Enum):
    GNUPLOT_SCRIPT = "gnuplot_script"
    SVG_DIRECT = "svg_direct"


X_LABEL = "average electrical SNR at Bob (dB)"
Y_LABEL = "average secrecy capacity lower bound (bits/channel use)"


class CsvParseError(FsoSecrecyError, ValueError):
    pass


def read_sweep_csv(path) -> SweepTable:
    """Parse a sweep CSV, reporting the first bad row by its line number."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError(f"{path}: empty file") from None
        rows = []
        for line_no, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise CsvParseError(f"{path}: row {line_no} has {len(rec)} fields, expected {len(header)}")
            try:
                rows.append([float(x) for x in rec])
            except ValueError:
                raise CsvParseError(f"{path}: row {line_no} has a non-numeric field") from None
    if not rows:
        raise CsvParseError(f"{path}: no data rows")
    return SweepTable(header, rows)


def curve_columns(header: list[str]) -> list[int]:
    """Indices of value columns (everything except the axis and error columns)."""
    return [i for i, h in enumerate(header) if i > 0 and "_err" not in h.split(" ")[0]]


def _label(h: str) -> str:
    return h.rsplit(" (", 1)[0]


def emit_plot_script(csv_path, style: PlotStyle = PlotStyle.GNUPLOT_SCRIPT, out_path=None) -> Path:
    """Write a gnuplot script next to the CSV, or render an SVG directly.

    The script refers to the CSV by a path relative to the script itself.
    """
    style = PlotStyle(style)
    csv_path = Path(csv_path)
    table = read_sweep_csv(csv_path)
    curves = curve_columns(table.header)
    if not curves:
        raise CsvParseError(f"{csv_path}: no value columns to plot")
    x_label = X_LABEL if table.header[0].startswith(("gamma_b", "gamma_e")) else _label(table.header[0])

    if style is PlotStyle.GNUPLOT_SCRIPT:
        out = Path(out_path) if out_path else csv_path.with_suffix(".gp")
        rel = os.path.relpath(csv_path.resolve(), out.resolve().parent)
        lines = [
            "set datafile separator ','",
            f"set xlabel '{x_label}'",
            f"set ylabel '{Y_LABEL}'",
            "set key left top",
            "set grid",
        ]
        parts = [f"'{rel}' using 1:{i + 1} with linespoints title '{_label(table.header[i])}'" for i in curves]
        lines.append("plot " + ", \\\n     ".join(parts))
        out.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return out

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_path) if out_path else csv_path.with_suffix(".svg")
    data = np.asarray(table.rows)
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for i in curves:
        ax.plot(data[:, 0], data[:, i], marker=".", label=_label(table.header[i]))
    ax.set_xlabel(x_label)
    ax.set_ylabel(Y_LABEL)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out


# ---------------------------------------------------------------------------
# preset experiment shapes
# ---------------------------------------------------------------------------

def correlation_sweep(seed: int, estimators=(Estimator.LOWER_BOUND_QUADRATURE, Estimator.AWGN_BASELINE),
                  **kw) -> SweepConfig:
    """Bob SNR from -10 to 20 dB, Eve at 0 dB, unit turbulence on both links,
    four correlation levels and the no-fading baseline."""
    return SweepConfig(
        axis=Axis.GAMMA_B_DB, start=-10.0, stop=20.0, steps=31, seed=seed,
        fixed=ScenarioPoint(gamma_e_db=0.0, sigma_tb2=1.0, sigma_te2=1.0),
        estimators=tuple(estimators), series_key="rho", series_values=(0.0, 0.1, 0.5, 0.9), **kw,
    )


def turbulence_sweep(seed: int, estimators=(Estimator.LOWER_BOUND_QUADRATURE,), **kw) -> SweepConfig:
    """Same axis with Eve's turbulence fixed and three turbulence strengths at Bob."""
    return SweepConfig(
        axis=Axis.GAMMA_B_DB, start=-10.0, stop=20.0, steps=31, seed=seed,
        fixed=ScenarioPoint(gamma_e_db=0.0, sigma_te2=1.0, rho=0.0),
        estimators=tuple(estimators), series_key="sigma_tb2", series_values=(0.1, 0.5, 1.0), **kw,
    )


def column_of(table: SweepTable, name: str) -> np.ndarray:
    """Values of the column whose header (without units) equals ``name``."""
    for i, h in enumerate(table.header):
        if _label(h) == name:
            return np.array([r[i] for r in table.rows])
    raise KeyError(name)


__all__ = [
    "Axis",
    "CsvParseError",
    "DbConvention",
    "Estimator",
    "PlotStyle",
    "ScenarioPoint",
    "SweepConfig",
    "SweepTable",
    "column_of",
    "emit_plot_script",
    "evaluate_point",
    "correlation_sweep",
    "turbulence_sweep",
    "point_seed",
    "read_sweep_csv",
    "run_sweep",
    "snr_from_db",
]
