"""Data ingestion, covariate construction, run configuration, serialization.

Datasets are comma-separated text with a header row: first column the
integer time index (strictly increasing by one), second the observed
series, any further columns extra covariates.  Run configuration is one
flat JSON object whose keys match the CLI flags; results are written as a
JSON tree plus a delimited plot-data file with columns
(t, observed, fitted, forecast).
"""

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, DataError
from .families import ALLOWED_LINKS, FAMILIES
from .links import LINKS, Logit


@dataclass(frozen=True)
class Dataset:
    times: np.ndarray
    y: np.ndarray
    extra_names: tuple
    extra: np.ndarray  # n x len(extra_names)

    def __len__(self):
        return self.y.shape[0]


def load_series(path) -> Dataset:
    """Read a dataset file, validating the time index and series values."""
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = None
        lineno = 0
        for row in reader:
            lineno += 1
            if row and row[0].lstrip().startswith("#"):
                continue
            header = row
            break
        if header is None:
            raise DataError(f"{path}: empty file")
        if len(header) < 2:
            raise DataError(f"{path}: header must have a time column and a series column")
        extra_names = tuple(name.strip() for name in header[2:])
        times, ys, extras = [], [], []
        for row in reader:
            lineno += 1
            if not row or all(not cell.strip() for cell in row):
                continue
            if row[0].lstrip().startswith("#"):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, "
                                f"got {len(row)}")
            try:
                t = int(row[0])
            except ValueError:
                raise DataError(f"{path}:{lineno}: time index {row[0]!r} "
                                "is not an integer") from None
            if row[1].strip() == "":
                raise DataError(f"{path}:{lineno}: missing series value")
            try:
                yv = float(row[1])
            except ValueError:
                raise DataError(f"{path}:{lineno}: series value {row[1]!r} "
                                "is not numeric") from None
            try:
                ev = [float(cell) for cell in row[2:]]
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric covariate") from None
            if not math.isfinite(yv) or not all(math.isfinite(e) for e in ev):
                raise DataError(f"{path}:{lineno}: non-finite value")
            times.append(t)
            ys.append(yv)
            extras.append(ev)
    if len(ys) < 2:
        raise DataError(f"{path}: need at least two observations")
    times = np.asarray(times, dtype=int)
    gaps = np.nonzero(np.diff(times) != 1)[0]
    if gaps.size:
        i = int(gaps[0])
        raise DataError(f"{path}: time index must increase by 1; gap between "
                        f"t={times[i]} and t={times[i + 1]}")
    return Dataset(times=times, y=np.asarray(ys, dtype=float),
                   extra_names=extra_names,
                   extra=np.asarray(extras, dtype=float).reshape(len(ys), -1))


@dataclass(frozen=True)
class CovariateRecipe:
    """Deterministic design columns: intercept, harmonic pairs, trend.

    Harmonic arguments use the raw time index by default (cycles need
    integer periods); with ``harmonics_on_scaled`` they use the same scaled
    time as the trend column, which is time divided by ``trend_divisor``.
    """

    harmonic_periods: tuple = (12, 6)
    trend: bool = True
    trend_divisor: float = 1000.0
    harmonics_on_scaled: bool = False

    def column_names(self):
        names = ["intercept"]
        for period in self.harmonic_periods:
            names += [f"cos{period}", f"sin{period}"]
        if self.trend:
            names.append("trend")
        return names


def build_covariates(n: int, recipe: CovariateRecipe, t_start: int = 1):
    """Design matrix (intercept first) for time indices t_start..t_start+n-1."""
    if n < 1:
        raise DataError("n must be >= 1")
    t = np.arange(t_start, t_start + n, dtype=float)
    t_scaled = t / recipe.trend_divisor
    t_harm = t_scaled if recipe.harmonics_on_scaled else t
    cols = [np.ones(n)]
    for period in recipe.harmonic_periods:
        angle = 2.0 * np.pi * t_harm / period
        cols += [np.cos(angle), np.sin(angle)]
    if recipe.trend:
        cols.append(t_scaled)
    return np.column_stack(cols), recipe.column_names()


def design_from(dataset: Dataset, recipe: CovariateRecipe):
    """Recipe columns for the dataset's time range plus its extra columns."""
    X, names = build_covariates(len(dataset), recipe, t_start=int(dataset.times[0]))
    if dataset.extra_names:
        X = np.column_stack([X, dataset.extra])
        names = names + list(dataset.extra_names)
    return X, names


_STR_FIELDS = {"family", "link", "activation", "data", "result", "plot_data",
               "future_covariates"}


@dataclass
class RunConfig:
    """Flat run configuration; every key doubles as a CLI flag."""

    # model
    family: str = "poisson"
    trials: int | None = None
    size: float | None = None
    link: str | None = None
    lags: int = 1
    nodes: int = 0
    activation: str = "tanh"
    cond_len: int | None = None
    # data and outputs
    data: str | None = None
    result: str | None = None
    plot_data: str | None = None
    # covariate recipe
    harmonic_periods: list = field(default_factory=lambda: [12, 6])
    trend: bool = True
    trend_divisor: float = 1000.0
    harmonics_on_scaled: bool = False
    # optimizer
    gradient_tolerance: float = 1e-6
    max_iterations: int = 2000
    restarts: int = 5
    seed: int = 0
    # forecasting
    horizon: int = 6
    future_covariates: str | None = None
    # selection
    select_lags: list = field(default_factory=lambda: [1, 2, 3])
    select_nodes: list = field(default_factory=lambda: [5, 6, 7])
    select_sizes: list | None = None
    nested_predictors: list | None = None
    alpha: float = 0.05
    # simulation
    sim_n: int = 200
    sim_burn_in: int = 200
    sim_phi: float = 1.0
    sim_coef: list | None = None
    sim_input_weights: list | None = None
    sim_output_weights: list | None = None
    # gradient check
    gradcheck_draws: int = 10
    gradcheck_n: int = 60
    gradcheck_tol: float = 1e-6

    @classmethod
    def field_names(cls):
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = set(cls.field_names())
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as handle:
                data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: configuration must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def validate(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; "
                              f"choose from {sorted(FAMILIES)}")
        if self.link is not None:
            if self.link not in LINKS:
                raise ConfigError(f"unknown link {self.link!r}")
            if self.link not in ALLOWED_LINKS[self.family]:
                raise ConfigError(f"link {self.link!r} is not supported for "
                                  f"{self.family!r}")
        if self.family == "binomial" and not self.trials:
            raise ConfigError("binomial requires 'trials'")
        if self.family == "negbinomial" and not self.size and not self.select_sizes:
            raise ConfigError("negbinomial requires 'size' (or 'select_sizes' "
                              "when selecting)")
        if self.lags < 1 or self.nodes < 0:
            raise ConfigError("need lags >= 1 and nodes >= 0")
        if self.activation not in ("tanh", "logistic"):
            raise ConfigError(f"unknown activation {self.activation!r}")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must be in (0, 1)")
        if self.restarts < 1 or self.max_iterations < 1:
            raise ConfigError("restarts and max_iterations must be >= 1")
        return self

    def make_family(self, size=None):
        cls = FAMILIES[self.family]
        if self.family == "binomial":
            return cls(self.trials)
        if self.family == "negbinomial":
            return cls(size if size is not None else self.size)
        return cls()

    def make_link(self):
        if self.link is None:
            return None
        if self.link == "logit":
            return Logit(self.trials if self.trials else 1)
        return LINKS[self.link]()

    def recipe(self) -> CovariateRecipe:
        return CovariateRecipe(tuple(self.harmonic_periods), self.trend,
                               self.trend_divisor, self.harmonics_on_scaled)


def _fmt(value) -> str:
    """Full-precision text for numbers; empty for missing."""
    if value is None:
        return ""
    return repr(float(value))


def write_plot_data(path, times, observed, fitted_start, fitted,
                    forecast=None):
    """Delimited (t, observed, fitted, forecast) file.

    ``fitted_start`` is the 0-based offset of the first fitted value within
    the observed range; forecast values continue past the last observation.
    """
    n = len(observed)
    rows = []
    for i in range(n):
        fit_val = fitted[i - fitted_start] if i >= fitted_start else None
        rows.append((int(times[i]), _fmt(observed[i]), _fmt(fit_val), ""))
    step = int(times[-1]) + 1 if n else 1
    for j, value in enumerate(np.asarray(forecast) if forecast is not None else []):
        rows.append((step + j, "", "", _fmt(value)))
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("t,observed,fitted,forecast\n")
        for t, obs, fit_val, fc in rows:
            handle.write(f"{t},{obs},{fit_val},{fc}\n")


def write_result(path, tree: dict):
    """Structured key-value result file (JSON, full float precision)."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(tree, handle, indent=2)
        handle.write("\n")
