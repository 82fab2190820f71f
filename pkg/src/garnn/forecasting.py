"""Fitted values, recursive forecasting, simulation and a stationarity check.

Forecasts recurse on the fitted model: lagged inputs use observed values
where available and earlier forecasts otherwise, always standardized with
the training standardizer.  Simulation draws each observation from the
family at the mean implied by the realized lags, so a fixed seed fixes the
whole path.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DataError, DomainError, SimulationError
from .model import GarnnSpec, ParamVector, SeriesFrame, _effective_arrays, _predict_mu
from .network import Standardizer, net_forward


@dataclass(frozen=True)
class ForecastResult:
    horizon: int
    mu: np.ndarray
    origin: int
    x_future: np.ndarray


def fitted_values(spec: GarnnSpec, frame: SeriesFrame, theta: ParamVector) -> np.ndarray:
    """In-sample means for t = conditioning+1 .. n, using observed lags."""
    theta.net.validate_for(spec.net)
    _, x_eff, zlag = _effective_arrays(spec, frame)
    return _predict_mu(spec, x_eff, zlag, theta)


def forecast(spec: GarnnSpec, frame: SeriesFrame, theta: ParamVector,
             x_future, horizon: int) -> ForecastResult:
    """Recursive multi-step forecast from the end of the observed series.

    x_future must supply one design row per step.  Each step's lag vector
    takes observed values while they reach back into the sample and earlier
    forecast means beyond it, standardized by the frozen training scaler.
    """
    theta.net.validate_for(spec.net)
    if horizon < 1:
        raise DomainError("horizon must be >= 1")
    x_future = np.asarray(x_future, dtype=float)
    if x_future.ndim != 2 or x_future.shape != (horizon, spec.n_covariates):
        raise DataError(f"x_future must be {horizon} x {spec.n_covariates}, "
                        f"got {x_future.shape}")
    n, p = len(frame), spec.net.lags
    extended = list(frame.y)
    mu_path = np.empty(horizon)
    for step in range(horizon):
        z = frame.standardizer.transform(
            [extended[n + step - j] for j in range(1, p + 1)])
        eta = float(x_future[step] @ theta.coef) + net_forward(spec.net, theta.net, z)
        mu = float(np.asarray(spec.link.inverse(eta)))
        spec.family.check_mean(mu)
        mu_path[step] = mu
        extended.append(mu)
    return ForecastResult(horizon=horizon, mu=mu_path, origin=n, x_future=x_future)


def simulate(spec: GarnnSpec, theta: ParamVector, phi: float = 1.0,
             n: int = 200, burn_in: int = 200, seed: int = 0,
             X=None, init_values=None, scaler: Standardizer | None = None,
             return_means: bool = False):
    """Generate a series from the model; returns a SeriesFrame.

    The model standardizes lag inputs by the sample moments of the series
    itself, which a generator cannot know up front.  By default the lags
    are scaled by the mean implied by the intercept and the family's
    standard deviation at that mean; pass ``scaler`` to use another fixed
    scale (e.g. to iterate toward self-consistency with the realized
    sample).  The returned frame carries a standardizer recomputed from the
    retained sample, which is what fitting uses.  X, if given, must cover
    burn-in plus retained steps; omitting it requires an intercept-only
    model.  With ``return_means`` the realized conditional means of the
    retained steps are returned alongside the frame.
    """
    theta.net.validate_for(spec.net)
    if n < 2 or burn_in < 0:
        raise DomainError("need n >= 2 and burn_in >= 0")
    total = burn_in + n
    if X is None:
        if spec.n_covariates != 1:
            raise DataError("simulate without X requires an intercept-only model")
        X = np.ones((total, 1))
    X = np.asarray(X, dtype=float)
    if X.shape != (total, spec.n_covariates):
        raise DataError(f"X must be {total} x {spec.n_covariates}, got {X.shape}")

    p = spec.net.lags
    mu0 = float(np.asarray(spec.link.inverse(float(theta.coef[0]))))
    spec.family.check_mean(mu0)
    if scaler is None:
        sd0 = math.sqrt(phi * float(np.asarray(spec.family.variance(mu0))))
        if not np.isfinite(sd0) or sd0 <= 0:
            raise SimulationError("reference scale at the intercept mean is degenerate")
        scaler = Standardizer(mu0, sd0)

    rng = np.random.default_rng(seed)
    y = np.empty(total)
    mu_path = np.empty(total)
    if init_values is not None:
        init_values = np.asarray(init_values, dtype=float)
        if init_values.shape != (p,):
            raise DataError(f"init_values must have length {p}")
        y[:p] = init_values
        mu_path[:p] = mu0
    else:
        for t in range(p):
            mu_path[t] = mu0
            y[t] = spec.family.sample(rng, mu0, phi)
    for t in range(p, total):
        z = scaler.transform(y[t - p:t][::-1])
        eta = float(X[t] @ theta.coef) + net_forward(spec.net, theta.net, z)
        try:
            mu = float(np.asarray(spec.link.inverse(eta)))
            spec.family.check_mean(mu)
        except DomainError as exc:
            raise SimulationError(f"mean left the domain at step {t} "
                                  f"(eta={eta:.6g}): {exc}") from exc
        if not np.isfinite(mu):
            raise SimulationError(f"non-finite mean at step {t} (eta={eta:.6g})")
        mu_path[t] = mu
        y[t] = spec.family.sample(rng, mu, phi)

    frame = SeriesFrame.from_series(y[burn_in:], X[burn_in:])
    if return_means:
        return frame, mu_path[burn_in:]
    return frame


@dataclass(frozen=True)
class StationarityThresholds:
    mean_drift: float
    variance_ratio: float


@dataclass
class StationarityReport:
    window_means: np.ndarray
    window_variances: np.ndarray
    lag1_autocorr: np.ndarray
    mean_drift: float
    variance_ratio: float
    n_windows: int
    window_length: int
    thresholds: StationarityThresholds
    consistent: bool


def _window_stats(series: np.ndarray, n_windows: int):
    length = series.size // n_windows
    windows = series[:length * n_windows].reshape(n_windows, length)
    means = windows.mean(axis=1)
    variances = windows.var(axis=1, ddof=1)
    centered = windows - means[:, None]
    lag1 = np.array([
        float(np.sum(c[:-1] * c[1:]) / np.sum(c * c)) if np.sum(c * c) > 0 else 0.0
        for c in centered])
    pooled_sd = math.sqrt(float(np.mean(variances)))
    drift = float((means.max() - means.min()) / pooled_sd) if pooled_sd > 0 else math.inf
    vratio = float(variances.max() / variances.min()) if variances.min() > 0 else math.inf
    return means, variances, lag1, drift, vratio, length


def calibrate_stationarity_thresholds(n: int, n_windows: int = 10,
                                      reps: int = 300, quantile: float = 0.99,
                                      seed: int = 0) -> StationarityThresholds:
    """Drift thresholds from the given quantile of white-noise statistics."""
    rng = np.random.default_rng(seed)
    drifts = np.empty(reps)
    vratios = np.empty(reps)
    for r in range(reps):
        noise = rng.standard_normal(n)
        *_, drift, vratio, _ = _window_stats(noise, n_windows)
        drifts[r] = drift
        vratios[r] = vratio
    return StationarityThresholds(float(np.quantile(drifts, quantile)),
                                  float(np.quantile(vratios, quantile)))


def stationarity_check(series, n_windows: int = 10,
                       thresholds: StationarityThresholds | None = None) -> StationarityReport:
    """Window-stability diagnostic for an (already burned-in) series.

    Tiles the series into windows and reports the spread of window means
    (scaled by the pooled standard deviation) and the max/min window
    variance ratio; the verdict is "consistent with stationarity" when both
    fall under the thresholds.  Default thresholds are calibrated on white
    noise of the same length.
    """
    series = np.asarray(series, dtype=float)
    if n_windows < 2:
        raise DomainError("n_windows must be >= 2")
    if series.size < 10 * n_windows:
        raise DataError(f"series too short: need at least {10 * n_windows} points")
    if thresholds is None:
        thresholds = calibrate_stationarity_thresholds(series.size, n_windows)
    means, variances, lag1, drift, vratio, length = _window_stats(series, n_windows)
    consistent = (drift <= thresholds.mean_drift
                  and vratio <= thresholds.variance_ratio)
    return StationarityReport(window_means=means, window_variances=variances,
                              lag1_autocorr=lag1, mean_drift=drift,
                              variance_ratio=vratio, n_windows=n_windows,
                              window_length=length, thresholds=thresholds,
                              consistent=consistent)
