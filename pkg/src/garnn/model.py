"""Model assembly: predictor, conditional likelihood, score and fitting.

The predictor at time t is the linear term x_t'coef plus the lagged-network
output on the standardized lags of the series.  The likelihood conditions
on the first ``cond_len`` observations so every term has its lags observed.
Fitting minimizes the negative conditional log-likelihood with BFGS from a
GLM-based start plus random restarts; dispersion (when the family has one)
is estimated afterwards from residuals or deviance.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq
from scipy.special import digamma

from . import backend
from .exceptions import (DataError, DispersionOverflowError, DomainError,
                         FitError)
from .families import ALLOWED_LINKS, Binomial, Family, NegativeBinomial
from .links import Link
from .network import ACTIVATIONS, NetSpec, NetWeights, Standardizer, standardize
from .optimize import MinimizeResult, OptimizerControls, bfgs_minimize


@dataclass(frozen=True)
class GarnnSpec:
    """Full model description: family, link, network and design size.

    n_covariates counts the design-matrix columns including the intercept;
    cond_len is the number of leading observations conditioned on (defaults
    to the lag order, the smallest legal choice).
    """

    family: Family
    link: Link
    net: NetSpec
    n_covariates: int
    cond_len: int | None = None

    def __post_init__(self):
        if self.n_covariates < 1:
            raise DomainError("n_covariates must be >= 1")
        allowed = ALLOWED_LINKS[self.family.name]
        if self.link.name not in allowed:
            raise DomainError(f"link {self.link.name!r} is not supported for "
                              f"family {self.family.name!r} (allowed: {allowed})")
        if isinstance(self.family, Binomial) and self.link.name == "logit":
            if self.link.trials != self.family.trials:
                raise DomainError("logit link trials must match the binomial family")
        if self.cond_len is not None and self.cond_len < self.net.lags:
            raise DomainError("cond_len must be at least the lag order")

    @classmethod
    def create(cls, family, net, n_covariates, link=None, cond_len=None):
        """Build a spec using the family's default link when none is given."""
        return cls(family, link if link is not None else family.default_link(),
                   net, n_covariates, cond_len)

    @property
    def conditioning(self) -> int:
        return self.net.lags if self.cond_len is None else self.cond_len

    @property
    def n_params(self) -> int:
        """Parameters optimized directly: coefficients plus net weights."""
        return self.n_covariates + self.net.n_weights

    @property
    def n_params_total(self) -> int:
        """n_params plus one when a dispersion parameter is estimated."""
        return self.n_params + (1 if self.family.estimates_dispersion else 0)


@dataclass(frozen=True)
class ParamVector:
    """Model parameters: regression coefficients and network weights.

    The flat layout is (coefficients, input weights row-major, output
    weights); flatten/unflatten are exact inverses.
    """

    coef: np.ndarray
    net: NetWeights

    def __post_init__(self):
        object.__setattr__(self, "coef", np.asarray(self.coef, dtype=float).reshape(-1))

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.coef,
                               self.net.input_weights.ravel(),
                               self.net.output_weights])

    @classmethod
    def unflatten(cls, flat, spec: GarnnSpec) -> "ParamVector":
        flat = np.asarray(flat, dtype=float).reshape(-1)
        s, nodes, lags = spec.n_covariates, spec.net.nodes, spec.net.lags
        if flat.size != spec.n_params:
            raise DomainError(f"expected flat vector of length {spec.n_params}, "
                              f"got {flat.size}")
        return cls(flat[:s].copy(),
                   NetWeights(flat[s:s + nodes * lags].reshape(nodes, lags).copy(),
                              flat[s + nodes * lags:].copy()))


@dataclass(frozen=True)
class SeriesFrame:
    """Observed series with its design matrix and frozen standardization."""

    y: np.ndarray
    X: np.ndarray
    standardizer: Standardizer
    z: np.ndarray

    @classmethod
    def from_series(cls, y, X) -> "SeriesFrame":
        y = np.ascontiguousarray(y, dtype=float)
        X = np.ascontiguousarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise DataError(f"design matrix rows ({X.shape}) must match "
                            f"series length ({y.shape[0]})")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise DataError("series and covariates must be finite, no missing values")
        std, z = standardize(y)
        return cls(y, X, std, z)

    def __len__(self):
        return self.y.shape[0]

    def with_columns(self, columns) -> "SeriesFrame":
        """Same series restricted to a subset of design columns."""
        return SeriesFrame(self.y, np.ascontiguousarray(self.X[:, list(columns)]),
                           self.standardizer, self.z)


@dataclass
class FitResult:
    theta: ParamVector
    dispersion: float | None
    loglik: float
    aic: float
    converged: bool
    iterations: int
    gradient_norm: float
    fitted: np.ndarray
    n_params_total: int
    restarts_used: int = 1
    optimizer: MinimizeResult | None = field(default=None, repr=False)


def _effective_arrays(spec: GarnnSpec, frame: SeriesFrame):
    """Conditioned observations, design rows and the lag matrix.

    The conditioning may consume the whole series, leaving empty arrays
    (an empty likelihood sum is 0).
    """
    m, p = spec.conditioning, spec.net.lags
    n = len(frame)
    if m > n:
        raise DataError(f"conditioning length {m} exceeds the series length {n}")
    y_eff = np.ascontiguousarray(frame.y[m:])
    x_eff = np.ascontiguousarray(frame.X[m:])
    zlag = np.ascontiguousarray(
        np.column_stack([frame.z[m - j:n - j] for j in range(1, p + 1)]))
    return y_eff, x_eff, zlag


def _kernel_codes(spec: GarnnSpec):
    trials = float(spec.family.trials) if isinstance(spec.family, Binomial) else 1.0
    size = float(spec.family.size) if isinstance(spec.family, NegativeBinomial) else 1.0
    return (spec.family.code, spec.link.code, spec.net.activation_code, trials, size)


def _resolve_phi(spec: GarnnSpec, phi) -> float:
    if phi is None:
        return 1.0
    phi = float(phi)
    if phi <= 0:
        raise DomainError("dispersion must be positive")
    if spec.family.estimates_dispersion is None and phi != 1.0:
        raise DomainError(f"{spec.family.name} has dispersion fixed at 1")
    return phi


def _split_flat(flat, spec: GarnnSpec):
    s, nodes, lags = spec.n_covariates, spec.net.nodes, spec.net.lags
    coef = np.ascontiguousarray(flat[:s])
    iw = np.ascontiguousarray(flat[s:s + nodes * lags]).reshape(nodes, lags)
    ow = np.ascontiguousarray(flat[s + nodes * lags:])
    return coef, iw, ow


def eta_at(spec: GarnnSpec, frame: SeriesFrame, theta: ParamVector, t: int) -> float:
    """Predictor at time t (1-based series position, conditioning < t <= n)."""
    m, n = spec.conditioning, len(frame)
    if not m + 1 <= t <= n:
        raise DomainError(f"t must be in [{m + 1}, {n}], got {t}")
    from .network import net_forward
    lags = frame.z[t - 1 - np.arange(1, spec.net.lags + 1)]
    return float(frame.X[t - 1] @ theta.coef) + net_forward(spec.net, theta.net, lags)


def _kernel_eval(spec, frame, theta, phi, want_score):
    y_eff, x_eff, zlag = _effective_arrays(spec, frame)
    fam, link, act, trials, size = _kernel_codes(spec)
    ycon = np.ascontiguousarray(spec.family.loglik_constant(y_eff, phi))
    flat = theta.flatten()
    coef, iw, ow = _split_flat(flat, spec)
    return backend.loglik_score(y_eff, x_eff, zlag, ycon, coef, iw, ow,
                                fam, link, act, phi, trials, size, want_score)


def conditional_loglik(spec: GarnnSpec, frame: SeriesFrame, theta: ParamVector,
                       phi=None) -> float:
    """Sum of log conditional densities over the non-conditioned range."""
    theta.net.validate_for(spec.net)
    phi = _resolve_phi(spec, phi)
    ll, _ = _kernel_eval(spec, frame, theta, phi, want_score=False)
    if not np.isfinite(ll):
        raise DomainError("a conditional mean left the family's domain")
    return ll


def score(spec: GarnnSpec, frame: SeriesFrame, theta: ParamVector, phi=None) -> np.ndarray:
    """Gradient of the conditional log-likelihood in the flat parameters."""
    theta.net.validate_for(spec.net)
    phi = _resolve_phi(spec, phi)
    ll, grad = _kernel_eval(spec, frame, theta, phi, want_score=True)
    if grad is None or not np.isfinite(ll):
        raise DomainError("a conditional mean left the family's domain")
    return grad


def _predict_mu(spec: GarnnSpec, x_eff, zlag, theta: ParamVector):
    _, act, _ = ACTIVATIONS[spec.net.activation]
    eta = x_eff @ theta.coef
    if spec.net.nodes:
        eta = eta + act(zlag @ theta.net.input_weights.T) @ theta.net.output_weights
    return np.asarray(spec.link.inverse(eta), dtype=float)


def _glm_start(spec: GarnnSpec, x_eff, y_eff) -> np.ndarray:
    """Coefficient start from an iteratively reweighted least-squares GLM fit."""
    family, link = spec.family, spec.link
    n, s = x_eff.shape

    # family-safe initial means
    if family.name == "poisson" or family.name == "negbinomial":
        mu = y_eff + np.mean(y_eff) * 0.5 + 0.1
    elif family.name == "binomial":
        m = family.trials
        mu = (y_eff + 0.5) * m / (m + 1.0)
    elif family.name == "gamma":
        mu = np.maximum(y_eff, np.mean(y_eff) * 1e-3)
    else:
        mu = y_eff.astype(float).copy()
        if np.ptp(mu) == 0:
            mu = mu + 1e-6 * np.arange(n)

    beta = None
    eta = np.asarray(link.eval(mu), dtype=float)
    try:
        for _ in range(50):
            dmu = np.asarray(link.dmu_deta(eta), dtype=float)
            var = np.asarray(family.variance(mu), dtype=float)
            w = dmu * dmu / var
            z_work = eta + (y_eff - mu) / dmu
            sw = np.sqrt(np.abs(w))
            beta_new, *_ = np.linalg.lstsq(x_eff * sw[:, None], z_work * sw, rcond=None)
            eta_new = x_eff @ beta_new
            mu_new = np.asarray(link.inverse(eta_new), dtype=float)
            family.check_mean(mu_new)
            done = beta is not None and np.max(np.abs(beta_new - beta)) < 1e-10
            beta, eta, mu = beta_new, eta_new, mu_new
            if done:
                break
        return beta
    except (DomainError, np.linalg.LinAlgError):
        # fall back to an intercept-only start on the sample mean
        fallback = np.zeros(s)
        center = float(np.mean(y_eff))
        if family.name == "binomial":
            center = min(max(center, 0.01 * family.trials), 0.99 * family.trials)
        elif family.name != "normal":
            center = max(center, 0.01)
        fallback[0] = float(np.asarray(link.eval(center)))
        return fallback


def _random_weights(rng, nodes, lags):
    scale = 1.0 / math.sqrt(lags)
    return NetWeights(rng.uniform(-0.5, 0.5, (nodes, lags)) * scale,
                      rng.uniform(-0.5, 0.5, nodes) * scale)


def fit(spec: GarnnSpec, frame: SeriesFrame, init=None,
        controls: OptimizerControls | None = None, restarts: int = 5) -> FitResult:
    """Maximum-likelihood fit by BFGS with multistart over net weights.

    ``init`` may be a ParamVector used as the first start or an integer
    seed overriding the controls seed for the random restarts.  The best
    restart by final log-likelihood wins.
    """
    controls = controls or OptimizerControls()
    seed = controls.seed
    if isinstance(init, (int, np.integer)):
        seed, init = int(init), None

    y_eff, x_eff, zlag = _effective_arrays(spec, frame)
    n_eff = y_eff.shape[0]
    if n_eff < spec.n_params_total:
        raise FitError(f"{n_eff} effective observations cannot identify "
                       f"{spec.n_params_total} parameters")
    fam, link, act, trials, size = _kernel_codes(spec)
    phi_work = 1.0
    ycon = np.ascontiguousarray(spec.family.loglik_constant(y_eff, phi_work))

    def neg_loglik(flat):
        coef, iw, ow = _split_flat(flat, spec)
        ll, _ = backend.loglik_score(y_eff, x_eff, zlag, ycon, coef, iw, ow,
                                     fam, link, act, phi_work, trials, size, False)
        return -ll

    def neg_score(flat):
        coef, iw, ow = _split_flat(flat, spec)
        ll, grad = backend.loglik_score(y_eff, x_eff, zlag, ycon, coef, iw, ow,
                                        fam, link, act, phi_work, trials, size, True)
        if grad is None:
            raise FitError("score evaluation failed at an accepted point")
        return -grad

    beta0 = _glm_start(spec, x_eff, y_eff)
    rng = np.random.default_rng(seed)
    nodes, lags = spec.net.nodes, spec.net.lags

    # multistart only matters when the net makes the surface multimodal
    total = max(restarts, 1) if nodes else 1
    starts = []
    if init is not None:
        init.net.validate_for(spec.net)
        if init.coef.size != spec.n_covariates:
            raise DomainError(f"init has {init.coef.size} coefficients, "
                              f"spec needs {spec.n_covariates}")
        starts.append(init.flatten())
    while len(starts) < total:
        starts.append(ParamVector(beta0, _random_weights(rng, nodes, lags)).flatten())

    best = None
    failures = []
    for k, x0 in enumerate(starts):
        try:
            result = bfgs_minimize(neg_loglik, neg_score, x0, controls)
        except DomainError as exc:
            failures.append(f"start {k}: {exc}")
            continue
        if best is None or result.fun < best.fun:
            best = result
    if best is None or not np.isfinite(best.fun):
        raise FitError("no restart produced a finite likelihood: "
                       + "; ".join(failures or ["objective non-finite everywhere"]))

    theta = ParamVector.unflatten(best.x, spec)
    mu = _predict_mu(spec, x_eff, zlag, theta)
    loglik = -best.fun
    dispersion = None

    if spec.family.estimates_dispersion == "sigma2":
        dispersion = estimate_sigma2(y_eff - mu)
        if dispersion <= 0:
            raise FitError("degenerate fit: zero residual variance")
        ycon_hat = np.ascontiguousarray(spec.family.loglik_constant(y_eff, dispersion))
        coef, iw, ow = _split_flat(best.x, spec)
        loglik, _ = backend.loglik_score(y_eff, x_eff, zlag, ycon_hat, coef, iw, ow,
                                         fam, link, act, dispersion, trials, size, False)
    elif spec.family.estimates_dispersion == "nu":
        dev = spec.family.deviance(y_eff, mu)
        n_den = n_eff - 1
        if n_den < 1:
            raise FitError("too few observations to estimate the gamma dispersion")
        nu = estimate_gamma_dispersion(dev, n_den)
        dispersion = 1.0 / nu
        ycon_hat = np.ascontiguousarray(spec.family.loglik_constant(y_eff, dispersion))
        coef, iw, ow = _split_flat(best.x, spec)
        loglik, _ = backend.loglik_score(y_eff, x_eff, zlag, ycon_hat, coef, iw, ow,
                                         fam, link, act, dispersion, trials, size, False)

    kappa = spec.n_params_total
    return FitResult(theta=theta, dispersion=dispersion, loglik=float(loglik),
                     aic=-2.0 * float(loglik) + 2.0 * kappa,
                     converged=best.converged, iterations=best.iterations,
                     gradient_norm=best.gradient_norm, fitted=mu,
                     n_params_total=kappa, restarts_used=len(starts),
                     optimizer=best)


def estimate_sigma2(residuals) -> float:
    """Mean squared residual: the stationary point of the normal score."""
    r = np.asarray(residuals, dtype=float)
    if r.size == 0:
        raise DomainError("residual vector is empty")
    return float(np.mean(r * r))


def estimate_gamma_dispersion(deviance: float, n_eff: int) -> float:
    """Shape estimate from the deviance equation log(x) - digamma(x) = rhs.

    rhs is 2*deviance/n_eff and x is the reciprocal shape; returns the shape
    (the root's reciprocal).  The left side decreases monotonically from
    +inf to 0, so a unique root exists for any positive rhs; zero deviance
    pushes the shape out of range.
    """
    if deviance < 0:
        raise DomainError("deviance must be nonnegative")
    if n_eff < 1:
        raise DomainError("n_eff must be >= 1")
    if deviance == 0:
        raise DispersionOverflowError("zero deviance implies an unbounded shape")
    rhs = 2.0 * deviance / n_eff

    def g(x):
        return math.log(x) - digamma(x) - rhs

    lo = 1e-8
    while g(lo) <= 0 and lo > 1e-250:
        lo *= 1e-2
    hi = 1.0
    while g(hi) > 0 and hi < 1e250:
        hi *= 10.0
    root = brentq(g, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=300)
    if abs(g(root)) > 1e-10:
        raise FitError(f"dispersion equation residual {abs(g(root)):.2e} too large")
    return 1.0 / root


def profile_k(spec: GarnnSpec, frame: SeriesFrame, k_grid,
              controls: OptimizerControls | None = None, restarts: int = 5):
    """Profile the negative binomial size over a grid.

    Fits the model at each grid value and returns (best size, its fit),
    maximizing the profile log-likelihood.
    """
    if not isinstance(spec.family, NegativeBinomial):
        raise DomainError("profile_k requires a negative binomial family")
    k_grid = [float(k) for k in k_grid]
    if not k_grid:
        raise DomainError("k_grid must be nonempty")
    best_k, best_fit = None, None
    failures = []
    for k in k_grid:
        spec_k = replace(spec, family=NegativeBinomial(k))
        try:
            res = fit(spec_k, frame, controls=controls, restarts=restarts)
        except FitError as exc:
            failures.append(f"k={k}: {exc}")
            continue
        if best_fit is None or res.loglik > best_fit.loglik:
            best_k, best_fit = k, res
    if best_fit is None:
        raise FitError("all profile fits failed: " + "; ".join(failures))
    return best_k, best_fit
