"""Exponential-family distributions for conditional time-series models.

Each family provides its conditional log-density, variance function,
deviance, support checks and a sampler.  Densities are written as
exp{(y*alpha - b(alpha))/phi + d(y, phi)} with mean b'(alpha) and variance
phi * V(mu); the dispersion phi is 1 and known for the count families
(the negative binomial carries its size parameter instead), sigma^2 for the
normal and 1/shape for the gamma.
"""

import math
from abc import ABC, abstractmethod

import numpy as np
from scipy.special import gammaln, xlogy

from .exceptions import DomainError, SupportError
from .links import Identity, Log, Logit, Reciprocal

# integer codes shared with the compiled backend
POISSON, BINOMIAL, NEGBINOMIAL, NORMAL, GAMMA = 0, 1, 2, 3, 4


class Family(ABC):
    """Base class for conditional response distributions."""

    name: str
    code: int
    #: name of the dispersion quantity estimated after fitting, or None
    estimates_dispersion = None

    @abstractmethod
    def default_link(self):
        """The link used by default for this family."""

    @abstractmethod
    def check_support(self, y):
        """Raise SupportError if any observation is outside the support."""

    @abstractmethod
    def check_mean(self, mu):
        """Raise DomainError if any mean is outside the mean domain."""

    @abstractmethod
    def loglik_term(self, y, mu, phi=1.0):
        """Log conditional density log f(y | mean mu, dispersion phi)."""

    @abstractmethod
    def variance(self, mu):
        """Variance function V(mu) (variance is phi * V(mu))."""

    @abstractmethod
    def deviance(self, y, mu):
        """Deviance of the fit mu against observations y (unit dispersion)."""

    @abstractmethod
    def sample(self, rng, mu, phi=1.0):
        """Draw one observation per mean from the family."""

    @abstractmethod
    def loglik_constant(self, y, phi=1.0):
        """Per-observation part of the log density that does not involve mu.

        Backends add this to the mu-dependent part; the split must satisfy
        loglik_term = constant + mu-part for the given phi.
        """

    def _validate_pair(self, y, mu):
        y = np.asarray(y, dtype=float)
        mu = np.asarray(mu, dtype=float)
        if y.shape != mu.shape:
            raise DomainError(f"length mismatch: y {y.shape} vs mu {mu.shape}")
        self.check_support(y)
        self.check_mean(mu)
        return y, mu

    def __repr__(self):
        return f"{type(self).__name__}()"


class Poisson(Family):
    """Poisson counts; mean mu > 0, dispersion fixed at 1."""

    name = "poisson"
    code = POISSON

    def default_link(self):
        return Log()

    def check_support(self, y):
        y = np.asarray(y)
        if np.any(y < 0) or np.any(y != np.floor(y)):
            raise SupportError("poisson requires nonnegative integer observations")

    def check_mean(self, mu):
        if np.any(np.asarray(mu) <= 0):
            raise DomainError("poisson requires mu > 0")

    def loglik_term(self, y, mu, phi=1.0):
        y, mu = self._validate_pair(y, mu)
        out = xlogy(y, mu) - mu - gammaln(y + 1.0)
        return out if out.ndim else float(out)

    def variance(self, mu):
        self.check_mean(mu)
        mu = np.asarray(mu, dtype=float)
        return mu if mu.ndim else float(mu)

    def deviance(self, y, mu):
        y, mu = self._validate_pair(y, mu)
        return float(2.0 * np.sum(xlogy(y, y / mu) - (y - mu)))

    def sample(self, rng, mu, phi=1.0):
        return np.asarray(rng.poisson(mu), dtype=float)

    def loglik_constant(self, y, phi=1.0):
        y = np.asarray(y, dtype=float)
        return -gammaln(y + 1.0)


class Binomial(Family):
    """Binomial counts out of a fixed number of trials; mean in (0, trials)."""

    name = "binomial"
    code = BINOMIAL

    def __init__(self, trials: int):
        if trials < 1 or int(trials) != trials:
            raise DomainError("binomial requires trials >= 1")
        self.trials = int(trials)

    def default_link(self):
        return Logit(self.trials)

    def check_support(self, y):
        y = np.asarray(y)
        if np.any(y < 0) or np.any(y > self.trials) or np.any(y != np.floor(y)):
            raise SupportError(f"binomial requires integer observations in 0..{self.trials}")

    def check_mean(self, mu):
        mu = np.asarray(mu)
        if np.any(mu <= 0) or np.any(mu >= self.trials):
            raise DomainError(f"binomial requires 0 < mu < {self.trials}")

    def loglik_term(self, y, mu, phi=1.0):
        y, mu = self._validate_pair(y, mu)
        m = float(self.trials)
        out = (xlogy(y, mu / m) + xlogy(m - y, 1.0 - mu / m)
               + gammaln(m + 1.0) - gammaln(y + 1.0) - gammaln(m - y + 1.0))
        return out if out.ndim else float(out)

    def variance(self, mu):
        self.check_mean(mu)
        mu = np.asarray(mu, dtype=float)
        out = mu * (1.0 - mu / self.trials)
        return out if out.ndim else float(out)

    def deviance(self, y, mu):
        y, mu = self._validate_pair(y, mu)
        m = float(self.trials)
        return float(2.0 * np.sum(xlogy(y, y / mu) + xlogy(m - y, (m - y) / (m - mu))))

    def sample(self, rng, mu, phi=1.0):
        return np.asarray(rng.binomial(self.trials, np.asarray(mu) / self.trials),
                          dtype=float)

    def loglik_constant(self, y, phi=1.0):
        y = np.asarray(y, dtype=float)
        m = float(self.trials)
        return gammaln(m + 1.0) - gammaln(y + 1.0) - gammaln(m - y + 1.0)

    def __repr__(self):
        return f"Binomial(trials={self.trials})"


class NegativeBinomial(Family):
    """Negative binomial counts with known size k; variance mu + mu^2/k."""

    name = "negbinomial"
    code = NEGBINOMIAL

    def __init__(self, size: float):
        if size <= 0:
            raise DomainError("negative binomial requires size > 0")
        self.size = float(size)

    def default_link(self):
        return Log()

    def check_support(self, y):
        y = np.asarray(y)
        if np.any(y < 0) or np.any(y != np.floor(y)):
            raise SupportError("negative binomial requires nonnegative integer observations")

    def check_mean(self, mu):
        if np.any(np.asarray(mu) <= 0):
            raise DomainError("negative binomial requires mu > 0")

    def loglik_term(self, y, mu, phi=1.0):
        y, mu = self._validate_pair(y, mu)
        k = self.size
        out = (gammaln(k + y) - gammaln(k) - gammaln(y + 1.0)
               + k * np.log(k / (mu + k)) + xlogy(y, mu / (mu + k)))
        return out if out.ndim else float(out)

    def variance(self, mu):
        self.check_mean(mu)
        mu = np.asarray(mu, dtype=float)
        out = mu + mu * mu / self.size
        return out if out.ndim else float(out)

    def deviance(self, y, mu):
        y, mu = self._validate_pair(y, mu)
        k = self.size
        return float(2.0 * np.sum(xlogy(y, y / mu) - (y + k) * np.log((y + k) / (mu + k))))

    def sample(self, rng, mu, phi=1.0):
        k = self.size
        p = k / (k + np.asarray(mu, dtype=float))
        return np.asarray(rng.negative_binomial(k, p), dtype=float)

    def loglik_constant(self, y, phi=1.0):
        y = np.asarray(y, dtype=float)
        k = self.size
        return gammaln(k + y) - gammaln(k) - gammaln(y + 1.0)

    def __repr__(self):
        return f"NegativeBinomial(size={self.size!r})"


class Normal(Family):
    """Normal responses; dispersion phi is the variance sigma^2."""

    name = "normal"
    code = NORMAL
    estimates_dispersion = "sigma2"

    def default_link(self):
        return Identity()

    def check_support(self, y):
        pass

    def check_mean(self, mu):
        pass

    def loglik_term(self, y, mu, phi=1.0):
        y, mu = self._validate_pair(y, mu)
        if phi <= 0:
            raise DomainError("normal requires phi > 0")
        out = -0.5 * np.log(2.0 * np.pi * phi) - (y - mu) ** 2 / (2.0 * phi)
        return out if out.ndim else float(out)

    def variance(self, mu):
        mu = np.asarray(mu, dtype=float)
        out = np.ones_like(mu)
        return out if out.ndim else float(out)

    def deviance(self, y, mu):
        y, mu = self._validate_pair(y, mu)
        return float(np.sum((y - mu) ** 2))

    def sample(self, rng, mu, phi=1.0):
        return rng.normal(mu, math.sqrt(phi))

    def loglik_constant(self, y, phi=1.0):
        y = np.asarray(y, dtype=float)
        return np.full(y.shape, -0.5 * math.log(2.0 * math.pi * phi))


class Gamma(Family):
    """Gamma responses with shape nu = 1/phi and mean mu > 0."""

    name = "gamma"
    code = GAMMA
    estimates_dispersion = "nu"

    def default_link(self):
        return Reciprocal()

    def check_support(self, y):
        if np.any(np.asarray(y) <= 0):
            raise SupportError("gamma requires positive observations")

    def check_mean(self, mu):
        if np.any(np.asarray(mu) <= 0):
            raise DomainError("gamma requires mu > 0")

    def loglik_term(self, y, mu, phi=1.0):
        y, mu = self._validate_pair(y, mu)
        if phi <= 0:
            raise DomainError("gamma requires phi > 0")
        nu = 1.0 / phi
        out = (nu * (-y / mu - np.log(mu)) + nu * np.log(nu * y)
               - np.log(y) - gammaln(nu))
        return out if out.ndim else float(out)

    def variance(self, mu):
        self.check_mean(mu)
        mu = np.asarray(mu, dtype=float)
        out = mu * mu
        return out if out.ndim else float(out)

    def deviance(self, y, mu):
        y, mu = self._validate_pair(y, mu)
        return float(2.0 * np.sum(np.log(mu / y) + (y - mu) / mu))

    def sample(self, rng, mu, phi=1.0):
        nu = 1.0 / phi
        return rng.gamma(nu, np.asarray(mu, dtype=float) / nu)

    def loglik_constant(self, y, phi=1.0):
        y = np.asarray(y, dtype=float)
        nu = 1.0 / phi
        return nu * np.log(nu * y) - np.log(y) - gammaln(nu)


FAMILIES = {
    "poisson": Poisson,
    "binomial": Binomial,
    "negbinomial": NegativeBinomial,
    "normal": Normal,
    "gamma": Gamma,
}

#: family name -> link names accepted for it (first entry is the default)
ALLOWED_LINKS = {
    "poisson": ("log",),
    "binomial": ("logit",),
    "negbinomial": ("log",),
    "normal": ("identity",),
    "gamma": ("reciprocal", "log"),
}
