"""Link functions mapping conditional means to the predictor scale.

Every link is monotone and differentiable on its domain; ``eval`` and
``inverse`` are mutual inverses and ``dmu_deta`` is the derivative of the
inverse, d(mean)/d(predictor), evaluated at a predictor value.
"""

from abc import ABC, abstractmethod

import numpy as np

from .exceptions import DomainError

# integer codes shared with the compiled backend
LOG, LOGIT, IDENTITY, RECIPROCAL = 0, 1, 2, 3


def _as_float(x):
    arr = np.asarray(x, dtype=float)
    return arr if arr.ndim else float(arr)


class Link(ABC):
    """Base class for link functions."""

    name: str
    code: int

    @abstractmethod
    def eval(self, mu):
        """Map mean values to the predictor scale."""

    @abstractmethod
    def inverse(self, eta):
        """Map predictor values back to the mean scale."""

    @abstractmethod
    def dmu_deta(self, eta):
        """Derivative of the inverse link at a predictor value."""

    def __repr__(self):
        return f"{type(self).__name__}()"


class Log(Link):
    """eta = log(mu), for positive means."""

    name = "log"
    code = LOG

    def eval(self, mu):
        mu = np.asarray(mu, dtype=float)
        if np.any(mu <= 0):
            raise DomainError("log link requires mu > 0")
        return _as_float(np.log(mu))

    def inverse(self, eta):
        return _as_float(np.exp(np.asarray(eta, dtype=float)))

    def dmu_deta(self, eta):
        return _as_float(np.exp(np.asarray(eta, dtype=float)))


class Logit(Link):
    """eta = log(mu / (trials - mu)), for means in (0, trials).

    The inverse is trials / (1 + exp(-eta)); with trials = 1 this is the
    ordinary logistic function.
    """

    name = "logit"
    code = LOGIT

    def __init__(self, trials: float = 1.0):
        if trials <= 0:
            raise DomainError("logit link requires trials > 0")
        self.trials = float(trials)

    def eval(self, mu):
        mu = np.asarray(mu, dtype=float)
        m = self.trials
        if np.any(mu <= 0) or np.any(mu >= m):
            raise DomainError(f"logit link requires 0 < mu < {m}")
        return _as_float(np.log(mu / (m - mu)))

    def inverse(self, eta):
        eta = np.asarray(eta, dtype=float)
        # branch on sign so exp never overflows
        out = np.where(eta >= 0,
                       1.0 / (1.0 + np.exp(-np.clip(eta, 0, None))),
                       np.exp(np.clip(eta, None, 0)) / (1.0 + np.exp(np.clip(eta, None, 0))))
        return _as_float(self.trials * out)

    def dmu_deta(self, eta):
        mu = np.asarray(self.inverse(eta), dtype=float)
        return _as_float(mu * (1.0 - mu / self.trials))

    def __repr__(self):
        return f"Logit(trials={self.trials!r})"


class Identity(Link):
    """eta = mu."""

    name = "identity"
    code = IDENTITY

    def eval(self, mu):
        return _as_float(mu)

    def inverse(self, eta):
        return _as_float(eta)

    def dmu_deta(self, eta):
        eta = np.asarray(eta, dtype=float)
        return _as_float(np.ones_like(eta))


class Reciprocal(Link):
    """eta = 1 / mu, for positive means.

    Predictor values eta <= 0 have no valid mean for positive-mean families;
    ``inverse`` rejects them so the optimizer's line search can back off.
    """

    name = "reciprocal"
    code = RECIPROCAL

    def eval(self, mu):
        mu = np.asarray(mu, dtype=float)
        if np.any(mu <= 0):
            raise DomainError("reciprocal link requires mu > 0")
        return _as_float(1.0 / mu)

    def inverse(self, eta):
        eta = np.asarray(eta, dtype=float)
        if np.any(eta <= 0):
            raise DomainError("reciprocal link requires eta > 0 for a positive mean")
        return _as_float(1.0 / eta)

    def dmu_deta(self, eta):
        eta = np.asarray(eta, dtype=float)
        if np.any(eta <= 0):
            raise DomainError("reciprocal link requires eta > 0 for a positive mean")
        return _as_float(-1.0 / (eta * eta))


LINKS = {cls.name: cls for cls in (Log, Logit, Identity, Reciprocal)}
