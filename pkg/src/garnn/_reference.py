"""Pure-numpy implementation of the fused likelihood/score kernel.

This is the fallback backend; ``garnn._core`` is a compiled translation of
the same computation.  Both share one contract:

    loglik_score(y, X, zlag, ycon, coef, input_w, output_w,
                 family, link, activation, phi, trials, size, want_score)
        -> (loglik, score-or-None)

``y``/``ycon`` are the conditioned observations and their mu-free log
density parts, ``X`` the matching design rows, ``zlag[t, j-1]`` the
standardized series value at lag j.  A domain violation (invalid predictor,
mean outside the family's domain, or any non-finite term) yields
``(-inf, None)`` so the caller's line search can reject the point.  The
score layout is (coef, input weights row-major, output weights).
"""

import numpy as np
from scipy.special import xlogy

from .families import BINOMIAL, GAMMA, NEGBINOMIAL, NORMAL, POISSON
from .links import IDENTITY, LOG, LOGIT, RECIPROCAL
from .network import LOGISTIC, TANH

_FAIL = (-np.inf, None)


def loglik_score(y, X, zlag, ycon, coef, input_w, output_w,
                 family, link, activation, phi, trials, size, want_score):
    n_eff = y.shape[0]
    nodes, lags = input_w.shape

    with np.errstate(all="ignore"):
        if nodes:
            node_in = zlag @ input_w.T
            if activation == TANH:
                act = np.tanh(node_in)
                act_prime = 1.0 - act * act
            elif activation == LOGISTIC:
                act = np.where(node_in >= 0,
                               1.0 / (1.0 + np.exp(-np.maximum(node_in, 0))),
                               np.exp(np.minimum(node_in, 0))
                               / (1.0 + np.exp(np.minimum(node_in, 0))))
                act_prime = act * (1.0 - act)
            else:
                raise ValueError(f"unknown activation code {activation}")
            eta = X @ coef + act @ output_w
        else:
            act = np.zeros((n_eff, 0))
            act_prime = act
            eta = X @ coef

        if not np.all(np.isfinite(eta)):
            return _FAIL

        # invert the link
        if link == LOG:
            mu = np.exp(eta)
        elif link == LOGIT:
            mu = trials * np.where(eta >= 0,
                                   1.0 / (1.0 + np.exp(-np.maximum(eta, 0))),
                                   np.exp(np.minimum(eta, 0))
                                   / (1.0 + np.exp(np.minimum(eta, 0))))
        elif link == IDENTITY:
            mu = eta
        elif link == RECIPROCAL:
            if np.any(eta <= 0):
                return _FAIL
            mu = 1.0 / eta
        else:
            raise ValueError(f"unknown link code {link}")

        # mu-dependent log density
        if family == POISSON:
            terms = xlogy(y, mu) - mu
        elif family == BINOMIAL:
            p = mu / trials
            terms = xlogy(y, p) + xlogy(trials - y, 1.0 - p)
        elif family == NEGBINOMIAL:
            terms = size * np.log(size / (size + mu)) + xlogy(y, mu / (size + mu))
        elif family == NORMAL:
            r = y - mu
            terms = -r * r / (2.0 * phi)
        elif family == GAMMA:
            terms = (-y / mu - np.log(mu)) / phi
        else:
            raise ValueError(f"unknown family code {family}")

        loglik = float(np.sum(terms) + np.sum(ycon))
        if not np.isfinite(loglik):
            return _FAIL
        if not want_score:
            return loglik, None

        # diagonal weight dmu/deta / (V(mu) * phi); closed per allowed pair
        pair = (family, link)
        if pair in ((POISSON, LOG), (BINOMIAL, LOGIT), (NORMAL, IDENTITY)):
            w = np.full(n_eff, 1.0 / phi)
        elif pair == (NEGBINOMIAL, LOG):
            w = size / ((size + mu) * phi)
        elif pair == (GAMMA, RECIPROCAL):
            w = np.full(n_eff, -1.0 / phi)
        elif pair == (GAMMA, LOG):
            w = 1.0 / (mu * phi)
        else:
            raise ValueError(f"unsupported family/link pair {pair}")

        resid = w * (y - mu)
        score = np.empty(coef.size + nodes * (lags + 1))
        score[:coef.size] = X.T @ resid
        if nodes:
            d = act_prime * output_w[None, :]
            score[coef.size:coef.size + nodes * lags] = \
                ((d * resid[:, None]).T @ zlag).ravel()
            score[coef.size + nodes * lags:] = act.T @ resid
        if not np.all(np.isfinite(score)):
            return _FAIL
        return loglik, score
