# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled likelihood/score kernel; see garnn._reference for the contract.

One fused pass per call: predictor, link inversion, log density and score
accumulation happen per time point with no temporaries, which is what makes
repeated evaluation inside the optimizer cheap.
"""

import numpy as np

from libc.math cimport exp, isfinite, log, tanh, INFINITY

cdef int POISSON = 0, BINOMIAL = 1, NEGBINOMIAL = 2, NORMAL = 3, GAMMA = 4
cdef int LOG = 0, LOGIT = 1, IDENTITY = 2, RECIPROCAL = 3
cdef int TANH = 0, LOGISTIC = 1


cdef inline double _sigmoid(double x) noexcept nogil:
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    return exp(x) / (1.0 + exp(x))


def loglik_score(double[::1] y, double[:, ::1] X, double[:, ::1] zlag,
                 double[::1] ycon, double[::1] coef,
                 double[:, ::1] input_w, double[::1] output_w,
                 int family, int link, int activation, double phi,
                 double trials, double size, bint want_score):
    cdef Py_ssize_t n_eff = y.shape[0]
    cdef Py_ssize_t n_coef = coef.shape[0]
    cdef Py_ssize_t nodes = input_w.shape[0]
    cdef Py_ssize_t lags = input_w.shape[1]
    cdef Py_ssize_t t, i, j

    if family < POISSON or family > GAMMA:
        raise ValueError(f"unknown family code {family}")
    if link < LOG or link > RECIPROCAL:
        raise ValueError(f"unknown link code {link}")
    if activation != TANH and activation != LOGISTIC:
        raise ValueError(f"unknown activation code {activation}")

    cdef bint canonical = ((family == POISSON and link == LOG)
                           or (family == BINOMIAL and link == LOGIT)
                           or (family == NORMAL and link == IDENTITY))
    if want_score and not canonical:
        if not ((family == NEGBINOMIAL and link == LOG)
                or (family == GAMMA and link == RECIPROCAL)
                or (family == GAMMA and link == LOG)):
            raise ValueError(f"unsupported family/link pair ({family}, {link})")

    score_arr = np.zeros(n_coef + nodes * (lags + 1)) if want_score else np.zeros(1)
    cdef double[::1] score = score_arr
    act_arr = np.empty(nodes if nodes else 1)
    actp_arr = np.empty(nodes if nodes else 1)
    cdef double[::1] act = act_arr
    cdef double[::1] actp = actp_arr

    cdef double loglik = 0.0
    cdef double eta, mu, term, w, resid, g, h, hp, d, p, yt
    cdef bint failed = False

    with nogil:
        for t in range(n_eff):
            yt = y[t]
            eta = 0.0
            for j in range(n_coef):
                eta += X[t, j] * coef[j]
            for i in range(nodes):
                g = 0.0
                for j in range(lags):
                    g += input_w[i, j] * zlag[t, j]
                if activation == TANH:
                    h = tanh(g)
                    hp = 1.0 - h * h
                else:
                    h = _sigmoid(g)
                    hp = h * (1.0 - h)
                act[i] = h
                actp[i] = hp
                eta += output_w[i] * h
            if not isfinite(eta):
                failed = True
                break

            if link == LOG:
                mu = exp(eta)
            elif link == LOGIT:
                mu = trials * _sigmoid(eta)
            elif link == IDENTITY:
                mu = eta
            else:
                if eta <= 0.0:
                    failed = True
                    break
                mu = 1.0 / eta

            if family == POISSON:
                term = (yt * log(mu) if yt > 0.0 else 0.0) - mu
            elif family == BINOMIAL:
                p = mu / trials
                term = ((yt * log(p) if yt > 0.0 else 0.0)
                        + ((trials - yt) * log(1.0 - p) if yt < trials else 0.0))
            elif family == NEGBINOMIAL:
                term = (size * log(size / (size + mu))
                        + (yt * log(mu / (size + mu)) if yt > 0.0 else 0.0))
            elif family == NORMAL:
                term = -(yt - mu) * (yt - mu) / (2.0 * phi)
            else:
                term = (-yt / mu - log(mu)) / phi
            term += ycon[t]
            if not isfinite(term):
                failed = True
                break
            loglik += term

            if want_score:
                if canonical:
                    w = 1.0 / phi
                elif family == NEGBINOMIAL:
                    w = size / ((size + mu) * phi)
                elif link == RECIPROCAL:
                    w = -1.0 / phi
                else:
                    w = 1.0 / (mu * phi)
                resid = w * (yt - mu)
                for j in range(n_coef):
                    score[j] += X[t, j] * resid
                for i in range(nodes):
                    d = output_w[i] * actp[i] * resid
                    for j in range(lags):
                        score[n_coef + i * lags + j] += d * zlag[t, j]
                    score[n_coef + nodes * lags + i] += act[i] * resid

    if failed or not isfinite(loglik):
        return -INFINITY, None
    if not want_score:
        return loglik, None
    for j in range(n_coef + nodes * (lags + 1)):
        if not isfinite(score[j]):
            return -INFINITY, None
    return loglik, score_arr
