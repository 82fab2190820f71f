"""Time-lagged single-hidden-layer network added to the linear predictor.

Inputs are lagged series values standardized by the training sample's mean
and standard deviation; each hidden node forms a linear combination of the
p lags, applies a bounded activation, and the node outputs are combined by
output weights.  Only bounded activations are supported.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DataError, DomainError

TANH, LOGISTIC = 0, 1


def _tanh(x):
    return np.tanh(x)


def _tanh_prime(x):
    t = np.tanh(x)
    return 1.0 - t * t


def _logistic(x):
    x = np.asarray(x, dtype=float)
    return np.where(x >= 0,
                    1.0 / (1.0 + np.exp(-np.clip(x, 0, None))),
                    np.exp(np.clip(x, None, 0)) / (1.0 + np.exp(np.clip(x, None, 0))))


def _logistic_prime(x):
    s = _logistic(x)
    return s * (1.0 - s)


ACTIVATIONS = {
    "tanh": (TANH, _tanh, _tanh_prime),
    "logistic": (LOGISTIC, _logistic, _logistic_prime),
}


@dataclass(frozen=True)
class NetSpec:
    """Architecture of the lagged network.

    lags: number of lagged inputs p (>= 1).
    nodes: hidden node count; 0 removes the network entirely, leaving a
        pure generalized linear model.
    activation: "tanh" or "logistic"; both are bounded by 1 in magnitude.
    """

    lags: int
    nodes: int
    activation: str = "tanh"

    def __post_init__(self):
        if self.lags < 1:
            raise DomainError("lags must be >= 1")
        if self.nodes < 0:
            raise DomainError("nodes must be >= 0")
        if self.activation not in ACTIVATIONS:
            raise DomainError(f"unknown activation {self.activation!r}; "
                              f"choose from {sorted(ACTIVATIONS)}")

    @property
    def activation_code(self) -> int:
        return ACTIVATIONS[self.activation][0]

    @property
    def n_weights(self) -> int:
        return self.nodes * (self.lags + 1)


@dataclass(frozen=True)
class NetWeights:
    """Connection weights: input_weights is nodes x lags, output_weights is nodes."""

    input_weights: np.ndarray
    output_weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.input_weights, dtype=float)
        if w.ndim == 1:
            w = w.reshape(1, -1) if w.size else w.reshape(0, 0)
        r = np.asarray(self.output_weights, dtype=float).reshape(-1)
        if w.shape[0] != r.shape[0]:
            raise DomainError(f"input_weights has {w.shape[0]} rows but "
                              f"output_weights has {r.shape[0]} entries")
        object.__setattr__(self, "input_weights", w)
        object.__setattr__(self, "output_weights", r)

    def validate_for(self, spec: NetSpec):
        if self.output_weights.shape != (spec.nodes,):
            raise DomainError(f"expected {spec.nodes} output weights, "
                              f"got {self.output_weights.shape[0]}")
        if spec.nodes and self.input_weights.shape != (spec.nodes, spec.lags):
            raise DomainError(f"expected input weights {(spec.nodes, spec.lags)}, "
                              f"got {self.input_weights.shape}")


@dataclass(frozen=True)
class Standardizer:
    """Frozen sample mean / standard deviation used to scale lag inputs."""

    mean: float
    sd: float

    def __post_init__(self):
        if not np.isfinite(self.sd) or self.sd <= 0:
            raise DataError("standardizer requires sd > 0")

    def transform(self, values):
        return (np.asarray(values, dtype=float) - self.mean) / self.sd


def standardize(series):
    """Center and scale a series by its sample mean and sd (denominator n-1).

    Returns (Standardizer, standardized series).  A constant series has no
    scale and is rejected.
    """
    y = np.asarray(series, dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise DataError("standardize requires a 1-d series of length >= 2")
    mean = float(np.mean(y))
    sd = float(np.std(y, ddof=1))
    if sd == 0.0:
        raise DataError("cannot standardize a constant series")
    std = Standardizer(mean, sd)
    return std, std.transform(y)


def _check_lags(spec: NetSpec, lags) -> np.ndarray:
    z = np.asarray(lags, dtype=float)
    if z.shape != (spec.lags,):
        raise DomainError(f"expected {spec.lags} lagged inputs, got shape {z.shape}")
    return z


def net_forward(spec: NetSpec, weights: NetWeights, lags) -> float:
    """Network output for one time point given its standardized lag vector.

    lags[j-1] holds the standardized value at lag j.  Returns 0 when the
    node count is zero.
    """
    weights.validate_for(spec)
    z = _check_lags(spec, lags)
    if spec.nodes == 0:
        return 0.0
    _, act, _ = ACTIVATIONS[spec.activation]
    node_inputs = weights.input_weights @ z
    return float(weights.output_weights @ act(node_inputs))


def net_gradients(spec: NetSpec, weights: NetWeights, lags):
    """Partial derivatives of the network output in its weights.

    Returns (d_out/d_output_weights, d_out/d_input_weights): the first is
    the vector of node activations, the second the matrix
    output_weight[i] * activation'(node input i) * lags[j-1].
    """
    weights.validate_for(spec)
    z = _check_lags(spec, lags)
    if spec.nodes == 0:
        return np.zeros(0), np.zeros((0, spec.lags))
    _, act, act_prime = ACTIVATIONS[spec.activation]
    node_inputs = weights.input_weights @ z
    d_rho = act(node_inputs)
    d_omega = (weights.output_weights * act_prime(node_inputs))[:, None] * z[None, :]
    return d_rho, d_omega
