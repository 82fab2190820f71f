"""Model selection: AIC, nested-model deviance tests and the two-stage driver.

Stage one picks the lag order, node count (and, for the negative binomial,
the size parameter) by AIC under the maximal linear predictor.  Stage two
runs an analysis of deviance over a strictly nested ladder of predictor
subsets, dropping terms until a test turns significant.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc, gammaincc

from .exceptions import DomainError, FitError
from .families import NegativeBinomial
from .model import FitResult, GarnnSpec, ParamVector, SeriesFrame, fit
from .network import NetSpec
from .optimize import OptimizerControls


def aic(loglik: float, kappa: int) -> float:
    """Akaike information criterion: -2*loglik + 2*kappa."""
    if kappa < 1:
        raise DomainError("kappa must be >= 1")
    return -2.0 * float(loglik) + 2.0 * int(kappa)


def chisq_upper_tail(x: float, df: float) -> float:
    """P(Chi2_df > x) via the regularized upper incomplete gamma function."""
    if df <= 0:
        raise DomainError("df must be positive")
    if x <= 0:
        return 1.0
    return float(gammaincc(df / 2.0, x / 2.0))


def f_upper_tail(x: float, df1: float, df2: float) -> float:
    """P(F_{df1,df2} > x) via the regularized incomplete beta function."""
    if df1 <= 0 or df2 <= 0:
        raise DomainError("degrees of freedom must be positive")
    if x <= 0:
        return 1.0
    return float(betainc(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * x)))


@dataclass(frozen=True)
class DevianceTest:
    statistic: float
    df: int
    p_value: float
    kind: str  # "chisq" or "f"
    df_denom: int | None = None


def deviance_chisq_test(loglik0: float, kappa0: int, loglik1: float, kappa1: int,
                        phi: float = 1.0) -> DevianceTest:
    """Deviance test of a nested pair when the dispersion is known.

    The statistic is the scaled deviance drop 2*(loglik1 - loglik0)/phi,
    referred to a chi-squared distribution with kappa1 - kappa0 degrees of
    freedom.
    """
    if kappa1 <= kappa0:
        raise DomainError("the larger model must have more parameters")
    if phi <= 0:
        raise DomainError("phi must be positive")
    statistic = 2.0 * (float(loglik1) - float(loglik0)) / phi
    df = int(kappa1) - int(kappa0)
    return DevianceTest(statistic=statistic, df=df,
                        p_value=chisq_upper_tail(statistic, df), kind="chisq")


def deviance_f_test(dev0: float, dev1: float, kappa0: int, kappa1: int,
                    phi_hat: float, n_eff: int) -> DevianceTest:
    """Deviance F test of a nested pair under estimated dispersion.

    statistic = (dev0 - dev1) / (phi_hat * (kappa1 - kappa0)) with
    (kappa1 - kappa0, n_eff - kappa1) degrees of freedom.
    """
    if kappa1 <= kappa0:
        raise DomainError("the larger model must have more parameters")
    if phi_hat <= 0:
        raise DomainError("phi_hat must be positive")
    df1 = int(kappa1) - int(kappa0)
    df2 = int(n_eff) - int(kappa1)
    if df2 <= 0:
        raise DomainError("denominator degrees of freedom must be positive")
    statistic = (float(dev0) - float(dev1)) / (phi_hat * df1)
    return DevianceTest(statistic=statistic, df=df1, df_denom=df2,
                        p_value=f_upper_tail(statistic, df1, df2), kind="f")


@dataclass
class Stage1Cell:
    lags: int
    nodes: int
    size: float | None
    aic: float
    loglik: float
    converged: bool
    error: str | None = None


@dataclass
class NestedStep:
    label: str
    columns0: tuple
    columns1: tuple
    test: DevianceTest


@dataclass
class SelectionReport:
    stage1: list
    chosen_cell: Stage1Cell
    stage2: list
    chosen_columns: tuple
    final_fit: FitResult
    alpha: float
    stage2_fits: list = field(default_factory=list, repr=False)


def _validate_nested(subsets):
    cleaned = [tuple(int(c) for c in cols) for cols in subsets]
    if not cleaned:
        raise DomainError("nested_predictors must be nonempty")
    for a, b in zip(cleaned, cleaned[1:]):
        if not set(a) < set(b):
            raise DomainError(f"predictor subsets must be strictly nested: "
                              f"{a} is not contained in {b}")
    return cleaned


def two_stage_select(frame: SeriesFrame, family, link, stage1_grid,
                     nested_predictors, activation: str = "tanh",
                     alpha: float = 0.05,
                     controls: OptimizerControls | None = None,
                     restarts: int = 5) -> SelectionReport:
    """Two-stage selection: AIC grid search, then analysis of deviance.

    stage1_grid is an iterable of (lags, nodes) or (lags, nodes, size)
    tuples evaluated under the full design matrix of ``frame``;
    nested_predictors is an ordered list of strictly nested column-index
    subsets (the last one is the maximal model).  Stage two walks the
    ladder from the top and stops dropping terms at the first test
    significant at ``alpha``.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must be in (0, 1)")
    nested = _validate_nested(nested_predictors)
    n_cols = frame.X.shape[1]
    if any(c < 0 or c >= n_cols for cols in nested for c in cols):
        raise DomainError("nested predictor column index out of range")

    cells = []
    for cell in stage1_grid:
        lags, nodes, size = (*cell, None)[:3]
        fam = NegativeBinomial(size) if size is not None else family
        spec = GarnnSpec.create(fam, NetSpec(int(lags), int(nodes), activation),
                                n_covariates=n_cols, link=link)
        try:
            res = fit(spec, frame, controls=controls, restarts=restarts)
            cells.append(Stage1Cell(int(lags), int(nodes), size,
                                    res.aic, res.loglik, res.converged))
        except FitError as exc:
            cells.append(Stage1Cell(int(lags), int(nodes), size,
                                    float("inf"), float("-inf"), False, str(exc)))
    if not cells or all(c.error is not None for c in cells):
        raise FitError("every stage-one fit failed")
    chosen_cell = min((c for c in cells if c.error is None), key=lambda c: c.aic)

    fam = (NegativeBinomial(chosen_cell.size) if chosen_cell.size is not None
           else family)
    net = NetSpec(chosen_cell.lags, chosen_cell.nodes, activation)

    def _transfer(result, from_cols, to_cols):
        """Re-express a fit's coefficients on another column subset."""
        coef = np.zeros(len(to_cols))
        positions = {c: j for j, c in enumerate(to_cols)}
        for c, value in zip(from_cols, result.theta.coef):
            if c in positions:
                coef[positions[c]] = value
        return ParamVector(coef, result.theta.net)

    def _ladder_fit(i, init, n_starts):
        sub = frame.with_columns(nested[i])
        spec = GarnnSpec.create(fam, net, n_covariates=len(nested[i]), link=link)
        return fit(spec, sub, init=init, controls=controls, restarts=n_starts)

    # up pass with warm starts from the previous (embedded) model, then a
    # down pass polishing each model from the truncated larger optimum, and
    # a final up pass that guarantees nested log-likelihoods are monotone
    fits = []
    for i in range(len(nested)):
        init = _transfer(fits[-1], nested[i - 1], nested[i]) if fits else None
        fits.append(_ladder_fit(i, init, restarts))
    for i in range(len(nested) - 2, -1, -1):
        cand = _ladder_fit(i, _transfer(fits[i + 1], nested[i + 1], nested[i]), 1)
        if cand.loglik > fits[i].loglik:
            fits[i] = cand
    for i in range(1, len(nested)):
        cand = _ladder_fit(i, _transfer(fits[i - 1], nested[i - 1], nested[i]), 1)
        if cand.loglik > fits[i].loglik:
            fits[i] = cand

    m = net.lags
    n_eff = len(frame) - m
    steps = []
    for i in range(len(nested) - 1):
        small, large = fits[i], fits[i + 1]
        label = f"{chr(ord('A') + i)} versus {chr(ord('A') + i + 1)}"
        if family.estimates_dispersion:
            y_eff = frame.y[m:]
            dev0 = fam.deviance(y_eff, small.fitted)
            dev1 = fam.deviance(y_eff, large.fitted)
            test = deviance_f_test(dev0, dev1, small.n_params_total,
                                   large.n_params_total,
                                   large.dispersion, n_eff)
        else:
            test = deviance_chisq_test(small.loglik, small.n_params_total,
                                       large.loglik, large.n_params_total)
        steps.append(NestedStep(label, tuple(nested[i]), tuple(nested[i + 1]), test))

    # walk down from the maximal model; stop at the first significant test
    chosen_idx = len(nested) - 1
    for i in range(len(nested) - 2, -1, -1):
        if steps[i].test.p_value < alpha:
            break
        chosen_idx = i

    return SelectionReport(stage1=cells, chosen_cell=chosen_cell, stage2=steps,
                           chosen_columns=tuple(nested[chosen_idx]),
                           final_fit=fits[chosen_idx], alpha=alpha,
                           stage2_fits=fits)
