"""Analytic-score verification against central finite differences.

Each case simulates a short series from a family, perturbs the parameters,
and compares the analytic score of the conditional log-likelihood with a
finite-difference gradient.  Used by the gradcheck CLI command and by the
test suite.
"""

import numpy as np

from .families import Binomial, Gamma, NegativeBinomial, Normal, Poisson
from .links import Log
from .model import GarnnSpec, ParamVector, SeriesFrame, conditional_loglik, score
from .network import NetSpec, NetWeights
from .forecasting import simulate
from .optimize import finite_diff_grad

# family factory, link override (None = default), safe base intercept,
# coefficient perturbation scale, net weight scale
CASES = {
    "poisson": (lambda: Poisson(), None, 1.1, 0.2, 0.3),
    "binomial": (lambda: Binomial(8), None, 0.0, 0.2, 0.3),
    "negbinomial": (lambda: NegativeBinomial(1.5), None, 1.1, 0.2, 0.3),
    "normal": (lambda: Normal(), None, 0.0, 0.3, 0.4),
    "gamma": (lambda: Gamma(), None, 0.6, 0.03, 0.05),
    "gamma-log": (lambda: Gamma(), Log(), 0.7, 0.2, 0.3),
}


def gradient_check_case(case: str, lags: int, nodes: int, n: int, seed: int) -> dict:
    """One simulate-perturb-compare round; returns the relative error."""
    make_family, link, base, coef_scale, w_scale = CASES[case]
    family = make_family()
    rng = np.random.default_rng(seed)

    gen_net = NetSpec(lags, 1, "tanh")
    gen_theta = ParamVector([base], NetWeights(
        rng.uniform(-0.5, 0.5, (1, lags)), rng.uniform(-w_scale, w_scale, 1)))
    gen_spec = GarnnSpec.create(family, gen_net, n_covariates=1, link=link)
    sim = simulate(gen_spec, gen_theta, phi=1.0, n=n, burn_in=50,
                   seed=int(rng.integers(2 ** 31)))

    # evaluation design: intercept plus one bounded covariate
    X = np.column_stack([np.ones(n), np.cos(2 * np.pi * np.arange(1, n + 1) / 12)])
    frame = SeriesFrame.from_series(sim.y, X)
    net = NetSpec(lags, nodes, "tanh" if seed % 2 == 0 else "logistic")
    spec = GarnnSpec.create(family, net, n_covariates=2, link=link)

    coef = np.array([base, 0.0]) + rng.uniform(-coef_scale, coef_scale, 2)
    weights = NetWeights(rng.uniform(-0.6, 0.6, (nodes, lags)),
                         rng.uniform(-w_scale, w_scale, nodes))
    theta = ParamVector(coef, weights)

    analytic = score(spec, frame, theta)
    flat = theta.flatten()
    numeric = finite_diff_grad(
        lambda x: conditional_loglik(spec, frame, ParamVector.unflatten(x, spec)),
        flat, step=1e-6)
    rel = float(np.max(np.abs(analytic - numeric))
                / max(1.0, float(np.max(np.abs(analytic)))))
    return {"case": case, "lags": lags, "nodes": nodes, "n": n,
            "seed": seed, "rel_error": rel}


def gradient_check_report(n: int = 60, draws: int = 10, seed: int = 0,
                          tolerance: float = 1e-6, cases=None) -> dict:
    """Run ``draws`` rounds per family case and summarize pass/fail."""
    cases = list(cases or CASES)
    shapes = [(1, 0), (1, 1), (2, 3), (1, 3), (2, 1)]
    results = []
    lines = []
    for case in cases:
        worst = 0.0
        for d in range(draws):
            lags, nodes = shapes[d % len(shapes)]
            out = gradient_check_case(case, lags, nodes, n, seed * 1000 + d)
            results.append(out)
            worst = max(worst, out["rel_error"])
        lines.append(f"{case:<12} worst relative error over {draws} draws: "
                     f"{worst:.3e}")
    max_rel = max(r["rel_error"] for r in results)
    return {"cases": results, "lines": lines, "max_rel_error": max_rel,
            "passed": bool(max_rel < tolerance)}
