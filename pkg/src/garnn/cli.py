"""Command-line surface: fit, select, forecast, simulate, gradcheck.

Every run is driven by a JSON configuration file; any configuration key can
be overridden by a flag of the same name (list-valued flags take JSON, e.g.
--select-lags "[1,2]").  Exit status: 0 success, 2 validation error,
3 numeric failure.
"""

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import backend
from .exceptions import ConfigError, DataError, DomainError, GarnnError
from .forecasting import ForecastResult, forecast, simulate
from .io import (_STR_FIELDS, RunConfig, build_covariates, design_from,
                 load_series, write_plot_data, write_result)
from .model import GarnnSpec, ParamVector, SeriesFrame, fit
from .network import NetSpec, NetWeights
from .optimize import OptimizerControls
from .selection import two_stage_select

VALIDATION_EXIT = 2
NUMERIC_EXIT = 3


def _controls(cfg: RunConfig) -> OptimizerControls:
    return OptimizerControls(gradient_tolerance=cfg.gradient_tolerance,
                             max_iterations=cfg.max_iterations,
                             seed=cfg.seed)


def _spec_from_config(cfg: RunConfig, n_covariates: int, size=None) -> GarnnSpec:
    family = cfg.make_family(size=size)
    return GarnnSpec.create(family, NetSpec(cfg.lags, cfg.nodes, cfg.activation),
                            n_covariates=n_covariates, link=cfg.make_link(),
                            cond_len=cfg.cond_len)


def _load_frame(cfg: RunConfig):
    if not cfg.data:
        raise ConfigError("'data' must point to a dataset file")
    dataset = load_series(cfg.data)
    X, names = design_from(dataset, cfg.recipe())
    return dataset, SeriesFrame.from_series(dataset.y, X), names


def _theta_tree(theta: ParamVector, names) -> dict:
    return {
        "coef": {name: float(v) for name, v in zip(names, theta.coef)},
        "input_weights": [[float(v) for v in row]
                          for row in theta.net.input_weights],
        "output_weights": [float(v) for v in theta.net.output_weights],
    }


def _fit_tree(res, spec: GarnnSpec, names) -> dict:
    return {
        "family": spec.family.name,
        "link": spec.link.name,
        "lags": spec.net.lags,
        "nodes": spec.net.nodes,
        "activation": spec.net.activation,
        "conditioning": spec.conditioning,
        "theta": _theta_tree(res.theta, names),
        "dispersion": res.dispersion,
        "loglik": res.loglik,
        "aic": res.aic,
        "n_params": res.n_params_total,
        "converged": bool(res.converged),
        "iterations": res.iterations,
        "gradient_norm": res.gradient_norm,
        "backend": backend.BACKEND,
    }


def _print_fit_summary(res, spec, names):
    print(f"{spec.family.name} model, {spec.link.name} link, "
          f"lags={spec.net.lags} nodes={spec.net.nodes} ({spec.net.activation})")
    print(f"  loglik {res.loglik:.6f}   aic {res.aic:.6f}   "
          f"params {res.n_params_total}   converged {res.converged}")
    if res.dispersion is not None:
        print(f"  dispersion {res.dispersion:.10g}")
    width = max(len(n) for n in names)
    for name, value in zip(names, res.theta.coef):
        print(f"  {name:<{width}}  {value: .10g}")


def run_fit(cfg: RunConfig) -> int:
    dataset, frame, names = _load_frame(cfg)
    spec = _spec_from_config(cfg, frame.X.shape[1])
    res = fit(spec, frame, controls=_controls(cfg), restarts=cfg.restarts)
    _print_fit_summary(res, spec, names)
    if cfg.result:
        write_result(cfg.result, _fit_tree(res, spec, names))
    if cfg.plot_data:
        write_plot_data(cfg.plot_data, dataset.times, frame.y,
                        spec.conditioning, res.fitted)
    return 0


def run_forecast(cfg: RunConfig) -> int:
    if cfg.horizon < 1:
        raise ConfigError("forecast requires horizon >= 1")
    dataset, frame, names = _load_frame(cfg)
    spec = _spec_from_config(cfg, frame.X.shape[1])
    res = fit(spec, frame, controls=_controls(cfg), restarts=cfg.restarts)

    n = len(frame)
    t_next = int(dataset.times[0]) + n
    x_fut, _ = build_covariates(cfg.horizon, cfg.recipe(), t_start=t_next)
    if dataset.extra_names:
        if not cfg.future_covariates:
            raise ConfigError("dataset has extra covariates; forecasting needs "
                              "'future_covariates'")
        fut = load_series(cfg.future_covariates)
        if len(fut) < cfg.horizon:
            raise ConfigError(f"future covariates cover {len(fut)} steps, "
                              f"horizon is {cfg.horizon}")
        x_fut = np.column_stack([x_fut, fut.extra[:cfg.horizon]])
    fc: ForecastResult = forecast(spec, frame, res.theta, x_fut, cfg.horizon)

    _print_fit_summary(res, spec, names)
    print(f"  forecast ({cfg.horizon} steps): "
          + " ".join(f"{v:.6g}" for v in fc.mu))
    if cfg.result:
        tree = _fit_tree(res, spec, names)
        tree["forecast"] = [float(v) for v in fc.mu]
        write_result(cfg.result, tree)
    if cfg.plot_data:
        write_plot_data(cfg.plot_data, dataset.times, frame.y,
                        spec.conditioning, res.fitted, forecast=fc.mu)
    return 0


def run_select(cfg: RunConfig) -> int:
    dataset, frame, names = _load_frame(cfg)
    grid = [(lags, nodes) if cfg.select_sizes is None else (lags, nodes, size)
            for lags in cfg.select_lags
            for nodes in cfg.select_nodes
            for size in (cfg.select_sizes or [None])]
    nested = cfg.nested_predictors
    if nested is None:
        # cumulative ladder: intercept, then each harmonic pair, then trend
        k = len(cfg.harmonic_periods)
        ladder = [[0]]
        for i in range(k):
            ladder.append(list(range(0, 3 + 2 * i)))
        if cfg.trend:
            ladder.append(list(range(0, 2 + 2 * k)))
        nested = [cols for cols in ladder if len(cols) <= frame.X.shape[1]]
    if cfg.family == "negbinomial":
        base_family = cfg.make_family(size=(cfg.select_sizes or [cfg.size])[0])
    else:
        base_family = cfg.make_family()
    report = two_stage_select(frame, base_family, cfg.make_link(), grid, nested,
                              activation=cfg.activation, alpha=cfg.alpha,
                              controls=_controls(cfg), restarts=cfg.restarts)

    print("stage 1 (AIC under the maximal predictor):")
    print("  lags nodes size      loglik          aic")
    for cell in report.stage1:
        size = "-" if cell.size is None else f"{cell.size:g}"
        flag = " *" if cell is report.chosen_cell else ""
        if cell.error:
            print(f"  {cell.lags:>4} {cell.nodes:>5} {size:>4}  failed: {cell.error}")
        else:
            print(f"  {cell.lags:>4} {cell.nodes:>5} {size:>4} {cell.loglik:>12.4f} "
                  f"{cell.aic:>12.4f}{flag}")
    print("stage 2 (analysis of deviance):")
    for step in report.stage2:
        t = step.test
        df = f"{t.df}" if t.df_denom is None else f"({t.df},{t.df_denom})"
        print(f"  {step.label}: statistic {t.statistic:.4f}  df {df}  "
              f"p {t.p_value:.5f}")
    kept = [names[c] for c in report.chosen_columns]
    print(f"chosen predictor columns: {', '.join(kept)}")
    if cfg.family == "negbinomial":
        final_family = cfg.make_family(size=report.chosen_cell.size)
    else:
        final_family = cfg.make_family()
    final_spec = GarnnSpec.create(
        final_family,
        NetSpec(report.chosen_cell.lags, report.chosen_cell.nodes, cfg.activation),
        len(report.chosen_columns), link=cfg.make_link())
    _print_fit_summary(report.final_fit, final_spec, kept)

    if cfg.result:
        tree = {
            "stage1": [dataclasses.asdict(c) for c in report.stage1],
            "chosen_cell": dataclasses.asdict(report.chosen_cell),
            "stage2": [{"label": s.label,
                        "columns0": list(s.columns0),
                        "columns1": list(s.columns1),
                        "statistic": s.test.statistic,
                        "df": s.test.df,
                        "df_denom": s.test.df_denom,
                        "p_value": s.test.p_value,
                        "kind": s.test.kind} for s in report.stage2],
            "chosen_columns": kept,
            "alpha": report.alpha,
            "final": _fit_tree(report.final_fit, final_spec, kept),
        }
        write_result(cfg.result, tree)
    if cfg.plot_data:
        m = report.chosen_cell.lags
        write_plot_data(cfg.plot_data, dataset.times, frame.y, m,
                        report.final_fit.fitted)
    return 0


def run_simulate(cfg: RunConfig) -> int:
    if cfg.sim_coef is None:
        raise ConfigError("simulate requires 'sim_coef'")
    coef = np.asarray(cfg.sim_coef, dtype=float)
    nodes = cfg.nodes
    if nodes:
        if cfg.sim_input_weights is None or cfg.sim_output_weights is None:
            raise ConfigError("simulate with nodes > 0 requires "
                              "'sim_input_weights' and 'sim_output_weights'")
        weights = NetWeights(np.asarray(cfg.sim_input_weights, dtype=float),
                             np.asarray(cfg.sim_output_weights, dtype=float))
    else:
        weights = NetWeights(np.zeros((0, cfg.lags)), np.zeros(0))
    theta = ParamVector(coef, weights)

    total = cfg.sim_burn_in + cfg.sim_n
    if coef.size == 1:
        X = None
    else:
        X, _ = build_covariates(total, cfg.recipe(), t_start=1)
        if X.shape[1] != coef.size:
            raise ConfigError(f"sim_coef has {coef.size} entries but the "
                              f"covariate recipe builds {X.shape[1]} columns")
    spec = _spec_from_config(cfg, coef.size)
    frame = simulate(spec, theta, phi=cfg.sim_phi, n=cfg.sim_n,
                     burn_in=cfg.sim_burn_in, seed=cfg.seed, X=X)

    if not cfg.data:
        raise ConfigError("simulate writes the series to 'data'; set it")
    with open(cfg.data, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("t,y\n")
        for i, value in enumerate(frame.y, start=1):
            handle.write(f"{i},{value!r}\n")
    print(f"wrote {len(frame)} simulated observations to {cfg.data}")
    if cfg.result:
        write_result(cfg.result, {
            "family": spec.family.name,
            "n": cfg.sim_n,
            "burn_in": cfg.sim_burn_in,
            "seed": cfg.seed,
            "mean": float(np.mean(frame.y)),
            "variance": float(np.var(frame.y, ddof=1)),
            "path": cfg.data,
        })
    return 0


def run_gradcheck(cfg: RunConfig) -> int:
    from .gradcheck import gradient_check_report
    report = gradient_check_report(n=cfg.gradcheck_n, draws=cfg.gradcheck_draws,
                                   seed=cfg.seed, tolerance=cfg.gradcheck_tol)
    for line in report["lines"]:
        print(line)
    print(f"max relative error {report['max_rel_error']:.3e} "
          f"(tolerance {cfg.gradcheck_tol:g}): "
          + ("pass" if report["passed"] else "fail"))
    if cfg.result:
        write_result(cfg.result, {k: report[k] for k in
                                  ("max_rel_error", "passed", "cases")})
    return 0 if report["passed"] else NUMERIC_EXIT


_COMMANDS = {
    "fit": run_fit,
    "select": run_select,
    "forecast": run_forecast,
    "simulate": run_simulate,
    "gradcheck": run_gradcheck,
}


def _flag_name(field_name: str) -> str:
    return "--" + field_name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="garnn",
        description="Generalized autoregressive neural network models")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name, help=f"run {name}")
        cmd.add_argument("--config", "-c", help="JSON configuration file")
        for f in dataclasses.fields(RunConfig):
            if f.name in _STR_FIELDS:
                cmd.add_argument(_flag_name(f.name), dest=f.name, default=None)
            else:
                cmd.add_argument(_flag_name(f.name), dest=f.name, default=None,
                                 metavar="JSON",
                                 help=argparse.SUPPRESS)
    return parser


def _apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    for f in dataclasses.fields(RunConfig):
        raw = getattr(args, f.name, None)
        if raw is None:
            continue
        if f.name in _STR_FIELDS:
            value = raw
        else:
            try:
                value = json.loads(raw)
            except json.JSONDecodeError:
                raise ConfigError(f"flag {_flag_name(f.name)} expects JSON, "
                                  f"got {raw!r}") from None
        setattr(cfg, f.name, value)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
        cfg = _apply_overrides(cfg, args).validate()
    except (ConfigError, DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return VALIDATION_EXIT
    try:
        return _COMMANDS[args.command](cfg)
    except (ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return VALIDATION_EXIT
    except (GarnnError, DomainError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return NUMERIC_EXIT


if __name__ == "__main__":
    sys.exit(main())
