# src/hodse/__init__.py
"""
HODSE 0.1.0
Higher-order degenerate U-statistic bias correction for plug-in estimators
of functionals of a noisy mean, with a Monte Carlo laboratory.
"""

from __future__ import annotations

import logging
from dataclasses import replace
from typing import Optional

from .builder import ModelBuilder
from .config import load_config
from .errors import (
    CapacityError,
    ConfigError,
    ContractError,
    DataParseError,
    HodseError,
    InputError,
    NumericError,
    OrderError,
)
from .estimator import (
    EstimateResult,
    bootstrap_estimate,
    decompose,
    default_order,
    estimate_noise_level,
    hodse_estimate,
    jackknife_estimate,
    plug_in_estimate,
    remainder_bound,
    separable_estimate,
    verify_identity,
)
from .functional import PolynomialModel, make_custom, make_polynomial, make_separable
from .parser import parse_functional, read_sample_matrix
from .rules import EstimatePath
from .serializer import ReportSerializer, estimate_record, write_json
from .simlab import ExperimentReport, run_experiment
from .smoothing import SmoothedFunctional, smooth_eval, tuning

__version__ = "0.1.0"

logger = logging.getLogger(__name__)


def estimate_file(
    data_path: str,
    functional: str,
    *,
    order: Optional[int] = None,
    bandwidth: Optional[float] = None,
    path: str = "auto",
    draws: int = 2000,
    seed: int = 0,
    output: Optional[str] = None,
) -> EstimateResult:
    """
    Estimate a functional of the mean of the rows of a CSV file.

    Parameters
    ----------
    data_path : str
        Headerless CSV, rows are observations.
    functional : str
        ``poly:<expr>``, ``fn:<name>`` or ``sep:<base>[:h=<v>]``.
    order : int | None
        Expansion order m >= 2; by default the polynomial degree, the tuning
        rule for ``sep:abs``/``sep:pow`` (order capped at 24), else 2.
    bandwidth : float | None
        Smoothing bandwidth; by default from the tuning rule at the
        estimated noise level.
    path : str
        auto | separable | bootstrap | jackknife.
    draws, seed : int
        Resampling draws and master seed for ``path="bootstrap"``.
    output : str | None
        Write the estimate record as JSON.
    """
    x = read_sample_matrix(data_path)
    spec = parse_functional(functional)
    smoothed = spec.family == "sep" and spec.base.needs_smoothing
    sigma_n = None
    if smoothed and spec.bandwidth is None and bandwidth is None:
        sigma_n = estimate_noise_level(x)
    model = ModelBuilder(spec, x.d, bandwidth=bandwidth, sigma_n=sigma_n).build()
    if order is None:
        if smoothed:
            order = default_order(x.d, sigma_n if sigma_n is not None else estimate_noise_level(x))
            if order >= x.n:
                logger.warning("order %d from the tuning rule lowered to n-1=%d", order, x.n - 1)
                order = max(x.n - 1, 2)
        elif isinstance(model, PolynomialModel):
            order = max(model.degree, 2)
        else:
            order = 2

    if path == "auto":
        result = hodse_estimate(x, model, order)
    elif path == "separable":
        result = separable_estimate(x, model, order)
    elif path == "bootstrap":
        result = bootstrap_estimate(x, model, order, draws, seed)
    elif path == "jackknife":
        result = jackknife_estimate(x, model, order)
    else:
        raise InputError(f"unknown estimator path {path!r}")

    if output:
        write_json(estimate_record(result, functional=functional, data=str(data_path), n=x.n, d=x.d), output)
        print(f"✅  estimate saved → {output}")
    return result


def simulate(
    config_path: str,
    *,
    threads: Optional[int] = None,
    seed: Optional[int] = None,
    replications: Optional[int] = None,
    order: Optional[int] = None,
    bandwidth: Optional[float] = None,
    output: Optional[str] = None,
    csv_output: Optional[str] = None,
) -> ExperimentReport:
    """Run the experiment described by a config file and write its report files."""
    config = load_config(config_path)
    overrides = {k: v for k, v in {
        "seed": seed, "replications": replications, "order": order, "bandwidth": bandwidth,
        "out_json": output, "out_csv": csv_output,
    }.items() if v is not None}
    if overrides:
        config = replace(config, **overrides)
    report = run_experiment(config, threads=threads)
    written = ReportSerializer(report).write(config.out_json, config.out_csv)
    for kind, p in written.items():
        print(f"✅  {kind.upper()} saved → {p}")
    return report


__all__ = [
    "__version__",
    "estimate_file",
    "simulate",
    "ModelBuilder",
    "ReportSerializer",
    "EstimateResult",
    "EstimatePath",
    "ExperimentReport",
    "SmoothedFunctional",
    "hodse_estimate",
    "separable_estimate",
    "plug_in_estimate",
    "bootstrap_estimate",
    "jackknife_estimate",
    "decompose",
    "remainder_bound",
    "verify_identity",
    "make_polynomial",
    "make_separable",
    "make_custom",
    "smooth_eval",
    "tuning",
    "run_experiment",
    "load_config",
    "read_sample_matrix",
    "parse_functional",
    "HodseError",
    "InputError",
    "DataParseError",
    "ConfigError",
    "ContractError",
    "OrderError",
    "CapacityError",
    "NumericError",
]
