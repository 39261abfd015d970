# src/hodse/validate.py
"""
Self-validation suites run by ``hodse validate``.

Each suite checks an exact identity or a scaled statistical property and
returns a SuiteResult; exceptions raised inside a suite count as failures.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np

from . import ustat as us
from .errors import InputError
from .estimator import decompose, hodse_estimate, jackknife_estimate, remainder_bound, verify_identity
from .functional import make_custom, make_polynomial, make_separable
from .rules import EstimatorName, NoiseCheckMethod, NoiseFamily, SeparableBase, ThetaKind
from .simlab import (
    ExperimentConfig,
    NoiseModel,
    ThetaSpec,
    check_noise_condition,
    run_experiment,
)
from .smoothing import SmoothedFunctional, default_profile, kernel_eval, kernel_moments

logger = logging.getLogger(__name__)

REFERENCE_SEED = 20240611


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str
    seconds: float

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail,
                "seconds": round(self.seconds, 3)}


def _rng(salt: int) -> np.random.Generator:
    return np.random.default_rng([REFERENCE_SEED, salt])


# ---------------------------------------------------------------------------
# fast suites
# ---------------------------------------------------------------------------

def suite_ustat_oracle() -> Tuple[bool, str]:
    rng = _rng(1)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 9))
        d = int(rng.integers(1, 4))
        k = int(rng.integers(1, min(n, 4) + 1))
        cs = us.center(us.SampleMatrix(rng.normal(size=(n, d))))
        ref = us.brute_force_ustat(cs, k)
        scale = float(np.max(np.abs(cs.centered))) ** k
        worst = max(worst, float(np.max(np.abs(us.degenerate_ustat_tensor(cs, k) - ref))) / scale)
        cols = us.ustat_columns(cs, k)[k - 1]
        diag = np.array([ref[(a,) * k] for a in range(d)])
        worst = max(worst, float(np.max(np.abs(cols - diag))) / scale)
    return worst <= 1e-10, f"max scaled deviation {worst:.2e} over 200 instances"


def suite_degeneracy() -> Tuple[bool, str]:
    """Centered data give u^(1) = 0, and over all sign patterns every
    conditional mean of eps^(k), k >= 2, given the first observation vanishes."""
    rng = _rng(2)
    x = us.SampleMatrix(3.0 + rng.normal(size=(7, 2)))
    cs = us.center(x)
    cols = us.ustat_columns(cs, 4)
    first = float(np.max(np.abs(cols[0])))
    agree = float(np.max(np.abs(cols[1] - np.diag(us.brute_force_ustat(cs, 2)))))
    n = 6
    patterns = np.array(list(itertools.product([-1.0, 1.0], repeat=n)))
    worst = 0.0
    for k in range(2, 5):
        vals = np.array([us.noise_ustat_columns(p, k)[k - 1, 0] for p in patterns])
        for sign in (-1.0, 1.0):
            worst = max(worst, abs(float(np.mean(vals[patterns[:, 0] == sign]))))
    ok = first <= 1e-12 and agree <= 1e-10 and worst <= 1e-12
    return ok, f"|u1|={first:.1e}, u2 vs oracle {agree:.1e}, conditional means {worst:.1e}"


def suite_counting_bound() -> Tuple[bool, str]:
    worst = 0.0
    for n in range(1, 201):
        for k in range(1, n + 1):
            c = us.counting_constant(n, k)
            worst = max(worst, c.c_kn / c.bound)
    return worst <= 1.0 + 1e-12, f"max C_kn / exp((k-1)k/n) = {worst:.12f}"


def suite_unbiasedness() -> Tuple[bool, str]:
    f = make_polynomial({(3, 0): 1.0, (2, 1): -0.5, (0, 2): 2.0, (1, 0): 1.0, (0, 0): 0.25}, 2)
    theta = np.array([0.4, -0.7])
    n, m = 5, 3
    signs = np.array(list(itertools.product([-1.0, 1.0], repeat=n * 2)))
    total = 0.0
    for s in signs:
        total += hodse_estimate(theta + 0.3 * s.reshape(n, 2), f, m).value
    mean = total / len(signs)
    err = abs(mean - f.value(theta))
    return err <= 1e-10, f"enumerated mean deviates by {err:.2e} over {len(signs)} patterns"


def suite_bootstrap_exact() -> Tuple[bool, str]:
    rng = _rng(3)
    worst = 0.0
    models = [make_polynomial({(2, 1): 1.0, (0, 3): -1.0, (1, 1): 0.5}, 2),
              make_separable(SeparableBase.SIN, 2)]
    for model in models:
        for n in range(3, 7):
            for m in range(2, 4):
                x = rng.normal(size=(n, 2))
                a = hodse_estimate(x, model, m).value
                b = jackknife_estimate(x, model, m).value
                worst = max(worst, abs(a - b) / max(1.0, abs(a)))
    return worst <= 1e-12, f"exhaustive resampling vs closed form: {worst:.2e}"


def suite_identity() -> Tuple[bool, str]:
    rng = _rng(4)
    worst = 0.0
    for name in ("exp", "sin", "xatan"):
        model = make_custom(name)
        for m in (3, 4, 5):
            for _ in range(5):
                theta = float(rng.uniform(-1, 1))
                x = theta + 0.5 * rng.normal(size=(20, 1))
                worst = max(worst, verify_identity(model, theta, x, m))
    return worst <= 1e-8, f"max identity residual {worst:.2e}"


def suite_remainder_bound() -> Tuple[bool, str]:
    rng = _rng(5)
    model = make_custom("sin")
    misses = 0
    for _ in range(200):
        theta = float(rng.uniform(-2, 2))
        x = theta + rng.normal(size=(10, 1))
        rem = decompose(x, model, 3, [theta]).remainder
        bound = remainder_bound(x, [theta], 3, 4.0, 1.0).bound
        misses += abs(rem) > bound * (1 + 1e-12) + 1e-14
    return misses == 0, f"{misses} of 200 remainders above the bound"


def suite_kernel() -> Tuple[bool, str]:
    profile = default_profile()
    mass = kernel_moments(profile).mass
    xs = np.linspace(-2.0, 2.0, 21)
    sf = SmoothedFunctional(SeparableBase.ABS, 0.3)
    second = np.asarray(sf.derivative(xs, 2))
    ref = 2.0 * np.asarray(kernel_eval(profile, xs / sf.h)) / sf.h
    agree = float(np.max(np.abs(second - ref)))
    bias = float(np.max(np.abs(np.asarray(sf.value(xs)) - np.abs(xs))))
    ok = abs(mass - 1.0) <= 1e-8 and agree <= 1e-8 and bias <= sf.c1 * sf.h
    return ok, f"|int K - 1|={abs(mass - 1):.1e}, f_h'' vs 2K_h {agree:.1e}, bias {bias:.3f} <= {sf.c1 * sf.h:.3f}"


def suite_noise_condition() -> Tuple[bool, str]:
    g = check_noise_condition(NoiseModel(NoiseFamily.GAUSSIAN, 1.0), 8, 6, NoiseCheckMethod.CLOSED_FORM)
    r = check_noise_condition(NoiseModel(NoiseFamily.RADEMACHER, 1.0), 8, 4, NoiseCheckMethod.EXHAUSTIVE)
    rows = g + r
    return all(row.passed for row in rows), f"{sum(row.passed for row in rows)}/{len(rows)} moments within bound"


# ---------------------------------------------------------------------------
# slow suites
# ---------------------------------------------------------------------------

def suite_variance() -> Tuple[bool, str]:
    worst = 0.0
    for family in (NoiseFamily.GAUSSIAN, NoiseFamily.RADEMACHER):
        config = ExperimentConfig(
            functional="sep:square", n=100, d=10, noise=NoiseModel(family, 0.5),
            theta=ThetaSpec(ThetaKind.UNIFORM, low=-1.0, high=1.0),
            estimators=(EstimatorName.HODSE,), order=3, replications=4000, seed=REFERENCE_SEED,
        )
        report = run_experiment(config)
        for row in report.orders:
            if row.k not in (2, 3):
                continue
            if row.predicted_var == 0.0:
                dev = 0.0 if row.empirical_var <= 1e-24 else math.inf
            else:
                dev = abs(row.z_score)
            worst = max(worst, dev)
    return worst <= 4.0, f"largest |z| of Var(S_k) against prediction: {worst:.2f}"


def suite_clt() -> Tuple[bool, str]:
    R = 400
    config = ExperimentConfig(
        functional="sep:square", n=500, d=50, noise=NoiseModel(NoiseFamily.GAUSSIAN, 0.1),
        theta=ThetaSpec(ThetaKind.CONSTANT, value=1.0),
        estimators=(EstimatorName.HODSE,), order=2, replications=R, seed=REFERENCE_SEED,
        decompose=False,
    )
    report = run_experiment(config)
    limit = 1.63 / math.sqrt(R)
    ks = report.clt.ks_distance
    return ks <= limit, f"KS distance {ks:.4f} (limit {limit:.4f})"


SUITES: Dict[str, Tuple[Callable[[], Tuple[bool, str]], bool]] = {
    "ustat_oracle": (suite_ustat_oracle, True),
    "degeneracy": (suite_degeneracy, True),
    "counting_bound": (suite_counting_bound, True),
    "unbiasedness": (suite_unbiasedness, True),
    "bootstrap_exact": (suite_bootstrap_exact, True),
    "identity": (suite_identity, True),
    "remainder_bound": (suite_remainder_bound, True),
    "kernel": (suite_kernel, True),
    "noise_condition": (suite_noise_condition, True),
    "variance": (suite_variance, False),
    "clt": (suite_clt, False),
}


def run_suite(name: str) -> SuiteResult:
    fn, _ = SUITES[name]
    start = time.perf_counter()
    try:
        passed, detail = fn()
    except Exception as e:  # a crashing suite is a failing suite
        logger.debug("suite %s raised", name, exc_info=True)
        passed, detail = False, f"{type(e).__name__}: {e}"
    seconds = time.perf_counter() - start
    logger.info("suite %s: %s (%.2fs)", name, "pass" if passed else "FAIL", seconds)
    return SuiteResult(name, bool(passed), detail, seconds)


def run_suites(*, fast: bool = False, scope: Optional[Iterable[str]] = None) -> List[SuiteResult]:
    names = list(scope) if scope else [n for n, (_, is_fast) in SUITES.items() if is_fast or not fast]
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise InputError(f"unknown suites: {', '.join(unknown)}; choose from {', '.join(SUITES)}")
    if fast:
        names = [n for n in names if SUITES[n][1]]
    return [run_suite(n) for n in names]
