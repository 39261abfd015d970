# src/hodse/simlab.py
"""
Monte Carlo laboratory: noise families, the moment condition they are
meant to satisfy, the replication runner and the diagnostics that compare
simulated errors with the theoretical variance, CLT and risk bounds.

Per observation, coordinate a of the noise has variance n * sigma_n^2 *
scale_a^2, so the averaged noise has E[eps_bar_a^2] = sigma_n^2 scale_a^2.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats
from scipy.special import gammaln

from .builder import ModelBuilder
from .errors import CapacityError, HodseError, InputError
from .estimator import bootstrap_estimate, decompose, hodse_estimate, plug_in_estimate
from .functional import (
    CovarianceModel,
    FunctionalModel,
    PolynomialModel,
    SeparableModel,
    predicted_var_s_k,
    v_k,
)
from .parser import parse_functional
from .rules import EstimatorName, NoiseCheckMethod, NoiseFamily, ThetaKind
from .smoothing import ORDER_CAP, SmoothedFunctional, profile_by_name, smooth_eval, tuning
from .streams import NOISE_CHECK, REPLICATION, THETA, stream
from .ustat import SampleMatrix, counting_constant

logger = logging.getLogger(__name__)

FAILURE_LIMIT = 0.01
EXHAUSTIVE_MAX_N = 12
MC_Z = 3.29


# ---------------------------------------------------------------------------
# noise
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseModel:
    family: NoiseFamily
    sigma_n: float
    scales: Optional[Tuple[float, ...]] = None
    correlation: Optional[Tuple[Tuple[float, ...], ...]] = None
    df: float = 8.0
    mixture_weight: float = 0.1
    mixture_ratio: float = 3.0

    def __post_init__(self):
        if not isinstance(self.family, NoiseFamily):
            try:
                object.__setattr__(self, "family", NoiseFamily(self.family))
            except ValueError:
                raise InputError(f"unknown noise family {self.family!r}") from None
        if not self.sigma_n > 0:
            raise InputError(f"sigma_n must be positive, got {self.sigma_n}")
        if self.family is NoiseFamily.STUDENT_T and not self.df > 4:
            raise InputError(f"student-t noise needs df > 4, got {self.df}")
        if self.family is NoiseFamily.SCALED_MIXTURE:
            if not 0.0 <= self.mixture_weight <= 1.0 or not self.mixture_ratio > 0:
                raise InputError("mixture weight must lie in [0, 1] and ratio be positive")
        if self.scales is not None and any(not 0.0 < s <= 1.0 for s in self.scales):
            raise InputError("per-coordinate scales must lie in (0, 1]")

    @property
    def outside_theory(self) -> bool:
        return self.family.outside_theory

    def scale_vector(self, d: int) -> np.ndarray:
        if self.scales is None:
            return np.ones(d)
        if len(self.scales) == 1:
            return np.full(d, self.scales[0])
        if len(self.scales) != d:
            raise InputError(f"{len(self.scales)} noise scales given for d={d}")
        return np.asarray(self.scales, dtype=float)

    def _correlation_factor(self, d: int) -> Optional[np.ndarray]:
        if self.correlation is None:
            return None
        C = np.asarray(self.correlation, dtype=float)
        if C.shape != (d, d):
            raise InputError(f"correlation must be {d}x{d}, got {C.shape}")
        if not np.allclose(np.diag(C), 1.0):
            raise InputError("correlation matrix needs a unit diagonal")
        try:
            return np.linalg.cholesky(C)
        except np.linalg.LinAlgError:
            raise InputError("correlation matrix is not positive definite") from None

    def check(self, d: int) -> None:
        """Scale vector and correlation agree with the dimension d."""
        self.scale_vector(d)
        self._correlation_factor(d)

    def covariance(self, n: int, d: int) -> CovarianceModel:
        """Per-observation covariance, n sigma_n^2 D C D."""
        s = self.scale_vector(d)
        C = np.eye(d) if self.correlation is None else np.asarray(self.correlation, dtype=float)
        return CovarianceModel(n * self.sigma_n**2 * (s[:, None] * C * s[None, :]),
                               diagonal=self.correlation is None)


def _unit_draws(model: NoiseModel, rng: np.random.Generator, shape) -> np.ndarray:
    fam = model.family
    if fam is NoiseFamily.GAUSSIAN:
        return rng.standard_normal(shape)
    if fam is NoiseFamily.RADEMACHER:
        return rng.choice(np.array([-1.0, 1.0]), size=shape)
    if fam is NoiseFamily.UNIFORM:
        return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=shape)
    if fam is NoiseFamily.SCALED_MIXTURE:
        w, r = model.mixture_weight, model.mixture_ratio
        scale = np.where(rng.random(shape) < w, r, 1.0)
        return scale * rng.standard_normal(shape) / math.sqrt((1.0 - w) + w * r * r)
    if fam is NoiseFamily.STUDENT_T:
        return rng.standard_t(model.df, size=shape) / math.sqrt(model.df / (model.df - 2.0))
    raise InputError(f"unknown noise family {fam}")


def sample_noise(model: NoiseModel, n: int, d: int, seed: Union[int, np.random.Generator]) -> np.ndarray:
    """n x d noise matrix with unit-variance entries scaled by sqrt(n) sigma_n."""
    if n < 1 or d < 1:
        raise InputError(f"noise shape must be positive, got {n}x{d}")
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed, REPLICATION, 0)
    z = _unit_draws(model, rng, (n, d))
    L = model._correlation_factor(d)
    if L is not None:
        z = z @ L.T
    return math.sqrt(n) * model.sigma_n * z * model.scale_vector(d)[None, :]


# ---------------------------------------------------------------------------
# moment condition E|n^-1 sum_j r_j eps_j|^(2k) <= sigma_n^(2k) 2^(k-1) k!
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseCheck:
    k: int
    value: float
    bound: float
    margin: float
    passed: bool
    method: NoiseCheckMethod
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None


def _noise_bound(sigma: float, k: int) -> float:
    return sigma ** (2 * k) * 2.0 ** (k - 1) * math.factorial(k)


def _sign_sum_moment(counts: Sequence[int], n: int, k: int) -> Fraction:
    """E[(sum of n signs)^(2k)] given counts[c] patterns with c minus signs."""
    total = sum(int(c) * (n - 2 * i) ** (2 * k) for i, c in enumerate(counts))
    return Fraction(total, int(sum(int(c) for c in counts)))


def _closed_form(model: NoiseModel, n: int, k: int) -> float:
    sigma = model.sigma_n
    if model.family is NoiseFamily.GAUSSIAN:
        return sigma ** (2 * k) * math.prod(range(1, 2 * k, 2))
    counts = [math.comb(n, i) for i in range(n + 1)]
    return sigma ** (2 * k) * float(_sign_sum_moment(counts, n, k) / Fraction(n) ** k)


def _exhaustive_counts(n: int) -> np.ndarray:
    """Histogram of minus signs in r_j eps_j over all 4^n sign patterns of (r, eps)."""
    counts = np.zeros(n + 1, dtype=np.int64)
    total = 1 << (2 * n)
    mask = (1 << n) - 1
    step = 1 << 20
    for start in range(0, total, step):
        codes = np.arange(start, min(start + step, total), dtype=np.int64)
        prod = (codes & mask) ^ (codes >> n)
        minus = np.zeros_like(prod)
        for b in range(n):
            minus += (prod >> b) & 1
        counts += np.bincount(minus, minlength=n + 1)
    return counts


def _monte_carlo(model: NoiseModel, n: int, k_max: int, draws: int, seed: int):
    rng = stream(seed, NOISE_CHECK)
    means = np.empty(draws)
    block = max(1, 2**20 // n)
    for start in range(0, draws, block):
        count = min(block, draws - start)
        eps = math.sqrt(n) * model.sigma_n * _unit_draws(model, rng, (count, n))
        r = rng.choice(np.array([-1.0, 1.0]), size=(count, n))
        means[start:start + count] = np.mean(r * eps, axis=1)
    out = []
    for k in range(1, k_max + 1):
        pw = np.abs(means) ** (2 * k)
        est = float(np.mean(pw))
        se = float(np.std(pw, ddof=1) / math.sqrt(draws)) if draws > 1 else math.inf
        out.append((est, est - MC_Z * se, est + MC_Z * se))
    return out


def check_noise_condition(model: NoiseModel, n: int, k_max: int,
                          method: Union[str, NoiseCheckMethod] = NoiseCheckMethod.CLOSED_FORM,
                          tol: float = 1e-12, *, seed: int = 0, draws: int = 200_000) -> Tuple[NoiseCheck, ...]:
    """
    Check the 2k-th moment condition for k = 1..k_max. Monte Carlo flags a
    violation only when the whole confidence interval lies above the bound.
    """
    method = NoiseCheckMethod(method)
    if n < 1 or k_max < 1:
        raise InputError(f"need n >= 1 and k_max >= 1, got n={n}, k_max={k_max}")
    if method is NoiseCheckMethod.CLOSED_FORM and model.family not in (NoiseFamily.GAUSSIAN, NoiseFamily.RADEMACHER):
        raise InputError(f"no closed form for {model.family.value} noise")
    if method is NoiseCheckMethod.EXHAUSTIVE and (not model.family.two_point or n > EXHAUSTIVE_MAX_N):
        raise InputError(f"exhaustive check needs two-point noise and n <= {EXHAUSTIVE_MAX_N}")

    rows = []
    if method is NoiseCheckMethod.MONTE_CARLO:
        for k, (est, lo, hi) in enumerate(_monte_carlo(model, n, k_max, draws, seed), start=1):
            bound = _noise_bound(model.sigma_n, k)
            rows.append(NoiseCheck(k, est, bound, bound - est, lo <= bound * (1.0 + tol),
                                   method, ci_low=lo, ci_high=hi))
        return tuple(rows)

    counts = _exhaustive_counts(n) if method is NoiseCheckMethod.EXHAUSTIVE else None
    for k in range(1, k_max + 1):
        if counts is None:
            value = _closed_form(model, n, k)
        else:
            value = model.sigma_n ** (2 * k) * float(_sign_sum_moment(counts, n, k) / Fraction(n) ** k)
        bound = _noise_bound(model.sigma_n, k)
        rows.append(NoiseCheck(k, value, bound, bound - value, value <= bound * (1.0 + tol), method))
    logger.debug("noise check %s/%s: %s", model.family.value, method.value,
                 ", ".join(f"k={r.k}:{'ok' if r.passed else 'FAIL'}" for r in rows))
    return tuple(rows)


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThetaSpec:
    kind: ThetaKind = ThetaKind.ZEROS
    value: float = 0.0
    low: float = -1.0
    high: float = 1.0
    sparsity: int = 0
    magnitude: float = 1.0


def generate_theta(spec: ThetaSpec, d: int, seed: int) -> np.ndarray:
    kind = ThetaKind(spec.kind)
    if kind is ThetaKind.ZEROS:
        return np.zeros(d)
    if kind is ThetaKind.CONSTANT:
        return np.full(d, float(spec.value))
    rng = stream(seed, THETA)
    if kind is ThetaKind.UNIFORM:
        if not spec.low < spec.high:
            raise InputError(f"uniform theta needs low < high, got ({spec.low}, {spec.high})")
        return rng.uniform(spec.low, spec.high, size=d)
    if not 0 <= spec.sparsity <= d:
        raise InputError(f"sparsity {spec.sparsity} out of range for d={d}")
    theta = np.zeros(d)
    theta[rng.choice(d, size=spec.sparsity, replace=False)] = spec.magnitude
    return theta


@dataclass(frozen=True)
class ExperimentConfig:
    functional: str
    n: int
    d: int
    noise: NoiseModel
    theta: ThetaSpec = field(default_factory=ThetaSpec)
    estimators: Tuple[EstimatorName, ...] = (EstimatorName.PLUGIN, EstimatorName.HODSE)
    order: Optional[int] = None
    order_cap: Optional[int] = None
    bandwidth: Optional[float] = None
    profile: str = "flat"
    bootstrap_draws: int = 2000
    replications: int = 100
    seed: int = 0
    decompose: bool = True
    effective_rank: Optional[float] = None
    out_json: Optional[str] = None
    out_csv: Optional[str] = None

    def __post_init__(self):
        if self.replications < 1:
            raise InputError(f"replications must be >= 1, got {self.replications}")
        if self.n < 1 or self.d < 1:
            raise InputError(f"n and d must be positive, got n={self.n}, d={self.d}")
        if not self.estimators:
            raise InputError("at least one estimator is required")
        object.__setattr__(self, "estimators", tuple(EstimatorName(e) for e in self.estimators))
        parse_functional(self.functional)
        profile_by_name(self.profile)

    @property
    def sigma_n(self) -> float:
        return self.noise.sigma_n

    def as_dict(self) -> dict:
        out = asdict(self)
        out["noise"]["family"] = self.noise.family.value
        out["theta"]["kind"] = ThetaKind(self.theta.kind).value
        out["estimators"] = [e.value for e in self.estimators]
        return out


@dataclass(frozen=True)
class EstimatorSummary:
    name: str
    bias: float
    variance: float
    mse: float
    bias_se: float
    variance_se: float
    mse_se: float
    replications: int


@dataclass(frozen=True)
class OrderSummary:
    """Empirical vs predicted variance of <f^(k)(theta), eps^(k)>."""

    k: int
    empirical_var: float
    predicted_var: float
    var_se: float

    @property
    def z_score(self) -> float:
        if not self.var_se > 0:
            return math.nan
        return (self.empirical_var - self.predicted_var) / self.var_se


@dataclass(frozen=True)
class CltDiagnostics:
    ks_distance: float
    ks_pvalue: float
    skewness: float
    kurtosis: float


@dataclass(frozen=True)
class Overlays:
    bias: float
    kappa: float
    error_bound: float
    rate: float
    separable_bound: float
    tuned_bound: float
    u_bound: float
    rem_bound: Optional[float]


@dataclass(frozen=True)
class ExperimentReport:
    config: dict
    target: float
    order: int
    bandwidth: Optional[float]
    estimators: Dict[str, EstimatorSummary]
    orders: Tuple[OrderSummary, ...]
    order_correlations: Optional[List[List[float]]]
    clt: Optional[CltDiagnostics]
    overlays: Optional[Overlays]
    v1: Optional[float]
    outside_theory: bool
    failures: int
    records: List[dict] = field(repr=False, default_factory=list)

    def as_dict(self) -> dict:
        out = asdict(self)
        out.pop("records")
        for row, summary in zip(out["orders"], self.orders):
            row["z_score"] = summary.z_score
        return out


def jackknife_se(values) -> Tuple[float, float, float]:
    """
    Leave-one-out standard errors of (mean, variance with ddof=0, mean square).
    """
    x = np.asarray(values, dtype=float)
    R = x.size
    if R < 2:
        return math.nan, math.nan, math.nan
    c = x - x.mean()
    s1, s2 = c.sum(), float(np.sum(c * c))
    loo_mean = (s1 - c) / (R - 1)
    loo_var = (s2 - c * c) / (R - 1) - loo_mean**2
    raw2 = x * x
    loo_ms = (raw2.sum() - raw2) / (R - 1)

    def se(est):
        return float(math.sqrt((R - 1) / R * np.sum((est - est.mean()) ** 2)))

    return se(loo_mean), se(loo_var), se(loo_ms)


def summarize_errors(name: str, errors) -> EstimatorSummary:
    e = np.asarray(errors, dtype=float)
    bias = float(np.mean(e))
    variance = float(np.var(e))
    b_se, v_se, m_se = jackknife_se(e)
    return EstimatorSummary(name, bias, variance, bias * bias + variance, b_se, v_se, m_se, int(e.size))


def clt_diagnostics(errors, v1: float, n: int) -> CltDiagnostics:
    """Standardize by sqrt(v1/n) and compare with N(0, 1)."""
    if not v1 > 0:
        raise InputError(f"v1 must be positive, got {v1}")
    z = np.asarray(errors, dtype=float) / math.sqrt(v1 / n)
    ks = stats.kstest(z, "norm")
    return CltDiagnostics(
        ks_distance=float(ks.statistic),
        ks_pvalue=float(ks.pvalue),
        skewness=float(stats.skew(z)),
        kurtosis=float(stats.kurtosis(z)),
    )


@dataclass(frozen=True)
class OverlayParams:
    smoothing: SmoothedFunctional
    theta: np.ndarray
    sigma_n: float
    s: int
    n: int

    @property
    def d(self) -> int:
        return int(np.asarray(self.theta).size)


def _log_holder(sf: SmoothedFunctional, s: int) -> float:
    """log of C1 h^(alpha - s)."""
    return math.log(sf.c1) + (sf.p - s) * math.log(sf.h)


def theoretical_overlays(params: OverlayParams) -> Overlays:
    """Risk-bound overlays for a smoothed separable scenario with m = s - 1."""
    sf, s, sigma = params.smoothing, params.s, params.sigma_n
    d, n, alpha = params.d, params.n, sf.p
    uniq, counts = np.unique(np.asarray(params.theta, dtype=float), return_counts=True)
    bias = float(np.sum(counts * (sf.f0(uniq) - np.asarray(smooth_eval(sf, uniq))))) / d

    kappa = 0.0
    u_bound = 0.0
    for k in range(1, s):
        sq = float(np.sum(counts * np.asarray(sf.derivative(uniq, k)) ** 2)) * sigma ** (2 * k)
        kappa += sq / (0.5 * d * d * math.factorial(k))
        if k <= n:
            c = counting_constant(n, k).c_kn
            u_bound += c * c * sq / (d * d * math.factorial(k))

    log_h = _log_holder(sf, s)
    tail = math.exp(log_h + s * math.log(2.0**3.5 * sigma) - 0.5 * gammaln(s + 1))
    error_bound = math.sqrt(bias * bias + kappa) + tail

    eta = sf.c1 * sf.h**alpha
    # kappa at h = 0 sums over k < alpha, empty for alpha <= 1
    separable_bound = abs(bias) + eta * (s**-0.25 + math.sqrt(2.0 / d) * math.exp(0.5 * (sigma / sf.h) ** 2))
    ell = math.log(d / math.log(d))
    tuned_bound = abs(bias) + (s**-0.25 + math.sqrt(2.0 / math.log(d))) * sf.c1 * sigma**alpha / ell ** (alpha / 2.0)
    rate = sf.c1 * sigma**alpha / math.log(d) ** (alpha / 2.0)

    rem_bound = None
    if s <= n:
        c = counting_constant(n, s).c_kn
        rem_bound = math.exp(2.0 * math.log(c) + 2.0 * log_h + 2 * s * math.log(sigma)
                             + (7 * s - 1) * math.log(2.0) - gammaln(s + 1))
    return Overlays(bias=bias, kappa=kappa, error_bound=error_bound, rate=rate,
                    separable_bound=separable_bound, tuned_bound=tuned_bound,
                    u_bound=u_bound, rem_bound=rem_bound)


def _resolve(config: ExperimentConfig) -> Tuple[FunctionalModel, int, Optional[float]]:
    spec = parse_functional(config.functional)
    h = spec.bandwidth or config.bandwidth
    order = config.order
    if spec.family == "sep" and spec.base.needs_smoothing:
        rule = tuning(config.d, config.sigma_n, config.order_cap or ORDER_CAP)
        h = h or rule.h_theory
        if order is None:
            order = min(rule.order, config.n - 1)
            if order < rule.order:
                logger.warning("tuned order %d lowered to %d for n=%d", rule.order, order, config.n)
    model = ModelBuilder(spec, config.d, bandwidth=h, profile=profile_by_name(config.profile)).build()
    if order is None:
        order = max(model.degree, 2) if isinstance(model, PolynomialModel) else 2
    return model, order, h


def _target(model: FunctionalModel, theta: np.ndarray) -> float:
    if isinstance(model, SeparableModel):
        return model.target_value(theta)
    return model.value(theta)


def _replication(config: ExperimentConfig, model: FunctionalModel, plug_model: FunctionalModel,
                 theta: np.ndarray, m: int, target: float, r: int) -> dict:
    row: dict = {"replication": r}
    try:
        rng = stream(config.seed, REPLICATION, r)
        x = SampleMatrix(theta[None, :] + sample_noise(config.noise, config.n, config.d, rng))
        hodse_value = None
        for name in config.estimators:
            if name is EstimatorName.PLUGIN:
                value = plug_in_estimate(x, plug_model)
            elif name is EstimatorName.HODSE:
                hodse_value = value = hodse_estimate(x, model, m).value
            else:
                boot_seed = int(np.random.SeedSequence(config.seed, spawn_key=(REPLICATION, r)).generate_state(1)[0])
                value = bootstrap_estimate(x, model, m, config.bootstrap_draws, boot_seed).value
            row[name.value] = value
            row[f"{name.value}_error"] = value - target
        if config.decompose and hodse_value is not None:
            dec = decompose(x, model, m, theta, estimate=hodse_value)
            for k, s in enumerate(dec.s_k, start=1):
                row[f"s_{k}"] = s
            row["remainder"] = dec.remainder
        row["failed"] = ""
    except HodseError as e:
        logger.debug("replication %d failed: %s", r, e)
        row["failed"] = f"{type(e).__name__}: {e}"
        row["_error"] = e
    return row


def _order_summaries(model, theta, config: ExperimentConfig, rows, m) -> Tuple[Tuple[OrderSummary, ...], Optional[List[List[float]]]]:
    if not rows or "s_1" not in rows[0]:
        return (), None
    cov = config.noise.covariance(config.n, config.d)
    u = np.array([[row[f"s_{k}"] * math.factorial(k) for k in range(1, m + 1)] for row in rows])
    out = []
    for k in range(1, m + 1):
        try:
            predicted = predicted_var_s_k(config.n, k, v_k(model, theta, cov, k))
        except CapacityError:
            predicted = math.nan
        _, v_se, _ = jackknife_se(u[:, k - 1])
        out.append(OrderSummary(k, float(np.var(u[:, k - 1])), predicted, v_se))
    corr = None
    if u.shape[0] > 2 and m > 1:
        with np.errstate(invalid="ignore", divide="ignore"):
            corr = np.corrcoef(u, rowvar=False).tolist()
    return tuple(out), corr


def run_experiment(config: ExperimentConfig, threads: Optional[int] = None) -> ExperimentReport:
    """
    Run every replication, in parallel when ``threads`` > 1, and merge the
    results in replication order.
    """
    model, m, h = _resolve(config)
    plug_model = model.unsmoothed() if isinstance(model, SeparableModel) else model
    theta = generate_theta(config.theta, config.d, config.seed)
    target = _target(model, theta)
    if config.noise.outside_theory:
        logger.warning("%s noise lies outside the moment condition; results are outside-theory",
                       config.noise.family.value)
    logger.info("experiment: %s, n=%d, d=%d, m=%d, h=%s, R=%d",
                model.describe(), config.n, config.d, m, h, config.replications)

    def one(r: int) -> dict:
        return _replication(config, model, plug_model, theta, m, target, r)

    reps = range(config.replications)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, reps))
    else:
        rows = [one(r) for r in reps]

    failed = [row for row in rows if row["failed"]]
    if len(failed) > FAILURE_LIMIT * config.replications:
        logger.error("%d of %d replications failed", len(failed), config.replications)
        raise failed[0]["_error"]
    for row in failed:
        row.pop("_error")
    ok = [row for row in rows if not row["failed"]]

    summaries = {
        name.value: summarize_errors(name.value, [row[f"{name.value}_error"] for row in ok])
        for name in config.estimators
    }
    orders, corr = _order_summaries(model, theta, config, ok, m)

    cov = config.noise.covariance(config.n, config.d)
    v1 = None
    clt = None
    try:
        v1 = v_k(model, theta, cov, 1)
    except CapacityError:
        logger.warning("V_1 not available for this functional and covariance")
    if v1 and v1 > 0 and EstimatorName.HODSE in config.estimators and len(ok) > 1:
        clt = clt_diagnostics([row["hodse_error"] for row in ok], v1, config.n)

    overlays = None
    sf = getattr(model, "smoothing", None)
    if sf is not None and config.d >= 3:
        overlays = theoretical_overlays(OverlayParams(sf, theta, config.sigma_n, m + 1, config.n))

    return ExperimentReport(
        config=config.as_dict(), target=target, order=m, bandwidth=h,
        estimators=summaries, orders=orders, order_correlations=corr, clt=clt,
        overlays=overlays, v1=v1, outside_theory=config.noise.outside_theory,
        failures=len(failed), records=rows,
    )
