# src/hodse/estimator.py
"""
HODSE estimator and the diagnostics of its exact expansion.

    f_hat = f(xbar) + sum_{k=2}^{m} <f^(k)(xbar), u^(k)> / k!

Around the true theta the estimate splits into degenerate terms
S_k = <f^(k)(theta), eps^(k)> / k! and a remainder:

    f_hat = f(theta) + sum_{k=1}^{m} S_k - Rem_m.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import integrate as sp_integrate
from scipy.special import gamma, gammaln

from .errors import CapacityError, ContractError, InputError, NumericError, OrderError
from .functional import FunctionalModel, SeparableModel, contract
from .rules import EstimatePath
from .smoothing import ORDER_CAP, tuning
from .streams import BOOTSTRAP, stream
from .ustat import (
    DENSE_BUDGET,
    ENUMERATION_BUDGET,
    SampleMatrix,
    center,
    counting_constant,
    degenerate_ustat_tensor,
    noise_ustat_columns,
    noise_ustat_tensor,
    ustat_columns,
)

logger = logging.getLogger(__name__)

BOOTSTRAP_BLOCK = 1024


@dataclass(frozen=True)
class EstimateResult:
    value: float
    order: int
    per_order_terms: Tuple[float, ...]
    path: EstimatePath
    plug_in: float
    bandwidth: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "order": self.order,
            "plug_in": self.plug_in,
            "bandwidth": self.bandwidth,
            "path": self.path.value,
            "per_order_terms": {str(k): t for k, t in enumerate(self.per_order_terms, start=2)},
        }


@dataclass(frozen=True)
class Decomposition:
    """S_1..S_m (each including 1/k!), the remainder, f(theta) and f_hat."""

    s_k: Tuple[float, ...]
    remainder: float
    f_true: float
    estimate: float

    @property
    def u_variables(self) -> Tuple[float, ...]:
        """<f^(k)(theta), eps^(k)> without the 1/k! factor."""
        return tuple(s * math.factorial(k) for k, s in enumerate(self.s_k, start=1))


@dataclass(frozen=True)
class RemainderBound:
    bound: float
    components: Tuple[float, ...]


def _as_samples(samples) -> SampleMatrix:
    return samples if isinstance(samples, SampleMatrix) else SampleMatrix(samples)


def _check_order(m: int, n: int, *, strict: bool = False) -> None:
    if m < 2:
        raise InputError(f"expansion order must be >= 2 (m = 1 is the plug-in), got {m}")
    need = m + 1 if strict else m
    if n < need:
        rule = "n >= m+1" if strict else "n >= m (n >= m+1 for the separable form)"
        raise OrderError(f"order m={m} with n={n} observations violates {rule}")


def _bandwidth(model: FunctionalModel) -> Optional[float]:
    sf = getattr(model, "smoothing", None)
    return sf.h if sf is not None else None


def _separable_terms(model: SeparableModel, xbar: np.ndarray, columns: np.ndarray, m: int):
    terms = []
    for k in range(2, m + 1):
        coef = model.coordinate_derivative(xbar, k)
        terms.append(float(np.mean(coef * columns[k - 1])) / math.factorial(k))
    return tuple(terms)


def hodse_estimate(samples, model: FunctionalModel, m: int) -> EstimateResult:
    """
    f(xbar) + sum_{k=2}^m <f^(k)(xbar), u^(k)>/k!.

    Separable models and d = 1 go through per-coordinate U-statistics; other
    models need dense tensors within the budget.
    """
    x = _as_samples(samples)
    _check_order(m, x.n)
    model.require_order(m)
    cs = center(x)
    xbar = cs.mean
    base = model.value(xbar)
    if isinstance(model, SeparableModel):
        terms = _separable_terms(model, xbar, ustat_columns(cs, m), m)
        path = EstimatePath.SEPARABLE
    elif x.d == 1:
        columns = ustat_columns(cs, m)[:, 0]
        terms = tuple(contract(model, xbar, k, np.full((1,) * k, columns[k - 1])) / math.factorial(k)
                      for k in range(2, m + 1))
        path = EstimatePath.DENSE
    else:
        if x.d**m > DENSE_BUDGET:
            raise CapacityError(
                f"dense order-{m} tensors over d={x.d} exceed budget {DENSE_BUDGET}; "
                "use a separable functional"
            )
        terms = tuple(contract(model, xbar, k, degenerate_ustat_tensor(cs, k)) / math.factorial(k)
                      for k in range(2, m + 1))
        path = EstimatePath.DENSE
    value = base + math.fsum(terms)
    logger.debug("hodse estimate m=%d path=%s plug-in=%.6g value=%.6g", m, path.value, base, value)
    return EstimateResult(value=value, order=m, per_order_terms=terms, path=path,
                          plug_in=base, bandwidth=_bandwidth(model))


def separable_estimate(samples, model: SeparableModel, m: int) -> EstimateResult:
    """(1/d) sum_a { f_h(xbar_a) + sum_k f_h^(k)(xbar_a) u_a^(k)/k! }."""
    if not isinstance(model, SeparableModel):
        raise ContractError(f"separable_estimate needs a separable model, got {model.describe()}")
    x = _as_samples(samples)
    _check_order(m, x.n, strict=True)
    model.require_order(m)
    cs = center(x)
    base = model.value(cs.mean)
    terms = _separable_terms(model, cs.mean, ustat_columns(cs, m), m)
    return EstimateResult(value=base + math.fsum(terms), order=m, per_order_terms=terms,
                          path=EstimatePath.SEPARABLE, plug_in=base, bandwidth=_bandwidth(model))


def plug_in_estimate(samples, model: FunctionalModel) -> float:
    x = _as_samples(samples)
    return float(model.value(center(x).mean))


def bootstrap_estimate(samples, model: FunctionalModel, m: int, n_draws: int, seed: int) -> EstimateResult:
    """
    Resampling form: each draw takes m rows without replacement and the k-th
    term averages <f^(k)(xbar), eps*_1 (x) ... (x) eps*_k> over draws.

    Draws come in fixed blocks, each with its own counter-based substream.
    """
    if n_draws <= 0:
        raise InputError(f"n_draws must be positive, got {n_draws}")
    x = _as_samples(samples)
    _check_order(m, x.n)
    model.require_order(m)
    cs = center(x)
    xbar, eps = cs.mean, cs.centered
    sums = np.zeros(m + 1)
    done, block = 0, 0
    while done < n_draws:
        count = min(BOOTSTRAP_BLOCK, n_draws - done)
        rng = stream(seed, BOOTSTRAP, block)
        idx = np.argsort(rng.random((count, x.n)), axis=1)[:, :m]
        draws = eps[idx]
        for k in range(2, m + 1):
            sums[k] += float(np.sum(model.contract_vectors(xbar, draws[:, :k, :])))
        done += count
        block += 1
    terms = tuple(sums[k] / n_draws / math.factorial(k) for k in range(2, m + 1))
    base = model.value(xbar)
    return EstimateResult(value=base + math.fsum(terms), order=m, per_order_terms=terms,
                          path=EstimatePath.BOOTSTRAP, plug_in=base, bandwidth=_bandwidth(model))


def jackknife_estimate(samples, model: FunctionalModel, m: int, *, chunk: int = 65536) -> EstimateResult:
    """Resampling form averaged over every ordered k-subset of rows."""
    x = _as_samples(samples)
    _check_order(m, x.n)
    model.require_order(m)
    cs = center(x)
    xbar, eps = cs.mean, cs.centered
    terms = []
    for k in range(2, m + 1):
        total = math.exp(gammaln(x.n + 1) - gammaln(x.n - k + 1))
        if total > ENUMERATION_BUDGET:
            raise CapacityError(f"{total:.0f} ordered {k}-subsets exceed budget {ENUMERATION_BUDGET}")
        acc = 0.0
        tuples = itertools.permutations(range(x.n), k)
        while True:
            batch = np.array(list(itertools.islice(tuples, chunk)), dtype=int)
            if batch.size == 0:
                break
            acc += float(np.sum(model.contract_vectors(xbar, eps[batch])))
        terms.append(acc / round(total) / math.factorial(k))
    base = model.value(xbar)
    return EstimateResult(value=base + math.fsum(terms), order=m, per_order_terms=tuple(terms),
                          path=EstimatePath.JACKKNIFE, plug_in=base, bandwidth=_bandwidth(model))


# ---------------------------------------------------------------------------
# expansion around the true theta
# ---------------------------------------------------------------------------

def _theta(theta, d: int) -> np.ndarray:
    t = np.atleast_1d(np.asarray(theta, dtype=float))
    if t.shape != (d,):
        raise InputError(f"theta must have shape ({d},), got {t.shape}")
    return t


def _noise_terms(model: FunctionalModel, theta: np.ndarray, eps: np.ndarray, m: int) -> Tuple[float, ...]:
    d = eps.shape[1]
    if isinstance(model, SeparableModel) or d == 1:
        columns = noise_ustat_columns(eps, m)
        out = []
        for k in range(1, m + 1):
            if isinstance(model, SeparableModel):
                val = float(np.mean(model.coordinate_derivative(theta, k) * columns[k - 1]))
            else:
                val = contract(model, theta, k, np.full((1,) * k, columns[k - 1, 0]))
            out.append(val / math.factorial(k))
        return tuple(out)
    return tuple(contract(model, theta, k, noise_ustat_tensor(eps, k)) / math.factorial(k)
                 for k in range(1, m + 1))


def decompose(samples, model: FunctionalModel, m: int, theta_true, *,
              estimate: Optional[float] = None) -> Decomposition:
    """Split f_hat around theta_true; ``estimate`` reuses an f_hat already computed."""
    x = _as_samples(samples)
    theta = _theta(theta_true, x.d)
    if model.d != x.d:
        raise InputError(f"model dimension {model.d} does not match data d={x.d}")
    if estimate is None:
        estimate = hodse_estimate(x, model, m).value
    s_k = _noise_terms(model, theta, x.values - theta, m)
    f_true = model.value(theta)
    remainder = f_true + math.fsum(s_k) - estimate
    return Decomposition(s_k=s_k, remainder=remainder, f_true=f_true, estimate=estimate)


def _scalar_derivative(model: FunctionalModel, x: float, k: int) -> float:
    return float(np.asarray(model.derivative(np.array([x]), k)).ravel()[0])


def riemann_liouville(h, alpha: float, *, tol: float = 1e-12) -> float:
    """J^alpha h = int_0^1 h(t) (1-t)^(alpha-1) dt / Gamma(alpha); J^0 h = h(1)."""
    if alpha == 0:
        return float(h(1.0))
    val, err = sp_integrate.quad(h, 0.0, 1.0, weight="alg", wvar=(0.0, alpha - 1.0),
                                 epsabs=tol, epsrel=tol, limit=200)
    if err > 100.0 * max(tol, tol * abs(val)):
        raise NumericError(f"weighted remainder integral of order {alpha}", achieved=err)
    return val / float(gamma(alpha))


def verify_identity(model_1d: FunctionalModel, theta: float, samples, m: int, quad_tol: float = 1e-12) -> float:
    """
    |Rem_m from the integral representation - Rem_m from the decomposition|
    for a one-dimensional functional.
    """
    x = _as_samples(samples)
    if x.d != 1 or model_1d.d != 1:
        raise InputError("verify_identity works on one-dimensional data and functionals")
    theta = float(np.atleast_1d(theta)[0])
    dec = decompose(x, model_1d, m, [theta])
    xbar = float(np.mean(x.values))
    ebar = xbar - theta
    fm_bar = _scalar_derivative(model_1d, xbar, m)

    def delta(t):
        return _scalar_derivative(model_1d, xbar + t * (theta - xbar), m) - fm_bar

    eps_k = np.concatenate([[1.0], noise_ustat_columns(x.values - theta, m)[:, 0]])
    parts = []
    for k in range(0, m + 1):
        j = riemann_liouville(delta, m - k, tol=quad_tol)
        parts.append((-1) ** (m - k) / math.factorial(k) * j * ebar ** (m - k) * eps_k[k])
    residual = abs(math.fsum(parts) - dec.remainder)
    logger.debug("identity residual %.3e (remainder %.6g)", residual, dec.remainder)
    return residual


def remainder_bound(samples, theta_true, m: int, s: float, holder_norm: float) -> RemainderBound:
    """
    sum_{k=0}^m H |ebar|^(s-k) ||eps^(k)|| / (Gamma(s-k+1) k!) with H the
    supplied Hoelder norm of f of order s (m = ceil(s) - 1).
    """
    if m != math.ceil(s) - 1:
        raise InputError(f"remainder bound needs m = ceil(s) - 1, got m={m}, s={s}")
    if holder_norm < 0:
        raise InputError("Hoelder norm must be non-negative")
    x = _as_samples(samples)
    theta = _theta(theta_true, x.d)
    eps = x.values - theta
    ebar = float(np.linalg.norm(np.mean(eps, axis=0)))
    if x.d == 1:
        norms = np.abs(noise_ustat_columns(eps, m)[:, 0])
    else:
        norms = np.array([float(np.linalg.norm(noise_ustat_tensor(eps, k))) for k in range(1, m + 1)])
    norms = np.concatenate([[1.0], norms])
    comps = tuple(
        holder_norm * ebar ** (s - k) * norms[k] / (float(gamma(s - k + 1)) * math.factorial(k))
        for k in range(m + 1)
    )
    return RemainderBound(bound=math.fsum(comps), components=comps)


# ---------------------------------------------------------------------------
# tuning helpers
# ---------------------------------------------------------------------------

def default_order(d: int, sigma_n: float, cap: int = ORDER_CAP) -> int:
    """m = min(s_theory, cap) - 1."""
    return tuning(d, sigma_n, cap).order


def estimate_noise_level(samples) -> float:
    """sigma_n estimate (mean_a s_a^2 / n)^(1/2) from column sample variances."""
    x = _as_samples(samples)
    if x.n < 2:
        raise InputError("noise level needs at least two observations")
    var = np.var(x.values, axis=0, ddof=1)
    return float(math.sqrt(np.mean(var) / x.n))


def bias_constant(m: int, n: int) -> float:
    """C*_{m,n} = sum_{k=0}^m C_{k,n} / (m-k)!, at most e^(1 + (m-1)m/n)."""
    if m > n:
        raise OrderError(f"order m={m} exceeds n={n}")
    total = 1.0 / math.factorial(m)
    for k in range(1, m + 1):
        total += counting_constant(n, k).c_kn / math.factorial(m - k)
    assert total <= math.exp(1.0 + (m - 1) * m / n) * (1 + 1e-12)
    return total
