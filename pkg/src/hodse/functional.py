# src/hodse/functional.py
"""
Functionals f(theta) with derivative tensors, and the variance quantities of
the degenerate expansion terms.
"""

from __future__ import annotations

import itertools
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import CapacityError, ContractError, InputError
from .rules import FunctionalKind, SeparableBase
from .smoothing import SmoothedFunctional
from .ustat import DENSE_BUDGET, counting_constant, symmetrize_sorted

logger = logging.getLogger(__name__)


def _as_theta(theta, d: int) -> np.ndarray:
    t = np.atleast_1d(np.asarray(theta, dtype=float))
    if t.shape != (d,):
        raise InputError(f"theta must have shape ({d},), got {t.shape}")
    return t


def _check_budget(d: int, k: int) -> None:
    if d**k > DENSE_BUDGET:
        raise CapacityError(f"dense derivative of order {k} over d={d} exceeds budget {DENSE_BUDGET}")


class FunctionalModel(ABC):
    """
    A functional on R^d with access to its derivative tensors.

    ``derivative_order_max`` of None means derivatives of every order exist.
    """

    kind: FunctionalKind
    d: int
    derivative_order_max: Optional[int] = None

    @abstractmethod
    def value(self, theta) -> float:
        ...

    @abstractmethod
    def derivative(self, theta, k: int) -> np.ndarray:
        """Dense symmetric f^(k)(theta) of shape (d,)*k."""

    def require_order(self, k: int) -> None:
        if self.derivative_order_max is not None and k > self.derivative_order_max:
            raise ContractError(
                f"{self.describe()} provides derivatives up to order "
                f"{self.derivative_order_max}, order {k} requested"
            )

    def contract_vectors(self, theta, vectors: np.ndarray) -> np.ndarray:
        """
        <f^(k)(theta), v_1 (x) ... (x) v_k> for a batch ``vectors`` of shape
        (B, k, d); returns B values.
        """
        vecs = np.asarray(vectors, dtype=float)
        k = vecs.shape[1]
        tensor = self.derivative(theta, k)
        res = np.tensordot(vecs[:, 0, :], tensor, axes=([1], [0]))
        for ell in range(1, k):
            res = np.einsum("ba...,ba->b...", res, vecs[:, ell, :])
        return res

    def describe(self) -> str:
        return f"{self.kind.value} functional on R^{self.d}"


# ---------------------------------------------------------------------------
# polynomial
# ---------------------------------------------------------------------------

def _falling(e: int, c: int) -> int:
    out = 1
    for i in range(c):
        out *= e - i
    return out


class PolynomialModel(FunctionalModel):
    kind = FunctionalKind.POLYNOMIAL

    def __init__(self, coefficients: Mapping[Tuple[int, ...], float], d: int):
        self.d = d
        self.coefficients: Dict[Tuple[int, ...], float] = {}
        for exps, coef in coefficients.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != d or any(e < 0 for e in exps):
                raise InputError(f"monomial exponent {exps} does not fit d={d}")
            if not math.isfinite(coef):
                raise InputError(f"coefficient of {exps} is not finite")
            if coef != 0.0:
                self.coefficients[exps] = self.coefficients.get(exps, 0.0) + float(coef)

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.coefficients), default=0)

    def value(self, theta) -> float:
        t = _as_theta(theta, self.d)
        return float(sum(c * np.prod(t ** np.array(e)) for e, c in self.coefficients.items()))

    def _entry(self, t: np.ndarray, counts: Sequence[int]) -> float:
        acc = 0.0
        for exps, coef in self.coefficients.items():
            term = coef
            for e, c, x in zip(exps, counts, t):
                if c > e:
                    term = 0.0
                    break
                term *= _falling(e, c) * x ** (e - c)
            acc += term
        return acc

    def derivative(self, theta, k: int) -> np.ndarray:
        t = _as_theta(theta, self.d)
        if k == 0:
            return np.asarray(self.value(t))
        _check_budget(self.d, k)
        out = np.zeros((self.d,) * k)
        if k > self.degree:
            return out
        for idx in itertools.combinations_with_replacement(range(self.d), k):
            counts = np.bincount(idx, minlength=self.d)
            out[idx] = self._entry(t, counts)
        return symmetrize_sorted(out)


def make_polynomial(coefficients: Mapping[Tuple[int, ...], float], d: int) -> PolynomialModel:
    """Exact polynomial functional from {exponent tuple: coefficient}."""
    return PolynomialModel(coefficients, d)


# ---------------------------------------------------------------------------
# separable additive f(theta) = (1/d) sum_a f0(theta_a)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TableBase:
    knots: Tuple[float, ...]
    values: Tuple[float, ...]

    def spline(self) -> CubicSpline:
        return CubicSpline(np.asarray(self.knots), np.asarray(self.values))


class SeparableModel(FunctionalModel):
    kind = FunctionalKind.SEPARABLE

    def __init__(self, base: SeparableBase, d: int, *, p: float = 1.0,
                 smoothing: Optional[SmoothedFunctional] = None,
                 table: Optional[TableBase] = None):
        if d < 1:
            raise InputError(f"dimension must be >= 1, got {d}")
        self.base = base
        self.d = d
        self.p = 1.0 if base is SeparableBase.ABS else p
        if smoothing is not None and not base.needs_smoothing:
            raise InputError(f"smoothing applies to abs/pow only, not {base.value}")
        if smoothing is not None and smoothing.base is not base:
            raise InputError("smoothing base does not match the separable base")
        self.smoothing = smoothing
        self._spline = None
        if base is SeparableBase.TABLE:
            if table is None:
                raise InputError("table base needs knots and values")
            self._spline = table.spline()
        self.table = table
        if base.needs_smoothing:
            self.derivative_order_max = None if smoothing is not None else 0
        elif base is SeparableBase.TABLE:
            self.derivative_order_max = 2
        else:
            self.derivative_order_max = None

    def describe(self) -> str:
        label = self.base.value if self.base is not SeparableBase.POW else f"pow({self.p:g})"
        if self.smoothing is not None:
            label += f", h={self.smoothing.h:g}"
        return f"separable {label} on R^{self.d}"

    def f0(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.base.needs_smoothing:
            return np.abs(x) ** self.p
        if self.base is SeparableBase.SQUARE:
            return x * x
        if self.base is SeparableBase.SIN:
            return np.sin(x)
        return self._spline(x)

    def coordinate_derivative(self, x, k: int) -> np.ndarray:
        """f0^(k) (or f_h^(k) when smoothed) at each entry of ``x``."""
        self.require_order(k)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.base.needs_smoothing:
            if k == 0 and self.smoothing is None:
                return self.f0(x)
            # quadrature per distinct point only
            uniq, inverse = np.unique(x, return_inverse=True)
            vals = np.atleast_1d(np.asarray(self.smoothing.derivative(uniq, k), dtype=float))
            return vals[inverse.reshape(x.shape)]
        if self.base is SeparableBase.SQUARE:
            return {0: x * x, 1: 2.0 * x, 2: np.full_like(x, 2.0)}.get(k, np.zeros_like(x))
        if self.base is SeparableBase.SIN:
            return np.sin(x + k * math.pi / 2.0)
        return self._spline(x, k)

    def value(self, theta) -> float:
        t = _as_theta(theta, self.d)
        return float(np.mean(self.coordinate_derivative(t, 0)))

    def target_value(self, theta) -> float:
        """(1/d) sum f0(theta_a) with the raw, unsmoothed f0."""
        return float(np.mean(self.f0(_as_theta(theta, self.d))))

    def unsmoothed(self) -> "SeparableModel":
        return SeparableModel(self.base, self.d, p=self.p, table=self.table)

    def derivative(self, theta, k: int) -> np.ndarray:
        t = _as_theta(theta, self.d)
        if k == 0:
            return np.asarray(self.value(t))
        _check_budget(self.d, k)
        diag = self.coordinate_derivative(t, k) / self.d
        out = np.zeros((self.d,) * k)
        idx = np.arange(self.d)
        out[(idx,) * k] = diag
        return out

    def contract_vectors(self, theta, vectors: np.ndarray) -> np.ndarray:
        vecs = np.asarray(vectors, dtype=float)
        k = vecs.shape[1]
        diag = self.coordinate_derivative(_as_theta(theta, self.d), k) / self.d
        return np.prod(vecs, axis=1) @ diag


def make_separable(f0_spec, d: int, smoothing: Optional[SmoothedFunctional] = None, *,
                   p: Optional[float] = None, table: Optional[TableBase] = None) -> SeparableModel:
    """
    ``f0_spec`` is a SeparableBase or its string value; ``pow`` takes ``p``
    (or the exponent of the attached smoothing).
    """
    try:
        base = SeparableBase(f0_spec) if not isinstance(f0_spec, SeparableBase) else f0_spec
    except ValueError:
        raise InputError(f"unknown separable base {f0_spec!r}") from None
    if base is SeparableBase.POW:
        p = smoothing.p if smoothing is not None else p
        if p is None or not 0.0 < p < 1.0:
            raise InputError(f"pow base needs an exponent in (0, 1), got {p}")
    return SeparableModel(base, d, p=p if p is not None else 1.0, smoothing=smoothing, table=table)


# ---------------------------------------------------------------------------
# custom one-dimensional functionals with analytic derivatives
# ---------------------------------------------------------------------------

def _atan_derivative(x: np.ndarray, k: int) -> np.ndarray:
    if k == 0:
        return np.arctan(x)
    r = 1.0 + x * x
    return (math.factorial(k - 1) * (-1) ** (k - 1) * r ** (-k / 2.0)
            * np.sin(k * (math.pi / 2.0 - np.arctan(x))))


def _xatan_derivative(x: np.ndarray, k: int) -> np.ndarray:
    # Leibniz: (x g)^(k) = x g^(k) + k g^(k-1)
    if k == 0:
        return x * np.arctan(x)
    return x * _atan_derivative(x, k) + k * _atan_derivative(x, k - 1)


_BUILTIN_1D: Dict[str, Callable[[np.ndarray, int], np.ndarray]] = {
    "exp": lambda x, k: np.exp(x),
    "sin": lambda x, k: np.sin(x + k * math.pi / 2.0),
    "xatan": _xatan_derivative,
}


@dataclass
class CustomModel(FunctionalModel):
    """One-dimensional f given by a callable ``derivatives(x, k)`` (k = 0 is f)."""

    name: str
    derivatives: Callable[[np.ndarray, int], np.ndarray] = field(repr=False)
    derivative_order_max: Optional[int] = None
    d: int = 1
    kind: FunctionalKind = FunctionalKind.CUSTOM

    def describe(self) -> str:
        return f"custom {self.name}"

    def scalar_derivative(self, x, k: int):
        self.require_order(k)
        return self.derivatives(np.asarray(x, dtype=float), k)

    def value(self, theta) -> float:
        return float(self.scalar_derivative(_as_theta(theta, 1)[0], 0))

    def derivative(self, theta, k: int) -> np.ndarray:
        val = float(self.scalar_derivative(_as_theta(theta, 1)[0], k))
        return np.full((1,) * k, val)


def make_custom(name: str) -> CustomModel:
    if name not in _BUILTIN_1D:
        raise InputError(f"unknown custom functional {name!r}; choose from {sorted(_BUILTIN_1D)}")
    return CustomModel(name=name, derivatives=_BUILTIN_1D[name])


# ---------------------------------------------------------------------------
# contraction and variance quantities
# ---------------------------------------------------------------------------

def contract(model: FunctionalModel, theta, k: int, tensor) -> float:
    """<f^(k)(theta), T> over all d^k entries."""
    T = np.asarray(tensor, dtype=float)
    if T.shape != (model.d,) * k:
        raise InputError(f"tensor shape {T.shape} does not match order {k} over d={model.d}")
    model.require_order(k)
    if isinstance(model, SeparableModel):
        diag = np.einsum("a" * k + "->a", T) if k > 0 else T
        coef = model.coordinate_derivative(_as_theta(theta, model.d), k) / model.d
        return float(coef @ diag) if k > 0 else float(model.value(theta) * T)
    return float(np.sum(model.derivative(theta, k) * T))


@dataclass(frozen=True)
class CovarianceModel:
    """Per-observation noise covariance Sigma = E[(1/n) sum_j eps_j eps_j^T]."""

    matrix: np.ndarray
    diagonal: bool = False

    def __post_init__(self):
        S = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if S.shape[0] != S.shape[1]:
            raise InputError(f"covariance must be square, got {S.shape}")
        norm = float(np.max(np.abs(S))) if S.size else 0.0
        if np.max(np.abs(S - S.T), initial=0.0) > 1e-12 * max(1.0, norm):
            raise InputError("covariance is not symmetric")
        eig = np.linalg.eigvalsh(S)
        if eig.size and eig.min() < -1e-10 * max(abs(eig.max()), np.finfo(float).tiny):
            raise InputError(f"covariance is not positive semidefinite (min eigenvalue {eig.min():.3e})")
        object.__setattr__(self, "matrix", S)
        if not self.diagonal:
            object.__setattr__(self, "diagonal", bool(np.count_nonzero(S - np.diag(np.diag(S))) == 0))

    @classmethod
    def from_diagonal(cls, variances) -> "CovarianceModel":
        v = np.atleast_1d(np.asarray(variances, dtype=float))
        return cls(np.diag(v), diagonal=True)

    @classmethod
    def isotropic(cls, d: int, variance: float) -> "CovarianceModel":
        return cls.from_diagonal(np.full(d, variance))

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def variances(self) -> np.ndarray:
        return np.diag(self.matrix)

    def scaled(self, factor: float) -> "CovarianceModel":
        return CovarianceModel(self.matrix * factor, diagonal=self.diagonal)


def _mode_products(tensor: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    out = tensor
    for axis in range(tensor.ndim):
        out = np.moveaxis(np.tensordot(sigma, out, axes=([1], [axis])), 0, axis)
    return out


def v_k(model: FunctionalModel, theta, cov: CovarianceModel, k: int) -> float:
    """V_k = <f^(k), f^(k) x_1 Sigma ... x_k Sigma>."""
    if cov.d != model.d:
        raise InputError(f"covariance dimension {cov.d} does not match d={model.d}")
    if isinstance(model, SeparableModel) and cov.diagonal:
        coef = model.coordinate_derivative(_as_theta(theta, model.d), k) / model.d
        return float(np.sum(coef**2 * cov.variances**k))
    F = model.derivative(theta, k)
    return float(np.sum(F * _mode_products(F, cov.matrix)))


def predicted_var_s_k(n: int, k: int, v: float) -> float:
    """Var of <f^(k)(theta), eps^(k)> for i.i.d. noise: C_{k,n} k! V_k / n^k."""
    c = counting_constant(n, k).c_kn
    return c * math.factorial(k) * v / float(n) ** k


def predicted_var_s_k_inid(n: int, k: int, v: float) -> float:
    """Upper bound C_{k,n}^2 k! V_k / n^k for independent, non-identical noise."""
    c = counting_constant(n, k).c_kn
    return c * c * math.factorial(k) * v / float(n) ** k


def effective_rank(cov: CovarianceModel) -> Tuple[float, float]:
    """(sigma, r) with sigma^2 the top eigenvalue and r = trace / sigma^2."""
    top = float(np.linalg.eigvalsh(cov.matrix).max())
    if top <= 0.0:
        raise ContractError("effective rank undefined for a zero covariance")
    return math.sqrt(top), float(np.trace(cov.matrix)) / top


def _sphere_points(d: int, count: int) -> np.ndarray:
    if d == 1:
        return np.array([[1.0]])
    if d == 2:
        ang = np.linspace(0.0, np.pi, count, endpoint=False)
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    # Fibonacci lattice on the upper hemisphere
    i = np.arange(count) + 0.5
    z = i / count
    phi = np.pi * (1.0 + 5**0.5) * i
    r = np.sqrt(1.0 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def tensor_spectral_norm(tensor, *, method: str = "power", restarts: int = 20,
                         iterations: int = 500, grid: int = 20000, seed: int = 0) -> float:
    """
    max over unit x of |<T, x^{(x)k}>| for a symmetric tensor.

    ``power`` runs shifted symmetric power iteration from ``restarts`` random
    starts (a lower estimate); ``grid`` maximizes over a sphere grid (d <= 3).
    """
    T = np.asarray(tensor, dtype=float)
    k = T.ndim
    if k == 0:
        return float(abs(T))
    if k == 1:
        return float(np.linalg.norm(T))
    if k == 2:
        return float(np.max(np.abs(np.linalg.eigvalsh(T))))
    d = T.shape[0]

    def form(x):
        res = T
        for _ in range(k):
            res = res @ x
        return res

    if method == "grid":
        if d > 3:
            raise InputError("grid spectral norm is limited to d <= 3")
        return float(max(abs(form(x)) for x in _sphere_points(d, grid)))
    if method != "power":
        raise InputError(f"unknown spectral norm method {method!r}")
    rng = np.random.default_rng(seed)
    alpha = (k - 1) * float(np.linalg.norm(T))
    best = 0.0
    for sign in (1.0, -1.0):
        S = sign * T
        for _ in range(restarts):
            x = rng.standard_normal(d)
            x /= np.linalg.norm(x)
            for _ in range(iterations):
                g = S
                for _ in range(k - 1):
                    g = g @ x
                y = g + alpha * x
                y /= np.linalg.norm(y)
                if np.linalg.norm(y - x) < 1e-13:
                    x = y
                    break
                x = y
            best = max(best, abs(form(x)))
    return best


def holder_norm_grid(fn_m: Callable[[np.ndarray], np.ndarray], s: float, grid) -> float:
    """
    sup over grid pairs of |g(x) - g(y)| / |x - y|^(s - m), m = ceil(s) - 1,
    where ``fn_m`` evaluates g = f^(m).
    """
    m = math.ceil(s) - 1
    xs = np.asarray(grid, dtype=float)
    g = np.asarray(fn_m(xs), dtype=float)
    dx = np.abs(xs[:, None] - xs[None, :])
    dg = np.abs(g[:, None] - g[None, :])
    mask = dx > 0
    return float(np.max(dg[mask] / dx[mask] ** (s - m)))


@dataclass(frozen=True)
class VarianceTable:
    v_k: Tuple[float, ...]
    predicted_var_s_k: Tuple[float, ...]
    v_k_bound: Tuple[float, ...]


def variance_table(model: FunctionalModel, theta, cov: CovarianceModel, m: int, n: int) -> VarianceTable:
    sigma, r = effective_rank(cov)
    vs, preds, bounds = [], [], []
    for k in range(1, m + 1):
        v = v_k(model, theta, cov, k)
        vs.append(v)
        preds.append(predicted_var_s_k(n, k, v))
        if isinstance(model, SeparableModel):
            norm = float(np.max(np.abs(model.coordinate_derivative(_as_theta(theta, model.d), k)))) / model.d
        else:
            norm = tensor_spectral_norm(model.derivative(theta, k))
        bounds.append(norm**2 * sigma ** (2 * k) * r ** (k - 1))
    return VarianceTable(tuple(vs), tuple(preds), tuple(bounds))
