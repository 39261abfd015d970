# src/hodse/ustat.py
"""
Completely degenerate U-statistics of centered samples.

    u^(k) = sum over distinct ordered (j_1..j_k) of y_{j_1} (x) ... (x) y_{j_k}
            / (n (n-1) ... (n-k+1)),      y_j = x_j - mean

Three routes are provided:

* scalar columns through elementary symmetric polynomials (any d),
* dense symmetric tensors by set-partition inclusion-exclusion (d^k small),
* literal enumeration of ordered tuples, used as the oracle.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Iterator, List, Optional, Tuple

import numpy as np
from scipy.special import gammaln

from .errors import CapacityError, ContractError, InputError

logger = logging.getLogger(__name__)

DENSE_BUDGET = 10**7
ENUMERATION_BUDGET = 10**7
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SampleMatrix:
    """n x d observation table; rows are observations."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InputError(f"sample matrix must be non-empty n x d, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InputError("sample matrix contains non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class CenteredSample:
    centered: np.ndarray
    mean: np.ndarray

    @property
    def n(self) -> int:
        return self.centered.shape[0]

    @property
    def d(self) -> int:
        return self.centered.shape[1]


@dataclass(frozen=True)
class UStatSet:
    """Per-order U-statistics; row k-1 of ``per_coordinate`` holds u_a^(k)."""

    max_order: int
    per_coordinate: np.ndarray
    dense_tensors: Optional[Tuple[np.ndarray, ...]] = None

    def order(self, k: int) -> np.ndarray:
        return self.per_coordinate[k - 1]

    def tensor(self, k: int) -> np.ndarray:
        if self.dense_tensors is None:
            raise ContractError("dense tensors were not requested for this UStatSet")
        return self.dense_tensors[k - 1]


@dataclass(frozen=True)
class CountingConstants:
    k: int
    n: int
    c_kn: float
    falling_factorial_log: float

    @property
    def bound(self) -> float:
        return math.exp((self.k - 1) * self.k / self.n)


# ---------------------------------------------------------------------------
# summation helpers
# ---------------------------------------------------------------------------

def neumaier_sum(terms: np.ndarray, axis: int = 0) -> np.ndarray:
    """Compensated sum along ``axis``, vectorized over the remaining axes."""
    arr = np.moveaxis(np.asarray(terms, dtype=float), axis, 0)
    total = np.zeros(arr.shape[1:])
    comp = np.zeros(arr.shape[1:])
    for row in arr:
        t = total + row
        big = np.abs(total) >= np.abs(row)
        comp += np.where(big, (total - t) + row, (row - t) + total)
        total = t
    return total + comp


def _log_falling(n: int, k: int) -> float:
    return float(gammaln(n + 1) - gammaln(n - k + 1))


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def center(samples: SampleMatrix) -> CenteredSample:
    """Subtract compensated column means."""
    values = samples.values if isinstance(samples, SampleMatrix) else SampleMatrix(samples).values
    mean = neumaier_sum(values, axis=0) / values.shape[0]
    return CenteredSample(centered=values - mean, mean=mean)


def elementary_symmetric(values, m: int) -> np.ndarray:
    """
    e_1..e_m of ``values`` by the one-point-at-a-time update
    e_k <- e_k + y_j e_{k-1} (k descending).

    A 2-D input is processed column by column and returns an m x d array.
    """
    y = np.asarray(values, dtype=float)
    n = y.shape[0]
    if m < 1:
        raise InputError(f"order m must be >= 1, got {m}")
    if m > n:
        raise InputError(f"order m={m} exceeds the number of values n={n}")
    e = np.zeros((m + 1,) + y.shape[1:])
    e[0] = 1.0
    for j, yj in enumerate(y):
        top = min(j + 1, m)
        # right-hand side is materialized before the in-place add
        e[1:top + 1] += yj * e[:top]
    return e[1:]


def _check_centered(y: np.ndarray, offset=0.0) -> None:
    """Column sums must vanish to 10 n eps scale; ``offset`` is the removed mean."""
    n = y.shape[0]
    scale = float(np.max(np.abs(y)) + np.max(np.abs(offset))) if y.size else 0.0
    drift = np.abs(neumaier_sum(y, axis=0))
    tol = 10 * n * _EPS * max(scale, np.finfo(float).tiny)
    if np.any(drift > tol):
        raise ContractError(
            f"input is not centered: column sum {float(np.max(drift)):.3e} exceeds {tol:.3e}"
        )


def _scalar_ustat(y: np.ndarray, m: int) -> np.ndarray:
    e = elementary_symmetric(y, m)
    n = y.shape[0]
    ks = np.arange(1, m + 1)
    log_ratio = gammaln(ks + 1) - np.array([_log_falling(n, int(k)) for k in ks])
    factor = np.exp(log_ratio)
    return e * factor.reshape((m,) + (1,) * (e.ndim - 1))


def degenerate_ustat_scalar(values, m: int) -> np.ndarray:
    """u^(1..m) of already-centered scalars: k! e_k (n-k)!/n!."""
    y = np.asarray(values, dtype=float)
    if m > y.shape[0]:
        raise InputError(f"order m={m} exceeds n={y.shape[0]}")
    _check_centered(y)
    return _scalar_ustat(y, m)


def ustat_columns(centered: CenteredSample, m: int) -> np.ndarray:
    """m x d matrix of per-coordinate u_a^(k)."""
    if m > centered.n:
        raise InputError(f"order m={m} exceeds n={centered.n}")
    _check_centered(centered.centered, centered.mean)
    return _scalar_ustat(centered.centered, m)


def noise_ustat_columns(noise, m: int) -> np.ndarray:
    """Per-coordinate eps^(k) from raw noise; no centering requirement."""
    eps = np.asarray(noise, dtype=float)
    if eps.ndim == 1:
        eps = eps[:, None]
    if m > eps.shape[0]:
        raise InputError(f"order m={m} exceeds n={eps.shape[0]}")
    return _scalar_ustat(eps, m)


# -- dense tensors ------------------------------------------------------------

def _set_partitions(items: Tuple[int, ...]) -> Iterator[List[Tuple[int, ...]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for sub in _set_partitions(rest):
        yield [(first,)] + sub
        for i, block in enumerate(sub):
            yield sub[:i] + [(first,) + block] + sub[i + 1:]


@lru_cache(maxsize=None)
def _weighted_partitions(k: int) -> Tuple[Tuple[float, Tuple[Tuple[int, ...], ...]], ...]:
    out = []
    for blocks in _set_partitions(tuple(range(k))):
        weight = 1.0
        for b in blocks:
            weight *= (-1) ** (len(b) - 1) * math.factorial(len(b) - 1)
        out.append((weight, tuple(blocks)))
    return tuple(out)


def _power_sum_tensor(y: np.ndarray, b: int) -> np.ndarray:
    """sum_j y_j^{(x) b} with compensation over j."""
    d = y.shape[1]
    total = np.zeros((d,) * b)
    comp = np.zeros_like(total)
    for row in y:
        term = reduce(np.multiply.outer, [row] * b)
        t = total + term
        comp += np.where(np.abs(total) >= np.abs(term), (total - t) + term, (term - t) + total)
        total = t
    return total + comp


def symmetrize_sorted(tensor: np.ndarray) -> np.ndarray:
    """Copy each canonical (sorted-index) entry to all its permutations."""
    k = tensor.ndim
    if k <= 1:
        return tensor
    idx = np.indices(tensor.shape, dtype=np.int32).reshape(k, -1)
    canon = np.sort(idx, axis=0)
    return tensor[tuple(canon)].reshape(tensor.shape)


def _ustat_tensor(y: np.ndarray, k: int) -> np.ndarray:
    n, d = y.shape
    if k < 1:
        raise InputError(f"order k must be >= 1, got {k}")
    if k > n:
        raise InputError(f"order k={k} exceeds n={n}")
    if d**k > DENSE_BUDGET:
        raise CapacityError(
            f"dense order-{k} tensor over d={d} needs {d**k} entries "
            f"(budget {DENSE_BUDGET}); use the separable path"
        )
    letters = "abcdefghijklmnopqrstuvwxyz"[:k]
    powers = {}
    total = np.zeros((d,) * k)
    for weight, blocks in _weighted_partitions(k):
        operands, subs = [], []
        for block in blocks:
            b = len(block)
            if b not in powers:
                powers[b] = _power_sum_tensor(y, b)
            operands.append(powers[b])
            subs.append("".join(letters[i] for i in block))
        total += weight * np.einsum(",".join(subs) + "->" + letters, *operands)
    total /= math.exp(_log_falling(n, k))
    return symmetrize_sorted(total)


def degenerate_ustat_tensor(centered: CenteredSample, k: int) -> np.ndarray:
    """Dense symmetric u^(k) by Moebius inclusion-exclusion over index blocks."""
    _check_centered(centered.centered, centered.mean)
    return _ustat_tensor(centered.centered, k)


def noise_ustat_tensor(noise, k: int) -> np.ndarray:
    eps = np.asarray(noise, dtype=float)
    if eps.ndim == 1:
        eps = eps[:, None]
    return _ustat_tensor(eps, k)


def brute_force_ustat(centered: CenteredSample, k: int) -> np.ndarray:
    """Literal enumeration of ordered distinct k-tuples (oracle)."""
    y = centered.centered if isinstance(centered, CenteredSample) else np.atleast_2d(centered)
    n, d = y.shape
    if k > n:
        raise InputError(f"order k={k} exceeds n={n}")
    if n**k > ENUMERATION_BUDGET:
        raise CapacityError(f"enumeration of n^k={n**k} tuples exceeds {ENUMERATION_BUDGET}")
    total = np.zeros((d,) * k)
    for tup in itertools.permutations(range(n), k):
        total += reduce(np.multiply.outer, [y[j] for j in tup])
    return total / math.exp(_log_falling(n, k))


def counting_constant(n: int, k: int) -> CountingConstants:
    if k < 1 or k > n:
        raise InputError(f"counting constant needs 1 <= k <= n, got k={k}, n={n}")
    log_fall = _log_falling(n, k)
    c_kn = math.exp(k * math.log(n) - log_fall)
    out = CountingConstants(k=k, n=n, c_kn=c_kn, falling_factorial_log=log_fall)
    assert c_kn <= out.bound * (1 + 1e-12), f"C_{{{k},{n}}}={c_kn} above exp((k-1)k/n)"
    return out


def ustat_set(centered: CenteredSample, m: int, *, dense: bool = False) -> UStatSet:
    columns = ustat_columns(centered, m)
    tensors = None
    if dense:
        tensors = tuple(_ustat_tensor(centered.centered, k) for k in range(1, m + 1))
    logger.debug("u-statistics up to order %d for n=%d, d=%d (dense=%s)",
                 m, centered.n, centered.d, dense)
    return UStatSet(max_order=m, per_coordinate=columns, dense_tensors=tensors)
