"""
q-series primitives shared by every other module: finite and infinite
q-Pochhammer symbols and q-binomial coefficients, over real or complex
arguments. Arguments `a` may be numpy arrays; products broadcast over them.
"""
from __future__ import annotations

import logging
import math
from typing import Union

import numpy as np

from qwalks.src.errors import DomainError, PoleError, TruncationError

logger = logging.getLogger(__name__)

Number = Union[float, complex, np.ndarray]

POLE_TOL = 1e-12
QPOCH_INF_TOL = 1e-15
MAX_FACTORS = 10**6


def check_q(q: float) -> float:
    """Return q as a float, insisting on 0 < q < 1"""
    q = float(q)
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie strictly inside (0, 1), got {q}")
    return q


def _product(factors: np.ndarray) -> np.ndarray:
    """
    Product over the last axis. Rows whose factors all have positive real
    part go through log-space; the others are multiplied directly.
    """
    if factors.shape[-1] == 0:
        return np.ones(factors.shape[:-1], dtype=factors.dtype)
    direct = np.prod(factors, axis=-1)
    positive = np.all(factors.real > 0, axis=-1)
    if not np.any(positive):
        return direct
    with np.errstate(divide="ignore", invalid="ignore"):
        logged = np.exp(np.sum(np.log(factors.astype(complex)), axis=-1))
    if not np.iscomplexobj(factors):
        logged = logged.real
    return np.where(positive, logged, direct)


def _unwrap(value: np.ndarray, scalar: bool) -> Number:
    if not scalar:
        return value
    value = value.item()
    return value


def qpoch(a: Number, q: float, k: int) -> Number:
    """
    (a;q)_k = (1-a)(1-aq)...(1-aq^{k-1}) for k >= 0, and
    (a;q)_k = 1/(aq^k;q)_{-k} for k < 0.

    Raises PoleError when a negative-index evaluation divides by a factor
    within 1e-12 of zero.
    """
    q = check_q(q)
    k = int(k)
    scalar = np.ndim(a) == 0
    a = np.asarray(a)
    if k >= 0:
        powers = q ** np.arange(k)
        factors = 1.0 - np.multiply.outer(a, powers)
        return _unwrap(_product(factors), scalar)
    # (a;q)_{-n} = 1 / prod_{i=1}^{n} (1 - a q^{-i})
    n = -k
    powers = q ** -np.arange(1, n + 1, dtype=float)
    factors = 1.0 - np.multiply.outer(a, powers)
    if np.any(np.abs(factors) < POLE_TOL):
        raise PoleError(
            f"(a;q)_{k} hits a pole: some a*q^-i equals 1 for a={a}, q={q}",
            location=a,
        )
    return _unwrap(1.0 / _product(factors), scalar)


def truncation_index(a_abs: float, q: float, tol: float) -> int:
    """Smallest K with |a| q^K < tol (1 - q); the tail then changes the product by < tol"""
    threshold = tol * (1.0 - q)
    if a_abs <= threshold:
        return 0
    index = math.ceil(math.log(threshold / a_abs) / math.log(q))
    if index > MAX_FACTORS:
        raise TruncationError(
            f"(a;q)_inf with |a|={a_abs:g}, q={q} needs {index} factors (cap {MAX_FACTORS})"
        )
    return max(index, 0)


def qpoch_inf(a: Number, q: float, tol: float = QPOCH_INF_TOL) -> Number:
    """(a;q)_inf truncated where the remaining factors are within tol of one"""
    q = check_q(q)
    if tol <= 0:
        raise DomainError(f"tol must be positive, got {tol}")
    a_abs = float(np.max(np.abs(a))) if np.size(a) else 0.0
    count = truncation_index(a_abs, q, tol)
    logger.debug("qpoch_inf uses %d factors for |a| <= %g", count, a_abs)
    return qpoch(a, q, count)


def log_qpoch_q(n: int, q: float) -> float:
    """log (q;q)_n, always finite for n >= 0"""
    if n <= 0:
        return 0.0
    return float(np.sum(np.log1p(-(q ** np.arange(1, n + 1)))))


def qbinom(n: int, k: int, q: float) -> float:
    """
    q-binomial coefficient (q;q)_n / ((q;q)_k (q;q)_{n-k}); zero outside
    0 <= k <= n.
    """
    q = check_q(q)
    n, k = int(n), int(k)
    if k < 0 or k > n:
        return 0.0
    k = min(k, n - k)
    upper = q ** np.arange(n - k + 1, n + 1)
    lower = q ** np.arange(1, k + 1)
    return float(np.exp(np.sum(np.log1p(-upper)) - np.sum(np.log1p(-lower))))


def qbinom_log(n: int, k: int, q: float) -> float:
    """log of qbinom for 0 <= k <= n, -inf outside"""
    if k < 0 or k > n:
        return -math.inf
    return log_qpoch_q(n, q) - log_qpoch_q(k, q) - log_qpoch_q(n - k, q)
