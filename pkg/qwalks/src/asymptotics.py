"""
Large-m behaviour of walks started from densely packed clusters: the
critical-point equation and its roots, the liquid region, the complex slope,
the incomplete beta kernel, the frozen boundary, and a harness comparing the
exact kernel at finite m with its bulk limit.
"""
from __future__ import annotations

import cmath
import logging
import math
from functools import cached_property
from typing import Any, NamedTuple, Optional, Sequence

import joblib
import mpmath as mp
import numpy as np
import scipy.ndimage
import scipy.optimize
import sympy
from numpy.polynomial import polynomial as poly
from pydantic import BaseModel, root_validator, validator

from qwalks.src.constants import Method
from qwalks.src.errors import ConsistencyError, DomainError, PoleError, RootFindingError
from qwalks.src.kernel import SpaceTimePoint, kernel_walks
from qwalks.src.options import GridWindow
from qwalks.src.quadrature import segment_integral
from qwalks.src.serializable import Serializable
from qwalks.src.walks import WalkConfig

logger = logging.getLogger(__name__)

POLE_TOL = 1e-14
IMAG_TOL = 1e-9
SLOPE_TOL = 1e-9
PATH_CLEARANCE = 1e-8
BOUNDARY_DPS = 40


class ClusterProfile(BaseModel, Serializable):
    """
    L densely packed clusters: particles with a_k <= i/m < a_{k+1} sit at
    i + floor(m C_k). The scaled profile is g(u) = u + C_k on [a_k, a_{k+1}).
    """

    a: list[float]
    C: list[float]
    gamma: float

    class Config:
        keep_untouched = (cached_property,)

    @validator("gamma")
    def _positive_gamma(cls, value: float) -> float:
        if value <= 0:
            raise ValueError(f"gamma must be positive, got {value}")
        return value

    @validator("C")
    def _increasing_offsets(cls, value: list[float]) -> list[float]:
        if not value or value[0] <= 0 or any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError(f"C must be positive and strictly increasing, got {value}")
        return value

    @root_validator(skip_on_failure=True)
    def _breakpoints(cls, values: dict[str, Any]) -> dict[str, Any]:
        a, C = values["a"], values["C"]
        if len(a) != len(C) + 1:
            raise ValueError(f"need len(a) = len(C) + 1, got {len(a)} and {len(C)}")
        if a[0] != 0 or a[-1] != 1 or any(b <= c for c, b in zip(a, a[1:])):
            raise ValueError(f"a must increase strictly from 0 to 1, got {a}")
        return values

    @property
    def L(self) -> int:
        return len(self.C)

    @cached_property
    def alphas(self) -> np.ndarray:
        """e^{gamma (a_i + C_i)}"""
        return np.exp(self.gamma * (np.array(self.a[:-1]) + np.array(self.C)))

    @cached_property
    def betas(self) -> np.ndarray:
        """e^{gamma (a_{i+1} + C_i)}"""
        return np.exp(self.gamma * (np.array(self.a[1:]) + np.array(self.C)))

    @cached_property
    def products(self) -> tuple[np.ndarray, np.ndarray]:
        """
        Ascending coefficients of prod (w alpha_i - 1) and prod (w beta_i - 1),
        expanded exactly and rounded once.
        """
        w = sympy.Symbol("w")
        gamma = sympy.Rational(repr(self.gamma))
        expansions = []
        for shifts in (self.a[:-1], self.a[1:]):
            product = sympy.Integer(1)
            for shift, offset in zip(shifts, self.C):
                exponent = gamma * (sympy.Rational(repr(shift)) + sympy.Rational(repr(offset)))
                product *= w * sympy.exp(exponent) - 1
            coefficients = sympy.Poly(sympy.expand(product), w).all_coeffs()[::-1]
            expansions.append(np.array([float(c.evalf(30)) for c in coefficients]))
        return expansions[0], expansions[1]

    def g(self, u: float) -> float:
        for k in range(self.L):
            if self.a[k] <= u < self.a[k + 1]:
                return u + self.C[k]
        return u + self.C[-1]

    def serialize(self) -> dict[str, Any]:
        return {"a": list(self.a), "C": list(self.C), "gamma": self.gamma}

    @classmethod
    def deserialize(cls, *args, **kwargs) -> "ClusterProfile":
        return cls(*args, **kwargs)


class LiquidPoint(NamedTuple):
    """A point of the liquid region with its upper-half-plane critical point"""

    tau: float
    rho: float
    w_c: complex


class ComplexSlope:
    """Upper-half-plane parameter of the local translation invariant measure"""

    def __init__(self, omega: complex):
        omega = complex(omega)
        if not omega.imag > 0 or omega in (0, 1):
            raise DomainError(f"Complex slope must lie in the open upper half-plane, got {omega}")
        self.omega = omega

    @property
    def density(self) -> float:
        """B_omega(0, 0) = Arg(omega) / pi"""
        return cmath.phase(self.omega) / math.pi

    def __repr__(self) -> str:
        return f"ComplexSlope({self.omega})"


class BulkComparison(NamedTuple):
    finite_value: float
    limit_value: float
    abs_err: float


def realize_initial_config(profile: ClusterProfile, m: int) -> WalkConfig:
    """x_i = i + floor(m C_k) for m a_k <= i < m a_{k+1}"""
    if m < 1:
        raise DomainError(f"m must be positive, got {m}")
    parts = []
    for i in range(1, m + 1):
        k = profile.L - 1
        for cluster in range(profile.L):
            if m * profile.a[cluster] <= i < m * profile.a[cluster + 1]:
                k = cluster
                break
        parts.append(i + math.floor(m * profile.C[k]))
    return WalkConfig(sorted(parts, reverse=True))


def _check_pole(w: complex, profile: ClusterProfile):
    if abs(w - 1) < POLE_TOL or np.any(np.abs(w * profile.betas - 1) < POLE_TOL):
        raise PoleError(f"F has a pole at w={w}", location=w)


def F_eval(w: complex, profile: ClusterProfile) -> complex:
    """w/(w-1) prod (w e^{gamma(a_i+C_i)} - 1) / (w e^{gamma(a_{i+1}+C_i)} - 1)"""
    _check_pole(w, profile)
    return w / (w - 1) * np.prod((w * profile.alphas - 1) / (w * profile.betas - 1))


def F_derivative(w: complex, profile: ClusterProfile) -> complex:
    """F' from the logarithmic derivative of the factorized form"""
    _check_pole(w, profile)
    ratio = np.prod((w * profile.alphas - 1) / (w * profile.betas - 1))
    logarithmic = -1 / (w - 1) + np.sum(
        profile.alphas / (w * profile.alphas - 1) - profile.betas / (w * profile.betas - 1)
    )
    # F/w written without the division so that w = 0 is allowed
    return ratio / (w - 1) + w / (w - 1) * ratio * logarithmic


def critical_polynomial(tau: float, rho: float, profile: ClusterProfile) -> np.ndarray:
    """
    Ascending coefficients of
    P(w) = w e^{g(tau+1)} (w e^{g rho} - 1) A(w) - (w - 1)(w e^{g(rho+tau)} - 1) B(w),
    the leading coefficient dropped when it cancels.
    """
    gamma = profile.gamma
    alphas, betas = profile.products
    first = poly.polymul(
        poly.polymul([0.0, math.exp(gamma * (tau + 1))], [-1.0, math.exp(gamma * rho)]), alphas
    )
    second = poly.polymul(
        poly.polymul([-1.0, 1.0], [-1.0, math.exp(gamma * (rho + tau))]), betas
    )
    coefficients = poly.polysub(first, second)
    scale = np.max(np.abs(coefficients))
    while len(coefficients) > 1 and abs(coefficients[-1]) < 1e-10 * scale:
        coefficients = coefficients[:-1]
    return coefficients


def critical_points(
    tau: float, rho: float, profile: ClusterProfile, tol_im: float = IMAG_TOL
) -> list[tuple[complex, int]]:
    """
    Roots of the critical polynomial with multiplicities: companion-matrix
    eigenvalues, one Newton step each, real roots snapped to the axis.
    """
    if tau <= 0 or rho <= 0:
        raise DomainError(f"Need tau, rho > 0, got tau={tau}, rho={rho}")
    coefficients = critical_polynomial(tau, rho, profile)
    descending = coefficients[::-1]
    try:
        roots = np.roots(descending)
    except np.linalg.LinAlgError as err:
        raise RootFindingError(f"Companion matrix failed at tau={tau}, rho={rho}") from err
    if not np.all(np.isfinite(roots)):
        raise RootFindingError(f"Non-finite critical points at tau={tau}, rho={rho}")
    derivative = np.polyder(descending)
    polished = []
    for root in roots:
        slope = np.polyval(derivative, root)
        if slope != 0:
            step = np.polyval(descending, root) / slope
            if abs(step) < 1e-3 * max(1.0, abs(root)):
                root = root - step
        if abs(root.imag) <= tol_im * max(1.0, abs(root)):
            root = complex(root.real, 0.0)
        polished.append(complex(root))
    grouped: list[tuple[complex, int]] = []
    for root in sorted(polished, key=lambda r: (r.real, r.imag)):
        if grouped and abs(grouped[-1][0] - root) < 1e-6 * max(1.0, abs(root)):
            grouped[-1] = (grouped[-1][0], grouped[-1][1] + 1)
        else:
            grouped.append((root, 1))
    logger.debug("Critical points at (%.4g, %.4g): %s", tau, rho, grouped)
    return grouped


def liquid_membership(
    tau: float, rho: float, profile: ClusterProfile
) -> Optional[LiquidPoint]:
    """The liquid point at (tau, rho) when the critical equation has a non-real root"""
    upper = [root for root, _ in critical_points(tau, rho, profile) if root.imag > 0]
    if not upper:
        return None
    if len(upper) > 1:
        raise ConsistencyError(
            f"Found {len(upper)} upper half-plane critical points at tau={tau}, rho={rho}"
        )
    return LiquidPoint(tau, rho, upper[0])


def omega_to_w(omega: complex, tau: float, rho: float, gamma: float) -> complex:
    """e^{-gamma rho} (1 - omega) / (1 - e^{gamma tau} omega)"""
    return math.exp(-gamma * rho) * (1 - omega) / (1 - math.exp(gamma * tau) * omega)


def complex_slope(point: LiquidPoint, profile: ClusterProfile) -> ComplexSlope:
    """omega = (1 - w_c e^{gamma rho}) / (1 - w_c e^{gamma (tau + rho)}), checked against its equation"""
    gamma = profile.gamma
    tau, rho, w_c = point
    omega = (1 - w_c * math.exp(gamma * rho)) / (1 - w_c * math.exp(gamma * (tau + rho)))
    if not omega.imag > 0:
        raise ConsistencyError(f"Complex slope {omega} at tau={tau}, rho={rho} is not in the upper half-plane")
    residual = abs(
        omega * F_eval(omega_to_w(omega, tau, rho, gamma), profile)
        - math.exp(-gamma * (tau + 1))
    )
    if residual > SLOPE_TOL:
        raise ConsistencyError(
            f"Complex slope at tau={tau}, rho={rho} misses its equation by {residual:.3e}"
        )
    return ComplexSlope(omega)


def _beta_integrand(dt: int, dp: int):
    def integrand(u: np.ndarray) -> np.ndarray:
        return (1 - u) ** float(dt) * u ** float(-dp - 1)

    return integrand


def _segment_clearance(start: complex, end: complex, singularities: Sequence[complex]) -> float:
    """Smallest distance from a singular point to the segment start -> end"""
    direction = end - start
    distances = []
    for point in singularities:
        s = min(max(((point - start) * direction.conjugate()).real / abs(direction) ** 2, 0.0), 1.0)
        distances.append(abs(start + s * direction - point))
    return min(distances) if distances else math.inf


def incomplete_beta_path(
    omega: complex, dt: int, dp: int, crossing: float, tol: float = 1e-12
) -> complex:
    """(1/2 pi i) int from conj(omega) through the real point `crossing` to omega"""
    if crossing in (0.0, 1.0):
        raise DomainError("The crossing point must avoid 0 and 1")
    integrand = _beta_integrand(dt, dp)
    lower = segment_integral(integrand, omega.conjugate(), complex(crossing), tol)
    upper = segment_integral(integrand, complex(crossing), omega, tol)
    return (lower + upper) / (2j * math.pi)


def _crossing_point(omega: complex, dt: int, dp: int) -> float:
    """A crossing point in (0,1) for dt >= 0, in (-inf, 0) otherwise, far from 0 and 1"""
    singularities = []
    if dp >= 0:
        singularities.append(0j)
    if dt < 0:
        singularities.append(1 + 0j)
    if dt >= 0:
        candidates = [0.5, min(max(omega.real, 0.05), 0.95), 0.25, 0.75, 0.1, 0.9]
    else:
        candidates = [-1.0, min(omega.real, -0.05), -0.5, -2.0, -4.0, -0.1]

    def clearance(x0: float) -> float:
        return min(
            _segment_clearance(omega.conjugate(), complex(x0), singularities),
            _segment_clearance(complex(x0), omega, singularities),
        )

    if clearance(candidates[0]) > 0.1 * abs(omega.imag) or clearance(candidates[0]) > 0.1:
        return candidates[0]
    best = max(candidates, key=clearance)
    if clearance(best) < PATH_CLEARANCE:
        raise DomainError(
            f"No admissible crossing point for omega={omega}, dt={dt}, dp={dp}"
        )
    logger.debug("Crossing point for omega=%s moved to %.4g", omega, best)
    return best


def incomplete_beta(
    slope: ComplexSlope | complex, dt: int, dp: int, tol: float = 1e-12
) -> float:
    """
    B_omega(dt, dp) = (1/2 pi i) int_{conj omega}^{omega} (1-u)^dt u^{-dp-1} du,
    the path crossing (0,1) for dt >= 0 and (-inf,0) for dt < 0.
    """
    omega = slope.omega if isinstance(slope, ComplexSlope) else ComplexSlope(slope).omega
    value = incomplete_beta_path(omega, dt, dp, _crossing_point(omega, dt, dp), tol)
    if abs(value.imag) > 1e3 * tol:
        logger.debug("Incomplete beta at %s has imaginary part %.3e", omega, value.imag)
    return float(value.real)


def beta_residue_at_zero(dt: int, dp: int) -> float:
    """Res_{u=0} (1-u)^dt u^{-dp-1} = (-1)^dp binom(dt, dp) for dp >= 0"""
    if dp < 0:
        return 0.0
    # dt(dt-1)...(dt-dp+1) / dp! is an integer for any integer dt
    falling = math.prod(range(dt - dp + 1, dt + 1))
    return float((-1) ** dp * (falling // math.factorial(dp)))


def _boundary_exponents(
    w: float, profile: ClusterProfile, dps: int = BOUNDARY_DPS
) -> Optional[tuple[float, float]]:
    """
    (tau(w), rho(w)) from the rational parametrization, or None where either
    exponential is not positive. Both exponentials lose digits near their
    poles, so F and F' are evaluated in mpmath.
    """
    with mp.workdps(dps):
        w = mp.mpf(w)
        gamma = mp.mpf(profile.gamma)
        alphas = [mp.exp(gamma * (a + c)) for a, c in zip(profile.a[:-1], profile.C)]
        betas = [mp.exp(gamma * (a + c)) for a, c in zip(profile.a[1:], profile.C)]
        if abs(w - 1) < POLE_TOL or any(abs(w * beta - 1) < POLE_TOL for beta in betas):
            return None
        ratio = mp.fprod((w * alpha - 1) / (w * beta - 1) for alpha, beta in zip(alphas, betas))
        F = w / (w - 1) * ratio
        logarithmic = -1 / (w - 1) + mp.fsum(
            alpha / (w * alpha - 1) - beta / (w * beta - 1) for alpha, beta in zip(alphas, betas)
        )
        dF = ratio / (w - 1) + F * logarithmic
        dwF = F + w * dF
        tau_denominator = w * dF - F + mp.exp(gamma) * F**2
        rho_denominator = mp.exp(gamma) * dwF - 1
        if tau_denominator == 0 or rho_denominator == 0:
            return None
        exp_tau = (dwF - mp.exp(-gamma)) / tau_denominator
        exp_rho = mp.exp(gamma) * dF / rho_denominator
        if exp_tau <= 0 or exp_rho <= 0:
            return None
        return float(mp.log(exp_tau) / gamma), float(mp.log(exp_rho) / gamma)


def frozen_boundary(
    profile: ClusterProfile, w_grid: Sequence[float]
) -> list[tuple[float, float, float]]:
    """
    (w, tau(w), rho(w)) along the rational parametrization of the frozen
    boundary; samples where either exponential is not positive are skipped.
    """
    points = []
    for w in w_grid:
        exponents = _boundary_exponents(float(w), profile)
        if exponents is not None:
            points.append((float(w), *exponents))
    logger.debug(
        "Frozen boundary: %d points emitted, %d samples skipped",
        len(points),
        len(w_grid) - len(points),
    )
    return points


def boundary_at_tau(
    profile: ClusterProfile, tau: float, w_grid: Optional[Sequence[float]] = None
) -> list[tuple[float, float, float]]:
    """
    Frozen-boundary points (w, tau, rho) on the vertical line at `tau`. The
    unbounded branch comes from |w| -> infinity, so the default grid reaches
    far out on both sides.
    """
    if w_grid is None:
        far = np.logspace(-10, 12, 4400)
        w_grid = np.concatenate([-far[::-1], far])
    samples = [(float(w), _boundary_exponents(float(w), profile)) for w in w_grid]
    points = []
    for (w0, left), (w1, right) in zip(samples, samples[1:]):
        if left is None or right is None or (left[0] - tau) * (right[0] - tau) > 0:
            continue

        def offset(w: float) -> float:
            exponents = _boundary_exponents(w, profile)
            return math.nan if exponents is None else exponents[0] - tau

        try:
            root = scipy.optimize.brentq(offset, w0, w1, xtol=1e-14 * max(1.0, abs(w0)))
        except (ValueError, RuntimeError):
            logger.debug("No root of tau(w) = %g between %g and %g", tau, w0, w1)
            continue
        exponents = _boundary_exponents(root, profile)
        if exponents is None or abs(exponents[0] - tau) > 1e-6:
            logger.debug("Discarding w=%g, the bracket straddled a pole", root)
            continue
        points.append((root, *exponents))
    return points


def default_w_grid(profile: ClusterProfile, count: int = 400) -> np.ndarray:
    """Real parameters dense near 0, near the poles of F and out to large |w|"""
    small = np.logspace(-8, 0, count)
    large = np.logspace(0, 4, count // 2)
    poles = np.concatenate([[1.0], 1 / profile.betas, 1 / profile.alphas])
    offsets = np.logspace(-6, -1, count // 8)
    near = np.concatenate([pole + sign * offsets for pole in poles for sign in (-1, 1)])
    grid = np.concatenate([small, -small, large, -large, near, np.linspace(-3, 3, count)])
    return np.unique(grid[grid != 0])


def _product_terms(
    w: mp.mpf, constant: mp.mpf, factors: list[tuple[mp.mpf, mp.mpf]]
) -> tuple[mp.mpf, mp.mpf, mp.mpf, mp.mpf]:
    """
    constant * prod (c w + d) and its derivative, each with the sum of the
    absolute values of its terms before any cancellation.
    """
    values = [c * w + d for c, d in factors]
    product = constant * mp.fprod(values)
    terms = [
        constant * c * mp.fprod(values[:k] + values[k + 1 :]) for k, (c, _) in enumerate(factors)
    ]
    return product, abs(product), mp.fsum(terms), mp.fsum(abs(term) for term in terms)


def boundary_certificate(
    w: float, tau: float, rho: float, profile: ClusterProfile, dps: int = BOUNDARY_DPS
) -> tuple[float, float]:
    """
    |P(w)| and |P'(w)| relative to the magnitudes of the two products that
    make up P, evaluated in mpmath from the factorized form.
    """
    with mp.workdps(dps):
        w = mp.mpf(w)
        gamma = mp.mpf(profile.gamma)
        tau, rho = mp.mpf(tau), mp.mpf(rho)
        alphas = [mp.exp(gamma * (a + c)) for a, c in zip(profile.a[:-1], profile.C)]
        betas = [mp.exp(gamma * (a + c)) for a, c in zip(profile.a[1:], profile.C)]
        one = mp.mpf(1)
        first = _product_terms(
            w,
            mp.exp(gamma * (tau + 1)),
            [(one, mp.mpf(0)), (mp.exp(gamma * rho), -one)] + [(alpha, -one) for alpha in alphas],
        )
        second = _product_terms(
            w,
            one,
            [(one, -one), (mp.exp(gamma * (rho + tau)), -one)] + [(beta, -one) for beta in betas],
        )
        tiny = mp.mpf(np.finfo(float).tiny)
        value = abs(first[0] - second[0]) / max(first[1] + second[1], tiny)
        slope = abs(first[2] - second[2]) / max(first[3] + second[3], tiny)
        return float(value), float(slope)


def bounding_polygon(profile: ClusterProfile, tau_max: float) -> list[tuple[float, float]]:
    """(tau, rho) vertices of the region the walks can occupy"""
    first, last = profile.C[0], profile.C[-1]
    return [
        (0.0, first),
        (first, 0.0),
        (tau_max, 0.0),
        (tau_max, 1.0),
        (last, 1.0),
        (0.0, 1.0 + last),
    ]


class ScanRow(NamedTuple):
    tau: float
    rho: float
    in_liquid: bool
    re_wc: float
    im_wc: float
    re_omega: float
    im_omega: float


def _scan_point(tau: float, rho: float, profile: ClusterProfile) -> ScanRow:
    point = liquid_membership(tau, rho, profile)
    if point is None:
        return ScanRow(tau, rho, False, math.nan, math.nan, math.nan, math.nan)
    omega = complex_slope(point, profile).omega
    return ScanRow(tau, rho, True, point.w_c.real, point.w_c.imag, omega.real, omega.imag)


def scan_liquid_region(
    profile: ClusterProfile, window: GridWindow, threads: int = 1
) -> list[ScanRow]:
    """Membership and complex slope on a uniform (tau, rho) grid"""
    taus = np.linspace(window.tau_min, window.tau_max, window.resolution)
    rhos = np.linspace(window.rho_min, window.rho_max, window.resolution)
    grid = [(float(tau), float(rho)) for tau in taus for rho in rhos if tau > 0 and rho > 0]

    def safe(tau: float, rho: float) -> Optional[ScanRow]:
        try:
            return _scan_point(tau, rho, profile)
        except (ConsistencyError, RootFindingError, PoleError) as err:
            logger.warning("Membership failed at tau=%.4g, rho=%.4g: %s", tau, rho, err)
            return None

    rows = joblib.Parallel(n_jobs=threads, prefer="threads")(
        joblib.delayed(safe)(tau, rho) for tau, rho in grid
    )
    failures = sum(row is None for row in rows)
    if failures:
        logger.warning("%d of %d grid points failed membership", failures, len(rows))
    return [row for row in rows if row is not None]


def deepest_liquid_point(rows: Sequence[ScanRow]) -> LiquidPoint:
    """The liquid grid point farthest, in grid steps, from any non-liquid one"""
    taus = sorted({row.tau for row in rows})
    rhos = sorted({row.rho for row in rows})
    liquid = np.zeros((len(taus), len(rhos)), dtype=bool)
    by_cell = {}
    for row in rows:
        cell = (taus.index(row.tau), rhos.index(row.rho))
        liquid[cell] = row.in_liquid
        by_cell[cell] = row
    if not liquid.any():
        raise DomainError("The scan window contains no liquid point")
    depth = scipy.ndimage.distance_transform_edt(np.pad(liquid, 1))[1:-1, 1:-1]
    cell = np.unravel_index(np.argmax(depth), depth.shape)
    row = by_cell[(int(cell[0]), int(cell[1]))]
    return LiquidPoint(row.tau, row.rho, complex(row.re_wc, row.im_wc))


def bulk_limit_compare(
    m: int,
    profile: ClusterProfile,
    tau: float,
    rho: float,
    dt: int,
    dp: int,
    tol: float = 1e-9,
    method: str = Method.RESIDUES,
) -> BulkComparison:
    """
    Gauge-fixed walk kernel at (floor(rho m) + dp, floor(tau m) + dt;
    floor(rho m), floor(tau m)) with q = e^{-gamma/m}, against 1{dt=dp=0} - B_omega.
    """
    point = liquid_membership(tau, rho, profile)
    if point is None:
        raise DomainError(f"(tau, rho) = ({tau}, {rho}) is not in the liquid region")
    slope = complex_slope(point, profile)
    gamma = profile.gamma
    q = math.exp(-gamma / m)
    x = realize_initial_config(profile, m)
    y, t = math.floor(rho * m), math.floor(tau * m)
    value = kernel_walks(
        SpaceTimePoint(y + dp, t + dt), SpaceTimePoint(y, t), x, q, tol=tol, method=method
    )
    finite = float(((-1) ** dt * math.exp(gamma * (tau + rho) * dt) * value).real)
    limit = float(dt == 0 and dp == 0) - incomplete_beta(slope, dt, dp)
    logger.debug("Bulk comparison m=%d dt=%d dp=%d: %.6g vs %.6g", m, dt, dp, finite, limit)
    return BulkComparison(finite, limit, abs(finite - limit))
